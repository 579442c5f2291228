"""Regenerate the shipped Blocksworld train/test problems.

Usage: python scripts/make_blocksworld.py [outdir]

Towers are drawn with a fixed-seed generator so the files are reproducible;
the library itself never touches an RNG.
"""

import random
import sys
from pathlib import Path

TRAIN = [3, 4, 4, 5, 5]
TEST = [6, 6, 6, 7, 7, 7, 8, 8, 8, 8]


def random_towers(blocks, rng):
    order = blocks[:]
    rng.shuffle(order)
    towers, current = [], []
    for b in order:
        current.append(b)
        if rng.random() < 0.4:
            towers.append(current)
            current = []
    if current:
        towers.append(current)
    return towers


def tower_atoms(towers):
    atoms = []
    for tower in towers:
        atoms.append(f"(ontable {tower[0]})")
        for below, above in zip(tower, tower[1:]):
            atoms.append(f"(on {above} {below})")
    return atoms


def problem_text(name, n, rng):
    blocks = [f"b{i}" for i in range(1, n + 1)]
    while True:
        init, goal = random_towers(blocks, rng), random_towers(blocks, rng)
        if sorted(map(tuple, init)) != sorted(map(tuple, goal)):
            break
    init_atoms = tower_atoms(init) + [f"(clear {t[-1]})" for t in init] + ["(handempty)"]
    goal_atoms = tower_atoms(goal)
    return (
        f"(define (problem {name})\n"
        f"  (:domain blocksworld)\n"
        f"  (:objects {' '.join(blocks)} - block)\n"
        f"  (:init {' '.join(init_atoms)})\n"
        f"  (:goal (and {' '.join(goal_atoms)})))\n"
    )


def main(outdir):
    rng = random.Random(2025)
    outdir = Path(outdir)
    for split, sizes in (("train", TRAIN), ("test", TEST)):
        (outdir / split).mkdir(parents=True, exist_ok=True)
        for i, n in enumerate(sizes, start=1):
            name = f"{split}-{i:02d}-n{n}"
            (outdir / split / f"{name}.pddl").write_text(problem_text(name, n, rng))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/wlfeatures/data/blocksworld")
