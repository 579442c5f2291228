"""Instance Learning Graphs: objects and propositions with goal-status features."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .pddl import DomainDef, LiftedTask, SemanticError

OBJECT_FEATURE = "object"
ACHIEVED_GOAL = "ag"
UNACHIEVED_GOAL = "ug"
ACHIEVED_NONGOAL = "ap"
STATUSES = (ACHIEVED_GOAL, UNACHIEVED_GOAL, ACHIEVED_NONGOAL)

PARTIAL = "partial"
COMPLETE = "complete"
_REPR_ALIASES = {"part": PARTIAL, "partial": PARTIAL, "cmpl": COMPLETE, "complete": COMPLETE}


def proposition_feature(predicate: str, status: str) -> str:
    if status not in STATUSES:
        raise ValueError(f"unknown proposition status {status!r}")
    return f"{predicate}:{status}"


def normalise_repr(name: str) -> str:
    try:
        return _REPR_ALIASES[name]
    except KeyError:
        raise ValueError(f"unknown state representation {name!r}") from None


@dataclass(frozen=True)
class LabelledGraph:
    """Nodes with categorical features and labelled edges.

    ``edges`` keeps the direction they were created with (proposition -> object for
    ILGs); ``adjacency`` is the undirected view used by colour refinement, one
    ``(neighbour, label)`` entry per edge end.
    """

    features: tuple[str, ...]
    edges: tuple[tuple[int, int, int], ...] = ()
    names: tuple[str, ...] = ()
    adjacency: tuple[tuple[tuple[int, int], ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.features)
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for u, v, label in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for {n} nodes")
            if label < 1:
                raise ValueError("edge labels are positive integers")
            adj[u].append((v, label))
            adj[v].append((u, label))
        object.__setattr__(self, "adjacency", tuple(tuple(a) for a in adj))

    @classmethod
    def from_edges(cls, features: Sequence[str], edges: Iterable[tuple], names=()) -> "LabelledGraph":
        """Build from ``(u, v)`` or ``(u, v, label)`` tuples; missing labels default to 1."""
        out = []
        for e in edges:
            u, v, *rest = e
            out.append((int(u), int(v), int(rest[0]) if rest else 1))
        return cls(tuple(features), tuple(out), tuple(names))

    @property
    def num_nodes(self) -> int:
        return len(self.features)

    def permuted(self, perm: Sequence[int]) -> "LabelledGraph":
        """Relabel node ``i`` as ``perm[i]``."""
        n = self.num_nodes
        if sorted(perm) != list(range(n)):
            raise ValueError("not a permutation")
        features = [None] * n
        names = [None] * n if self.names else []
        for i, p in enumerate(perm):
            features[p] = self.features[i]
            if self.names:
                names[p] = self.names[i]
        edges = tuple((perm[u], perm[v], label) for u, v, label in self.edges)
        return LabelledGraph(tuple(features), edges, tuple(names))

    def to_text(self) -> str:
        lines = [f"n {i} {f}" for i, f in enumerate(self.features)]
        lines += [f"e {u} {v} {label}" for u, v, label in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "LabelledGraph":
        features: dict[int, str] = {}
        edges = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "n" and len(parts) == 3:
                features[int(parts[1])] = parts[2]
            elif parts[0] == "e" and len(parts) == 4:
                edges.append((int(parts[1]), int(parts[2]), int(parts[3])))
            else:
                raise ValueError(f"line {lineno}: cannot parse {line!r}")
        if sorted(features) != list(range(len(features))):
            raise ValueError("node ids must be 0..n-1")
        return cls(tuple(features[i] for i in range(len(features))), tuple(edges))


class ILGBuilder:
    """Builds ILGs for many states of one task, reusing the per-task parts.

    Under the ``partial`` representation, atoms of ``statics`` predicates are
    dropped unless they are goal atoms.
    """

    def __init__(self, task: LiftedTask, repr: str = COMPLETE, statics: Iterable[str] = ()):
        self.task = task
        self.repr = normalise_repr(repr)
        self.statics = frozenset(statics) if self.repr == PARTIAL else frozenset()
        self.objects = list(task.objects)
        self.object_index = {o: i for i, o in enumerate(self.objects)}
        self.goal = task.goal
        for atom in self.goal:
            self._check_args(atom)

    def _check_args(self, atom):
        for o in atom.args:
            if o not in self.object_index:
                raise SemanticError(f"atom {atom} references unknown object '{o}'")

    def build(self, state: Iterable) -> LabelledGraph:
        goal = self.goal
        statics = self.statics
        props = set(goal)
        for atom in state:
            if atom.predicate in statics and atom not in goal:
                continue
            props.add(atom)
        state = state if isinstance(state, (set, frozenset)) else frozenset(state)

        features = [OBJECT_FEATURE] * len(self.objects)
        names = list(self.objects)
        edges = []
        index = self.object_index
        node = len(features)
        for atom in sorted(props):
            if atom in goal:
                status = ACHIEVED_GOAL if atom in state else UNACHIEVED_GOAL
            else:
                status = ACHIEVED_NONGOAL
            features.append(f"{atom.predicate}:{status}")
            names.append(str(atom))
            for pos, obj in enumerate(atom.args, start=1):
                try:
                    edges.append((node, index[obj], pos))
                except KeyError:
                    raise SemanticError(f"atom {atom} references unknown object '{obj}'") from None
            node += 1
        return LabelledGraph(tuple(features), tuple(edges), tuple(names))


def build_ilg(task: LiftedTask, state=None, repr: str = COMPLETE, statics: Iterable[str] = ()) -> LabelledGraph:
    """ILG of ``state`` (default: the task's initial state) against the task's goal."""
    return ILGBuilder(task, repr, statics).build(task.init if state is None else state)


def feature_alphabet_size(domain: DomainDef) -> int:
    """Upper bound on distinct initial node features: one object symbol plus three per predicate."""
    return 1 + 3 * len(domain.predicates)
