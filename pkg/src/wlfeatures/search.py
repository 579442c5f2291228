"""Greedy best-first search, a uniform-cost oracle for h*, training data and plan checks."""

from __future__ import annotations

import heapq
import itertools
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

from .pddl import GroundAction, LiftedTask, ParseError, ground_actions, instantiate, is_goal

EXHAUSTED = "exhausted-open-list"
TIMEOUT = "timeout"
EXPANSION_LIMIT = "expansion-limit"
MEMORY_LIMIT = "memory-limit"

TRACE = "trace"
SIBLING = "sibling"
REGRESSION = "regression"
RANKING = "ranking"

# rough per-stored-state footprint used for the memory estimate
_BYTES_PER_ATOM = 64
_BYTES_PER_STATE = 400


class OracleError(RuntimeError):
    pass


@dataclass
class SearchBudget:
    seconds: float = 60.0
    max_expansions: Optional[int] = None
    max_memory_mb: float = 4096.0

    def __post_init__(self):
        if self.seconds <= 0 or self.max_memory_mb <= 0:
            raise ValueError("budget values must be positive")
        if self.max_expansions is not None and self.max_expansions <= 0:
            raise ValueError("budget values must be positive")


@dataclass
class SearchStats:
    expansions: int = 0
    evaluations: int = 0
    generated: int = 0
    wall_seconds: float = 0.0
    memory_mb: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Plan:
    actions: tuple
    stats: SearchStats = field(default_factory=SearchStats)
    solved = True

    def __len__(self) -> int:
        return len(self.actions)

    def to_text(self) -> str:
        return format_plan(self.actions)


@dataclass
class Unsolved:
    reason: str
    stats: SearchStats = field(default_factory=SearchStats)
    solved = False


class _Limits:
    def __init__(self, budget: Optional[SearchBudget], n_atoms: int):
        self.budget = budget or SearchBudget()
        self.start = time.perf_counter()
        self.state_bytes = _BYTES_PER_STATE + _BYTES_PER_ATOM * n_atoms

    def exceeded(self, expansions: int, stored: int) -> Optional[str]:
        b = self.budget
        if time.perf_counter() - self.start > b.seconds:
            return TIMEOUT
        if b.max_expansions is not None and expansions >= b.max_expansions:
            return EXPANSION_LIMIT
        if stored * self.state_bytes > b.max_memory_mb * 2**20:
            return MEMORY_LIMIT
        return None

    def elapsed(self) -> float:
        return time.perf_counter() - self.start


def _successor_fn(ground: Sequence[GroundAction]):
    # bucket actions by one precondition atom so only plausible actions are tested
    by_atom: dict = {}
    free = []
    for a in ground:
        if a.precondition:
            by_atom.setdefault(min(a.precondition), []).append(a)
        else:
            free.append(a)
    order = {a._key: i for i, a in enumerate(ground)}

    def succ(state):
        cands = list(free)
        for atom in state:
            cands.extend(by_atom.get(atom, ()))
        cands.sort(key=lambda a: order[a._key])
        return [(a, (state - a.del_effects) | a.add_effects) for a in cands if a.precondition <= state]

    return succ


def _extract(parents: dict, state) -> tuple:
    actions = []
    while True:
        parent, action = parents[state]
        if parent is None:
            break
        actions.append(action)
        state = parent
    return tuple(reversed(actions))


def gbfs(task: LiftedTask, ground: Optional[Sequence[GroundAction]], h: Callable, budget: Optional[SearchBudget] = None
         ) -> Union[Plan, Unsolved]:
    """Eager greedy best-first search on ``h``; equal values expand in insertion order.

    States are deduplicated on generation and ``h`` is evaluated once per state.
    Goal tests happen on generation. Budget exhaustion yields :class:`Unsolved`.
    """
    if ground is None:
        ground = ground_actions(task)
    succ = _successor_fn(ground)
    limits = _Limits(budget, len(task.init))
    stats = SearchStats()
    s0 = task.init
    parents = {s0: (None, None)}

    def finish(result):
        stats.wall_seconds = limits.elapsed()
        stats.memory_mb = len(parents) * limits.state_bytes / 2**20
        return result

    if is_goal(s0, task.goal):
        return finish(Plan((), stats))
    counter = itertools.count()
    stats.evaluations += 1
    open_list = [(h(s0), next(counter), s0)]
    while open_list:
        reason = limits.exceeded(stats.expansions, len(parents))
        if reason:
            return finish(Unsolved(reason, stats))
        _, _, state = heapq.heappop(open_list)
        stats.expansions += 1
        for action, child in succ(state):
            stats.generated += 1
            if child in parents:
                continue
            parents[child] = (state, action)
            if is_goal(child, task.goal):
                plan = Plan(_extract(parents, child), stats)
                return finish(plan)
            stats.evaluations += 1
            value = h(child)
            if value == float("inf"):
                continue
            heapq.heappush(open_list, (value, next(counter), child))
    return finish(Unsolved(EXHAUSTED, stats))


@dataclass
class OracleResult:
    plan: tuple  # GroundActions
    trace: tuple  # states s0..sn
    labels: tuple  # h*(s_i) = n - i
    expansions: int = 0


def uniform_cost_oracle(task: LiftedTask, ground: Optional[Sequence[GroundAction]] = None,
                        budget: Optional[SearchBudget] = None) -> OracleResult:
    """Optimal plan for unit costs by breadth-first search, with h* along its trace."""
    if ground is None:
        ground = ground_actions(task)
    succ = _successor_fn(ground)
    limits = _Limits(budget, len(task.init))
    s0 = task.init
    parents = {s0: (None, None)}
    goal_state = s0 if is_goal(s0, task.goal) else None
    queue = deque([s0])
    expansions = 0
    while goal_state is None and queue:
        reason = limits.exceeded(expansions, len(parents))
        if reason:
            raise OracleError(f"oracle budget exhausted ({reason}) on {task.name}")
        state = queue.popleft()
        expansions += 1
        for action, child in succ(state):
            if child in parents:
                continue
            parents[child] = (state, action)
            if is_goal(child, task.goal):
                goal_state = child
                break
            queue.append(child)
    if goal_state is None:
        raise OracleError(f"task {task.name} is unsolvable")
    plan = _extract(parents, goal_state)
    trace = [s0]
    for a in plan:
        trace.append((trace[-1] - a.del_effects) | a.add_effects)
    assert trace[-1] == goal_state
    n = len(plan)
    labels = tuple(n - i for i in range(n + 1))
    assert all(labels[i] - labels[i + 1] == 1 for i in range(n))
    return OracleResult(plan, tuple(trace), labels, expansions)


@dataclass
class LabelledState:
    state: frozenset
    label: Optional[int]  # exact h* for trace states, None for siblings
    role: str
    parent: int  # index of the trace state this row belongs to


@dataclass
class TrainingData:
    task: LiftedTask
    rows: list  # LabelledState
    pairs: list  # (better row, worse row)
    plan: tuple = ()

    @property
    def labels(self) -> list:
        return [r.label for r in self.rows]

    @property
    def states(self) -> list:
        return [r.state for r in self.rows]


def make_training_data(task: LiftedTask, mode: str = REGRESSION, ground: Optional[Sequence[GroundAction]] = None,
                       budget: Optional[SearchBudget] = None, oracle: Optional[OracleResult] = None) -> TrainingData:
    """Trace states labelled with h*; in ranking mode also siblings with (trace, sibling) pairs.

    Siblings of trace state s_i are the distinct successors of s_{i-1} other than s_i.
    """
    if mode not in (REGRESSION, RANKING):
        raise ValueError(f"unknown training mode {mode!r}")
    if ground is None:
        ground = ground_actions(task)
    if oracle is None:
        oracle = uniform_cost_oracle(task, ground, budget)
    rows = [LabelledState(s, lab, TRACE, i) for i, (s, lab) in enumerate(zip(oracle.trace, oracle.labels))]
    pairs = []
    if mode == RANKING:
        succ = _successor_fn(ground)
        for i in range(1, len(oracle.trace)):
            current = oracle.trace[i]
            seen = {current}
            for _, child in succ(oracle.trace[i - 1]):
                if child in seen:
                    continue
                seen.add(child)
                rows.append(LabelledState(child, None, SIBLING, i))
                pairs.append((i, len(rows) - 1))
    return TrainingData(task, rows, pairs, oracle.plan)


# --------------------------------------------------------------------------
# plans


@dataclass
class Validation:
    valid: bool
    failure_index: Optional[int] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.valid


def _step(item) -> tuple:
    if isinstance(item, GroundAction):
        return item.name, tuple(item.args)
    name, args = item
    return str(name).lower(), tuple(str(a).lower() for a in args)


def validate_plan(task: LiftedTask, plan: Iterable) -> Validation:
    """Replay ``plan`` from the initial state, instantiating each step from the schemata.

    ``failure_index`` is the first bad step, or ``len(plan)`` when the goal is not reached.
    """
    schemata = {s.name: s for s in task.domain.schemata}
    state = task.init
    steps = list(plan)
    for k, item in enumerate(steps):
        name, args = _step(item)
        schema = schemata.get(name)
        if schema is None:
            return Validation(False, k, f"unknown action '{name}'")
        if len(args) != len(schema.parameters):
            return Validation(False, k, f"'{name}' expects {len(schema.parameters)} arguments")
        for (var, typ), obj in zip(schema.parameters, args):
            if obj not in task.objects:
                return Validation(False, k, f"unknown object '{obj}'")
            if not task.domain.is_subtype(task.objects[obj], typ):
                return Validation(False, k, f"object '{obj}' is not of type {typ}")
        action = instantiate(schema, args)
        if not action.precondition <= state:
            return Validation(False, k, f"step {k} {action} is not applicable")
        state = (state - action.del_effects) | action.add_effects
    if not is_goal(state, task.goal):
        return Validation(False, len(steps), "goal not reached")
    return Validation(True)


def format_plan(actions: Iterable) -> str:
    lines = []
    for item in actions:
        name, args = _step(item)
        lines.append("(" + " ".join((name, *args)) + ")")
    return "".join(line + "\n" for line in lines)


def parse_plan(text: str) -> list[tuple[str, tuple]]:
    """Read ``(name arg ...)`` lines; ``;`` starts a comment."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        if not (line.startswith("(") and line.endswith(")")):
            raise ParseError(f"cannot parse plan step {raw!r}", lineno, 1)
        parts = line[1:-1].split()
        if not parts:
            raise ParseError("empty plan step", lineno, 1)
        out.append((parts[0].lower(), tuple(p.lower() for p in parts[1:])))
    return out
