"""STRIPS + typing subset of PDDL: parsing, grounding and transition semantics.

Identifiers are case-insensitive and normalised to lower case. Anything outside
``:strips`` / ``:typing`` (negative preconditions, conditional effects, costs,
numeric fluents, ...) is rejected with :class:`UnsupportedRequirementError`.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Optional

SUPPORTED_REQUIREMENTS = frozenset({":strips", ":typing"})
ROOT_TYPE = "object"
DEFAULT_GROUNDING_CAP = 200_000

# Which requirement flag a rejected construct would need.
_CONDITION_FLAGS = {
    "not": ":negative-preconditions",
    "or": ":disjunctive-preconditions",
    "imply": ":disjunctive-preconditions",
    "exists": ":existential-preconditions",
    "forall": ":universal-preconditions",
    "=": ":equality",
}
_EFFECT_FLAGS = {
    "when": ":conditional-effects",
    "forall": ":conditional-effects",
    "increase": ":action-costs",
    "decrease": ":numeric-fluents",
    "assign": ":numeric-fluents",
    "scale-up": ":numeric-fluents",
    "scale-down": ":numeric-fluents",
}
_DOMAIN_SECTION_FLAGS = {
    ":functions": ":numeric-fluents",
    ":derived": ":derived-predicates",
    ":durative-action": ":durative-actions",
    ":constraints": ":constraints",
}


class PDDLError(Exception):
    """Base class for everything raised by the PDDL front end."""


class ParseError(PDDLError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{message} (line {line}, column {col})" if line else message)


class UnsupportedRequirementError(PDDLError):
    def __init__(self, flag: str, detail: str = ""):
        self.flag = flag
        msg = f"unsupported PDDL requirement {flag}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class SemanticError(PDDLError):
    """Undeclared names, arity mismatches and similar well-formedness failures."""


class GroundingLimitError(PDDLError):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"grounding produced more than {cap} actions")


# --------------------------------------------------------------------------
# s-expressions


class Sym(str):
    """A token that remembers where it came from."""

    line: int
    col: int

    def __new__(cls, text: str, line: int, col: int):
        obj = super().__new__(cls, text)
        obj.line = line
        obj.col = col
        return obj


class SList(list):
    line: int = 0
    col: int = 0


_TOKEN_RE = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


def tokenize(text: str) -> list[Sym]:
    tokens = []
    line, line_start = 1, 0
    for m in _TOKEN_RE.finditer(text):
        tok = m.group()
        if tok[0].isspace() or tok[0] == ";":
            nl = tok.count("\n")
            if nl:
                line += nl
                line_start = m.start() + tok.rindex("\n") + 1
            continue
        tokens.append(Sym(tok.lower(), line, m.start() - line_start + 1))
    return tokens


def parse_sexpr(text: str) -> SList:
    """Parse exactly one top-level s-expression."""
    tokens = tokenize(text)
    if not tokens:
        raise ParseError("empty input")
    stack: list[SList] = []
    result = None
    for tok in tokens:
        if result is not None:
            raise ParseError(f"unexpected token {tok!r} after end of expression", tok.line, tok.col)
        if tok == "(":
            lst = SList()
            lst.line, lst.col = tok.line, tok.col
            stack.append(lst)
        elif tok == ")":
            if not stack:
                raise ParseError("unbalanced ')'", tok.line, tok.col)
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            else:
                result = done
        else:
            if not stack:
                raise ParseError(f"expected '(' but got {tok!r}", tok.line, tok.col)
            stack[-1].append(tok)
    if stack:
        raise ParseError("unbalanced '(' (missing ')')", stack[-1].line, stack[-1].col)
    return result


def _where(item) -> tuple[int, int]:
    return getattr(item, "line", 0), getattr(item, "col", 0)


def _expect_word(item, what: str) -> str:
    if not isinstance(item, str):
        raise ParseError(f"expected {what}, got a list", *_where(item))
    return str(item)


def _expect_list(item, what: str) -> SList:
    if not isinstance(item, list):
        raise ParseError(f"expected {what}, got {item!r}", *_where(item))
    return item


def _typed_list(items: Iterable, what: str) -> list[tuple[str, str]]:
    """``a b - t c`` -> [(a, t), (b, t), (c, object)]."""
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    items = list(items)
    i = 0
    while i < len(items):
        tok = _expect_word(items[i], what)
        if tok == "-":
            if i + 1 >= len(items):
                raise ParseError(f"missing type after '-' in {what}", *_where(items[i]))
            typ = items[i + 1]
            if isinstance(typ, list):
                if typ and typ[0] == "either":
                    raise UnsupportedRequirementError(":typing", "'either' types are not supported")
                raise ParseError(f"malformed type in {what}", *_where(typ))
            out.extend((name, str(typ)) for name in pending)
            pending = []
            i += 2
            continue
        pending.append(tok)
        i += 1
    out.extend((name, ROOT_TYPE) for name in pending)
    return out


# --------------------------------------------------------------------------
# domain model


class Atom(NamedTuple):
    """A (possibly lifted) atom. Tuples order lexicographically by (predicate, args)."""

    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return "(" + " ".join((self.predicate, *self.args)) + ")"


State = frozenset  # frozenset[Atom]


@dataclass(frozen=True)
class PredicateSchema:
    name: str
    arity: int
    types: tuple[str, ...] = ()


@dataclass(frozen=True)
class ActionSchema:
    name: str
    parameters: tuple[tuple[str, str], ...]
    precondition: tuple[Atom, ...]
    add_effects: tuple[Atom, ...]
    del_effects: tuple[Atom, ...]


@dataclass(frozen=True)
class DomainDef:
    name: str
    requirements: tuple[str, ...]
    types: dict  # type -> parent type
    constants: dict  # name -> type
    predicates: dict  # name -> PredicateSchema
    schemata: tuple[ActionSchema, ...]

    def is_subtype(self, typ: str, ancestor: str) -> bool:
        seen = set()
        while typ not in seen:
            if typ == ancestor:
                return True
            seen.add(typ)
            if typ == ROOT_TYPE:
                break
            typ = self.types.get(typ, ROOT_TYPE)
        return ancestor == ROOT_TYPE

    @property
    def max_arity(self) -> int:
        return max((p.arity for p in self.predicates.values()), default=0)


@dataclass(frozen=True)
class LiftedTask:
    name: str
    domain: DomainDef
    objects: dict  # name -> type, includes domain constants
    init: frozenset
    goal: frozenset

    @property
    def predicates(self) -> dict:
        return self.domain.predicates

    def with_init(self, state: frozenset) -> "LiftedTask":
        return replace(self, init=frozenset(state))


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple[str, ...]
    precondition: frozenset
    add_effects: frozenset
    del_effects: frozenset
    _key: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_key", (self.name, self.args))

    def applicable(self, state: frozenset) -> bool:
        return self.precondition <= state

    def __str__(self) -> str:
        return "(" + " ".join((self.name, *self.args)) + ")"

    def __lt__(self, other: "GroundAction") -> bool:
        return self._key < other._key


# --------------------------------------------------------------------------
# parsing


def _check_requirements(section: SList) -> tuple[str, ...]:
    flags = tuple(_expect_word(f, "requirement flag") for f in section[1:])
    for flag in flags:
        if flag not in SUPPORTED_REQUIREMENTS:
            raise UnsupportedRequirementError(flag)
    return flags


def _parse_condition(expr, where: str) -> list[SList]:
    """Flatten a positive conjunction into a list of atom expressions."""
    expr = _expect_list(expr, f"condition in {where}")
    if not expr:
        return []
    head = expr[0]
    if isinstance(head, list):
        raise ParseError(f"malformed condition in {where}", *_where(expr))
    if head == "and":
        atoms = []
        for sub in expr[1:]:
            atoms.extend(_parse_condition(sub, where))
        return atoms
    if head in _CONDITION_FLAGS:
        raise UnsupportedRequirementError(_CONDITION_FLAGS[head], f"'{head}' in {where}")
    return [expr]


def _parse_effect(expr, where: str) -> tuple[list[SList], list[SList]]:
    expr = _expect_list(expr, f"effect in {where}")
    if not expr:
        return [], []
    head = expr[0]
    if isinstance(head, list):
        raise ParseError(f"malformed effect in {where}", *_where(expr))
    if head == "and":
        adds, dels = [], []
        for sub in expr[1:]:
            a, d = _parse_effect(sub, where)
            adds.extend(a)
            dels.extend(d)
        return adds, dels
    if head == "not":
        if len(expr) != 2:
            raise ParseError(f"'not' takes one argument in {where}", *_where(expr))
        inner = _expect_list(expr[1], "negated atom")
        if inner and inner[0] in _EFFECT_FLAGS:
            raise UnsupportedRequirementError(_EFFECT_FLAGS[inner[0]], f"in {where}")
        return [], [inner]
    if head in _EFFECT_FLAGS:
        raise UnsupportedRequirementError(_EFFECT_FLAGS[head], f"'{head}' in {where}")
    return [expr], []


def _make_atom(expr: SList, predicates: dict, terms: Optional[set], where: str) -> Atom:
    """Validate an atom expression; ``terms`` is the set of allowed arguments."""
    if not expr or isinstance(expr[0], list):
        raise ParseError(f"malformed atom in {where}", *_where(expr))
    name = str(expr[0])
    args = tuple(_expect_word(a, "atom argument") for a in expr[1:])
    if name not in predicates:
        raise SemanticError(f"undeclared predicate '{name}' in {where} (line {expr.line})")
    arity = predicates[name].arity
    if len(args) != arity:
        raise SemanticError(
            f"arity mismatch for '{name}' in {where}: expected {arity}, got {len(args)} "
            f"(line {expr.line})"
        )
    if terms is not None:
        for a in args:
            if a not in terms:
                kind = "variable" if a.startswith("?") else "object"
                raise SemanticError(f"undeclared {kind} '{a}' in {where} (line {expr.line})")
    return Atom(name, args)


def _parse_action(section: SList, predicates: dict, constants: dict) -> ActionSchema:
    if len(section) < 2:
        raise ParseError("action without a name", section.line, section.col)
    name = _expect_word(section[1], "action name")
    parts = {}
    i = 2
    while i < len(section):
        key = _expect_word(section[i], "action keyword")
        if key not in (":parameters", ":precondition", ":effect"):
            raise ParseError(f"unknown action keyword {key!r}", *_where(section[i]))
        if i + 1 >= len(section):
            raise ParseError(f"missing value for {key}", *_where(section[i]))
        parts[key] = section[i + 1]
        i += 2
    params = _typed_list(_expect_list(parts.get(":parameters", SList()), "parameter list"),
                         f"parameters of {name}")
    variables = [p for p, _ in params]
    if len(set(variables)) != len(variables):
        raise SemanticError(f"duplicate parameter in action '{name}'")
    for v in variables:
        if not v.startswith("?"):
            raise ParseError(f"parameter {v!r} of '{name}' must start with '?'")
    terms = set(variables) | set(constants)
    where = f"action '{name}'"
    pre = [_make_atom(a, predicates, terms, where)
           for a in _parse_condition(parts.get(":precondition", SList()), where)]
    adds, dels = _parse_effect(parts.get(":effect", SList()), where)
    add = [_make_atom(a, predicates, terms, where) for a in adds]
    dele = [_make_atom(a, predicates, terms, where) for a in dels]
    return ActionSchema(name, tuple(params), tuple(pre), tuple(add), tuple(dele))


def parse_domain(text: str) -> DomainDef:
    top = parse_sexpr(text)
    if len(top) < 2 or top[0] != "define":
        raise ParseError("domain must start with (define ...)", top.line, top.col)
    header = _expect_list(top[1], "(domain NAME)")
    if len(header) != 2 or header[0] != "domain":
        raise ParseError("expected (domain NAME)", header.line, header.col)
    name = _expect_word(header[1], "domain name")

    requirements: tuple[str, ...] = ()
    types: dict = {}
    constants: dict = {}
    predicates: dict = {}
    action_sections = []
    for section in top[2:]:
        section = _expect_list(section, "domain section")
        if not section:
            raise ParseError("empty domain section", section.line, section.col)
        key = _expect_word(section[0], "section keyword")
        if key == ":requirements":
            requirements = _check_requirements(section)
        elif key == ":types":
            for child, parent in _typed_list(section[1:], ":types"):
                types[child] = parent
        elif key == ":constants":
            constants.update(_typed_list(section[1:], ":constants"))
        elif key == ":predicates":
            for pexpr in section[1:]:
                pexpr = _expect_list(pexpr, "predicate declaration")
                if not pexpr:
                    raise ParseError("empty predicate declaration", pexpr.line, pexpr.col)
                pname = _expect_word(pexpr[0], "predicate name")
                if pname in predicates:
                    raise SemanticError(f"predicate '{pname}' declared twice")
                args = _typed_list(pexpr[1:], f"predicate {pname}")
                predicates[pname] = PredicateSchema(pname, len(args), tuple(t for _, t in args))
        elif key == ":action":
            action_sections.append(section)
        elif key in _DOMAIN_SECTION_FLAGS:
            raise UnsupportedRequirementError(_DOMAIN_SECTION_FLAGS[key], f"section {key}")
        else:
            raise ParseError(f"unknown domain section {key!r}", section.line, section.col)

    ground_types = set(types) | set(types.values()) | {ROOT_TYPE}
    for typ in itertools.chain(constants.values(), *(p.types for p in predicates.values())):
        if typ not in ground_types:
            raise SemanticError(f"undeclared type '{typ}'")
    schemata = [_parse_action(s, predicates, constants) for s in action_sections]
    names = [s.name for s in schemata]
    if len(set(names)) != len(names):
        raise SemanticError("duplicate action name")
    return DomainDef(name, requirements, types, constants, predicates, tuple(schemata))


def parse_problem(text: str, domain: DomainDef) -> LiftedTask:
    top = parse_sexpr(text)
    if len(top) < 2 or top[0] != "define":
        raise ParseError("problem must start with (define ...)", top.line, top.col)
    header = _expect_list(top[1], "(problem NAME)")
    if len(header) != 2 or header[0] != "problem":
        raise ParseError("expected (problem NAME)", header.line, header.col)
    name = _expect_word(header[1], "problem name")

    objects = dict(domain.constants)
    init_exprs: list = []
    goal_exprs: list = []
    known_types = set(domain.types) | set(domain.types.values()) | {ROOT_TYPE}
    for section in top[2:]:
        section = _expect_list(section, "problem section")
        if not section:
            raise ParseError("empty problem section", section.line, section.col)
        key = _expect_word(section[0], "section keyword")
        if key == ":domain":
            dname = _expect_word(section[1], "domain name") if len(section) > 1 else ""
            if dname != domain.name:
                raise SemanticError(f"problem is for domain '{dname}', not '{domain.name}'")
        elif key == ":requirements":
            _check_requirements(section)
        elif key == ":objects":
            for obj, typ in _typed_list(section[1:], ":objects"):
                if typ not in known_types:
                    raise SemanticError(f"undeclared type '{typ}' for object '{obj}'")
                objects[obj] = typ
        elif key == ":init":
            for fact in section[1:]:
                fact = _expect_list(fact, "initial fact")
                if fact and fact[0] in ("=", "not"):
                    flag = ":numeric-fluents" if fact[0] == "=" else ":negative-preconditions"
                    raise UnsupportedRequirementError(flag, "in :init")
                init_exprs.append(fact)
        elif key == ":goal":
            if len(section) > 2:
                raise ParseError(":goal takes one condition", section.line, section.col)
            if len(section) == 2:
                goal_exprs = _parse_condition(section[1], ":goal")
        elif key == ":metric":
            raise UnsupportedRequirementError(":action-costs", "section :metric")
        else:
            raise ParseError(f"unknown problem section {key!r}", section.line, section.col)

    terms = set(objects)
    init = frozenset(_make_atom(f, domain.predicates, terms, ":init") for f in init_exprs)
    goal = frozenset(_make_atom(g, domain.predicates, terms, ":goal") for g in goal_exprs)
    objects = dict(sorted(objects.items()))
    return LiftedTask(name, domain, objects, init, goal)


def load_task(domain_path, problem_path) -> LiftedTask:
    with open(domain_path, encoding="utf-8") as f:
        domain = parse_domain(f.read())
    with open(problem_path, encoding="utf-8") as f:
        return parse_problem(f.read(), domain)


# --------------------------------------------------------------------------
# semantics


def detect_static_predicates(domain: DomainDef) -> frozenset:
    """Predicates that no action schema adds or deletes."""
    touched = {a.predicate for s in domain.schemata for a in (*s.add_effects, *s.del_effects)}
    return frozenset(p for p in domain.predicates if p not in touched)


def objects_of_type(task: LiftedTask, typ: str) -> list[str]:
    return [o for o, t in task.objects.items() if task.domain.is_subtype(t, typ)]


def _substitute(atoms: Iterable[Atom], binding: dict) -> frozenset:
    return frozenset(Atom(a.predicate, tuple(binding.get(x, x) for x in a.args)) for a in atoms)


def instantiate(schema: ActionSchema, args: tuple[str, ...]) -> GroundAction:
    if len(args) != len(schema.parameters):
        raise SemanticError(
            f"action '{schema.name}' takes {len(schema.parameters)} arguments, got {len(args)}")
    binding = {var: obj for (var, _), obj in zip(schema.parameters, args)}
    add = _substitute(schema.add_effects, binding)
    # add-after-delete: an atom both added and deleted ends up true
    dele = _substitute(schema.del_effects, binding) - add
    return GroundAction(schema.name, tuple(args), _substitute(schema.precondition, binding), add, dele)


def ground_actions(task: LiftedTask, max_actions: int = DEFAULT_GROUNDING_CAP) -> list[GroundAction]:
    """Typed Cartesian grounding, dropping actions whose static preconditions fail in init.

    The result is sorted canonically by (schema name, arguments).
    Raises :class:`GroundingLimitError` once more than ``max_actions`` survive.
    """
    statics = detect_static_predicates(task.domain)
    out = []
    for schema in task.domain.schemata:
        domains = [objects_of_type(task, typ) for _, typ in schema.parameters]
        static_pre = [a for a in schema.precondition if a.predicate in statics]
        for args in itertools.product(*domains):
            if static_pre:
                binding = {var: obj for (var, _), obj in zip(schema.parameters, args)}
                if not _substitute(static_pre, binding) <= task.init:
                    continue
            out.append(instantiate(schema, args))
            if len(out) > max_actions:
                raise GroundingLimitError(max_actions)
    out.sort()
    return out


def apply(action: GroundAction, state: frozenset) -> Optional[frozenset]:
    """Successor of ``state`` under ``action``, or None when inapplicable."""
    if not action.precondition <= state:
        return None
    return (state - action.del_effects) | action.add_effects


def successors(state: frozenset, ground: list[GroundAction]) -> list[tuple[GroundAction, frozenset]]:
    return [(a, (state - a.del_effects) | a.add_effects) for a in ground if a.precondition <= state]


def is_goal(state: frozenset, goal: frozenset) -> bool:
    return goal <= state


def canonical(state: Iterable[Atom]) -> tuple[Atom, ...]:
    """Deterministic total order on the atoms of a state."""
    return tuple(sorted(state))
