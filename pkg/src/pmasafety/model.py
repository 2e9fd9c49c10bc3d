"""Parameterised multi-agent system model and concrete-snapshot semantics.

A system is a set of agent templates plus one environment template (indexed by
the constant `e`) and a set of uninterpreted relations over the value sorts.
Protocols and goals are agent formulae: boolean combinations of variable tests
v[idx] = k, relation atoms, and index (dis)equalities, with free index
variables read existentially.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

from .logic import SortDecl, RelDecl, ELEMENT


class ModelError(Exception):
    """A malformed model; carries positioned diagnostics when available."""

    def __init__(self, diagnostics: "list[Diagnostic] | str"):
        if isinstance(diagnostics, str):
            diagnostics = [Diagnostic(0, 0, diagnostics)]
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        if self.line:
            return f"{self.line}:{self.col}: {self.message}"
        return self.message


# ---------------------------------------------------------------------------
# agent formulae

SELF = "self"
ENV = "e"


@dataclass(frozen=True)
class VarTest:
    """v[idx] = k  --  idx is a variable name, SELF or ENV; k a constant."""

    var: str
    idx: str
    value: str


@dataclass(frozen=True)
class VarRef:
    """v[idx] used as a relation argument."""

    var: str
    idx: str


@dataclass(frozen=True)
class ConstRef:
    name: str


@dataclass(frozen=True)
class RelTest:
    rel: str
    args: tuple[Union[VarRef, ConstRef], ...]


@dataclass(frozen=True)
class IdxEq:
    """j1 = j2 over index variables (or SELF)."""

    lhs: str
    rhs: str


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class Neg:
    inner: "AgentFormula"


@dataclass(frozen=True)
class Conj:
    items: tuple["AgentFormula", ...]


@dataclass(frozen=True)
class Disj:
    items: tuple["AgentFormula", ...]


AgentFormula = Union[VarTest, RelTest, IdxEq, BoolConst, Neg, Conj, Disj]


def formula_has_disjunction(f: AgentFormula) -> bool:
    """True when the formula contains `or`, or `not` over a non-atom."""
    if isinstance(f, Disj):
        return True
    if isinstance(f, Neg):
        return not isinstance(f.inner, (VarTest, RelTest, IdxEq, BoolConst))
    if isinstance(f, Conj):
        return any(formula_has_disjunction(i) for i in f.items)
    return False


def formula_index_vars(f: AgentFormula) -> set[str]:
    """Free index variable names (SELF and ENV excluded)."""
    out: set[str] = set()

    def go(g: AgentFormula) -> None:
        if isinstance(g, VarTest):
            if g.idx not in (SELF, ENV):
                out.add(g.idx)
        elif isinstance(g, RelTest):
            for a in g.args:
                if isinstance(a, VarRef) and a.idx not in (SELF, ENV):
                    out.add(a.idx)
        elif isinstance(g, IdxEq):
            for s in (g.lhs, g.rhs):
                if s not in (SELF, ENV):
                    out.add(s)
        elif isinstance(g, Neg):
            go(g.inner)
        elif isinstance(g, (Conj, Disj)):
            for i in g.items:
                go(i)

    go(f)
    return out


# ---------------------------------------------------------------------------
# templates and systems

LOCAL = "local"
SYNC = "sync"
INDIVIDUAL = "individual"

NOP = "nop"


@dataclass(frozen=True)
class ActionDecl:
    name: str
    kind: str  # local | sync | individual
    pre: AgentFormula
    # effects are simultaneous constant assignments to own variables
    eff: tuple[tuple[str, str], ...] = ()
    initiator: bool = False


@dataclass(frozen=True)
class AgentTemplate:
    name: str
    is_env: bool
    # variable name -> (sort, initial constant), in declaration order
    variables: tuple[tuple[str, str, str], ...]
    actions: tuple[ActionDecl, ...]

    def var_sort(self, v: str) -> str:
        for name, sort, _init in self.variables:
            if name == v:
                return sort
        raise ModelError(f"template {self.name} has no variable {v}")

    def var_init(self, v: str) -> str:
        for name, sort, init in self.variables:
            if name == v:
                return init
        raise ModelError(f"template {self.name} has no variable {v}")

    def var_names(self) -> tuple[str, ...]:
        return tuple(name for name, _s, _i in self.variables)

    def action(self, name: str) -> Optional[ActionDecl]:
        for a in self.actions:
            if a.name == name:
                return a
        return None

    def local_actions(self) -> tuple[ActionDecl, ...]:
        return tuple(a for a in self.actions if a.kind == LOCAL)


@dataclass(frozen=True)
class Pmas:
    name: str
    sorts: tuple[SortDecl, ...]  # value sorts (kind=element)
    relations: tuple[RelDecl, ...]
    templates: tuple[AgentTemplate, ...]  # agent templates, declaration order
    env: AgentTemplate
    goal: AgentFormula
    # turn alternation: two disjoint groups of template names, or None
    alternation: Optional[tuple[tuple[str, ...], tuple[str, ...]]] = None

    def template(self, name: str) -> AgentTemplate:
        if name == self.env.name:
            return self.env
        for t in self.templates:
            if t.name == name:
                return t
        raise ModelError(f"no template {name}")

    def all_templates(self) -> tuple[AgentTemplate, ...]:
        return self.templates + (self.env,)

    def owner_of_var(self, v: str) -> AgentTemplate:
        owners = [t for t in self.all_templates() if v in t.var_names()]
        if len(owners) != 1:
            raise ModelError(f"variable {v} owned by {len(owners)} templates")
        return owners[0]

    def const_sort(self, c: str) -> Optional[str]:
        for s in self.sorts:
            if c in s.constants:
                return s.name
        return None

    def turn_group(self, template_name: str) -> Optional[int]:
        if self.alternation is None:
            return None
        g1, g2 = self.alternation
        if template_name in g1:
            return 0
        if template_name in g2:
            return 1
        return None

    def sync_initiator_group(self, action: str) -> Optional[int]:
        """Turn group whose turn permits starting `action` (alternation only)."""
        if self.alternation is None:
            return None
        for t in self.all_templates():
            a = t.action(action)
            if a is not None and a.initiator:
                return self.turn_group(t.name)
        return self.turn_group(self.env.name)

    def sync_participants(self, action: str) -> tuple[AgentTemplate, ...]:
        """Non-environment templates declaring `action`."""
        return tuple(t for t in self.templates if t.action(action) is not None)


# ---------------------------------------------------------------------------
# validation


_RESERVED = {
    NOP, "phase", "env_act", "turn", SELF, ENV, "true", "false",
    # encoding-internal constants
    "P0", "PL", "PS", "PL2", "PS2", "turn0", "turn1",
}


def validate_pmas(p: Pmas) -> list[Diagnostic]:
    """Static checks; returns diagnostics (empty = valid)."""
    out: list[Diagnostic] = []

    def err(msg: str) -> None:
        out.append(Diagnostic(0, 0, msg))

    consts: dict[str, str] = {}
    for s in p.sorts:
        for c in s.constants:
            if c in consts:
                err(f"constant {c} declared in sorts {consts[c]} and {s.name}")
            consts[c] = s.name
            if c in _RESERVED:
                err(f"constant name {c} is reserved")

    names: set[str] = set()
    for t in p.all_templates():
        if t.name in names:
            err(f"duplicate template name {t.name}")
        names.add(t.name)
        if not t.actions:
            err(f"template {t.name} declares no actions")
        seen_v: set[str] = set()
        for v, sort, init in t.variables:
            if v in _RESERVED:
                err(f"variable name {v} is reserved")
            if v in seen_v:
                err(f"template {t.name}: duplicate variable {v}")
            seen_v.add(v)
            if p.const_sort(init) != sort:
                err(f"template {t.name}: initial value {init} not of sort {sort}")
        seen_a: set[str] = set()
        for a in t.actions:
            if a.name in _RESERVED:
                err(f"action name {a.name} is reserved")
            if a.name in seen_a:
                err(f"template {t.name}: duplicate action {a.name}")
            seen_a.add(a.name)
            if formula_has_disjunction(a.pre):
                err(f"action {t.name}.{a.name}: precondition contains a disjunction")
            for v, c in a.eff:
                if v not in t.var_names():
                    err(f"action {t.name}.{a.name}: effect on foreign variable {v}")
                elif p.const_sort(c) != t.var_sort(v):
                    err(f"action {t.name}.{a.name}: {v} := {c} ill-sorted")
            if t.is_env and a.kind == LOCAL:
                pass
            try:
                infer_formula_var_templates(p, a.pre, self_template=t)
            except ModelError as me:
                for d in me.diagnostics:
                    err(f"action {t.name}.{a.name}: {d.message}")

    # variable names must be globally unique (they name arrays/globals later)
    all_vars: dict[str, str] = {}
    for t in p.all_templates():
        for v, _s, _i in t.variables:
            if v in all_vars:
                err(f"variable {v} declared in templates {all_vars[v]} and {t.name}")
            all_vars[v] = t.name
    for v in all_vars:
        if v in consts:
            err(f"name {v} used both as variable and constant")

    # sync/individual actions need the environment plus at least one template
    sync_names = {
        a.name for t in p.all_templates() for a in t.actions if a.kind in (SYNC, INDIVIDUAL)
    }
    for a_name in sorted(sync_names):
        env_decl = p.env.action(a_name)
        if env_decl is None or env_decl.kind == LOCAL:
            err(f"synchronization action {a_name} not declared by the environment")
        parts = p.sync_participants(a_name)
        if not parts:
            err(f"synchronization action {a_name} declared by no agent template (environment must not be its only participant)")
        kinds = {
            t.action(a_name).kind for t in p.all_templates() if t.action(a_name) is not None
        }
        if len(kinds) > 1:
            err(f"action {a_name} declared with inconsistent kinds {sorted(kinds)}")

    if p.alternation is not None:
        g1, g2 = p.alternation
        both = set(g1) & set(g2)
        if both:
            err(f"templates {sorted(both)} in both alternation groups")
        for n in (*g1, *g2):
            if n not in names:
                err(f"alternation names unknown template {n}")
        missing = names - set(g1) - set(g2)
        if missing:
            err(f"templates {sorted(missing)} in no alternation group")

    try:
        infer_formula_var_templates(p, p.goal, self_template=None)
    except ModelError as me:
        for d in me.diagnostics:
            err(f"goal: {d.message}")
    if any(
        isinstance(x, VarTest) and x.idx == SELF for x in _walk(p.goal)
    ):
        err("goal must not use self")

    return out


def _walk(f: AgentFormula) -> Iterator[AgentFormula]:
    yield f
    if isinstance(f, Neg):
        yield from _walk(f.inner)
    elif isinstance(f, (Conj, Disj)):
        for i in f.items:
            yield from _walk(i)


def infer_formula_var_templates(
    p: Pmas, f: AgentFormula, self_template: Optional[AgentTemplate]
) -> dict[str, AgentTemplate]:
    """Assign each free index variable the template its usages require.

    Raises ModelError on conflicting usage, on env variables indexed by
    anything but `e`, on `self` indexing a foreign template, and on index
    equalities across different templates.
    """
    assign: dict[str, AgentTemplate] = {}
    eqs: list[tuple[str, str]] = []

    def bind(idx: str, t: AgentTemplate) -> None:
        if idx == ENV:
            if not t.is_env:
                raise ModelError(f"e used to index non-environment variable")
            return
        if idx == SELF:
            if self_template is None:
                raise ModelError("self not allowed here")
            if t.name != self_template.name:
                raise ModelError(
                    f"self indexes variable of template {t.name}, not {self_template.name}"
                )
            return
        if t.is_env:
            raise ModelError(f"environment variable indexed by {idx} (use e)")
        prev = assign.get(idx)
        if prev is not None and prev.name != t.name:
            raise ModelError(f"index {idx} used for templates {prev.name} and {t.name}")
        assign[idx] = t

    for g in _walk(f):
        if isinstance(g, VarTest):
            owner = p.owner_of_var(g.var)
            bind(g.idx, owner)
            if p.const_sort(g.value) != owner.var_sort(g.var):
                raise ModelError(f"{g.var}[{g.idx}] = {g.value} ill-sorted")
        elif isinstance(g, RelTest):
            rel = next((r for r in p.relations if r.name == g.rel), None)
            if rel is None:
                raise ModelError(f"unknown relation {g.rel}")
            if len(g.args) != len(rel.arg_sorts):
                raise ModelError(f"relation {g.rel} expects {len(rel.arg_sorts)} arguments")
            for arg, want in zip(g.args, rel.arg_sorts):
                if isinstance(arg, ConstRef):
                    if p.const_sort(arg.name) != want:
                        raise ModelError(f"relation {g.rel}: argument {arg.name} not of sort {want}")
                else:
                    owner = p.owner_of_var(arg.var)
                    bind(arg.idx, owner)
                    if owner.var_sort(arg.var) != want:
                        raise ModelError(f"relation {g.rel}: {arg.var}[{arg.idx}] not of sort {want}")
        elif isinstance(g, IdxEq):
            eqs.append((g.lhs, g.rhs))

    # index equalities must connect variables of one template
    def tmpl_of(idx: str) -> Optional[AgentTemplate]:
        if idx == SELF:
            return self_template
        if idx == ENV:
            raise ModelError("e cannot appear in index equalities")
        return assign.get(idx)

    changed = True
    while changed:
        changed = False
        for a, b in eqs:
            ta, tb = tmpl_of(a), tmpl_of(b)
            if ta is not None and tb is None and b not in (SELF, ENV):
                assign[b] = ta
                changed = True
            elif tb is not None and ta is None and a not in (SELF, ENV):
                assign[a] = tb
                changed = True
    for a, b in eqs:
        ta, tb = tmpl_of(a), tmpl_of(b)
        if ta is None or tb is None:
            raise ModelError(f"cannot infer template of index {a if ta is None else b}")
        if ta.name != tb.name:
            raise ModelError(f"index equality {a} = {b} across templates {ta.name}, {tb.name}")
    return assign


# ---------------------------------------------------------------------------
# snapshots and evaluation


AgentId = tuple[str, int]  # (template name, position)


@dataclass(frozen=True)
class RelInterpretation:
    """Interpretation of the uninterpreted relations: sets of constant tuples."""

    tuples: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def holds(self, rel: str, args: tuple[str, ...]) -> bool:
        return (rel, args) in set(self.tuples)

    @staticmethod
    def of(entries: Iterable[tuple[str, tuple[str, ...]]]) -> "RelInterpretation":
        return RelInterpretation(tuple(sorted(set(entries))))


@dataclass(frozen=True)
class Snapshot:
    """One concrete configuration: per-template agent states plus env state.

    Agent states are tuples of constants following the template's variable
    order; agents of one template are interchangeable, so `canonical()` sorts
    them.  `turn` is the current alternation group (or None).
    """

    agents: tuple[tuple[str, tuple[tuple[str, ...], ...]], ...]
    env: tuple[str, ...]
    turn: Optional[int] = None

    def agents_of(self, template: str) -> tuple[tuple[str, ...], ...]:
        for name, states in self.agents:
            if name == template:
                return states
        raise ModelError(f"no agents for template {template}")

    def canonical(self) -> "Snapshot":
        return Snapshot(
            tuple((name, tuple(sorted(states))) for name, states in self.agents),
            self.env,
            self.turn,
        )

    def with_agent(self, aid: AgentId, state: tuple[str, ...]) -> "Snapshot":
        t, i = aid
        return Snapshot(
            tuple(
                (name, tuple(state if (name == t and k == i) else s for k, s in enumerate(states)))
                for name, states in self.agents
            ),
            self.env,
            self.turn,
        )

    def all_ids(self) -> list[AgentId]:
        return [(name, i) for name, states in self.agents for i in range(len(states))]


def initial_snapshot(p: Pmas, counts: dict[str, int]) -> Snapshot:
    agents = tuple(
        (t.name, tuple(tuple(init for _v, _s, init in t.variables) for _ in range(counts.get(t.name, 0))))
        for t in p.templates
    )
    env = tuple(init for _v, _s, init in p.env.variables)
    turn = 0 if p.alternation is not None else None
    return Snapshot(agents, env, turn)


def _value_of(p: Pmas, snap: Snapshot, var: str, aid: Optional[AgentId]) -> str:
    owner = p.owner_of_var(var)
    if owner.is_env:
        return snap.env[owner.var_names().index(var)]
    assert aid is not None
    t, i = aid
    return snap.agents_of(t)[i][owner.var_names().index(var)]


def eval_agent_formula(
    p: Pmas,
    snap: Snapshot,
    interp: RelInterpretation,
    f: AgentFormula,
    self_id: Optional[AgentId] = None,
    self_template: Optional[str] = None,
) -> bool:
    """Truth of `f` in `snap`: free index variables are existential.

    Index groundings range over the agents of the variable's template and need
    not be injective.  `self_id` fixes the interpretation of `self`.
    """
    st = p.template(self_template or self_id[0]) if (self_template or self_id) else None
    assign = infer_formula_var_templates(p, f, self_template=st)
    names = sorted(assign)
    domains = [range(len(snap.agents_of(assign[n].name))) for n in names]

    def idx_val(idx: str, ground: dict[str, AgentId]) -> AgentId:
        if idx == SELF:
            if self_id is None:
                raise ModelError("self unbound in evaluation")
            return self_id
        return ground[idx]

    def ev(g: AgentFormula, ground: dict[str, AgentId]) -> bool:
        if isinstance(g, BoolConst):
            return g.value
        if isinstance(g, VarTest):
            owner = p.owner_of_var(g.var)
            aid = None if owner.is_env else idx_val(g.idx, ground)
            return _value_of(p, snap, g.var, aid) == g.value
        if isinstance(g, RelTest):
            vals = []
            for arg in g.args:
                if isinstance(arg, ConstRef):
                    vals.append(arg.name)
                else:
                    owner = p.owner_of_var(arg.var)
                    aid = None if owner.is_env else idx_val(arg.idx, ground)
                    vals.append(_value_of(p, snap, arg.var, aid))
            return interp.holds(g.rel, tuple(vals))
        if isinstance(g, IdxEq):
            return idx_val(g.lhs, ground) == idx_val(g.rhs, ground)
        if isinstance(g, Neg):
            return not ev(g.inner, ground)
        if isinstance(g, Conj):
            return all(ev(i, ground) for i in g.items)
        if isinstance(g, Disj):
            return any(ev(i, ground) for i in g.items)
        raise ModelError(f"not a formula: {g!r}")

    for combo in itertools.product(*domains):
        ground = {n: (assign[n].name, i) for n, i in zip(names, combo)}
        if ev(f, ground):
            return True
    return False
