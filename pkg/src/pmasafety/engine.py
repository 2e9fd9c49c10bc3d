"""Symbolic backward reachability over an array-based encoding.

Frontier cubes are pulled backwards through the transition rules (preimage =
substitute updates, eliminate case-defined values, renormalise to
differentiated cubes), accumulated into the visited region B, and checked
against the initial condition.  Safe when the frontier is entailed by B;
unsafe when a frontier cube intersects the initial states, in which case the
provenance chain yields a forward rule trace and a step template that can be
replayed on concrete instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .logic import (
    ArrayRead,
    BudgetError,
    Const,
    Cube,
    DEFAULT_DNF_CAP,
    Eq,
    Formula,
    GlobalRef,
    IndexVar,
    Lit,
    RelAtom,
    Signature,
    StateFormula,
    TRUE,
    cube_formula,
    cube_vars_of_lits,
    dnf,
    expand_cases,
    fand,
    flit,
    f_or,
    fresh_name,
    ground_lits_sat,
    lit_subst,
    make_cube,
    term_subst,
)
from .encoder import (
    AbPmas,
    BlockedPre,
    Gate,
    TransitionRule,
    differentiate,
    encode_goal,
)

SAFE = "SAFE"
UNSAFE = "UNSAFE"
UNKNOWN = "UNKNOWN"

DEFAULT_MAX_DEPTH = 200
DEFAULT_MAX_CUBES = 100000


# ---------------------------------------------------------------------------
# preimage


def _term_through(t, globals_map, arrays_map):
    if isinstance(t, GlobalRef):
        return globals_map.get(t.name, t)
    if isinstance(t, ArrayRead):
        upd = arrays_map.get(t.array)
        if upd is not None:
            return upd.apply(t.index)
        return t
    return t


def _lit_through(l: Lit, globals_map, arrays_map) -> Lit:
    a = l.atom
    if isinstance(a, Eq):
        return Lit(
            l.neg,
            Eq(
                _term_through(a.lhs, globals_map, arrays_map),
                _term_through(a.rhs, globals_map, arrays_map),
            ),
        )
    return Lit(
        l.neg,
        RelAtom(a.rel, tuple(_term_through(x, globals_map, arrays_map) for x in a.args)),
    )


def _gate_formula(gate: Gate, cands: dict[str, list[IndexVar]]) -> Formula:
    """Instantiate a universal gate over the candidate index variables.

    Instantiation over a finite set weakens the true universal condition; that
    is the deliberate over-approximation of the concurrent encoding.
    """

    def blocked_formula(base: dict[IndexVar, IndexVar]) -> Formula:
        conj = []
        for bp in gate.blocked:
            pools = [cands.get(v.sort, []) for v in bp.extra_vars]
            insts = []
            for combo in itertools.product(*pools) if bp.extra_vars else [()]:
                sub = dict(base)
                sub.update(zip(bp.extra_vars, combo))
                insts.append(f_or([flit(lit_subst(l, sub).negate()) for l in bp.lits]))
            conj.append(fand(insts))
        return fand(conj)

    if gate.var is None:
        return f_or([flit(gate.declared), blocked_formula({})])
    out = []
    for v in cands.get(gate.var.sort, []):
        sub = {gate.var: v}
        out.append(
            f_or([flit(lit_subst(gate.declared, sub)), blocked_formula(sub)])
        )
    return fand(out)


def preimage(
    rule: TransitionRule,
    cube: Cube,
    sig: Signature,
    dnf_cap: int = DEFAULT_DNF_CAP,
) -> list[Cube]:
    """Exact preimage of one differentiated cube under one rule.

    Returns differentiated cubes (already EUF-filtered).  The cube's own index
    variables stay pairwise distinct; rule existentials may merge with them or
    with each other, which the equality-partition split enumerates.
    """
    # rename apart
    cube_ren = {v: IndexVar(fresh_name("z"), v.sort) for v in cube.exists}
    rule_ren = {v: IndexVar(fresh_name("r"), v.sort) for v in rule.exists}

    globals_map = rule.globals_map()
    arrays_map = {
        a: type(u)(u.var, term_subst(u.body, rule_ren)) for a, u in rule.arrays_upd
    }

    parts: list[Formula] = [
        cube_formula(lit_subst(l, rule_ren) for l in rule.guard)
    ]
    parts.append(
        cube_formula(
            _lit_through(lit_subst(l, cube_ren), globals_map, arrays_map)
            for l in cube.lits
        )
    )

    cands: dict[str, list[IndexVar]] = {}
    for v in itertools.chain(rule_ren.values(), cube_ren.values()):
        cands.setdefault(v.sort, []).append(v)
    for gate in rule.gates:
        parts.append(_gate_formula(gate, cands))

    f = expand_cases(fand(parts))
    out: list[Cube] = []
    seen = set()
    distinct = set(cube_ren.values())
    for lits in dnf(f, dnf_cap):
        for c in differentiate(lits, sig, distinct=distinct):
            cc = canon_cube(c)
            if cc.key() not in seen:
                seen.add(cc.key())
                out.append(cc)
    return out


def canon_cube(cube: Cube) -> Cube:
    """Deterministic variable renaming: try every per-sort naming permutation
    and keep the lexicographically smallest rendering."""
    by_sort: dict[str, list[IndexVar]] = {}
    for v in cube.exists:
        by_sort.setdefault(v.sort, []).append(v)
    pools = []
    for sort in sorted(by_sort):
        vs = by_sort[sort]
        names = [IndexVar(f"$c{sort}_{k}", sort) for k in range(len(vs))]
        pools.append([dict(zip(vs, perm)) for perm in itertools.permutations(names)])
    best: Optional[Cube] = None
    best_key = None
    for combo in itertools.product(*pools) if pools else [()]:
        sub: dict[IndexVar, IndexVar] = {}
        for m in combo:
            sub.update(m)
        cand = make_cube(sorted(sub.values()), tuple(lit_subst(l, sub) for l in cube.lits))
        key = repr(cand)
        if best_key is None or key < best_key:
            best, best_key = cand, key
    assert best is not None or not cube.exists
    return best if best is not None else cube


# ---------------------------------------------------------------------------
# subsumption and entailment


def _shape_term(x):
    if isinstance(x, IndexVar):
        return ("V", x.sort)
    if isinstance(x, ArrayRead):
        return ("A", x.array)
    return x


def _lit_shape(l: Lit):
    """The literal with index variables abstracted away (array reads keep only
    the array name).  A necessary condition for an injective embedding is that
    the subsuming cube's shapes are a subset of the candidate's."""
    a = l.atom
    if isinstance(a, Eq):
        return (l.neg, "=", _shape_term(a.lhs), _shape_term(a.rhs))
    return (l.neg, a.rel, tuple(_shape_term(x) for x in a.args))


_shape_cache: dict[tuple, frozenset] = {}


def cube_shapes(c: Cube) -> frozenset:
    key = c.key()
    got = _shape_cache.get(key)
    if got is None:
        got = frozenset(_lit_shape(l) for l in c.lits)
        _shape_cache[key] = got
    return got


def subsumes(a: Cube, b: Cube) -> bool:
    """Syntactic embedding: b implies a via some injective variable mapping."""
    if len(a.lits) > len(b.lits) or len(a.exists) > len(b.exists):
        return False
    if not cube_shapes(a) <= cube_shapes(b):
        return False
    b_lits = set(b.lits)
    bs_by_sort: dict[str, list[IndexVar]] = {}
    for v in b.exists:
        bs_by_sort.setdefault(v.sort, []).append(v)

    avars = list(a.exists)
    done = set(avars)
    # literals checkable once the first i+1 variables are assigned
    check_at: list[list[Lit]] = [[] for _ in range(len(avars) + 1)]
    for l in a.lits:
        vs = cube_vars_of_lits([l])
        k = 0
        for i, v in enumerate(avars):
            if v in vs:
                k = i + 1
        check_at[k].append(l)

    def assign(i: int, sub: dict[IndexVar, IndexVar], used: set[IndexVar]) -> bool:
        for l in check_at[i]:
            if lit_subst(l, sub) not in b_lits:
                return False
        if i == len(avars):
            return True
        v = avars[i]
        for w in bs_by_sort.get(v.sort, []):
            if w in used:
                continue
            sub[v] = w
            used.add(w)
            if assign(i + 1, sub, used):
                return True
            used.discard(w)
            del sub[v]
        return False

    return assign(0, {}, set())


def _clauses_sat(
    base: list[Lit],
    clauses: list[list[Lit]],
    sig: Signature,
    node_cap: int = 20000,
) -> bool:
    """Ground EUF satisfiability of cube /\\ CNF clauses, by branching.

    Gives up (answers "satisfiable") after `node_cap` search nodes, which
    callers treat as "entailment not proven" — always sound.
    """
    skmap = {v: ("v", "sk:" + v.name) for v in cube_vars_of_lits(base)}
    for cl in clauses:
        for v in cube_vars_of_lits(cl):
            skmap.setdefault(v, ("v", "sk:" + v.name))

    # literal -> indices of clauses it satisfies, so satisfaction is updated
    # incrementally instead of rescanning every clause at every search node
    lit2cl: dict[Lit, list[int]] = {}
    for i, cl in enumerate(clauses):
        for d in cl:
            lit2cl.setdefault(d, []).append(i)
    sat = [False] * len(clauses)
    base_list = list(base)
    base_set = set(base)
    for l in base_list:
        for i in lit2cl.get(l, ()):
            sat[i] = True
    budget = [node_cap]

    def mark(d: Lit) -> list[int]:
        changed = []
        for i in lit2cl.get(d, ()):
            if not sat[i]:
                sat[i] = True
                changed.append(i)
        return changed

    def rec(start: int) -> bool:
        budget[0] -= 1
        if budget[0] <= 0:
            return True  # give up: report satisfiable
        if not ground_lits_sat(base_list, skmap, sig):
            return False
        k = start
        while k < len(clauses) and sat[k]:
            k += 1
        if k == len(clauses):
            return True
        for d in clauses[k]:
            if d.negate() in base_set:
                continue
            base_list.append(d)
            base_set.add(d)
            changed = mark(d)
            if rec(k):
                return True
            for i in changed:
                sat[i] = False
            base_set.discard(d)
            base_list.pop()
        return False

    return rec(0)


# cube variables are canonically named, so the same region-cube instantiation
# recurs across many entailment checks; cache the built clauses
_clause_cache: dict[tuple, list[Lit]] = {}


def entailed_by(
    cube: Cube,
    region: Iterable[Cube],
    sig: Signature,
    clause_cap: int = 2000,
) -> bool:
    """cube |= \\/ region, via universal instantiation over the cube's own
    variables (sorts with no variable are empty in the restricted model).

    Best-effort beyond `clause_cap` instantiations: answers False (not
    entailed), which is always sound — the cube is merely kept."""
    cvars_by_sort: dict[str, list[IndexVar]] = {}
    for v in cube.exists:
        cvars_by_sort.setdefault(v.sort, []).append(v)
    clauses: list[list[Lit]] = []
    for b in region:
        pools = [cvars_by_sort.get(v.sort, []) for v in b.exists]
        if any(not p for p in pools):
            continue  # no total instantiation: imposes nothing
        for combo in itertools.product(*pools) if b.exists else [()]:
            if len(set(combo)) != len(combo):
                continue  # non-injective: differentiation clause vacuous
            ckey = (b.key(), combo)
            cl = _clause_cache.get(ckey)
            if cl is None:
                sub = dict(zip(b.exists, combo))
                cl = [lit_subst(l, sub).negate() for l in b.lits]
                _clause_cache[ckey] = cl
            clauses.append(cl)
            if len(clauses) > clause_cap:
                return False
    return not _clauses_sat(list(cube.lits), clauses, sig)


# ---------------------------------------------------------------------------
# initial-state intersection


def init_sat(abp: AbPmas, cube: Cube) -> bool:
    g0 = {g: Const(c) for g, c in abp.init.globals_}
    a0 = dict(abp.init.arrays)

    def through(t):
        if isinstance(t, GlobalRef):
            return g0[t.name]
        if isinstance(t, ArrayRead):
            return Const(a0[t.array])
        return t

    lits: list[Lit] = []
    for l in cube.lits:
        a = l.atom
        if isinstance(a, Eq):
            if isinstance(a.lhs, IndexVar) or isinstance(a.rhs, IndexVar):
                lits.append(l)  # index equalities survive untouched
                continue
            lits.append(Lit(l.neg, Eq(through(a.lhs), through(a.rhs))))
        else:
            lits.append(Lit(l.neg, RelAtom(a.rel, tuple(through(x) for x in a.args))))
    skmap = {v: ("v", "sk:" + v.name) for v in cube.exists}
    for v in cube_vars_of_lits(lits):
        skmap.setdefault(v, ("v", "sk:" + v.name))
    return ground_lits_sat(lits, skmap, abp.sig)


# ---------------------------------------------------------------------------
# backward reachability


@dataclass
class _Node:
    cube: Cube
    rule: Optional[TransitionRule]
    parent: Optional["_Node"]
    depth: int


@dataclass
class Frontier:
    """One layer of the backward search (for inspection and reporting)."""

    depth: int
    cubes: list[Cube]


@dataclass
class TraceStep:
    rule_label: str
    kind: str
    template: Optional[str]
    action: Optional[str]


@dataclass
class Verdict:
    status: str  # SAFE | UNSAFE | UNKNOWN
    depth: int
    trace: list[TraceStep] = field(default_factory=list)
    run_template: list[frozenset[str]] = field(default_factory=list)
    reason: str = ""
    layers: list[Frontier] = field(default_factory=list)
    total_cubes: int = 0


def breach(
    abp: AbPmas,
    goal: Optional[StateFormula] = None,
    max_depth: int = DEFAULT_MAX_DEPTH,
    max_cubes: int = DEFAULT_MAX_CUBES,
    dnf_cap: int = DEFAULT_DNF_CAP,
) -> Verdict:
    """Backward reachability from the goal; SAFE / UNSAFE / UNKNOWN."""
    sig = abp.sig
    if goal is None:
        goal = encode_goal(abp.pmas, sig)

    frontier: list[_Node] = []
    seen_layer = set()
    for c in goal.cubes:
        cc = canon_cube(c)
        if cc.key() not in seen_layer:
            seen_layer.add(cc.key())
            frontier.append(_Node(cc, None, None, 0))

    region: list[Cube] = []
    layers: list[Frontier] = []
    total = len(frontier)
    depth = 0

    def verdict_unsafe(node: _Node) -> Verdict:
        steps: list[TraceStep] = []
        cur: Optional[_Node] = node
        while cur is not None and cur.rule is not None:
            r = cur.rule
            steps.append(TraceStep(r.label, r.kind, r.template, r.action))
            cur = cur.parent
        v = Verdict(UNSAFE, depth=node.depth, trace=steps, layers=layers, total_cubes=total)
        v.run_template = extract_run_template(v.trace)
        return v

    while True:
        layers.append(Frontier(depth, [n.cube for n in frontier]))
        for n in frontier:
            if init_sat(abp, n.cube):
                return verdict_unsafe(n)

        new_nodes: list[_Node] = []
        for n in frontier:
            if any(subsumes(b, n.cube) for b in region):
                continue
            if any(subsumes(m.cube, n.cube) for m in new_nodes):
                continue
            if entailed_by(n.cube, region, sig):
                continue
            new_nodes.append(n)
        if not new_nodes:
            return Verdict(SAFE, depth=depth, layers=layers, total_cubes=total,
                           reason="fixpoint")
        region.extend(n.cube for n in new_nodes)

        if depth >= max_depth:
            return Verdict(UNKNOWN, depth=depth, layers=layers, total_cubes=total,
                           reason="depth budget exhausted")
        depth += 1
        nxt: dict = {}
        try:
            for rule in abp.rules:
                for n in new_nodes:
                    for c in preimage(rule, n.cube, sig, dnf_cap):
                        if c.key() in nxt:
                            continue
                        # cheap syntactic pruning against the visited region
                        if any(subsumes(b, c) for b in region):
                            continue
                        nxt[c.key()] = _Node(c, rule, n, depth)
        except BudgetError as be:
            return Verdict(UNKNOWN, depth=depth, layers=layers, total_cubes=total,
                           reason=str(be))
        total += len(nxt)
        if total > max_cubes:
            return Verdict(UNKNOWN, depth=depth, layers=layers, total_cubes=total,
                           reason="cube budget exhausted")
        frontier = list(nxt.values())
        if not frontier:
            return Verdict(SAFE, depth=depth, layers=layers, total_cubes=total,
                           reason="empty preimage")


# ---------------------------------------------------------------------------
# trace post-processing


def extract_run_template(trace: list[TraceStep]) -> list[frozenset[str]]:
    """Collapse a forward rule trace into committed global steps.

    Declares/starts/joins accumulate the actions of the step; a bulk or sync
    commit closes it.  Each step is the set of distinct committed action names
    (agent multiplicity is left to replay).  Gate rules are bookkeeping only.
    """
    steps: list[frozenset[str]] = []
    current: list[str] = []
    for st in trace:
        if st.kind in ("declare", "sync_start", "sync_join"):
            if st.action is not None and st.action not in current:
                current.append(st.action)
        elif st.kind in ("bulk_local", "sync_commit"):
            if st.kind == "bulk_local" and st.action not in (None, "nop") and st.action not in current:
                current.append(st.action)
            if not current:
                raise RuntimeError("commit rule without any declared action in trace")
            steps.append(frozenset(current))
            current = []
        elif st.kind == "ind_sync":
            if current:
                raise RuntimeError("individual sync inside an open declare group")
            steps.append(frozenset([st.action] if st.action else []))
        elif st.kind in ("gate_local", "gate_sync"):
            continue
        else:
            raise RuntimeError(f"unknown rule kind {st.kind}")
    if current:
        raise RuntimeError("trace ends inside an uncommitted declare group")
    return steps


# ---------------------------------------------------------------------------
# locality analysis


@dataclass
class LocalityReport:
    semantics: str
    goal_local: bool
    protocols_local: bool
    nonlocal_literals: list[str]
    guaranteed_termination: bool
    spurious_unsafe_possible: bool


def _lit_local(l: Lit) -> bool:
    return len(cube_vars_of_lits([l])) <= 1


def check_locality(abp: AbPmas, goal: Optional[StateFormula] = None) -> LocalityReport:
    """Syntactic locality: every literal touches at most one index variable.

    Local goal + local rule guards under interleaved semantics guarantee that
    the backward search terminates; concurrent semantics additionally makes an
    UNSAFE verdict potentially spurious (gates are over-approximated).
    """
    if goal is None:
        goal = encode_goal(abp.pmas, abp.sig)
    bad: list[str] = []
    goal_local = True
    for c in goal.cubes:
        for l in c.lits:
            if not _lit_local(l):
                goal_local = False
                bad.append(f"goal: {l!r}")
    protocols_local = True
    for r in abp.rules:
        for l in r.guard:
            if not _lit_local(l):
                protocols_local = False
                bad.append(f"{r.label}: {l!r}")
    concurrent = abp.semantics == "concurrent"
    return LocalityReport(
        semantics=abp.semantics,
        goal_local=goal_local,
        protocols_local=protocols_local,
        nonlocal_literals=bad,
        guaranteed_termination=(not concurrent) and goal_local and protocols_local,
        spurious_unsafe_possible=concurrent,
    )
