"""Independent reference oracles used by the test suite.

Everything here deliberately avoids the library's own solving machinery:
satisfiability is decided by exhaustive enumeration over small finite
universes, and transition rules are executed on fully concrete states.
"""

from __future__ import annotations

import itertools
import random
from typing import Optional

from pmasafety.logic import (
    ArrayRead,
    CaseTerm,
    Const,
    Cube,
    EFFormula,
    Eq,
    FAnd,
    FFalse,
    FLit,
    FNot,
    FOr,
    FTrue,
    Formula,
    GlobalRef,
    IndexVar,
    Lit,
    RelAtom,
    RelDecl,
    Signature,
    SortDecl,
    StateFormula,
    fand,
    f_or,
    flit,
    fnot,
    lit_eq,
    make_cube,
)

# ---------------------------------------------------------------------------
# brute-force EUF satisfiability for ground (skolemized) cubes
#
# Unknowns are the element-valued "cells": every global and every (array,
# index-variable) pair.  Distinct index variables of one sort denote distinct
# indexes, so distinct cells.  The universe of each enumerated sort is its
# declared constants (pairwise distinct) plus two fresh elements.


def _cells_of(lits) -> list[tuple]:
    cells: dict[tuple, None] = {}
    for l in lits:
        a = l.atom
        terms = (a.lhs, a.rhs) if isinstance(a, Eq) else a.args
        for t in terms:
            if isinstance(t, GlobalRef):
                cells.setdefault(("g", t.name), None)
            elif isinstance(t, ArrayRead):
                cells.setdefault(("a", t.array, t.index), None)
    return list(cells)


def brute_sat_cube(cube: Cube, sig: Signature, fresh: int = 2) -> bool:
    universe = {
        s.name: list(s.constants) + [f"${s.name}.f{i}" for i in range(fresh)]
        for s in sig.sorts.values()
        if s.constants
    }
    cells = _cells_of(cube.lits)

    def cell_sort(c: tuple) -> str:
        return sig.globals[c[1]] if c[0] == "g" else sig.arrays[c[1]][1]

    def value(t, asg) -> str:
        if isinstance(t, Const):
            return t.name
        if isinstance(t, GlobalRef):
            return asg[("g", t.name)]
        if isinstance(t, ArrayRead):
            return asg[("a", t.array, t.index)]
        raise AssertionError(f"unexpected term in ground cube: {t!r}")

    domains = [universe[cell_sort(c)] for c in cells]
    for combo in itertools.product(*domains):
        asg = dict(zip(cells, combo))
        required: dict[tuple, bool] = {}
        ok = True
        for l in cube.lits:
            a = l.atom
            if isinstance(a, Eq):
                if (value(a.lhs, asg) == value(a.rhs, asg)) == l.neg:
                    ok = False
                    break
            else:
                key = (a.rel, tuple(value(x, asg) for x in a.args))
                want = not l.neg
                if required.setdefault(key, want) != want:
                    ok = False
                    break
        if ok:
            return True
    return False


# ---------------------------------------------------------------------------
# brute-force satisfiability for the exists/forall index fragment
#
# Index domains are restricted to size <= number of existentials of the sort
# (the restriction argument: a satisfying model can be shrunk to the elements
# named by the existential witnesses).  Element cells range over the declared
# constants plus one fresh element per cell; relation interpretations are
# enumerated over the whole finite universe.


def _formula_lits(f: Formula):
    if isinstance(f, FLit):
        yield f.lit
    elif isinstance(f, (FAnd, FOr)):
        for i in f.items:
            yield from _formula_lits(i)
    elif isinstance(f, FNot):
        yield from _formula_lits(f.inner)


def brute_sat_ef(ef: EFFormula, sig: Signature) -> bool:
    lits = list(_formula_lits(ef.matrix))
    arrays = sorted({t.array for l in lits for t in _terms(l) if isinstance(t, ArrayRead)})
    globals_ = sorted({t.name for l in lits for t in _terms(l) if isinstance(t, GlobalRef)})
    rels = sorted({l.atom.rel for l in lits if isinstance(l.atom, RelAtom)})

    by_sort: dict[str, int] = {}
    for v in ef.existentials:
        by_sort[v.sort] = by_sort.get(v.sort, 0) + 1
    index_sorts = sorted(set(by_sort) | {u.sort for u in ef.universals})

    size_ranges = [range(by_sort.get(s, 0) + 1) for s in index_sorts]
    for sizes in itertools.product(*size_ranges):
        dom = dict(zip(index_sorts, sizes))
        cells: list[tuple] = [("g", g) for g in globals_]
        for arr in arrays:
            isort = sig.arrays[arr][0]
            cells += [("a", arr, i) for i in range(dom.get(isort, 0))]
        universe = {}
        for s in sig.sorts.values():
            if s.constants:
                n_fresh = sum(1 for c in cells if _cell_sort(c, sig) == s.name)
                universe[s.name] = list(s.constants) + [
                    f"${s.name}.f{i}" for i in range(n_fresh)
                ]
        rel_spaces = []
        for r in rels:
            args = sig.relations[r].arg_sorts
            tuples = list(itertools.product(*[universe[a] for a in args]))
            rel_spaces.append(
                [frozenset(s) for k in range(len(tuples) + 1) for s in itertools.combinations(tuples, k)]
            )
        cell_domains = [universe[_cell_sort(c, sig)] for c in cells]
        for cell_vals in itertools.product(*cell_domains):
            asg = dict(zip(cells, cell_vals))
            for interp_combo in itertools.product(*rel_spaces) if rel_spaces else [()]:
                interp = dict(zip(rels, interp_combo))
                if _ef_holds(ef, sig, dom, asg, interp):
                    return True
    return False


def _cell_sort(c: tuple, sig: Signature) -> str:
    return sig.globals[c[1]] if c[0] == "g" else sig.arrays[c[1]][1]


def _terms(l: Lit):
    a = l.atom
    return (a.lhs, a.rhs) if isinstance(a, Eq) else a.args


def _ef_holds(ef, sig, dom, asg, interp) -> bool:
    def tval(t, idx):
        if isinstance(t, Const):
            return ("e", t.name)
        if isinstance(t, GlobalRef):
            return ("e", asg[("g", t.name)])
        if isinstance(t, IndexVar):
            return ("i", idx[t])
        if isinstance(t, ArrayRead):
            return ("e", asg[("a", t.array, idx[t.index])])
        raise AssertionError(f"unexpected term {t!r}")

    def holds(f, idx) -> bool:
        if isinstance(f, FTrue):
            return True
        if isinstance(f, FFalse):
            return False
        if isinstance(f, FLit):
            a = f.lit.atom
            if isinstance(a, Eq):
                v = tval(a.lhs, idx) == tval(a.rhs, idx)
            else:
                v = tuple(tval(x, idx)[1] for x in a.args) in interp[a.rel]
            return v != f.lit.neg
        if isinstance(f, FAnd):
            return all(holds(i, idx) for i in f.items)
        if isinstance(f, FOr):
            return any(holds(i, idx) for i in f.items)
        if isinstance(f, FNot):
            return not holds(f.inner, idx)
        raise AssertionError(f"not a formula: {f!r}")

    evars = list(ef.existentials)
    uvars = list(ef.universals)
    for e_combo in itertools.product(*[range(dom.get(v.sort, 0)) for v in evars]):
        idx = dict(zip(evars, e_combo))
        ok = True
        for u_combo in itertools.product(*[range(dom.get(u.sort, 0)) for u in uvars]):
            idx.update(zip(uvars, u_combo))
            if not holds(ef.matrix, idx):
                ok = False
                break
        if ok:
            return True
    return False


# ---------------------------------------------------------------------------
# random instance generators (deterministic per seed)

CUBE_SIG = Signature(
    sorts=[
        SortDecl("I", "index"),
        SortDecl("S1", "element", ("p", "q", "r")),
        SortDecl("S2", "element", ("u", "v")),
    ],
    relations=[RelDecl("R1", ("S1",)), RelDecl("R2", ("S1", "S2"))],
    globals_={"g1": "S1", "g2": "S2"},
    arrays={"f": ("I", "S1"), "h": ("I", "S2")},
)

_ZS = tuple(IndexVar(f"z{i}", "I") for i in range(1, 4))


def random_ground_cube(seed: int) -> Cube:
    """A random differentiated cube over CUBE_SIG with at most 4 unknown cells."""
    rng = random.Random(seed)
    while True:
        nlits = rng.randint(3, 8)
        lits = []
        for _ in range(nlits):
            if rng.random() < 0.3:
                if rng.random() < 0.5:
                    atom = RelAtom("R1", (_rand_term(rng, "S1"),))
                else:
                    atom = RelAtom("R2", (_rand_term(rng, "S1"), _rand_term(rng, "S2")))
            else:
                sort = rng.choice(("S1", "S2"))
                atom = Eq(_rand_term(rng, sort), _rand_term(rng, sort))
            lits.append(Lit(rng.random() < 0.4, atom))
        if len(_cells_of(lits)) <= 4:
            return make_cube(_ZS, lits)


def _rand_term(rng, sort):
    consts = CUBE_SIG.sorts[sort].constants
    kind = rng.random()
    if kind < 0.4:
        return Const(rng.choice(consts))
    if kind < 0.6:
        return GlobalRef("g1" if sort == "S1" else "g2")
    arr = "f" if sort == "S1" else "h"
    return ArrayRead(arr, rng.choice(_ZS))


EF_SIG = Signature(
    sorts=[SortDecl("I", "index"), SortDecl("S", "element", ("p", "q"))],
    relations=[RelDecl("R", ("S",))],
    globals_={"g": "S"},
    arrays={"f": ("I", "S")},
)


def random_ef(seed: int) -> EFFormula:
    """A random exists/forall formula over EF_SIG (kept tiny for brute force)."""
    rng = random.Random(seed)
    ne = rng.randint(0, 3)
    nu = rng.randint(0, 2)
    use_rel = ne <= 2 and rng.random() < 0.4
    use_global = not use_rel and ne <= 2 and rng.random() < 0.4
    evars = tuple(IndexVar(f"e{i}", "I") for i in range(ne))
    uvars = tuple(IndexVar(f"u{i}", "I") for i in range(nu))
    allvars = evars + uvars

    def leaf() -> Formula:
        choices = []
        if len(allvars) >= 2:
            choices.append("idx_eq")
        if allvars:
            choices += ["arr_const", "arr_arr"]
            if use_rel:
                choices.append("rel_arr")
        if use_global:
            choices.append("glob_const")
        if use_rel:
            choices.append("rel_const")
        if not choices:
            return flit(lit_eq(Const("p"), Const(rng.choice(("p", "q")))))
        kind = rng.choice(choices)
        neg = rng.random() < 0.4
        c = Const(rng.choice(("p", "q")))
        if kind == "idx_eq":
            a, b = rng.sample(allvars, 2)
            return flit(lit_eq(a, b, neg))
        if kind == "arr_const":
            return flit(lit_eq(ArrayRead("f", rng.choice(allvars)), c, neg))
        if kind == "arr_arr":
            return flit(
                lit_eq(ArrayRead("f", rng.choice(allvars)), ArrayRead("f", rng.choice(allvars)), neg)
            )
        if kind == "glob_const":
            return flit(lit_eq(GlobalRef("g"), c, neg))
        if kind == "rel_arr":
            return flit(Lit(neg, RelAtom("R", (ArrayRead("f", rng.choice(allvars)),))))
        return flit(Lit(neg, RelAtom("R", (c,))))

    def tree(depth: int) -> Formula:
        if depth == 0 or rng.random() < 0.4:
            return leaf()
        op = rng.random()
        if op < 0.45:
            return fand([tree(depth - 1) for _ in range(rng.randint(2, 3))])
        if op < 0.9:
            return f_or([tree(depth - 1) for _ in range(rng.randint(2, 3))])
        return fnot(tree(depth - 1))

    return EFFormula(evars, uvars, tree(2))


# ---------------------------------------------------------------------------
# concrete execution of encoded transition systems (for preimage soundness)


class ConcreteAb:
    """Explicit-state view of an encoded system over fixed index domains."""

    def __init__(self, abp, dom_size: int, interp: frozenset):
        self.abp = abp
        self.sig = abp.sig
        self.interp = interp  # set of (rel, value tuple)
        self.domains = {
            s.name: list(range(dom_size))
            for s in self.sig.sorts.values()
            if s.kind == "index"
        }

    # states are (globals dict, arrays dict keyed (name, idx))
    def initial_state(self):
        g = dict(self.abp.init.globals_)
        arrs = {}
        for a, c in self.abp.init.arrays:
            for i in self.domains[self.sig.arrays[a][0]]:
                arrs[(a, i)] = c
        return (g, arrs)

    def all_states(self):
        gnames = sorted(self.sig.globals)
        cells = [
            (a, i)
            for a in sorted(self.sig.arrays)
            for i in self.domains[self.sig.arrays[a][0]]
        ]
        gdoms = [self.sig.sorts[self.sig.globals[g]].constants for g in gnames]
        cdoms = [self.sig.sorts[self.sig.arrays[a][1]].constants for a, _ in cells]
        for gv in itertools.product(*gdoms):
            g = dict(zip(gnames, gv))
            for cv in itertools.product(*cdoms):
                yield (g, dict(zip(cells, cv)))

    def state_count(self) -> int:
        n = 1
        for g in self.sig.globals.values():
            n *= len(self.sig.sorts[g].constants)
        for a, (isort, esort) in self.sig.arrays.items():
            n *= len(self.sig.sorts[esort].constants) ** len(self.domains[isort])
        return n

    def eval_term(self, t, state, idx):
        g, arrs = state
        if isinstance(t, Const):
            return t.name
        if isinstance(t, GlobalRef):
            return g[t.name]
        if isinstance(t, IndexVar):
            return idx[t]
        if isinstance(t, ArrayRead):
            return arrs[(t.array, idx[t.index])]
        if isinstance(t, CaseTerm):
            for cond, val in t.branches:
                if self.eval_formula(cond, state, idx):
                    return self.eval_term(val, state, idx)
            raise AssertionError("non-exhaustive case term")
        raise AssertionError(f"unexpected term {t!r}")

    def eval_lit(self, l: Lit, state, idx) -> bool:
        a = l.atom
        if isinstance(a, Eq):
            v = self.eval_term(a.lhs, state, idx) == self.eval_term(a.rhs, state, idx)
        else:
            v = (a.rel, tuple(self.eval_term(x, state, idx) for x in a.args)) in self.interp
        return v != l.neg

    def eval_formula(self, f: Formula, state, idx) -> bool:
        if isinstance(f, FTrue):
            return True
        if isinstance(f, FFalse):
            return False
        if isinstance(f, FLit):
            return self.eval_lit(f.lit, state, idx)
        if isinstance(f, FAnd):
            return all(self.eval_formula(i, state, idx) for i in f.items)
        if isinstance(f, FOr):
            return any(self.eval_formula(i, state, idx) for i in f.items)
        if isinstance(f, FNot):
            return not self.eval_formula(f.inner, state, idx)
        raise AssertionError(f"not a formula: {f!r}")

    def cube_sat(self, cube: Cube, state) -> bool:
        """Existential index variables range injectively per sort (differentiated)."""
        by_sort: dict[str, list[IndexVar]] = {}
        for v in cube.exists:
            by_sort.setdefault(v.sort, []).append(v)
        per_sort = [
            [dict(zip(vs, perm)) for perm in itertools.permutations(self.domains[s], len(vs))]
            for s, vs in by_sort.items()
        ]
        for combo in itertools.product(*per_sort) if per_sort else [()]:
            idx: dict[IndexVar, int] = {}
            for d in combo:
                idx.update(d)
            if all(self.eval_lit(l, state, idx) for l in cube.lits):
                return True
        return False

    def formula_sat(self, sf: StateFormula, state) -> bool:
        return any(self.cube_sat(c, state) for c in sf.cubes)

    def rule_assignments(self, rule):
        """All (possibly merging) instantiations of the rule's existentials."""
        doms = [self.domains[v.sort] for v in rule.exists]
        for combo in itertools.product(*doms):
            yield dict(zip(rule.exists, combo))

    def apply_rule(self, rule, state, idx) -> Optional[tuple]:
        """Successor state, or None when the guard fails (gates unsupported)."""
        assert not rule.gates, "concrete evaluator does not model gate rules"
        if not all(self.eval_lit(l, state, idx) for l in rule.guard):
            return None
        g, arrs = state
        g2 = dict(g)
        for name, c in rule.globals_upd:
            g2[name] = self.eval_term(c, state, idx)
        arrs2 = dict(arrs)
        for name, upd in rule.arrays_upd:
            for i in self.domains[self.sig.arrays[name][0]]:
                sub = dict(idx)
                sub[upd.var] = i
                arrs2[(name, i)] = self.eval_term(upd.body, state, sub)
        return (g2, arrs2)


def random_state_formula(rng: random.Random, abp) -> StateFormula:
    """A random differentiated state formula over an encoded system's signature."""
    sig = abp.sig
    arrays = sorted(sig.arrays)
    cubes = []
    for _ in range(rng.randint(1, 2)):
        lits = []
        vars_by_sort: dict[str, list[IndexVar]] = {}
        for _ in range(rng.randint(1, 3)):
            kind = rng.random()
            if kind < 0.6:
                arr = rng.choice(arrays)
                isort, esort = sig.arrays[arr]
                vs = vars_by_sort.setdefault(
                    isort, [IndexVar("j1", isort), IndexVar("j2", isort)]
                )
                t = ArrayRead(arr, rng.choice(vs))
                c = Const(rng.choice(sig.sorts[esort].constants))
                lits.append(lit_eq(t, c, rng.random() < 0.3))
            elif kind < 0.9 or not sig.relations:
                g = rng.choice(sorted(sig.globals))
                c = Const(rng.choice(sig.sorts[sig.globals[g]].constants))
                lits.append(lit_eq(GlobalRef(g), c, rng.random() < 0.3))
            else:
                r = rng.choice(sorted(sig.relations))
                decl = sig.relations[r]
                args = tuple(
                    Const(rng.choice(sig.sorts[s].constants)) for s in decl.arg_sorts
                )
                lits.append(Lit(rng.random() < 0.5, RelAtom(r, args)))
        ex = [v for vs in vars_by_sort.values() for v in vs]
        cubes.append(make_cube(ex, lits))
    return StateFormula(tuple(cubes))


def all_relation_tuples(sig: Signature) -> list[tuple]:
    out = []
    for r, decl in sig.relations.items():
        for args in itertools.product(*[sig.sorts[s].constants for s in decl.arg_sorts]):
            out.append((r, args))
    return out
