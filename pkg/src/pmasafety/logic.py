"""Many-sorted ground logic with arrays, uninterpreted relations and index variables.

State formulae are disjunctions of *cubes*: existentially quantified conjunctions
of literals over global variables, array reads at index variables, and relation
atoms.  Index variables inside one cube are *differentiated*: distinct variables
of the same index sort denote distinct indexes, so no explicit disequalities are
stored.  Satisfiability of ground conjunctions is decided by congruence closure
(EUF) plus distinctness axioms for enumerated constants; the exists/forall
fragment is decided by finite instantiation of the universals over the
existential prefix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence, Union


class LogicError(Exception):
    pass


class TypingError(LogicError):
    """A term or formula is not well-sorted against the signature."""


class BudgetError(LogicError):
    """A normalisation or search budget was exceeded."""


_fresh_counter = itertools.count()


def fresh_name(prefix: str) -> str:
    """Return a name no user identifier can collide with ('$' is reserved)."""
    return f"${prefix}{next(_fresh_counter)}"


def is_fresh_name(name: str) -> bool:
    return name.startswith("$")


# ---------------------------------------------------------------------------
# signature


INDEX = "index"
ELEMENT = "element"
ACTION = "action"
PHASE = "phase"


@dataclass(frozen=True)
class SortDecl:
    name: str
    kind: str  # index | element | action | phase
    constants: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in (INDEX, ELEMENT, ACTION, PHASE):
            raise TypingError(f"unknown sort kind {self.kind!r}")
        if self.kind == INDEX and self.constants:
            raise TypingError(f"index sort {self.name} cannot declare constants")
        if self.kind != INDEX and not self.constants:
            raise TypingError(f"enumerated sort {self.name} needs at least one constant")


@dataclass(frozen=True)
class RelDecl:
    name: str
    arg_sorts: tuple[str, ...]


class Signature:
    """Sorts, relations, global variables and arrays of one transition system."""

    def __init__(
        self,
        sorts: Iterable[SortDecl] = (),
        relations: Iterable[RelDecl] = (),
        globals_: Optional[dict[str, str]] = None,
        arrays: Optional[dict[str, tuple[str, str]]] = None,
    ) -> None:
        self.sorts: dict[str, SortDecl] = {}
        self.relations: dict[str, RelDecl] = {}
        self.globals: dict[str, str] = dict(globals_ or {})
        self.arrays: dict[str, tuple[str, str]] = dict(arrays or {})
        self.const_sort: dict[str, str] = {}
        for s in sorts:
            self.add_sort(s)
        for r in relations:
            self.add_relation(r)
        self._check_refs()

    def add_sort(self, s: SortDecl) -> None:
        if s.name in self.sorts:
            raise TypingError(f"duplicate sort {s.name}")
        for c in s.constants:
            if c in self.const_sort:
                raise TypingError(f"constant {c} declared in two sorts")
            self.const_sort[c] = s.name
        self.sorts[s.name] = s

    def add_relation(self, r: RelDecl) -> None:
        if r.name in self.relations:
            raise TypingError(f"duplicate relation {r.name}")
        self.relations[r.name] = r

    def _check_refs(self) -> None:
        for g, s in self.globals.items():
            if s not in self.sorts:
                raise TypingError(f"global {g} has unknown sort {s}")
        for a, (isort, esort) in self.arrays.items():
            if isort not in self.sorts or self.sorts[isort].kind != INDEX:
                raise TypingError(f"array {a} needs an index sort, got {isort}")
            if esort not in self.sorts:
                raise TypingError(f"array {a} has unknown element sort {esort}")
        for r in self.relations.values():
            for s in r.arg_sorts:
                if s not in self.sorts:
                    raise TypingError(f"relation {r.name} has unknown sort {s}")

    def sort_of_const(self, c: str) -> str:
        try:
            return self.const_sort[c]
        except KeyError:
            raise TypingError(f"unknown constant {c}") from None


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True, order=True)
class IndexVar:
    name: str
    sort: str

    def __repr__(self) -> str:
        return f"{self.name}:{self.sort}"


@dataclass(frozen=True)
class Const:
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class GlobalRef:
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ArrayRead:
    array: str
    index: IndexVar

    def __repr__(self) -> str:
        return f"{self.array}[{self.index.name}]"


@dataclass(frozen=True)
class CaseTerm:
    """Case-defined value: first branch whose guard holds wins.

    The last branch must have guard FTrue (the catch-all).  Guards are
    quantifier-free formulae; values are plain terms (no nesting of cases).
    """

    branches: tuple[tuple["Formula", "Term"], ...]

    def __repr__(self) -> str:
        inner = "; ".join(f"{g} -> {t}" for g, t in self.branches)
        return f"case{{{inner}}}"


Term = Union[Const, GlobalRef, ArrayRead, IndexVar, CaseTerm]


def term_sort(t: Term, sig: Signature) -> str:
    if isinstance(t, Const):
        return sig.sort_of_const(t.name)
    if isinstance(t, GlobalRef):
        try:
            return sig.globals[t.name]
        except KeyError:
            raise TypingError(f"unknown global {t.name}") from None
    if isinstance(t, ArrayRead):
        try:
            return sig.arrays[t.array][1]
        except KeyError:
            raise TypingError(f"unknown array {t.array}") from None
    if isinstance(t, IndexVar):
        return t.sort
    if isinstance(t, CaseTerm):
        return term_sort(t.branches[0][1], sig)
    raise TypingError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# atoms, literals, formulae


@dataclass(frozen=True)
class Eq:
    lhs: Term
    rhs: Term

    def __repr__(self) -> str:
        return f"{self.lhs!r}={self.rhs!r}"


@dataclass(frozen=True)
class RelAtom:
    rel: str
    args: tuple[Term, ...]

    def __repr__(self) -> str:
        return f"{self.rel}({', '.join(map(repr, self.args))})"


Atom = Union[Eq, RelAtom]


@dataclass(frozen=True)
class Lit:
    neg: bool
    atom: Atom

    def negate(self) -> "Lit":
        return Lit(not self.neg, self.atom)

    def __repr__(self) -> str:
        return ("!" if self.neg else "") + repr(self.atom)


def lit_eq(lhs: Term, rhs: Term, neg: bool = False) -> Lit:
    return Lit(neg, Eq(lhs, rhs))


def _cache_hash(cls):
    """Memoize a frozen dataclass's hash (these values are hashed constantly
    in sets, substitution maps and subsumption checks)."""
    base_hash = cls.__hash__

    def __hash__(self):
        try:
            return object.__getattribute__(self, "_hash")
        except AttributeError:
            h = base_hash(self)
            object.__setattr__(self, "_hash", h)
            return h

    cls.__hash__ = __hash__
    return cls


for _cls in (IndexVar, Const, GlobalRef, ArrayRead, Eq, RelAtom, Lit):
    _cache_hash(_cls)


# quantifier-free formula AST (used for guards, case conditions, EF matrices)


@dataclass(frozen=True)
class FTrue:
    def __repr__(self) -> str:
        return "true"


@dataclass(frozen=True)
class FFalse:
    def __repr__(self) -> str:
        return "false"


@dataclass(frozen=True)
class FLit:
    lit: Lit

    def __repr__(self) -> str:
        return repr(self.lit)


@dataclass(frozen=True)
class FAnd:
    items: tuple["Formula", ...]

    def __repr__(self) -> str:
        return "(" + " & ".join(map(repr, self.items)) + ")"


@dataclass(frozen=True)
class FOr:
    items: tuple["Formula", ...]

    def __repr__(self) -> str:
        return "(" + " | ".join(map(repr, self.items)) + ")"


@dataclass(frozen=True)
class FNot:
    inner: "Formula"

    def __repr__(self) -> str:
        return f"~{self.inner!r}"


Formula = Union[FTrue, FFalse, FLit, FAnd, FOr, FNot]

TRUE: Formula = FTrue()
FALSE: Formula = FFalse()


def fand(items: Sequence[Formula]) -> Formula:
    flat: list[Formula] = []
    for it in items:
        if isinstance(it, FFalse):
            return FALSE
        if isinstance(it, FTrue):
            continue
        if isinstance(it, FAnd):
            flat.extend(it.items)
        else:
            flat.append(it)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return FAnd(tuple(flat))


def f_or(items: Sequence[Formula]) -> Formula:
    flat: list[Formula] = []
    for it in items:
        if isinstance(it, FTrue):
            return TRUE
        if isinstance(it, FFalse):
            continue
        if isinstance(it, FOr):
            flat.extend(it.items)
        else:
            flat.append(it)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return FOr(tuple(flat))


def flit(lit: Lit) -> Formula:
    return FLit(lit)


def fnot(f: Formula) -> Formula:
    if isinstance(f, FTrue):
        return FALSE
    if isinstance(f, FFalse):
        return TRUE
    if isinstance(f, FNot):
        return f.inner
    if isinstance(f, FLit):
        return FLit(f.lit.negate())
    return FNot(f)


def cube_formula(lits: Iterable[Lit]) -> Formula:
    return fand([FLit(l) for l in lits])


def nnf(f: Formula) -> Formula:
    if isinstance(f, (FTrue, FFalse, FLit)):
        return f
    if isinstance(f, FAnd):
        return fand([nnf(i) for i in f.items])
    if isinstance(f, FOr):
        return f_or([nnf(i) for i in f.items])
    if isinstance(f, FNot):
        g = f.inner
        if isinstance(g, FLit):
            return FLit(g.lit.negate())
        if isinstance(g, FTrue):
            return FALSE
        if isinstance(g, FFalse):
            return TRUE
        if isinstance(g, FNot):
            return nnf(g.inner)
        if isinstance(g, FAnd):
            return f_or([nnf(FNot(i)) for i in g.items])
        if isinstance(g, FOr):
            return fand([nnf(FNot(i)) for i in g.items])
    raise LogicError(f"not a formula: {f!r}")


DEFAULT_DNF_CAP = 100000


def dnf(f: Formula, cap: int = DEFAULT_DNF_CAP) -> list[tuple[Lit, ...]]:
    """Disjunctive normal form as a list of literal tuples (duplicates removed).

    Raises BudgetError when the number of cubes would exceed `cap`.
    """

    def go(g: Formula) -> list[tuple[Lit, ...]]:
        if isinstance(g, FTrue):
            return [()]
        if isinstance(g, FFalse):
            return []
        if isinstance(g, FLit):
            s = simplify_lits((g.lit,))
            return [] if s is None else [s]
        if isinstance(g, FOr):
            out: list[tuple[Lit, ...]] = []
            for it in g.items:
                out.extend(go(it))
                if len(out) > cap:
                    raise BudgetError(f"dnf exceeded {cap} cubes")
            return out
        if isinstance(g, FAnd):
            # carry literal sets so duplicated and complementary literals are
            # eliminated while branches are built, not after
            acc: list[tuple[tuple[Lit, ...], frozenset[Lit]]] = [((), frozenset())]
            for it in g.items:
                branches = go(it)
                nxt: list[tuple[tuple[Lit, ...], frozenset[Lit]]] = []
                seen_keys: set[frozenset[Lit]] = set()
                for a, aset in acc:
                    for b in branches:
                        merged = a + tuple(l for l in b if l not in aset)
                        mset = frozenset(merged)
                        if mset in seen_keys:
                            continue
                        if any(l.negate() in mset for l in b):
                            continue
                        seen_keys.add(mset)
                        nxt.append((merged, mset))
                        if len(nxt) > cap:
                            raise BudgetError(f"dnf exceeded {cap} cubes")
                acc = nxt
            return [a for a, _ in acc]
        raise LogicError(f"dnf expects NNF, got {g!r}")

    cubes = go(nnf(f))
    out: list[tuple[Lit, ...]] = []
    seen: set[frozenset[Lit]] = set()
    for c in cubes:
        dedup = tuple(dict.fromkeys(c))
        key = frozenset(dedup)
        if key in seen:
            continue
        # drop cubes with an immediate complementary pair
        if any(l.negate() in key for l in dedup):
            continue
        seen.add(key)
        out.append(dedup)
    return out


# ---------------------------------------------------------------------------
# substitution and case elimination


Subst = dict[IndexVar, IndexVar]


def term_subst(t: Term, sub: Subst) -> Term:
    if isinstance(t, IndexVar):
        return sub.get(t, t)
    if isinstance(t, ArrayRead):
        return ArrayRead(t.array, sub.get(t.index, t.index))
    if isinstance(t, CaseTerm):
        return CaseTerm(
            tuple((formula_subst(g, sub), term_subst(v, sub)) for g, v in t.branches)
        )
    return t


def atom_subst(a: Atom, sub: Subst) -> Atom:
    if isinstance(a, Eq):
        return Eq(term_subst(a.lhs, sub), term_subst(a.rhs, sub))
    return RelAtom(a.rel, tuple(term_subst(x, sub) for x in a.args))


def lit_subst(l: Lit, sub: Subst) -> Lit:
    return Lit(l.neg, atom_subst(l.atom, sub))


def formula_subst(f: Formula, sub: Subst) -> Formula:
    if isinstance(f, (FTrue, FFalse)):
        return f
    if isinstance(f, FLit):
        return FLit(lit_subst(f.lit, sub))
    if isinstance(f, FAnd):
        return fand([formula_subst(i, sub) for i in f.items])
    if isinstance(f, FOr):
        return f_or([formula_subst(i, sub) for i in f.items])
    if isinstance(f, FNot):
        return fnot(formula_subst(f.inner, sub))
    raise LogicError(f"not a formula: {f!r}")


def _case_terms(a: Atom) -> list[CaseTerm]:
    ts: Sequence[Term]
    if isinstance(a, Eq):
        ts = (a.lhs, a.rhs)
    else:
        ts = a.args
    return [t for t in ts if isinstance(t, CaseTerm)]


def _replace_case(a: Atom, old: CaseTerm, new: Term) -> Atom:
    def rep(t: Term) -> Term:
        return new if t is old else t

    if isinstance(a, Eq):
        return Eq(rep(a.lhs), rep(a.rhs))
    return RelAtom(a.rel, tuple(rep(x) for x in a.args))


def expand_cases_lit(l: Lit) -> Formula:
    """Rewrite a literal over case-defined terms into a case-free formula.

    A(case{k1->t1; ...; kn->tn}) becomes  OR_i (k1'..ki-1' negated? no --
    branches are ordered, so branch i fires when its guard holds and no earlier
    guard does).
    """
    cases = _case_terms(l.atom)
    if not cases:
        return FLit(l)
    ct = cases[0]
    out: list[Formula] = []
    earlier: list[Formula] = []
    for guard, val in ct.branches:
        picked = fand(earlier + [guard, expand_cases_lit(Lit(l.neg, _replace_case(l.atom, ct, val)))])
        out.append(picked)
        earlier.append(fnot(guard))
    return f_or(out)


def expand_cases(f: Formula) -> Formula:
    """Eliminate every CaseTerm in `f`, yielding an equivalent case-free formula."""
    if isinstance(f, (FTrue, FFalse)):
        return f
    if isinstance(f, FLit):
        return expand_cases_lit(f.lit)
    if isinstance(f, FAnd):
        return fand([expand_cases(i) for i in f.items])
    if isinstance(f, FOr):
        return f_or([expand_cases(i) for i in f.items])
    if isinstance(f, FNot):
        return fnot(expand_cases(f.inner))
    raise LogicError(f"not a formula: {f!r}")


@dataclass(frozen=True)
class LambdaUpdate:
    """A bulk array update  arr' = lambda j . body  (body may be a CaseTerm)."""

    var: IndexVar
    body: Term

    def apply(self, idx: IndexVar) -> Term:
        return term_subst(self.body, {self.var: idx})


def reduce_updates(f: Formula) -> Formula:
    """Public entry point: beta-reduce / case-eliminate an update-substituted formula.

    Lambda applications are performed eagerly by LambdaUpdate.apply, so at this
    point only CaseTerms remain; expanding them yields a plain state formula.
    """
    return expand_cases(f)


# ---------------------------------------------------------------------------
# cubes and state formulae


def _lit_key(l: Lit) -> str:
    return repr(l)


@dataclass(frozen=True)
class Cube:
    """Existentially quantified conjunction of literals.

    `exists` are index variables, implicitly pairwise distinct when of the same
    sort (differentiated form).  Literals never contain index-index equalities.
    """

    exists: tuple[IndexVar, ...]
    lits: tuple[Lit, ...]

    def __post_init__(self) -> None:
        if len(set(self.exists)) != len(self.exists):
            raise LogicError("duplicate existential variable in cube")

    def key(self) -> tuple:
        try:
            return object.__getattribute__(self, "_key")
        except AttributeError:
            k = (self.exists, frozenset(self.lits))
            object.__setattr__(self, "_key", k)
            return k

    def __repr__(self) -> str:
        pre = f"E {', '.join(map(repr, self.exists))}. " if self.exists else ""
        return pre + " & ".join(map(repr, self.lits)) if self.lits else pre + "true"


def make_cube(exists: Iterable[IndexVar], lits: Iterable[Lit]) -> Cube:
    """Normalise: dedup literals, sort deterministically, keep only used vars."""
    lits2 = tuple(sorted(dict.fromkeys(lits), key=_lit_key))
    used = cube_vars_of_lits(lits2)
    ex = tuple(v for v in dict.fromkeys(exists) if v in used)
    return Cube(ex, lits2)


def simplify_lits(lits: Iterable[Lit]) -> Optional[tuple[Lit, ...]]:
    """Constant-level evaluation: drop trivially true literals, return None when
    some literal is trivially false (distinct constants are never equal)."""
    out: list[Lit] = []
    for l in lits:
        a = l.atom
        if isinstance(a, Eq):
            if a.lhs == a.rhs:
                if l.neg:
                    return None
                continue
            if isinstance(a.lhs, Const) and isinstance(a.rhs, Const):
                # distinct names: unequal in every model
                if not l.neg:
                    return None
                continue
        out.append(l)
    return tuple(out)


def cube_vars_of_lits(lits: Iterable[Lit]) -> set[IndexVar]:
    out: set[IndexVar] = set()
    for l in lits:
        for t in _atom_terms(l.atom):
            if isinstance(t, IndexVar):
                out.add(t)
            elif isinstance(t, ArrayRead):
                out.add(t.index)
    return out


def _atom_terms(a: Atom) -> tuple[Term, ...]:
    if isinstance(a, Eq):
        return (a.lhs, a.rhs)
    return a.args


@dataclass(frozen=True)
class StateFormula:
    cubes: tuple[Cube, ...]

    def __repr__(self) -> str:
        return " \\/ ".join(map(repr, self.cubes)) if self.cubes else "false"


# ---------------------------------------------------------------------------
# congruence closure


class _CC:
    """Union-find congruence closure over ground first-order terms.

    Ground terms are nested tuples: ('c', name) constants, ('v', name) free
    names (skolems, globals), ('app', op, (args...)) applications.
    """

    def __init__(self) -> None:
        self.parent: dict[tuple, tuple] = {}
        self.apps: list[tuple] = []

    def _add(self, t: tuple) -> None:
        if t in self.parent:
            return
        self.parent[t] = t
        if t[0] == "app":
            self.apps.append(t)
            for a in t[2]:
                self._add(a)

    def find(self, t: tuple) -> tuple:
        self._add(t)
        root = t
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[t] != root:
            self.parent[t], t = root, self.parent[t]
        return root

    def union(self, a: tuple, b: tuple) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        self.parent[ra] = rb
        self._congruence()

    def _congruence(self) -> None:
        # quadratic re-scan; fine at the sizes cubes reach here
        changed = True
        while changed:
            changed = False
            sigs: dict[tuple, tuple] = {}
            for t in self.apps:
                sig = (t[1], tuple(self.find(a) for a in t[2]))
                if sig in sigs:
                    other = sigs[sig]
                    if self.find(t) != self.find(other):
                        self.parent[self.find(t)] = self.find(other)
                        changed = True
                else:
                    sigs[sig] = t

    def equal(self, a: tuple, b: tuple) -> bool:
        return self.find(a) == self.find(b)


_TRUE = ("c", "$bool_true")
_FALSE = ("c", "$bool_false")

GroundLit = tuple  # (neg: bool, lhs: tuple, rhs: tuple)


def ground_sat(
    eqs: list[tuple[tuple, tuple]],
    diseqs: list[tuple[tuple, tuple]],
    distinct_groups: list[list[tuple]],
) -> bool:
    """EUF satisfiability of a ground conjunction.

    `distinct_groups` lists sets of terms that are pairwise distinct (constants
    of one enumerated sort; skolems of one index sort).
    """
    cc = _CC()
    for a, b in eqs:
        cc.union(a, b)
    for group in distinct_groups:
        for a, b in itertools.combinations(group, 2):
            if cc.equal(a, b):
                return False
    for a, b in diseqs:
        if cc.equal(a, b):
            return False
    return True


def _ground_term(t: Term, skmap: dict[IndexVar, tuple], sig: Signature) -> tuple:
    if isinstance(t, Const):
        return ("c", t.name)
    if isinstance(t, GlobalRef):
        return ("v", "g:" + t.name)
    if isinstance(t, IndexVar):
        try:
            return skmap[t]
        except KeyError:
            raise LogicError(f"unbound index variable {t!r}") from None
    if isinstance(t, ArrayRead):
        return ("app", "a:" + t.array, (_ground_term(t.index, skmap, sig),))
    raise LogicError(f"cannot ground term {t!r}")


def ground_lits_sat(lits: Iterable[Lit], skmap: dict[IndexVar, tuple], sig: Signature) -> bool:
    """Satisfiability of ground literals under `sig`'s distinctness axioms.

    `skmap` maps the (differentiated) index variables to skolem terms; skolems
    mapped from distinct variables of one sort are asserted pairwise distinct.
    """
    eqs: list[tuple[tuple, tuple]] = []
    diseqs: list[tuple[tuple, tuple]] = []
    consts_used: dict[str, set[str]] = {}

    def note_const(t: Term) -> None:
        if isinstance(t, Const):
            consts_used.setdefault(sig.sort_of_const(t.name), set()).add(t.name)

    for l in lits:
        a = l.atom
        if isinstance(a, Eq):
            if isinstance(a.lhs, IndexVar) and isinstance(a.rhs, IndexVar):
                # differentiated skolems: distinct vars denote distinct indexes
                eq_now = skmap[a.lhs] == skmap[a.rhs]
                if (eq_now and l.neg) or (not eq_now and not l.neg):
                    return False
                continue
            note_const(a.lhs)
            note_const(a.rhs)
            gl, gr = _ground_term(a.lhs, skmap, sig), _ground_term(a.rhs, skmap, sig)
            (diseqs if l.neg else eqs).append((gl, gr))
        else:
            for x in a.args:
                note_const(x)
            gargs = tuple(_ground_term(x, skmap, sig) for x in a.args)
            app = ("app", "r:" + a.rel, gargs)
            eqs.append((app, _FALSE if l.neg else _TRUE))

    groups: list[list[tuple]] = [[_TRUE, _FALSE]]
    for sort, names in consts_used.items():
        if len(names) > 1:
            groups.append([("c", n) for n in sorted(names)])
    by_sort: dict[str, list[tuple]] = {}
    for v, sk in skmap.items():
        by_sort.setdefault(v.sort, []).append(sk)
    for sks in by_sort.values():
        uniq = list(dict.fromkeys(sks))
        if len(uniq) > 1:
            groups.append(uniq)
    return ground_sat(eqs, diseqs, groups)


def check_lit_types(lits: Iterable[Lit], sig: Signature) -> None:
    """Raise TypingError when any literal is ill-typed under `sig`."""

    def term_ok(t: Term) -> str:
        if isinstance(t, ArrayRead):
            isort = sig.arrays.get(t.array)
            if isort is None:
                raise TypingError(f"unknown array {t.array}")
            if t.index.sort != isort[0]:
                raise TypingError(
                    f"array {t.array} indexed by {t.index.sort}, expects {isort[0]}"
                )
        return term_sort(t, sig)

    for l in lits:
        a = l.atom
        if isinstance(a, Eq):
            ls, rs = term_ok(a.lhs), term_ok(a.rhs)
            if ls != rs:
                raise TypingError(f"equality between sorts {ls} and {rs}: {l!r}")
        else:
            decl = sig.relations.get(a.rel)
            if decl is None:
                raise TypingError(f"unknown relation {a.rel}")
            if len(a.args) != len(decl.arg_sorts):
                raise TypingError(f"relation {a.rel} expects {len(decl.arg_sorts)} arguments")
            for arg, want in zip(a.args, decl.arg_sorts):
                if term_ok(arg) != want:
                    raise TypingError(f"argument of {a.rel} is not of sort {want}: {l!r}")


def euf_sat_cube(cube: Cube, sig: Signature) -> bool:
    """Decide satisfiability of one differentiated cube."""
    check_lit_types(cube.lits, sig)
    skmap = {v: ("v", "sk:" + v.name) for v in cube.exists}
    # literals may mention vars not listed in exists (engine-internal); bind them too
    for v in cube_vars_of_lits(cube.lits):
        skmap.setdefault(v, ("v", "sk:" + v.name))
    return ground_lits_sat(cube.lits, skmap, sig)


# ---------------------------------------------------------------------------
# exists/forall fragment


@dataclass(frozen=True)
class EFFormula:
    """Prenex  exists e1..en . forall i1..im . matrix  over index variables."""

    existentials: tuple[IndexVar, ...]
    universals: tuple[IndexVar, ...]
    matrix: Formula


def set_partitions(items: Sequence) -> Iterator[list[list]]:
    """All set partitions of `items` (Bell-number many)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def _partition_branches(evars: Sequence[IndexVar]) -> Iterator[Subst]:
    """Substitutions merging same-sort existentials; one per AllDiff branch."""
    by_sort: dict[str, list[IndexVar]] = {}
    for v in evars:
        by_sort.setdefault(v.sort, []).append(v)
    per_sort: list[list[Subst]] = []
    for vs in by_sort.values():
        subs: list[Subst] = []
        for part in set_partitions(vs):
            sub: Subst = {}
            for cls in part:
                rep = cls[0]
                for v in cls:
                    sub[v] = rep
            subs.append(sub)
        per_sort.append(subs)
    for combo in itertools.product(*per_sort) if per_sort else [()]:
        merged: Subst = {}
        for s in combo:
            merged.update(s)
        yield merged


def _resolve_index_eqs(f: Formula, reps: set[IndexVar]) -> Formula:
    """Rewrite index-index equality atoms to true/false (reps pairwise distinct)."""
    if isinstance(f, (FTrue, FFalse)):
        return f
    if isinstance(f, FLit):
        a = f.lit.atom
        if isinstance(a, Eq) and isinstance(a.lhs, IndexVar) and isinstance(a.rhs, IndexVar):
            same = a.lhs == a.rhs
            val = same if not f.lit.neg else not same
            return TRUE if val else FALSE
        return f
    if isinstance(f, FAnd):
        return fand([_resolve_index_eqs(i, reps) for i in f.items])
    if isinstance(f, FOr):
        return f_or([_resolve_index_eqs(i, reps) for i in f.items])
    if isinstance(f, FNot):
        return fnot(_resolve_index_eqs(f.inner, reps))
    raise LogicError(f"not a formula: {f!r}")


def sat_exists_forall(
    ef: EFFormula, sig: Signature, dnf_cap: int = DEFAULT_DNF_CAP
) -> bool:
    """Decide the exists/forall index fragment.

    Branches over equality partitions of the existential prefix; in each branch
    the representatives are pairwise distinct, every universal is instantiated
    by every representative of its sort (a sort with no representative is empty
    in the restricted model, so universals over it hold vacuously), index
    equalities collapse to truth values and the ground residue goes to EUF.
    """
    for merge in _partition_branches(ef.existentials):
        reps = set(merge.values()) if merge else set()
        cands: dict[str, list[IndexVar]] = {}
        for r in sorted(reps):
            cands.setdefault(r.sort, []).append(r)
        matrix = formula_subst(ef.matrix, merge)
        uni = list(ef.universals)
        if any(not cands.get(u.sort) for u in uni):
            # some universal ranges over an empty sort: matrix vacuous
            conj: Formula = TRUE
        else:
            insts: list[Formula] = []
            for combo in itertools.product(*[cands[u.sort] for u in uni]) if uni else [()]:
                sub = dict(zip(uni, combo))
                insts.append(formula_subst(matrix, sub))
            conj = fand(insts)
        conj = _resolve_index_eqs(expand_cases(conj), reps)
        skmap = {r: ("v", "sk:" + r.name) for r in reps}
        for cube_lits in dnf(conj, dnf_cap):
            local = dict(skmap)
            for v in cube_vars_of_lits(cube_lits):
                local.setdefault(v, ("v", "sk:" + v.name))
            if ground_lits_sat(cube_lits, local, sig):
                return True
    return False
