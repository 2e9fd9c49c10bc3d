"""Textual model format.

    sort Loc { nil, init, A, B, target }
    relation Snow(Loc, Loc)

    template Att
      var loc: Loc = init
      action gotoA : local {
        pre: loc[self] = init and pulse_loc[e] != A and not Snow(init, A);
        eff: loc := A
      }

    template Cannon env
      var pulse_loc: Loc = nil
      action blastA : sync initiator { pre: loc[j] = A; eff: }

    alternate { Cannon } vs { Att }

    goal: loc[j] = target

`#` starts a comment.  Preconditions must be disjunction-free (`or` and `not`
over non-atoms are rejected there); goals allow full boolean structure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NoReturn, Optional, Union

from .logic import SortDecl, RelDecl, ELEMENT
from .model import (
    ActionDecl,
    AgentFormula,
    AgentTemplate,
    BoolConst,
    Conj,
    ConstRef,
    Diagnostic,
    Disj,
    IdxEq,
    LOCAL,
    SYNC,
    INDIVIDUAL,
    ModelError,
    Neg,
    Pmas,
    RelTest,
    VarRef,
    VarTest,
    formula_has_disjunction,
    validate_pmas,
)


# The bracket form v[idx] is folded into a single token (v@idx) in a pre-pass,
# which keeps the token grammar regular and the parser LL(1).

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+|\#[^\n]*)
      | (?P<punct>:=|!=|[{}(),;:=])
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(@[A-Za-z_][A-Za-z0-9_]*)?)
    """,
    re.VERBOSE,
)

_KEYWORDS = {
    "sort", "relation", "template", "env", "var", "action", "local", "sync",
    "individual", "initiator", "pre", "eff", "goal", "alternate", "vs",
    "and", "or", "not", "true", "false",
}


@dataclass(frozen=True)
class Token:
    kind: str  # punct | ident | eof
    text: str
    line: int
    col: int


def _pre_lex_indexes(src: str) -> str:
    return re.sub(
        r"([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*([A-Za-z_][A-Za-z0-9_]*)\s*\]", r"\1@\2", src
    )


def _tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ModelError([Diagnostic(line, col, f"unexpected character {src[pos]!r}")])
        text = m.group(0)
        if m.lastgroup != "ws":
            toks.append(Token(m.lastgroup, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    toks.append(Token("eof", "", line, col))
    return toks


def _split_indexed(text: str) -> Optional[tuple[str, str]]:
    if "@" in text:
        v, i = text.split("@", 1)
        return v, i
    return None


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(_pre_lex_indexes(src))
        self.pos = 0

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def fail(self, msg: str, tok: Optional[Token] = None) -> NoReturn:
        t = tok or self.peek()
        raise ModelError([Diagnostic(t.line, t.col, msg)])

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text:
            self.fail(f"expected {text!r}, found {t.text!r}", t)
        return t

    def ident(self, what: str = "identifier") -> str:
        t = self.next()
        if t.kind != "ident" or t.text in _KEYWORDS or "@" in t.text:
            self.fail(f"expected {what}, found {t.text!r}", t)
        return t.text

    # -- formulas ----------------------------------------------------------

    def formula(self) -> AgentFormula:
        items = [self.formula_conj()]
        while self.peek().text == "or":
            self.next()
            items.append(self.formula_conj())
        return items[0] if len(items) == 1 else Disj(tuple(items))

    def formula_conj(self) -> AgentFormula:
        items = [self.formula_unary()]
        while self.peek().text == "and":
            self.next()
            items.append(self.formula_unary())
        return items[0] if len(items) == 1 else Conj(tuple(items))

    def formula_unary(self) -> AgentFormula:
        t = self.peek()
        if t.text == "not":
            self.next()
            return Neg(self.formula_unary())
        if t.text == "(":
            self.next()
            f = self.formula()
            self.expect(")")
            return f
        return self.formula_atom()

    def formula_atom(self) -> AgentFormula:
        t = self.peek()
        if t.text == "true":
            self.next()
            return BoolConst(True)
        if t.text == "false":
            self.next()
            return BoolConst(False)
        tok = self.next()
        if tok.kind != "ident" or tok.text in _KEYWORDS:
            self.fail("expected atom", tok)
        split = _split_indexed(tok.text)
        if split is not None:
            var, idx = split
            op = self.next()
            if op.text not in ("=", "!="):
                self.fail(f"expected = or != after {tok.text!r}", op)
            val = self.ident("constant")
            atom: AgentFormula = VarTest(var, idx, val)
            return Neg(atom) if op.text == "!=" else atom
        name = tok.text
        nxt = self.peek()
        if nxt.text == "(":
            self.next()
            args: list[Union[VarRef, ConstRef]] = []
            while True:
                args.append(self.rel_arg())
                if self.peek().text == ",":
                    self.next()
                    continue
                break
            self.expect(")")
            return RelTest(name, tuple(args))
        if nxt.text in ("=", "!="):
            op = self.next().text
            rhs_tok = self.next()
            if rhs_tok.kind != "ident" or "@" in rhs_tok.text:
                self.fail("expected index name", rhs_tok)
            eq: AgentFormula = IdxEq(name, rhs_tok.text)
            return Neg(eq) if op == "!=" else eq
        self.fail(f"expected '(', '=' or '!=' after {name!r}", nxt)

    def rel_arg(self) -> Union[VarRef, ConstRef]:
        tok = self.next()
        if tok.kind != "ident" or tok.text in _KEYWORDS:
            self.fail("expected relation argument", tok)
        split = _split_indexed(tok.text)
        if split is not None:
            return VarRef(split[0], split[1])
        return ConstRef(tok.text)

    # -- declarations ------------------------------------------------------

    def pmas(self, name: str) -> Pmas:
        sorts: list[SortDecl] = []
        relations: list[RelDecl] = []
        templates: list[AgentTemplate] = []
        env: Optional[AgentTemplate] = None
        goal: Optional[AgentFormula] = None
        alternation = None
        while self.peek().kind != "eof":
            t = self.peek()
            if t.text == "sort":
                sorts.append(self.sort_decl())
            elif t.text == "relation":
                relations.append(self.relation_decl())
            elif t.text == "template":
                tmpl = self.template_decl()
                if tmpl.is_env:
                    if env is not None:
                        self.fail("second environment template", t)
                    env = tmpl
                else:
                    templates.append(tmpl)
            elif t.text == "alternate":
                if alternation is not None:
                    self.fail("second alternate declaration", t)
                alternation = self.alternate_decl()
            elif t.text == "goal":
                if goal is not None:
                    self.fail("second goal declaration", t)
                self.next()
                self.expect(":")
                goal = self.formula()
            else:
                self.fail(f"expected declaration, found {t.text!r}", t)
        if env is None:
            raise ModelError([Diagnostic(0, 0, "no environment template declared")])
        if goal is None:
            raise ModelError([Diagnostic(0, 0, "no goal declared")])
        if not templates:
            raise ModelError([Diagnostic(0, 0, "no agent template declared")])
        return Pmas(
            name=name,
            sorts=tuple(sorts),
            relations=tuple(relations),
            templates=tuple(templates),
            env=env,
            goal=goal,
            alternation=alternation,
        )

    def sort_decl(self) -> SortDecl:
        self.expect("sort")
        name = self.ident("sort name")
        self.expect("{")
        consts = [self.ident("constant")]
        while self.peek().text == ",":
            self.next()
            consts.append(self.ident("constant"))
        self.expect("}")
        return SortDecl(name, ELEMENT, tuple(consts))

    def relation_decl(self) -> RelDecl:
        self.expect("relation")
        name = self.ident("relation name")
        self.expect("(")
        args = [self.ident("sort name")]
        while self.peek().text == ",":
            self.next()
            args.append(self.ident("sort name"))
        self.expect(")")
        return RelDecl(name, tuple(args))

    def template_decl(self) -> AgentTemplate:
        self.expect("template")
        name = self.ident("template name")
        is_env = False
        if self.peek().text == "env":
            self.next()
            is_env = True
        variables: list[tuple[str, str, str]] = []
        actions: list[ActionDecl] = []
        while self.peek().text in ("var", "action"):
            if self.peek().text == "var":
                self.next()
                v = self.ident("variable name")
                self.expect(":")
                sort = self.ident("sort name")
                self.expect("=")
                init = self.ident("constant")
                variables.append((v, sort, init))
            else:
                actions.append(self.action_decl())
        return AgentTemplate(name, is_env, tuple(variables), tuple(actions))

    def action_decl(self) -> ActionDecl:
        self.expect("action")
        name = self.ident("action name")
        self.expect(":")
        kind_tok = self.next()
        if kind_tok.text not in (LOCAL, SYNC, INDIVIDUAL):
            self.fail("expected local, sync or individual", kind_tok)
        initiator = False
        if self.peek().text == "initiator":
            if kind_tok.text == LOCAL:
                self.fail("initiator applies to synchronization actions only")
            self.next()
            initiator = True
        self.expect("{")
        self.expect("pre")
        self.expect(":")
        pre_tok = self.peek()
        pre: AgentFormula = BoolConst(True) if self.peek().text == ";" else self.formula()
        self.expect(";")
        eff: list[tuple[str, str]] = []
        if self.peek().text == "eff":
            self.next()
            self.expect(":")
            while self.peek().text != "}":
                v = self.ident("variable name")
                self.expect(":=")
                c = self.ident("constant")
                eff.append((v, c))
                if self.peek().text == ",":
                    self.next()
                    continue
                break
        self.expect("}")
        if formula_has_disjunction(pre):
            self.fail("precondition contains a disjunction (or / not over non-atom)", pre_tok)
        return ActionDecl(name, kind_tok.text, pre, tuple(eff), initiator)

    def alternate_decl(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        self.expect("alternate")
        g1 = self.group()
        self.expect("vs")
        g2 = self.group()
        return (g1, g2)

    def group(self) -> tuple[str, ...]:
        self.expect("{")
        names = [self.ident("template name")]
        while self.peek().text == ",":
            self.next()
            names.append(self.ident("template name"))
        self.expect("}")
        return tuple(names)


def parse_pmas(src: str, name: str = "model", validate: bool = True) -> Pmas:
    """Parse and (optionally) validate a model; raises ModelError with diagnostics."""
    p = _Parser(src).pmas(name)
    if validate:
        diags = validate_pmas(p)
        if diags:
            raise ModelError(diags)
    return p


# ---------------------------------------------------------------------------
# printing (round-trips through parse_pmas)


def format_formula(f: AgentFormula, parent: str = "") -> str:
    if isinstance(f, BoolConst):
        return "true" if f.value else "false"
    if isinstance(f, VarTest):
        return f"{f.var}[{f.idx}] = {f.value}"
    if isinstance(f, RelTest):
        args = ", ".join(
            a.name if isinstance(a, ConstRef) else f"{a.var}[{a.idx}]" for a in f.args
        )
        return f"{f.rel}({args})"
    if isinstance(f, IdxEq):
        return f"{f.lhs} = {f.rhs}"
    if isinstance(f, Neg):
        if isinstance(f.inner, VarTest):
            return f"{f.inner.var}[{f.inner.idx}] != {f.inner.value}"
        if isinstance(f.inner, IdxEq):
            return f"{f.inner.lhs} != {f.inner.rhs}"
        return f"not {format_formula(f.inner, 'not')}"
    if isinstance(f, Conj):
        s = " and ".join(format_formula(i, "and") for i in f.items)
        return f"({s})" if parent == "not" else s
    if isinstance(f, Disj):
        s = " or ".join(format_formula(i, "or") for i in f.items)
        return f"({s})" if parent in ("and", "not") else s
    raise ModelError(f"not a formula: {f!r}")


def format_pmas(p: Pmas) -> str:
    out: list[str] = []
    for s in p.sorts:
        out.append(f"sort {s.name} {{ {', '.join(s.constants)} }}")
    for r in p.relations:
        out.append(f"relation {r.name}({', '.join(r.arg_sorts)})")
    for t in p.all_templates():
        out.append("")
        out.append(f"template {t.name}" + (" env" if t.is_env else ""))
        for v, sort, init in t.variables:
            out.append(f"  var {v}: {sort} = {init}")
        for a in t.actions:
            kind = a.kind + (" initiator" if a.initiator else "")
            eff = ", ".join(f"{v} := {c}" for v, c in a.eff)
            out.append(f"  action {a.name} : {kind} {{")
            out.append(f"    pre: {format_formula(a.pre)};")
            if eff:
                out.append(f"    eff: {eff}")
            out.append("  }")
    if p.alternation is not None:
        g1, g2 = p.alternation
        out.append("")
        out.append(f"alternate {{ {', '.join(g1)} }} vs {{ {', '.join(g2)} }}")
    out.append("")
    out.append(f"goal: {format_formula(p.goal)}")
    out.append("")
    return "\n".join(out)


def parse_formula(src: str) -> AgentFormula:
    """Parse a standalone formula (e.g. a goal override on the command line)."""
    pr = _Parser(src)
    f = pr.formula()
    if pr.peek().kind != "eof":
        pr.fail("unexpected input after formula")
    return f
