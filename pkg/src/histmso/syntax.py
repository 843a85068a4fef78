"""Text syntax for HistMSO formulas.

Examples::

    forall1 a, b. rb(a,b) => ar(a,b)
    exists2 X. (forall1 x. x in X => x.oval = undef) & forall1 a. a.type = write
    finite{a | a.type = write} => exists1 a. a.type = read

Literals ``_`` and ``undef`` stand for the EMPTY and UNDEF values.
"""

from __future__ import annotations

import re
from typing import Optional

from . import logic as L
from .history import EMPTY, UNDEF, Special

_TOKEN = re.compile(
    r"\s*(?:(?P<sym><=>|=>|<=|!=|[<=.,(){}|&~@])|(?P<id>[A-Za-z0-9_]+)|(?P<bad>\S))"
)

QUANT_KEYWORDS = {
    "forall1": L.Forall,
    "exists1": L.Exists,
    "forall2": L.ForallSet,
    "exists2": L.ExistsSet,
}
CALLS = {"vis": 2, "ar": 2, "rb": 2, "ss": 2, "so": 2, "sorr": 2, "ctxt": 2, "lastwrite": 2, "dsucc": 3}


class ParseError(ValueError):
    pass


def _tokenize(text: str) -> list:
    out = []
    pos = 0
    text = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        pos = m.end()
        if m.group("bad"):
            raise ParseError(f"unexpected character {m.group('bad')!r}")
        out.append(m.group("sym") or m.group("id"))
    return out


class _Parser:
    def __init__(self, text: str, models: Optional[dict] = None):
        self.toks = _tokenize(text)
        self.i = 0
        self.models = models or {}

    def peek(self, k: int = 0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def take(self, expected: Optional[str] = None) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"unexpected end of input, expected {expected or 'token'}")
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, found {tok!r}")
        self.i += 1
        return tok

    def ident(self) -> str:
        tok = self.take()
        if not re.fullmatch(r"[A-Za-z0-9_]+", tok):
            raise ParseError(f"expected identifier, found {tok!r}")
        return tok

    def parse(self) -> L.Formula:
        f = self.iff()
        if self.peek() is not None:
            raise ParseError(f"trailing input at {self.peek()!r}")
        return f

    def iff(self):
        f = self.implies()
        while self.peek() == "<=>":
            self.take()
            f = L.Iff(f, self.implies())
        return f

    def implies(self):
        f = self.or_()
        if self.peek() == "=>":
            self.take()
            return L.Implies(f, self.implies())
        return f

    def or_(self):
        f = self.and_()
        while self.peek() == "|":
            self.take()
            f = L.Or(f, self.and_())
        return f

    def and_(self):
        f = self.unary()
        while self.peek() == "&":
            self.take()
            f = L.And(f, self.unary())
        return f

    def unary(self):
        tok = self.peek()
        if tok == "~":
            self.take()
            return L.Not(self.unary())
        if tok == "(":
            self.take()
            f = self.iff()
            self.take(")")
            return f
        if tok in QUANT_KEYWORDS:
            self.take()
            names = [self.ident()]
            while self.peek() == ",":
                self.take()
                names.append(self.ident())
            self.take(".")
            body = self.iff()
            for n in reversed(names):
                body = QUANT_KEYWORDS[tok](n, body)
            return body
        if tok == "true":
            self.take()
            return L.TRUE
        if tok == "false":
            self.take()
            return L.FALSE
        if tok == "@":
            self.take()
            name = self.ident()
            if name not in self.models:
                raise ParseError(f"unknown model {name!r}")
            return self.models[name]
        if tok == "finite":
            self.take()
            if self.peek() == "{":
                self.take()
                var = self.ident()
                self.take("|")
                body = self.iff()
                self.take("}")
                return L.Finite(var, body)
            self.take("(")
            setvar = self.ident()
            self.take(")")
            return L.Finite("a", L.InSet("a", setvar)) if setvar != "a" else L.Finite("b", L.InSet("b", setvar))
        return self.atom()

    def atom(self):
        name = self.ident()
        nxt = self.peek()
        if nxt == "(" and name in CALLS:
            self.take("(")
            args = [self.ident()]
            while self.peek() == ",":
                self.take()
                args.append(self.ident())
            self.take(")")
            if len(args) != CALLS[name]:
                raise ParseError(f"{name} expects {CALLS[name]} arguments")
            if name == "vis":
                return L.Vis(*args)
            if name == "ar":
                return L.Ar(*args)
            return L.Macro(name, tuple(args))
        if nxt == "(":
            raise ParseError(f"unknown macro {name!r}")
        if nxt == "in":
            self.take()
            return L.InSet(name, self.ident())
        if nxt != ".":
            raise ParseError(f"expected atom after {name!r}")
        self.take(".")
        attr = self.ident()
        if attr not in L.ATTR_KIND:
            raise ParseError(f"unknown attribute {attr!r}")
        op = self.take()
        if op in ("<", "<="):
            rvar = self.ident()
            self.take(".")
            rattr = self.ident()
            try:
                left, right = L.Time(name, attr), L.Time(rvar, rattr)
            except L.FormulaError as e:
                raise ParseError(str(e)) from None
            return L.TimeLt(left, right) if op == "<" else L.TimeLe(left, right)
        if op not in ("=", "!="):
            raise ParseError(f"unexpected operator {op!r}")
        rhs = self.ident()
        try:
            if self.peek() == ".":
                self.take()
                atom = L.AttrEq(name, attr, rhs, self.ident())
            else:
                atom = _literal_atom(name, attr, rhs)
        except L.FormulaError as e:
            raise ParseError(str(e)) from None
        return L.Not(atom) if op == "!=" else atom


def _literal_atom(var: str, attr: str, lit: str) -> L.Formula:
    kind = L.ATTR_KIND[attr]
    if kind == "proc":
        return L.ProcIs(var, lit)
    if kind == "obj":
        return L.ObjIs(var, lit)
    if kind == "type":
        return L.TypeIs(var, lit)
    if kind == "value":
        value = EMPTY if lit == "_" else UNDEF if lit == "undef" else lit
        return L.ValIs(var, attr, value)
    raise ParseError(f"cannot compare {attr} with a literal")


def parse_formula(text: str, models: Optional[dict] = None) -> L.Formula:
    return _Parser(text, models).parse()


def parse_model_file(text: str, models: Optional[dict] = None) -> dict:
    """Parse ``Name = formula;`` definitions; later ones may refer to earlier ones as ``@Name``."""
    env = dict(models or {})
    out = {}
    body = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
    for stmt in body.split(";"):
        if not stmt.strip():
            continue
        if "=" not in stmt:
            raise ParseError(f"expected 'Name = formula' in {stmt.strip()!r}")
        name, rhs = stmt.split("=", 1)
        name = name.strip()
        if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", name):
            raise ParseError(f"bad model name {name!r}")
        f = parse_formula(rhs, env)
        env[name] = f
        out[name] = f
    return out


# printing ------------------------------------------------------------------

_PREC = {L.Iff: 1, L.Implies: 2, L.Or: 3, L.And: 4}
_SYM = {L.Iff: "<=>", L.Implies: "=>", L.Or: "|", L.And: "&"}
_QUANT_WORD = {v: k for k, v in QUANT_KEYWORDS.items()}


def _lit(v) -> str:
    return v.value if isinstance(v, Special) else str(v)


def _time(t: L.Time) -> str:
    return f"{t.var}.{t.attr}"


def _atom_text(f: L.Formula) -> str:
    if isinstance(f, L.AttrEq):
        return f"{f.a}.{f.attr_a} = {f.b}.{f.attr_b}"
    if isinstance(f, L.TimeLt):
        return f"{_time(f.left)} < {_time(f.right)}"
    if isinstance(f, L.TimeLe):
        return f"{_time(f.left)} <= {_time(f.right)}"
    if isinstance(f, L.ProcIs):
        return f"{f.a}.proc = {f.proc}"
    if isinstance(f, L.TypeIs):
        return f"{f.a}.type = {f.type}"
    if isinstance(f, L.ObjIs):
        return f"{f.a}.obj = {f.obj}"
    if isinstance(f, L.ValIs):
        return f"{f.a}.{f.attr} = {_lit(f.value)}"
    if isinstance(f, L.InSet):
        return f"{f.a} in {f.setvar}"
    if isinstance(f, L.Vis):
        return f"vis({f.a},{f.b})"
    if isinstance(f, L.Ar):
        return f"ar({f.a},{f.b})"
    if isinstance(f, L.Macro):
        return f"{f.name}({','.join(map(str, f.args))})"
    if isinstance(f, L.Const):
        return "true" if f.value else "false"
    raise TypeError(f"not an atom: {f!r}")


def format_formula(f: L.Formula) -> str:
    return _fmt(f, 0)


def _fmt(f: L.Formula, parent: int) -> str:
    if isinstance(f, tuple(_PREC)):
        p = _PREC[type(f)]
        text = f"{_fmt(f.left, p)} {_SYM[type(f)]} {_fmt(f.right, p)}"
        return f"({text})" if p <= parent else text
    if isinstance(f, L.Not):
        return "~" + _fmt(f.body, 5)
    if isinstance(f, L.QUANTIFIERS):
        text = f"{_QUANT_WORD[type(f)]} {f.var}. {_fmt(f.body, 0)}"
        return f"({text})" if parent > 0 else text
    if isinstance(f, L.Finite):
        return f"finite{{{f.var} | {_fmt(f.body, 0)}}}"
    return _atom_text(f)
