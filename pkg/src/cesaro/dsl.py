"""Text and JSON forms of set expressions.

Grammar (binding tightest first: ``~``, then ``&``, then ``\\`` and ``^``,
then ``|``; binary operators associate to the left)::

    expr    := diffs ('|' diffs)*
    diffs   := inter (('\\' | '^') inter)*
    inter   := unary ('&' unary)*
    unary   := '~' unary | atom
    atom    := '(' expr ')'
             | '{' [INT (',' INT)*] '}'
             | NAME
             | NAME '(' arguments ')'

Names without arguments: ``nat`` (all of N), ``empty``, ``evens``, ``odds``,
``squares``, ``cubes``, ``primes``.

Calls::

    residue(r mod m)        powers(b)            dilate(k, e)
    interleave(e)           midpoint(lower, upper)
    greedy(s)  greedy(s, approx)                 # s = INT, INT/INT or decimal
    blocks(b^(n-1))  blocks(c*b^(n-1))  blocks(n^q)  blocks(seq(h1, ...; t1, ...))
    nullmod(e, t)  nullmod_removed(e, t)         # kept / removed part
    dk(k)                   pred(name)

``format_set_expr`` prints the canonical text; parsing it gives back an
equal tree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .sets import (
    Blocks,
    BlockSpec,
    CesaroError,
    Complement,
    Difference,
    Dilate,
    EMPTY,
    EVENS,
    Finite,
    Greedy,
    Interleave,
    Intersection,
    Midpoint,
    NATURALS,
    NullFamily,
    NullModPart,
    ODDS,
    Predicate,
    Residue,
    SetExpr,
    SymmDiff,
    Union,
)


class DslError(CesaroError):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.text = text
        self.pos = pos
        self.line = text.count("\n", 0, pos) + 1
        self.column = pos - (text.rfind("\n", 0, pos) + 1) + 1
        self.message = message
        super().__init__(f"{message} at line {self.line}, column {self.column}")

    def caret(self) -> str:
        """The offending line with a caret under the error column."""
        lines = self.text.split("\n")
        src = lines[self.line - 1] if self.line - 1 < len(lines) else ""
        return f"{src}\n{' ' * (self.column - 1)}^"


class DslSyntaxError(DslError):
    pass


class DslSemanticError(DslError):
    pass


PREDICATES: dict[str, Callable[[int], bool]] = {}


def register_predicate(name: str, fn: Callable[[int], bool]) -> Predicate:
    PREDICATES[name] = fn
    return Predicate(name, fn)


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[()\[\]{},;|&\\^~*/\-])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        if m.lastgroup != "ws":
            out.append(_Tok(m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(_Tok("eof", "", len(text)))
    return out


_NAMED = {
    "nat": NATURALS,
    "empty": EMPTY,
    "evens": EVENS,
    "odds": ODDS,
    "squares": NullFamily("squares"),
    "cubes": NullFamily("cubes"),
    "primes": NullFamily("primes"),
}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    # -- token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _error(self, msg, tok=None, cls=DslSyntaxError):
        tok = tok or self.tok
        return cls(msg, self.text, tok.pos)

    def accept(self, text: str) -> _Tok | None:
        if self.tok.text == text and self.tok.kind in ("op", "name"):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> _Tok:
        t = self.accept(text)
        if t is None:
            found = self.tok.text or "end of input"
            raise self._error(f"expected {text!r}, found {found!r}")
        return t

    def integer(self) -> int:
        t = self.tok
        if t.kind != "num" or "." in t.text:
            raise self._error(f"expected an integer, found {t.text or 'end of input'!r}")
        self.i += 1
        return int(t.text)

    def number(self) -> Fraction:
        t = self.tok
        if t.kind != "num":
            raise self._error(f"expected a number, found {t.text or 'end of input'!r}")
        self.i += 1
        value = Fraction(t.text)
        if self.accept("/"):
            den_tok = self.tok
            den = self.integer()
            if den == 0:
                raise self._error("zero denominator", den_tok, DslSemanticError)
            value /= den
        return value

    # -- grammar
    def parse(self) -> SetExpr:
        e = self.expr()
        if self.tok.kind != "eof":
            raise self._error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self):
        e = self.diffs()
        while self.accept("|"):
            e = Union(e, self.diffs())
        return e

    def diffs(self):
        e = self.inter()
        while True:
            if self.accept("\\"):
                e = Difference(e, self.inter())
            elif self.accept("^"):
                e = SymmDiff(e, self.inter())
            else:
                return e

    def inter(self):
        e = self.unary()
        while self.accept("&"):
            e = Intersection(e, self.unary())
        return e

    def unary(self):
        if self.accept("~"):
            return Complement(self.unary())
        return self.atom()

    def atom(self):
        t = self.tok
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.accept("{"):
            els = []
            if not self.accept("}"):
                els.append(self.integer())
                while self.accept(","):
                    els.append(self.integer())
                self.expect("}")
            if any(e < 1 for e in els):
                raise self._error("finite sets hold positive integers", t, DslSemanticError)
            return Finite(tuple(sorted(set(els))))
        if t.kind != "name":
            raise self._error(f"expected a set expression, found {t.text or 'end of input'!r}")
        self.i += 1
        if self.tok.text != "(":
            if t.text in _NAMED:
                return _NAMED[t.text]
            raise self._error(f"unknown set name {t.text!r}", t)
        handler = getattr(self, f"_call_{t.text}", None)
        if handler is None:
            raise self._error(f"unknown function {t.text!r}", t)
        self.expect("(")
        e = handler(t)
        self.expect(")")
        return e

    def _call_residue(self, t):
        r_tok = self.tok
        r = self.integer()
        self.expect("mod")
        m_tok = self.tok
        m = self.integer()
        if m < 1:
            raise self._error("modulus must be >= 1", m_tok, DslSemanticError)
        if r >= m:
            raise self._error(f"residue {r} is not below modulus {m}", r_tok, DslSemanticError)
        return Residue(r, m)

    def _call_powers(self, t):
        b_tok = self.tok
        b = self.integer()
        if b < 2:
            raise self._error("powers need a base >= 2", b_tok, DslSemanticError)
        return NullFamily("powers", b)

    def _call_dilate(self, t):
        k_tok = self.tok
        k = self.integer()
        if k < 1:
            raise self._error("dilation factor must be >= 1", k_tok, DslSemanticError)
        self.expect(",")
        return Dilate(k, self.expr())

    def _call_interleave(self, t):
        return Interleave(self.expr())

    def _call_midpoint(self, t):
        lower = self.expr()
        self.expect(",")
        return Midpoint(lower, self.expr())

    def _call_dk(self, t):
        from .constructions import dk_family

        return dk_family(self.integer())

    def _call_pred(self, t):
        name_tok = self.tok
        if name_tok.kind != "name":
            raise self._error("expected a predicate name")
        self.i += 1
        fn = PREDICATES.get(name_tok.text)
        if fn is None:
            raise self._error(f"no predicate registered as {name_tok.text!r}", name_tok, DslSemanticError)
        return Predicate(name_tok.text, fn)

    def _target(self):
        s_tok = self.tok
        s = self.number()
        if not 0 <= s <= 1:
            raise self._error("target must lie in [0, 1]", s_tok, DslSemanticError)
        return s

    def _call_greedy(self, t):
        s = self._target()
        approx = False
        if self.accept(","):
            self.expect("approx")
            approx = True
        return Greedy(s, approx)

    def _call_nullmod(self, t):
        base = self.expr()
        self.expect(",")
        return NullModPart(base, self._target(), False)

    def _call_nullmod_removed(self, t):
        base = self.expr()
        self.expect(",")
        return NullModPart(base, self._target(), True)

    def _call_blocks(self, t):
        start = self.tok
        try:
            if self.accept("seq"):
                self.expect("(")
                head, tail = [], []
                if self.tok.text != ";":
                    head.append(self.integer())
                    while self.accept(","):
                        head.append(self.integer())
                self.expect(";")
                tail.append(self.integer())
                while self.accept(","):
                    tail.append(self.integer())
                self.expect(")")
                return Blocks(BlockSpec.periodic(head, tail))
            if self.accept("n"):
                self.expect("^")
                return Blocks(BlockSpec.power(self.integer()))
            c = 1
            b = self.integer()
            if self.accept("*"):
                c, b = b, self.integer()
            self.expect("^")
            self.expect("(")
            self.expect("n")
            self.expect("-")
            if self.integer() != 1:
                raise self._error("geometric blocks are written b^(n-1)")
            self.expect(")")
            return Blocks(BlockSpec.geometric(b, c))
        except ValueError as exc:
            raise self._error(str(exc), start, DslSemanticError) from None


def parse_set_expr(text: str) -> SetExpr:
    """Parse DSL text into a set expression tree."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# printing

_PREC = {Union: 1, Difference: 2, SymmDiff: 2, Intersection: 3}
_SYMBOL = {Union: "|", Difference: "\\", SymmDiff: "^", Intersection: "&"}


def _frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _prec(e: SetExpr) -> int:
    if isinstance(e, Complement):
        return 4
    return _PREC.get(type(e), 5)


def format_set_expr(e: SetExpr) -> str:
    t = type(e)
    if t in _PREC:
        p = _PREC[t]
        left = format_set_expr(e.left)
        right = format_set_expr(e.right)
        if _prec(e.left) < p:
            left = f"({left})"
        if _prec(e.right) <= p:
            right = f"({right})"
        return f"{left} {_SYMBOL[t]} {right}"
    if isinstance(e, Complement):
        inner = format_set_expr(e.inner)
        return f"~{inner}" if _prec(e.inner) >= 4 else f"~({inner})"
    if isinstance(e, Finite):
        return "{" + ", ".join(map(str, e.elements)) + "}"
    if isinstance(e, Residue):
        return f"residue({e.r} mod {e.m})"
    if isinstance(e, NullFamily):
        return f"powers({e.base})" if e.kind == "powers" else e.kind
    if isinstance(e, Blocks):
        s = e.spec
        if s.kind == "geometric":
            return f"blocks({s.b}^(n-1))" if s.c == 1 else f"blocks({s.c}*{s.b}^(n-1))"
        if s.kind == "power":
            return f"blocks(n^{s.q})"
        return f"blocks(seq({', '.join(map(str, s.head))}; {', '.join(map(str, s.tail))}))"
    if isinstance(e, Greedy):
        return f"greedy({_frac(e.target)}, approx)" if e.approximate else f"greedy({_frac(e.target)})"
    if isinstance(e, Interleave):
        return f"interleave({format_set_expr(e.base)})"
    if isinstance(e, Dilate):
        return f"dilate({e.k}, {format_set_expr(e.inner)})"
    if isinstance(e, Midpoint):
        return f"midpoint({format_set_expr(e.lower)}, {format_set_expr(e.upper)})"
    if isinstance(e, NullModPart):
        name = "nullmod_removed" if e.removed else "nullmod"
        return f"{name}({format_set_expr(e.base)}, {_frac(e.target)})"
    if isinstance(e, Predicate):
        return f"pred({e.name})"
    raise TypeError(f"cannot format {e!r}")


# ---------------------------------------------------------------------------
# JSON trees

_BINARY = {"union": Union, "intersection": Intersection, "difference": Difference, "symmdiff": SymmDiff}
_BINARY_NAME = {v: k for k, v in _BINARY.items()}


def to_json(e: SetExpr) -> dict:
    t = type(e)
    if t in _BINARY_NAME:
        return {"type": _BINARY_NAME[t], "left": to_json(e.left), "right": to_json(e.right)}
    if isinstance(e, Complement):
        return {"type": "complement", "inner": to_json(e.inner)}
    if isinstance(e, Finite):
        return {"type": "finite", "elements": list(e.elements)}
    if isinstance(e, Residue):
        return {"type": "residue", "r": e.r, "m": e.m}
    if isinstance(e, NullFamily):
        d = {"type": "null", "kind": e.kind}
        if e.kind == "powers":
            d["base"] = e.base
        return d
    if isinstance(e, Blocks):
        s = e.spec
        d = {"type": "blocks", "kind": s.kind}
        if s.kind == "geometric":
            d.update(c=s.c, b=s.b)
        elif s.kind == "power":
            d["q"] = s.q
        else:
            d.update(head=list(s.head), tail=list(s.tail))
        return d
    if isinstance(e, Greedy):
        return {"type": "greedy", "target": _frac(e.target), "approximate": e.approximate}
    if isinstance(e, Interleave):
        return {"type": "interleave", "base": to_json(e.base)}
    if isinstance(e, Dilate):
        return {"type": "dilate", "k": e.k, "inner": to_json(e.inner)}
    if isinstance(e, Midpoint):
        return {"type": "midpoint", "lower": to_json(e.lower), "upper": to_json(e.upper)}
    if isinstance(e, NullModPart):
        return {"type": "nullmod", "base": to_json(e.base), "target": _frac(e.target), "removed": e.removed}
    if isinstance(e, Predicate):
        return {"type": "predicate", "name": e.name}
    raise TypeError(f"cannot serialize {e!r}")


def from_json(d: dict) -> SetExpr:
    t = d["type"]
    if t in _BINARY:
        return _BINARY[t](from_json(d["left"]), from_json(d["right"]))
    if t == "complement":
        return Complement(from_json(d["inner"]))
    if t == "finite":
        return Finite(tuple(d["elements"]))
    if t == "residue":
        return Residue(d["r"], d["m"])
    if t == "null":
        return NullFamily(d["kind"], d.get("base", 0))
    if t == "blocks":
        kind = d["kind"]
        if kind == "geometric":
            return Blocks(BlockSpec.geometric(d["b"], d["c"]))
        if kind == "power":
            return Blocks(BlockSpec.power(d["q"]))
        return Blocks(BlockSpec.periodic(d["head"], d["tail"]))
    if t == "greedy":
        return Greedy(Fraction(d["target"]), d.get("approximate", False))
    if t == "interleave":
        return Interleave(from_json(d["base"]))
    if t == "dilate":
        return Dilate(d["k"], from_json(d["inner"]))
    if t == "midpoint":
        return Midpoint(from_json(d["lower"]), from_json(d["upper"]))
    if t == "nullmod":
        return NullModPart(from_json(d["base"]), Fraction(d["target"]), d.get("removed", False))
    if t == "predicate":
        fn = PREDICATES.get(d["name"])
        if fn is None:
            raise CesaroError(f"no predicate registered as {d['name']!r}")
        return Predicate(d["name"], fn)
    raise CesaroError(f"unknown set expression type {t!r}")
