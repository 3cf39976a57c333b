"""Ring specifications and the element grammar.

    expr  := term (("+" | "-") term)*
    term  := coeff ("*"? atom)? | atom
    atom  := "sqrt(" uint ")" | "w(" uint ")" | atom "^" uint
    coeff := int ("/" uint)?

A leading sign is allowed on the first term so that every printed element
parses back.  Whitespace is ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from . import cyclo as cy
from . import multiquad as mq
from .numkernel import squarefree_decompose

__all__ = [
    "ParseError",
    "SemanticError",
    "RingSpec",
    "parse_ring",
    "parse_expr",
    "parse_element",
    "Term",
]


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}\n  {text}\n  {' ' * pos}^")


class SemanticError(ValueError):
    pass


@dataclass(frozen=True)
class RingSpec:
    kind: str  # "mq", "cyc", "int" or "quad"
    primes: tuple[int, ...] = ()
    p: int = 0
    n: int = 0
    d: int = 0

    def __str__(self):
        if self.kind == "mq":
            return "mq:" + ",".join(map(str, self.primes))
        if self.kind == "cyc":
            return f"cyc:{self.p}^{self.n}"
        if self.kind == "quad":
            return f"quad:{self.d}"
        return "int"

    def tower(self) -> mq.PrimeTower:
        return mq.PrimeTower(self.primes)

    def cyclo_ring(self) -> cy.CycloRing:
        return cy.CycloRing(self.p, self.n)


_RING_RE = {
    "mq": re.compile(r"mq:(\d+(?:,\d+)*)$"),
    "cyc": re.compile(r"cyc:(\d+)\^(\d+)$"),
    "quad": re.compile(r"quad:(\d+)$"),
}


def parse_ring(text: str) -> RingSpec:
    """``mq:5,17``, ``cyc:5^4``, ``quad:7`` or ``int``."""
    t = text.replace(" ", "")
    if t == "int":
        return RingSpec("int")
    m = _RING_RE["mq"].match(t)
    if m:
        primes = tuple(int(v) for v in m.group(1).split(","))
        try:
            mq.PrimeTower(primes)
        except ValueError as e:
            raise SemanticError(str(e)) from None
        return RingSpec("mq", primes=primes)
    m = _RING_RE["cyc"].match(t)
    if m:
        p, n = int(m.group(1)), int(m.group(2))
        try:
            cy.CycloRing(p, n)
        except ValueError as e:
            raise SemanticError(str(e)) from None
        return RingSpec("cyc", p=p, n=n)
    m = _RING_RE["quad"].match(t)
    if m:
        d = int(m.group(1))
        if d < 2 or squarefree_decompose(d)[0] != 1:
            raise SemanticError(f"quad:{d} needs a squarefree d >= 2")
        return RingSpec("quad", d=d)
    raise SemanticError(f"unknown ring specification {text!r} (expected mq:p1,p2,..., cyc:p^n, quad:d or int)")


# --------------------------------------------------------------------------
# syntax


@dataclass(frozen=True)
class Term:
    """``coeff * kind(arg)^power``; ``kind`` is ``None`` for a bare rational."""

    coeff: Fraction
    kind: str | None = None
    arg: int = 0
    power: int = 1
    pos: int = 0


_TOKEN = re.compile(r"\s*(?:(\d+)|(sqrt\(|w\()|([-+*/^()]))")


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m:
                start = pos + len(text[pos:]) - len(text[pos:].lstrip())
                raise ParseError(f"unexpected character {text[start]!r}", text, start)
            start = m.start(m.lastindex)
            kind = ("num", "fn", "op")[m.lastindex - 1]
            self.toks.append((kind, m.group(m.lastindex), start))
            pos = m.end()
        self.toks.append(("end", "", len(text)))
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, value: str | None = None) -> tuple[str, str, int]:
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = repr(value) if value is not None else {"num": "an unsigned integer"}.get(kind, kind)
            got = tok[1] or "end of input"
            raise ParseError(f"expected {want}, found {got!r}", self.text, tok[2])
        return self.take()


def parse_expr(text: str) -> list[Term]:
    """Parse into a list of signed terms."""
    lx = _Lexer(text)
    terms = []
    sign = 1
    tok = lx.peek()
    if tok[0] == "op" and tok[1] in "+-":
        lx.take()
        sign = -1 if tok[1] == "-" else 1
    terms.append(_term(lx, sign))
    while True:
        tok = lx.peek()
        if tok[0] == "end":
            break
        if tok[0] == "op" and tok[1] in "+-":
            lx.take()
            terms.append(_term(lx, -1 if tok[1] == "-" else 1))
            continue
        raise ParseError(f"expected '+', '-' or end of input, found {tok[1]!r}", text, tok[2])
    return terms


def _term(lx: _Lexer, sign: int) -> Term:
    tok = lx.peek()
    if tok[0] == "num":
        coeff = _coeff(lx)
        nxt = lx.peek()
        if nxt[0] == "op" and nxt[1] == "*":
            lx.take()
            return _atom(lx, sign * coeff)
        if nxt[0] == "fn":
            return _atom(lx, sign * coeff)
        return Term(sign * coeff, pos=tok[2])
    if tok[0] == "fn":
        return _atom(lx, Fraction(sign))
    got = tok[1] or "end of input"
    raise ParseError(f"expected a number, sqrt( or w(, found {got!r}", lx.text, tok[2])


def _coeff(lx: _Lexer) -> Fraction:
    num = int(lx.expect("num")[1])
    tok = lx.peek()
    if tok[0] == "op" and tok[1] == "/":
        lx.take()
        den_tok = lx.expect("num")
        den = int(den_tok[1])
        if den == 0:
            raise ParseError("division by zero", lx.text, den_tok[2])
        return Fraction(num, den)
    return Fraction(num)


def _atom(lx: _Lexer, coeff: Fraction) -> Term:
    fn = lx.expect("fn")
    arg = int(lx.expect("num")[1])
    lx.expect("op", ")")
    power = 1
    while lx.peek()[0] == "op" and lx.peek()[1] == "^":
        lx.take()
        power *= int(lx.expect("num")[1])
    return Term(coeff, "sqrt" if fn[1] == "sqrt(" else "w", arg, power, fn[2])


# --------------------------------------------------------------------------
# semantics


def parse_element(text: str, ring: RingSpec):
    """Parse ``text`` into an exact element of ``ring``."""
    terms = parse_expr(text)
    if ring.kind == "cyc":
        return _cyclo_element(terms, ring.cyclo_ring())
    return _mq_element(terms, ring)


def _mq_element(terms: list[Term], ring: RingSpec) -> mq.MultiQuadElem:
    out = mq.MultiQuadElem()
    for t in terms:
        if t.kind is None:
            out = out + mq.MultiQuadElem.rational(t.coeff)
            continue
        if t.kind == "w":
            raise SemanticError(f"w({t.arg}) is only available in cyc rings (position {t.pos})")
        if t.arg == 0:
            base = mq.MultiQuadElem()
        else:
            c, d = squarefree_decompose(t.arg)
            _check_radical(d, ring, t)
            base = mq.MultiQuadElem.sqrt(d, c)
        out = out + base**t.power * t.coeff
    return out


def _check_radical(d: int, ring: RingSpec, t: Term) -> None:
    if d == 1:
        return
    if ring.kind == "int":
        raise SemanticError(f"sqrt({t.arg}) is not rational (position {t.pos})")
    if ring.kind == "quad":
        if d != ring.d:
            raise SemanticError(f"sqrt({t.arg}) does not lie in Q(sqrt({ring.d})) (position {t.pos})")
        return
    try:
        ring.tower().mask_of(d)
    except mq.NotInTower:
        raise SemanticError(
            f"sqrt({t.arg}) does not lie in Q(sqrt(p) : p in {list(ring.primes)}) (position {t.pos})"
        ) from None


def _cyclo_element(terms: list[Term], ring: cy.CycloRing) -> cy.CycloElem:
    out = cy.CycloElem.zero(ring)
    for t in terms:
        if t.coeff.denominator != 1:
            raise SemanticError(f"coefficient {t.coeff} is not an integer (position {t.pos})")
        c = int(t.coeff)
        if t.kind is None:
            out = out + cy.CycloElem.constant(ring, c)
            continue
        if t.kind == "sqrt":
            raise SemanticError(f"sqrt(...) is not available in cyc rings (position {t.pos})")
        if t.arg >= ring.M:
            raise SemanticError(f"w({t.arg}) index out of range 0..{ring.M - 1} (position {t.pos})")
        base = cy.CycloElem.omega(ring, t.arg)
        val = cy.CycloElem.constant(ring, 1)
        for _ in range(t.power):
            val = val * base
        out = out + val * c
    return out
