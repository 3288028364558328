"""Sparse multivariate polynomials over the combined variable vector (x_1..x_n, y_1..y_p).

Monomials are exponent tuples of length n+p (x exponents first, then y).
The graded monomial basis defined here indexes every moment object in the
package, so the order must be total and reproducible: total degree first,
then lexicographic with x_1 carrying the highest priority.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache

__all__ = [
    "Polynomial",
    "PolyError",
    "basis_size",
    "enumerate_basis",
    "poly_parse",
    "poly_eval",
    "poly_mul",
    "poly_to_string",
    "unit_index",
]

_COEF_EPS = 0.0  # exact zero drop; arithmetic keeps whatever float noise produces


class PolyError(ValueError):
    """Raised on malformed polynomial input (syntax, dimension, degree)."""


def basis_size(num_vars: int, degree: int) -> int:
    """Number of monomials in num_vars variables of total degree <= degree."""
    if num_vars < 1 or degree < 0:
        raise PolyError(f"basis_size needs num_vars >= 1, degree >= 0, got ({num_vars}, {degree})")
    return math.comb(num_vars + degree, degree)


@lru_cache(maxsize=None)
def _basis(num_vars: int, degree: int) -> tuple[tuple[int, ...], ...]:
    out: list[tuple[int, ...]] = []

    def gen(prefix: tuple[int, ...], remaining: int, slots: int) -> None:
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        # descending leading exponent realizes lex order with earlier
        # variables taking priority
        for e in range(remaining, -1, -1):
            gen(prefix + (e,), remaining - e, slots - 1)

    for total in range(degree + 1):
        gen((), total, num_vars)
    return tuple(out)


@lru_cache(maxsize=None)
def _position_map(num_vars: int, degree: int) -> dict[tuple[int, ...], int]:
    return {m: i for i, m in enumerate(_basis(num_vars, degree))}


def enumerate_basis(n: int, p: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples of length n+p with total degree <= degree, graded lex order.

    The first element is always the zero index; the list length equals
    basis_size(n+p, degree).
    """
    if degree < 0:
        raise PolyError(f"degree must be >= 0, got {degree}")
    return list(_basis(n + p, degree))


def unit_index(n: int, p: int, k: int) -> tuple[int, ...]:
    """The exponent tuple e(k): a single 1 in x-slot k (1-based), zeros elsewhere."""
    if not 1 <= k <= n:
        raise PolyError(f"coordinate k={k} outside 1..{n}")
    e = [0] * (n + p)
    e[k - 1] = 1
    return tuple(e)


@dataclass(frozen=True)
class Polynomial:
    """Element of R[x_1..x_n, y_1..y_p] as a sparse exponent->coefficient map.

    Zero coefficients are never stored, so degree queries are exact.
    Instances are immutable; arithmetic returns new values.
    """

    n: int
    p: int
    terms: dict[tuple[int, ...], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean = {}
        for mono, coef in self.terms.items():
            if len(mono) != self.n + self.p:
                raise PolyError(f"monomial {mono} has length {len(mono)}, expected {self.n + self.p}")
            if any(e < 0 for e in mono):
                raise PolyError(f"negative exponent in {mono}")
            c = float(coef)
            if c != _COEF_EPS:
                clean[tuple(int(e) for e in mono)] = c
        object.__setattr__(self, "terms", clean)

    @property
    def degree(self) -> int:
        """Max total degree over stored terms; 0 for the zero polynomial."""
        if not self.terms:
            return 0
        return max(sum(m) for m in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def uses_x(self) -> bool:
        return any(any(m[:self.n]) for m in self.terms)

    def uses_y(self) -> bool:
        return any(any(m[self.n:]) for m in self.terms)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check_dims(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0.0) + c
        return Polynomial(self.n, self.p, terms)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + other.scale(-1.0)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        return poly_mul(self, other)

    def scale(self, a: float) -> "Polynomial":
        return Polynomial(self.n, self.p, {m: a * c for m, c in self.terms.items()})

    def pow(self, k: int) -> "Polynomial":
        if k < 0:
            raise PolyError("negative power")
        out = constant(self.n, self.p, 1.0)
        for _ in range(k):
            out = poly_mul(out, self)
        return out

    def _check_dims(self, other: "Polynomial") -> None:
        if (self.n, self.p) != (other.n, other.p):
            raise PolyError(f"dimension mismatch: ({self.n},{self.p}) vs ({other.n},{other.p})")

    def __str__(self) -> str:
        return poly_to_string(self)


def constant(n: int, p: int, value: float) -> Polynomial:
    return Polynomial(n, p, {tuple([0] * (n + p)): value})


def variable(n: int, p: int, kind: str, index: int) -> Polynomial:
    """The monomial x_index or y_index (1-based)."""
    if kind == "x":
        if not 1 <= index <= n:
            raise PolyError(f"variable x{index} outside x1..x{n}")
        slot = index - 1
    elif kind == "y":
        if not 1 <= index <= p:
            raise PolyError(f"variable y{index} outside y1..y{p}")
        slot = n + index - 1
    else:
        raise PolyError(f"unknown variable kind {kind!r}")
    mono = [0] * (n + p)
    mono[slot] = 1
    return Polynomial(n, p, {tuple(mono): 1.0})


def poly_eval(f: Polynomial, point) -> float:
    """Evaluate f at a point of length n+p (x coordinates first)."""
    if len(point) != f.n + f.p:
        raise PolyError(f"point length {len(point)}, expected {f.n + f.p}")
    total = 0.0
    for mono, coef in f.terms.items():
        v = coef
        for e, t in zip(mono, point):
            if e:
                v *= t ** e
        total += v
    return total


def poly_mul(f: Polynomial, g: Polynomial) -> Polynomial:
    f._check_dims(g)
    terms: dict[tuple[int, ...], float] = {}
    for ma, ca in f.terms.items():
        for mb, cb in g.terms.items():
            m = tuple(a + b for a, b in zip(ma, mb))
            terms[m] = terms.get(m, 0.0) + ca * cb
    return Polynomial(f.n, f.p, terms)


# expression grammar shared with the problem-file format:
#   expr   := term (('+'|'-') term)*
#   term   := factor ('*' factor)*
#   factor := atom ('^' integer)?
#   atom   := number | var | '(' expr ')' | '-' factor
#   var    := ('x'|'y') integer
_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+(?:[eE][+-]?\d+)?)|([xy])(\d+)|([()+\-*^]))")


class _Parser:
    def __init__(self, text: str, n: int, p: int):
        self.text = text
        self.n = n
        self.p = p
        self.pos = 0
        self.tok: tuple[str, object] | None = None
        self._advance()

    def _advance(self) -> None:
        if self.pos >= len(self.text):
            self.tok = None
            return
        m = _TOKEN.match(self.text, self.pos)
        if m is None:
            rest = self.text[self.pos:].strip()
            if not rest:
                self.tok = None
                return
            raise PolyError(f"syntax error at position {self.pos}: {rest[:20]!r}")
        self.pos = m.end()
        if m.group(1) is not None:
            self.tok = ("num", float(m.group(1)))
        elif m.group(2) is not None:
            self.tok = ("var", (m.group(2), int(m.group(3))))
        else:
            self.tok = ("op", m.group(4))

    def _expect_op(self, ops: str) -> str:
        if self.tok is None or self.tok[0] != "op" or self.tok[1] not in ops:
            raise PolyError(f"expected one of {ops!r} at position {self.pos} in {self.text!r}")
        op = str(self.tok[1])
        self._advance()
        return op

    def parse(self) -> Polynomial:
        out = self.expr()
        if self.tok is not None:
            raise PolyError(f"unexpected trailing input at position {self.pos} in {self.text!r}")
        return out

    def expr(self) -> Polynomial:
        if self.tok == ("op", "-"):
            self._advance()
            acc = self.term().scale(-1.0)
        elif self.tok == ("op", "+"):
            self._advance()
            acc = self.term()
        else:
            acc = self.term()
        while self.tok is not None and self.tok[0] == "op" and self.tok[1] in "+-":
            op = self._expect_op("+-")
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term(self) -> Polynomial:
        acc = self.factor()
        while self.tok == ("op", "*"):
            self._advance()
            acc = poly_mul(acc, self.factor())
        return acc

    def factor(self) -> Polynomial:
        base = self.atom()
        if self.tok == ("op", "^"):
            self._advance()
            if self.tok is None or self.tok[0] != "num":
                raise PolyError(f"expected integer exponent at position {self.pos}")
            k = self.tok[1]
            if k != int(k) or k < 0:
                raise PolyError(f"exponent must be a nonnegative integer, got {k}")
            self._advance()
            base = base.pow(int(k))
        return base

    def atom(self) -> Polynomial:
        if self.tok is None:
            raise PolyError(f"unexpected end of expression in {self.text!r}")
        kind, val = self.tok
        if kind == "num":
            self._advance()
            return constant(self.n, self.p, float(val))  # type: ignore[arg-type]
        if kind == "var":
            name, idx = val  # type: ignore[misc]
            self._advance()
            return variable(self.n, self.p, name, idx)
        if val == "(":
            self._advance()
            inner = self.expr()
            self._expect_op(")")
            return inner
        if val == "-":
            self._advance()
            return self.factor().scale(-1.0)
        raise PolyError(f"unexpected token {val!r} at position {self.pos} in {self.text!r}")


def poly_parse(text: str, n: int, p: int) -> Polynomial:
    """Parse an expression like '-2*x1^2*y1 + (1 - y1)*x2' into a Polynomial."""
    return _Parser(text, n, p).parse()


def _format_coef(c: float) -> str:
    return f"{c:.12g}"


def poly_to_string(f: Polynomial) -> str:
    """Deterministic rendering in graded basis order; reparses to the same term map."""
    if not f.terms:
        return "0"
    order = _position_map(f.n + f.p, f.degree)
    parts: list[str] = []
    for mono in sorted(f.terms, key=order.__getitem__):
        coef = f.terms[mono]
        factors = []
        for slot, e in enumerate(mono):
            if e == 0:
                continue
            name = f"x{slot + 1}" if slot < f.n else f"y{slot - f.n + 1}"
            factors.append(name if e == 1 else f"{name}^{e}")
        mag = abs(coef)
        body = "*".join(factors)
        if not factors:
            piece = _format_coef(mag)
        elif mag == 1.0:
            piece = body
        else:
            piece = f"{_format_coef(mag)}*{body}"
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {piece}")
    head = parts[0]
    head = ("-" + head[2:]) if head.startswith("- ") else head[2:]
    return " ".join([head] + parts[1:])
