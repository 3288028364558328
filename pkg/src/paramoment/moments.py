"""Truncated moment sequences and the matrices built on them.

A MomentSequence holds z_{alpha beta} for |alpha+beta| <= 2i in the graded
basis order. Moment and localizing matrices are kept symbolic (linear maps
from sequence positions), because the SDP assembler needs the linear
structure; numeric instantiation is a separate step used by tests and
post-hoc feasibility checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polynomials import Polynomial, PolyError, basis_size, enumerate_basis, _position_map

__all__ = [
    "MomentSequence",
    "StructuredMatrix",
    "moment_index",
    "build_moment_matrix",
    "build_localizing_matrix",
    "instantiate",
]


def moment_index(n: int, p: int, order: int, idx) -> int:
    """Position of an exponent tuple in enumerate_basis(n, p, 2*order)."""
    idx = tuple(int(e) for e in idx)
    if sum(idx) > 2 * order:
        raise PolyError(f"index {idx} has degree {sum(idx)} > 2*order = {2 * order}")
    return _position_map(n + p, 2 * order)[idx]


@dataclass(frozen=True)
class MomentSequence:
    """Dense vector of moments z_{alpha beta}, |alpha+beta| <= 2*order."""

    n: int
    p: int
    order: int
    values: np.ndarray

    def __post_init__(self) -> None:
        want = basis_size(self.n + self.p, 2 * self.order)
        if len(self.values) != want:
            raise ValueError(f"sequence length {len(self.values)}, expected {want}")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def __getitem__(self, idx) -> float:
        return float(self.values[moment_index(self.n, self.p, self.order, idx)])

    def apply(self, f: Polynomial) -> float:
        """The Riesz functional L_z(f) = sum_ab f_ab z_ab."""
        if (f.n, f.p) != (self.n, self.p):
            raise PolyError("polynomial dimensions do not match the sequence")
        return float(sum(c * self[m] for m, c in f.terms.items()))

    @property
    def mass(self) -> float:
        return float(self.values[0])


@dataclass(frozen=True)
class StructuredMatrix:
    """Symmetric matrix whose (r,c) entry is a sparse linear form over z positions."""

    side: int
    entry_map: dict[tuple[int, int], tuple[tuple[int, float], ...]]

    def entry(self, r: int, c: int) -> tuple[tuple[int, float], ...]:
        return self.entry_map[(r, c)]

    def upper_entries(self):
        for (r, c), form in self.entry_map.items():
            if r <= c:
                yield r, c, form


def build_moment_matrix(n: int, p: int, half_degree: int, order: int) -> StructuredMatrix:
    """M_half(z): entry (r,c) is the single position of index_r + index_c."""
    if half_degree > order:
        raise PolyError(f"half_degree {half_degree} exceeds order {order}")
    rows = enumerate_basis(n, p, half_degree)
    pos = _position_map(n + p, 2 * order)
    entry_map: dict[tuple[int, int], tuple[tuple[int, float], ...]] = {}
    for r, mr in enumerate(rows):
        for c in range(r, len(rows)):
            mc = rows[c]
            form = ((pos[tuple(a + b for a, b in zip(mr, mc))], 1.0),)
            entry_map[(r, c)] = form
            entry_map[(c, r)] = form
    return StructuredMatrix(len(rows), entry_map)


def build_localizing_matrix(q: Polynomial, n: int, p: int, half_degree: int, order: int) -> StructuredMatrix:
    """M_half(q z): entry (r,c) = sum_uv q_uv z at position index_r + index_c + (u,v)."""
    vq = (q.degree + 1) // 2
    if half_degree + vq > order:
        raise PolyError(
            f"half_degree {half_degree} plus ceil(deg q / 2) = {vq} exceeds order {order}"
        )
    rows = enumerate_basis(n, p, half_degree)
    pos = _position_map(n + p, 2 * order)
    entry_map: dict[tuple[int, int], tuple[tuple[int, float], ...]] = {}
    for r, mr in enumerate(rows):
        for c in range(r, len(rows)):
            mc = rows[c]
            base = tuple(a + b for a, b in zip(mr, mc))
            form = tuple(
                (pos[tuple(a + u for a, u in zip(base, mono))], coef)
                for mono, coef in q.terms.items()
            )
            entry_map[(r, c)] = form
            entry_map[(c, r)] = form
    return StructuredMatrix(len(rows), entry_map)


def instantiate(matrix: StructuredMatrix, z: MomentSequence) -> np.ndarray:
    """Numeric symmetric matrix obtained by substituting the moment values."""
    out = np.zeros((matrix.side, matrix.side))
    vals = z.values
    for r, c, form in matrix.upper_entries():
        v = sum(coef * vals[pos] for pos, coef in form)
        out[r, c] = v
        out[c, r] = v
    return out
