"""Moment tables gamma_beta = int_Y y^beta dphi of the marginal measure phi.

The relaxation consumes these as equality right-hand sides, so tables are
precomputed eagerly up to the needed degree; assembly never integrates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .polynomials import enumerate_basis
from .problem import MarginalSpec

__all__ = [
    "MarginalMoments",
    "uniform_box_moments",
    "uniform_simplex_moments",
    "explicit_moments",
    "load_moments_csv",
    "moments_for",
]


@dataclass(frozen=True)
class MarginalMoments:
    """Complete table beta -> gamma_beta for all |beta| <= max_degree, gamma_0 = 1."""

    p: int
    max_degree: int
    values: dict[tuple[int, ...], float]

    def __post_init__(self) -> None:
        zero = tuple([0] * self.p)
        if abs(self.values.get(zero, 0.0) - 1.0) > 1e-12:
            raise ValueError("gamma_0 must equal 1: phi is a probability measure")
        for beta in enumerate_basis(0, self.p, self.max_degree):
            if beta not in self.values:
                raise ValueError(f"missing moment gamma_{beta}")

    def __getitem__(self, beta: tuple[int, ...]) -> float:
        try:
            return self.values[tuple(beta)]
        except KeyError:
            raise KeyError(f"gamma_{tuple(beta)} not tabulated (max_degree {self.max_degree})") from None


def uniform_box_moments(bounds, max_degree: int) -> MarginalMoments:
    """gamma_beta = prod_j (b^(beta_j+1) - a^(beta_j+1)) / ((beta_j+1)(b_j - a_j))."""
    bounds = [(float(a), float(b)) for a, b in bounds]
    for a, b in bounds:
        if not a < b:
            raise ValueError(f"degenerate interval [{a}, {b}]")
    p = len(bounds)
    values = {}
    for beta in enumerate_basis(0, p, max_degree):
        g = 1.0
        for (a, b), e in zip(bounds, beta):
            g *= (b ** (e + 1) - a ** (e + 1)) / ((e + 1) * (b - a))
        values[beta] = g
    return MarginalMoments(p, max_degree, values)


def uniform_simplex_moments(p: int, max_degree: int) -> MarginalMoments:
    """Uniform measure on {y >= 0, sum y_j <= 1}: gamma_beta = p! prod(beta_j!) / (|beta|+p)!."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    values = {}
    for beta in enumerate_basis(0, p, max_degree):
        num = math.factorial(p)
        for e in beta:
            num *= math.factorial(e)
        values[beta] = num / math.factorial(sum(beta) + p)
    return MarginalMoments(p, max_degree, values)


def explicit_moments(table, p: int, max_degree: int) -> MarginalMoments:
    """Wrap a user table; completeness and gamma_0 = 1 are enforced."""
    values = {tuple(int(e) for e in beta): float(v) for beta, v in table}
    return MarginalMoments(p, max_degree, values)


def load_moments_csv(path, p: int, max_degree: int) -> MarginalMoments:
    """Rows beta_1,...,beta_p,value; header row optional."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].strip().startswith("#"):
                continue
            try:
                beta = tuple(int(v) for v in rec[:p])
            except ValueError:
                continue  # header line
            rows.append((beta, float(rec[p])))
    return explicit_moments(rows, p, max_degree)


def moments_for(spec: MarginalSpec, p: int, max_degree: int) -> MarginalMoments:
    """Materialize the moment table demanded by a MarginalSpec."""
    if spec.kind == "uniform_box":
        return uniform_box_moments(spec.bounds, max_degree)
    if spec.kind == "uniform_simplex":
        return uniform_simplex_moments(p, max_degree)
    if spec.table is None:
        raise ValueError("explicit_moments marginal without a table")
    return explicit_moments(list(spec.table.items()), p, max_degree)
