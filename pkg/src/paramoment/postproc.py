"""Deliverables read off a solved moment sequence.

For any polynomial h of the decision variables, L_z(h(x)) estimates the
marginal average int h(x*(y)) dphi; coordinate entries z_{e(k) beta} estimate
int y^beta x*_k(y) dphi and feed both the mean vector and the density
recovery; for boolean coordinates z_{e(k) 0} estimates the persistency
Prob(x*_k(y) = 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .moments import MomentSequence
from .polynomials import Polynomial, enumerate_basis
from .problem import ParametricProblem
from .tables import write_csv

__all__ = [
    "PostprocError",
    "CoordinateMoments",
    "functional_estimate",
    "mean_vector",
    "persistency",
    "coordinate_moment_curve",
    "write_curve_csv",
]


class PostprocError(ValueError):
    pass


@dataclass(frozen=True)
class CoordinateMoments:
    """Entries z_{e(k) beta}, |beta| <= budget, for one coordinate."""

    k: int
    budget: int
    entries: dict[tuple[int, ...], float]

    def vector(self) -> np.ndarray:
        p = len(next(iter(self.entries)))
        betas = enumerate_basis(0, p, self.budget)
        return np.array([self.entries[b] for b in betas])


def functional_estimate(h: Polynomial, z: MomentSequence, allow_mixed: bool = False) -> float:
    """L_z(h) = sum_alpha h_alpha z_{alpha 0}, the relaxation's estimate of
    int h(x*(y)) dphi. h must involve the decision variables only; pass
    allow_mixed=True to evaluate a joint functional of (x*(y), y) instead."""
    if h.n != z.n or h.p != z.p:
        raise PostprocError("polynomial dimensions do not match the moment sequence")
    if h.uses_y() and not allow_mixed:
        raise PostprocError(
            "functional involves parameters; pass allow_mixed=True for joint functionals"
        )
    if h.degree > 2 * z.order:
        raise PostprocError(f"degree {h.degree} exceeds moment budget {2 * z.order}")
    return z.apply(h)


def mean_vector(z: MomentSequence) -> np.ndarray:
    """Component k is z_{e(k) 0}, the estimate of int x*_k(y) dphi."""
    if z.order < 1:
        raise PostprocError("mean vector needs order at least 1")
    zero_beta = tuple([0] * z.p)
    out = np.empty(z.n)
    for k in range(1, z.n + 1):
        mono = tuple(1 if j == k - 1 else 0 for j in range(z.n)) + zero_beta
        out[k - 1] = z[mono]
    return out


def persistency(z: MomentSequence, k: int, prob: ParametricProblem,
                tolerance: float = 1e-8) -> tuple[float, bool]:
    """Estimated Prob(x*_k(y) = 1) for a boolean coordinate, clamped to [0,1].

    The clamp flag fires when the raw value leaves [0,1] by more than
    10*tolerance; small leakage is expected at finite order.
    """
    if k not in prob.boolean_coords:
        raise PostprocError(f"coordinate x{k} is not declared boolean")
    mono = tuple(1 if j == k - 1 else 0 for j in range(z.n)) + tuple([0] * z.p)
    raw = z[mono]
    flagged = raw < -10.0 * tolerance or raw > 1.0 + 10.0 * tolerance
    return min(1.0, max(0.0, raw)), flagged


def coordinate_moment_curve(z: MomentSequence, k: int, budget: int) -> CoordinateMoments:
    """All z_{e(k) beta} with |beta| <= budget."""
    if not 1 <= k <= z.n:
        raise PostprocError(f"coordinate index {k} out of range 1..{z.n}")
    if budget + 1 > 2 * z.order:
        raise PostprocError(f"budget {budget} exceeds moment budget {2 * z.order - 1}")
    ek = tuple(1 if j == k - 1 else 0 for j in range(z.n))
    entries = {beta: z[ek + beta] for beta in enumerate_basis(0, z.p, budget)}
    return CoordinateMoments(k, budget, entries)


def write_curve_csv(path, curve: CoordinateMoments) -> None:
    p = len(next(iter(curve.entries)))
    header = [f"beta{j + 1}" for j in range(p)] + ["value"]
    rows = [list(beta) + [curve.entries[beta]]
            for beta in enumerate_basis(0, p, curve.budget)]
    write_csv(path, header, rows)
