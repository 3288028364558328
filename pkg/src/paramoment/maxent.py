"""Maximum-entropy recovery of parametric minimizer coordinates.

Given a relaxation moment sequence z, the signed sequence u_beta =
L_z(x_k y^beta) - a_k gamma_beta is (approximately) the moment vector of the
nonnegative measure (x_k - a_k) dmu once a_k lower-bounds x_k on the feasible
set. Fitting the exponential family h(t) = exp(sum_j lambda_j t^j) to u on
the unit box and adding the shift back estimates y -> x_k*(y).

The fit maximizes the strictly concave dual
    v(lambda) = <u, lambda> - int_[0,1]^p exp(sum_j lambda_j t^j) dt
by damped Newton with Gauss-Legendre quadrature; its unique stationary point
matches all target moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .marginal import MarginalMoments
from .moments import MomentSequence
from .polynomials import _position_map, enumerate_basis, unit_index
from .problem import ParametricProblem, min_relaxation_order
from .relaxation import (
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    ConicProgram,
    SolverBackend,
    assemble_primal,
)

__all__ = [
    "MaxentError",
    "MomentTarget",
    "DensityEstimate",
    "lower_bound_for_shift",
    "shifted_moments",
    "gauss_legendre_rule",
    "dual_value_grad_hess",
    "maxent_fit",
    "density_eval",
]

MAX_FIT_DEGREE = 10
SHIFT_MARGIN = 1e-6


class MaxentError(RuntimeError):
    pass


@dataclass(frozen=True)
class MomentTarget:
    """Unit-box power moments u_beta, |beta| <= degree, of a positive measure.

    box records the original parameter box the moments were transported from,
    so densities can be reported in original coordinates.
    """

    p: int
    degree: int
    values: dict[tuple[int, ...], float]
    box: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if self.p not in (1, 2):
            raise MaxentError(f"density recovery supports 1 or 2 parameters, got {self.p}")
        if not 0 < self.degree <= MAX_FIT_DEGREE:
            raise MaxentError(f"fit degree must lie in 1..{MAX_FIT_DEGREE}, got {self.degree}")
        if len(self.box) != self.p:
            raise MaxentError("box arity does not match parameter count")
        betas = enumerate_basis(0, self.p, self.degree)
        missing = [b for b in betas if b not in self.values]
        if missing:
            raise MaxentError(f"moment target missing entries, first {missing[0]}")
        mass = self.values[betas[0]]
        if not mass > 0.0:
            raise MaxentError(f"target mass must be positive, got {mass:.3e}")

    def vector(self) -> np.ndarray:
        return np.array([self.values[b] for b in enumerate_basis(0, self.p, self.degree)])


@dataclass(frozen=True)
class DensityEstimate:
    p: int
    degree: int
    lam: np.ndarray
    box: tuple[tuple[float, float], ...]
    iterations: int
    converged: bool
    residuals: np.ndarray
    max_residual: float
    dual_value: float


def lower_bound_for_shift(prob: ParametricProblem, k: int, order: int,
                          backend: SolverBackend) -> float:
    """Certified a_k <= min x_k over the joint feasible set, minus a margin.

    Uses the plain (marginal-free) relaxation of min x_k: only the mass row
    is kept, so the optimum lower-bounds x_k at every feasible point, not just
    on average.
    """
    if not 1 <= k <= prob.n:
        raise MaxentError(f"coordinate index {k} out of range 1..{prob.n}")
    if order < min_relaxation_order(prob):
        raise MaxentError("shift bound order below minimum relaxation order")
    template = assemble_primal(
        prob, _unit_mass_table(prob.p, 2 * order), order
    )
    mass_row = template.equalities[0]
    pos = _position_map(prob.n + prob.p, 2 * order)[unit_index(prob.n, prob.p, k)]
    program = ConicProgram(template.num_vars, {pos: 1.0}, template.psd_blocks, (mass_row,))
    res = backend.solve(program)
    if res.status == STATUS_UNBOUNDED:
        raise MaxentError(
            f"x{k} is unbounded below on the feasible set; add a ball or box constraint"
        )
    if res.status == STATUS_INFEASIBLE:
        raise MaxentError("feasible set is empty, no shift bound exists")
    if res.status != STATUS_OPTIMAL:
        raise MaxentError(f"shift bound solve failed: {res.message}")
    return float(res.objective) - SHIFT_MARGIN


def _unit_mass_table(p: int, max_degree: int) -> MarginalMoments:
    """Placeholder table (uniform unit box) used only to borrow assemble_primal's
    block structure; its rows are discarded."""
    values = {}
    for beta in enumerate_basis(0, p, max_degree):
        values[beta] = float(np.prod([1.0 / (b + 1) for b in beta])) if beta else 1.0
    values[tuple([0] * p)] = 1.0
    return MarginalMoments(p, max_degree, values)


def shifted_moments(z: MomentSequence, gamma: MarginalMoments, k: int, shift: float,
                    degree: int, box=None) -> MomentTarget:
    """u_beta = L_z(x_k y^beta) - shift * gamma_beta, transported to [0,1]^p."""
    n, p = z.n, z.p
    if not 1 <= k <= n:
        raise MaxentError(f"coordinate index {k} out of range 1..{n}")
    if degree > 2 * z.order - 1:
        raise MaxentError(
            f"degree {degree} needs moments of degree {degree + 1}, sequence stops at {2 * z.order}"
        )
    if box is None:
        box = tuple((0.0, 1.0) for _ in range(p))
    box = tuple((float(a), float(b)) for a, b in box)
    ek = tuple(1 if j == k - 1 else 0 for j in range(n))
    raw = {
        beta: z[ek + beta] - shift * gamma[beta]
        for beta in enumerate_basis(0, p, degree)
    }
    unit = _transport_to_unit_box(raw, p, degree, box)
    return MomentTarget(p, degree, unit, box)


def _transport_to_unit_box(raw, p, degree, box):
    """Moments of t = (y - a) / (b - a) componentwise, by binomial expansion."""
    if all(a == 0.0 and b == 1.0 for a, b in box):
        return dict(raw)
    out = {}
    for alpha in enumerate_basis(0, p, degree):
        total = 0.0
        for beta in _sub_indices(alpha):
            coef = 1.0
            for j in range(p):
                a, b = box[j]
                coef *= (
                    math.comb(alpha[j], beta[j])
                    * (-a) ** (alpha[j] - beta[j])
                    / (b - a) ** alpha[j]
                )
            total += coef * raw[beta]
        out[alpha] = total
    return out


def _sub_indices(alpha):
    if len(alpha) == 1:
        return [(i,) for i in range(alpha[0] + 1)]
    rest = _sub_indices(alpha[1:])
    return [(i,) + r for i in range(alpha[0] + 1) for r in rest]


def gauss_legendre_rule(num_nodes: int, a: float = 0.0, b: float = 1.0):
    """Nodes and weights exact for polynomials of degree 2*num_nodes - 1 on [a, b]."""
    if num_nodes < 1:
        raise MaxentError("quadrature needs at least one node")
    x, w = np.polynomial.legendre.leggauss(num_nodes)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _node_design(p: int, degree: int, num_nodes: int):
    """Tensor quadrature grid and the node-by-basis monomial matrix."""
    t, w = gauss_legendre_rule(num_nodes)
    betas = enumerate_basis(0, p, degree)
    if p == 1:
        nodes = t.reshape(-1, 1)
        weights = w
    else:
        T1, T2 = np.meshgrid(t, t, indexing="ij")
        nodes = np.column_stack([T1.ravel(), T2.ravel()])
        weights = np.outer(w, w).ravel()
    Y = np.ones((nodes.shape[0], len(betas)))
    for col, beta in enumerate(betas):
        for j, e in enumerate(beta):
            if e:
                Y[:, col] *= nodes[:, j] ** e
    return nodes, weights, Y


def dual_value_grad_hess(lam: np.ndarray, u: np.ndarray, weights: np.ndarray,
                         Y: np.ndarray):
    """v(lambda), grad v = u - moments(h_lambda), hess v = -moment matrix of
    h_lambda; the exponent is clamped to keep the quadrature finite."""
    expo = np.clip(Y @ lam, -700.0, 700.0)
    dens = np.exp(expo)
    wd = weights * dens
    value = float(u @ lam - wd.sum())
    grad = u - Y.T @ wd
    hess = -(Y * wd[:, None]).T @ Y
    return value, grad, hess


def maxent_fit(target: MomentTarget, num_nodes: int = 64, tol: float = 1e-10,
               max_iter: int = 200, max_halvings: int = 50) -> DensityEstimate:
    """Damped Newton ascent on the dual; converged when the moment mismatch
    (the gradient) is below tol in sup norm."""
    u = target.vector()
    _, weights, Y = _node_design(target.p, target.degree, num_nodes)
    lam = np.zeros(len(u))
    lam[0] = math.log(u[0])
    value, grad, hess = dual_value_grad_hess(lam, u, weights, Y)
    iterations = 0
    converged = bool(np.max(np.abs(grad)) <= tol)
    while not converged and iterations < max_iter:
        iterations += 1
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError as exc:
            raise MaxentError(f"singular Hessian at iteration {iterations}: {exc}")
        slope = float(grad @ step)
        if slope <= 0.0:
            step = grad.copy()
            slope = float(grad @ grad)
        t = 1.0
        for _ in range(max_halvings):
            trial = lam + t * step
            v_trial, g_trial, h_trial = dual_value_grad_hess(trial, u, weights, Y)
            if v_trial >= value + 1e-4 * t * slope:
                lam, value, grad, hess = trial, v_trial, g_trial, h_trial
                break
            t *= 0.5
        else:
            break
        converged = bool(np.max(np.abs(grad)) <= tol)
    residuals = -grad
    return DensityEstimate(
        p=target.p,
        degree=target.degree,
        lam=lam,
        box=target.box,
        iterations=iterations,
        converged=converged,
        residuals=residuals,
        max_residual=float(np.max(np.abs(residuals))),
        dual_value=value,
    )


def density_eval(estimate: DensityEstimate, y) -> float:
    """Density value at a point of the original box (volume-corrected so the
    fitted mass is preserved under the change of variables)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (estimate.p,):
        raise MaxentError(f"expected a point with {estimate.p} coordinates")
    scale = 1.0
    t = np.empty_like(y)
    for j, (a, b) in enumerate(estimate.box):
        t[j] = (y[j] - a) / (b - a)
        scale *= b - a
    betas = enumerate_basis(0, estimate.p, estimate.degree)
    expo = sum(
        l * float(np.prod([t[j] ** e for j, e in enumerate(beta)]))
        for l, beta in zip(estimate.lam, betas)
    )
    return math.exp(min(expo, 700.0)) / scale
