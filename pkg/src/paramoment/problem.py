"""Parametric polynomial program descriptions.

A problem bundles the objective f(x,y), the joint constraint list defining K,
the parameter-only constraints defining Y, and the marginal measure phi on Y.
Everything downstream (relaxation assembly, oracle, post-processing) consumes
this immutable description.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .polynomials import Polynomial, constant, variable

__all__ = [
    "MarginalSpec",
    "ParametricProblem",
    "box_param_constraints",
    "simplex_param_constraints",
    "min_relaxation_order",
    "add_ball_constraint",
    "validate",
]


@dataclass(frozen=True)
class MarginalSpec:
    """How the marginal measure phi on Y is given.

    kind 'uniform_box' uses per-parameter bounds; 'uniform_simplex' is the
    uniform measure on {y >= 0, sum y <= 1}; 'explicit_moments' carries a
    moment table directly (gamma_0 must be 1).
    """

    kind: str
    bounds: tuple[tuple[float, float], ...] = ()
    table: dict[tuple[int, ...], float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("uniform_box", "uniform_simplex", "explicit_moments"):
            raise ValueError(f"unknown marginal kind {self.kind!r}")
        if self.kind == "uniform_box":
            for a, b in self.bounds:
                if not a < b:
                    raise ValueError(f"degenerate parameter interval [{a}, {b}]")


@dataclass(frozen=True)
class ParametricProblem:
    """min_x f(x,y) s.t. h_j(x,y) >= 0 (or = 0), parametrized by y in Y.

    joint_constraints are h_1..h_m over (x,y); equality_flags marks which are
    equalities. param_constraints are h_{m+1}..h_t in y only and define Y
    together with the marginal's box. boolean_coords lists x-coordinates
    declared boolean (their x_k^2 - x_k = 0 constraint must be present).
    """

    n: int
    p: int
    objective: Polynomial
    joint_constraints: tuple[Polynomial, ...] = ()
    equality_flags: tuple[bool, ...] = ()
    param_constraints: tuple[Polynomial, ...] = ()
    marginal: MarginalSpec = field(default_factory=lambda: MarginalSpec("uniform_box", ((0.0, 1.0),)))
    boolean_coords: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if len(self.equality_flags) != len(self.joint_constraints):
            if self.equality_flags:
                raise ValueError("equality_flags length must match joint_constraints")
            object.__setattr__(self, "equality_flags", tuple(False for _ in self.joint_constraints))

    @property
    def all_constraints(self) -> tuple[Polynomial, ...]:
        """h_1..h_t: joint constraints followed by parameter constraints."""
        return self.joint_constraints + self.param_constraints

    def half_degrees(self) -> list[int]:
        """v_k = ceil(deg h_k / 2) for every constraint, joint then param."""
        return [max(1, math.ceil(h.degree / 2)) if h.degree > 0 else 1 for h in self.all_constraints]

    def constraint_rows(self) -> list[tuple[Polynomial, bool]]:
        """(polynomial, is_equality) rows; param constraints are inequalities."""
        rows = list(zip(self.joint_constraints, self.equality_flags))
        rows.extend((h, False) for h in self.param_constraints)
        return rows


def box_param_constraints(n: int, p: int, bounds) -> tuple[Polynomial, ...]:
    """(y_j - a_j)(b_j - y_j) >= 0 for each parameter, keeping v_k = 1."""
    out = []
    for j, (a, b) in enumerate(bounds, start=1):
        yj = variable(n, p, "y", j)
        out.append((yj - constant(n, p, a)) * (constant(n, p, b) - yj))
    return tuple(out)


def simplex_param_constraints(n: int, p: int) -> tuple[Polynomial, ...]:
    """y_j >= 0 for each j plus 1 - sum_j y_j >= 0."""
    out = [variable(n, p, "y", j) for j in range(1, p + 1)]
    s = constant(n, p, 1.0)
    for j in range(1, p + 1):
        s = s - variable(n, p, "y", j)
    out.append(s)
    return tuple(out)


def min_relaxation_order(prob: ParametricProblem) -> int:
    """i_0 = max(ceil(deg f / 2), max_k v_k); 0 when unconstrained with constant f."""
    i0 = math.ceil(prob.objective.degree / 2)
    hs = prob.all_constraints
    if hs:
        i0 = max(i0, max(prob.half_degrees()))
    return i0


def add_ball_constraint(prob: ParametricProblem, radius: float) -> ParametricProblem:
    """Append the redundant constraint N^2 - |x|^2 - |y|^2 >= 0 (N = radius).

    Harmless when the feasible set already lies inside the ball; it makes the
    quadratic-module assumption behind hierarchy convergence hold by fiat.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    ball = constant(prob.n, prob.p, radius * radius)
    for k in range(1, prob.n + 1):
        ball = ball - variable(prob.n, prob.p, "x", k).pow(2)
    for j in range(1, prob.p + 1):
        ball = ball - variable(prob.n, prob.p, "y", j).pow(2)
    return replace(
        prob,
        joint_constraints=prob.joint_constraints + (ball,),
        equality_flags=prob.equality_flags + (False,),
    )


def validate(prob: ParametricProblem) -> list[str]:
    """Human-readable diagnostics; empty list when the description is well formed."""
    out: list[str] = []
    if prob.objective.is_zero():
        out.append("objective is the zero polynomial")
    for idx, h in enumerate(prob.param_constraints, start=1):
        if h.uses_x():
            out.append(f"parameter constraint {idx} mentions a decision variable x")
    for idx, h in enumerate(prob.joint_constraints, start=1):
        if (h.n, h.p) != (prob.n, prob.p):
            out.append(f"joint constraint {idx} has mismatched dimensions")
    if prob.marginal.kind == "explicit_moments":
        table = prob.marginal.table or {}
        zero = tuple([0] * prob.p)
        if abs(table.get(zero, 0.0) - 1.0) > 1e-12:
            out.append("explicit marginal moments must have gamma_0 = 1 (probability measure)")
    if prob.marginal.kind == "uniform_box" and len(prob.marginal.bounds) != prob.p:
        out.append(f"marginal box has {len(prob.marginal.bounds)} intervals for p = {prob.p}")
    for k in prob.boolean_coords:
        if not 1 <= k <= prob.n:
            out.append(f"boolean coordinate x{k} outside 1..{prob.n}")
            continue
        if not _has_boolean_equality(prob, k):
            out.append(f"boolean coordinate x{k} lacks the equality x{k}^2 - x{k} = 0")
    return out


def _has_boolean_equality(prob: ParametricProblem, k: int) -> bool:
    want = variable(prob.n, prob.p, "x", k).pow(2) - variable(prob.n, prob.p, "x", k)
    for h, is_eq in zip(prob.joint_constraints, prob.equality_flags):
        if not is_eq:
            continue
        for sign in (1.0, -1.0):
            diff = h.scale(sign) - want
            if all(abs(c) <= 1e-12 for c in diff.terms.values()):
                return True
    return False
