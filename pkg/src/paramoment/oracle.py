"""Sampling-based ground truth for desk-scale problems.

Solves the slice problem at fixed parameter values by multistart projected
coordinate descent with shrinking steps, polishes equality constraints by
Gauss-Newton, and integrates the resulting value function and minimizer
coordinates against the marginal by quadrature. Deliberately independent of
the relaxation pipeline (no conic solves) so the two routes check each other.

All numerics are vectorized across (node, start) rows; a solve is
deterministic given (seed, node index) regardless of how many nodes share
the batch, because every array operation is row-independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .maxent import gauss_legendre_rule
from .problem import ParametricProblem
from .tables import write_csv

__all__ = [
    "OracleError",
    "OracleConfig",
    "PointwiseResult",
    "OracleResult",
    "solve_pointwise",
    "evaluate_grid",
    "integrate_value_function",
    "reference_coordinate_moments",
    "write_oracle_csv",
]

EQ_PENALTY = 1e4
MIN_STEP = 1e-13


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    grid: int = 101
    multistarts: int = 512
    sweeps: int = 200
    seed: int = 0
    box: tuple[tuple[float, float], ...] | None = None
    feasibility_tol: float = 1e-9
    value_tie: float = 1e-6
    x_tie: float = 1e-3

    def decision_box(self, n: int) -> tuple[tuple[float, float], ...]:
        if self.box is None:
            return tuple((-2.0, 2.0) for _ in range(n))
        if len(self.box) != n:
            raise OracleError("decision box arity does not match variable count")
        return tuple((float(a), float(b)) for a, b in self.box)


@dataclass(frozen=True)
class PointwiseResult:
    y: tuple[float, ...]
    value: float
    x: np.ndarray
    feasible: bool
    tie: bool


@dataclass
class OracleResult:
    grid: np.ndarray
    values: np.ndarray
    minimizers: np.ndarray
    tie_flags: np.ndarray
    feasible: np.ndarray


def _freeze_grid(poly, Y):
    """Collapse the parameter variables on a batch of nodes.

    Returns shared x-exponent rows and one coefficient row per node; terms
    whose coefficient vanishes at a particular node simply contribute zero
    there, keeping the exponent layout identical across nodes so batched
    evaluation stays a single array expression.
    """
    n = poly.n
    xexps = sorted({mono[:n] for mono in poly.terms}) or [tuple([0] * n)]
    col = {e: t for t, e in enumerate(xexps)}
    M = Y.shape[0]
    coefs = np.zeros((M, len(xexps)))
    for mono, coef in poly.terms.items():
        w = np.full(M, coef)
        for j, e in enumerate(mono[n:]):
            if e:
                w = w * Y[:, j] ** e
        coefs[:, col[mono[:n]]] += w
    return xexps, coefs


def _power_tables(P, max_exp):
    """tabs[j][e] = P[:, j] ** e for e up to the largest exponent any frozen
    polynomial uses; integer exponents make repeated multiplication much
    cheaper than elementwise pow."""
    tabs = []
    for j, top in enumerate(max_exp):
        col = [None]
        if top >= 1:
            col.append(P[:, j])
            for _ in range(top - 1):
                col.append(col[-1] * P[:, j])
        tabs.append(col)
    return tabs


def _eval_tab(exps, C, tabs, rows):
    acc = None
    for t, row in enumerate(exps):
        m = None
        for j, e in enumerate(row):
            if e:
                m = tabs[j][e] if m is None else m * tabs[j][e]
        contrib = C[:, t] if m is None else C[:, t] * m
        acc = contrib if acc is None else acc + contrib
    return acc if acc is not None else np.zeros(rows)


def _grad_tab(exps, C, tabs, rows, n):
    out = np.zeros((rows, n))
    for t, row in enumerate(exps):
        for j, e in enumerate(row):
            if not e:
                continue
            m = None
            for l, el in enumerate(row):
                ee = el - (1 if l == j else 0)
                if ee:
                    m = tabs[l][ee] if m is None else m * tabs[l][ee]
            out[:, j] += C[:, t] * e if m is None else C[:, t] * e * m
    return out


def _project_onto_ineqs(P, polys, max_exp, lo, hi, iterations: int = 3):
    """Gauss-Newton pullback onto the violated inequality surfaces.

    Only rows that actually violate an inequality enter the iteration;
    everything else keeps its point and constraint values. Returns the
    updated points together with the constraint values so the caller does
    not re-evaluate them.
    """
    m = len(polys)
    rows = P.shape[0]
    tabs = _power_tables(P, max_exp)
    H = np.stack([_eval_tab(e, c, tabs, rows) for e, c in polys], axis=1)
    if H.min() >= 0.0:
        return P, H
    eye = 1e-14 * np.eye(m)
    for _ in range(iterations):
        bad = np.where(H.min(axis=1) < -1e-12)[0]
        if bad.size == 0:
            break
        Pb = P[bad]
        tb = _power_tables(Pb, max_exp)
        Hb = H[bad]
        Jb = np.stack([_grad_tab(e, c[bad], tb, bad.size, P.shape[1]) for e, c in polys], axis=1)
        Jb = Jb * (Hb < 0.0)[:, :, None]
        JJT = Jb @ Jb.transpose(0, 2, 1) + eye[None]
        try:
            w = np.linalg.solve(JJT, np.minimum(Hb, 0.0)[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            break
        Pb = np.clip(Pb - np.einsum("smn,sm->sn", Jb, w), lo, hi)
        P[bad] = Pb
        tb = _power_tables(Pb, max_exp)
        H[bad] = np.stack([_eval_tab(e, c[bad], tb, bad.size) for e, c in polys], axis=1)
    return P, H


def _refine_on_equalities(X, f_poly, eq_polys, ineq_polys, max_exp, lo, hi, config):
    """Coordinate slides along the equality manifold.

    The penalty phase parks each start near the manifold but its tangential
    position there is only as good as the penalty landscape allows (poor
    when the objective is nearly flat, e.g. a vanishing objective factor).
    Proposals here are axis moves re-projected onto h = 0 and accepted on
    the true objective, which recovers tangential convergence.
    """
    rows, n = X.shape
    f_exps, fC = f_poly

    def ineq_viol(polys, tabs, m):
        v = np.zeros(m)
        for e, c in polys:
            v = np.maximum(v, np.maximum(0.0, -_eval_tab(e, c, tabs, m)))
        return v

    def eq_res(polys, tabs, m):
        r = np.zeros(m)
        for e, c in polys:
            r = np.maximum(r, np.abs(_eval_tab(e, c, tabs, m)))
        return r

    tabs = _power_tables(X, max_exp)
    cur_f = _eval_tab(f_exps, fC, tabs, rows)
    cur_iv = ineq_viol(ineq_polys, tabs, rows)
    cur_res = eq_res(eq_polys, tabs, rows)
    step = np.full(rows, 0.5 * float(np.max(hi - lo)))
    for _ in range(config.sweeps):
        active = np.where(step >= MIN_STEP)[0]
        if active.size == 0:
            break
        XA = X[active]
        stepA = step[active]
        fA = cur_f[active]
        ivA = cur_iv[active]
        resA = cur_res[active]
        fcA = fC[active]
        eqA = [(e, c[active]) for e, c in eq_polys]
        inA = [(e, c[active]) for e, c in ineq_polys]
        improved = np.zeros(active.size, dtype=bool)
        for j in range(n):
            for sign in (1.0, -1.0):
                P = XA.copy()
                P[:, j] = np.clip(P[:, j] + sign * stepA, lo[j], hi[j])
                P = _gauss_newton_polish(P, eqA, max_exp, iterations=4)
                tp = _power_tables(P, max_exp)
                new_res = eq_res(eqA, tp, active.size)
                new_iv = ineq_viol(inA, tp, active.size)
                new_f = _eval_tab(f_exps, fcA, tp, active.size)
                take = ((new_res <= np.maximum(resA, 1e-11))
                        & (new_iv <= ivA + 1e-15)
                        & (new_f < fA - 1e-15))
                if take.any():
                    XA[take] = P[take]
                    fA[take] = new_f[take]
                    ivA[take] = new_iv[take]
                    resA[take] = new_res[take]
                    improved |= take
        X[active] = XA
        cur_f[active] = fA
        cur_iv[active] = ivA
        cur_res[active] = resA
        step[active[~improved]] *= 0.5
    return X


def _gauss_newton_polish(X, polys, max_exp, iterations: int = 15):
    """Drive equality residuals to ~machine scale; a tiny ridge keeps the
    normal equations solvable where the Jacobian loses rank."""
    m = len(polys)
    n = X.shape[1]
    eye = 1e-14 * np.eye(m)
    for _ in range(iterations):
        tabs = _power_tables(X, max_exp)
        H = np.stack([_eval_tab(e, c, tabs, X.shape[0]) for e, c in polys], axis=1)
        bad = np.where(np.abs(H).max(axis=1) > 1e-12)[0]
        if bad.size == 0:
            break
        Xb = X[bad]
        tb = _power_tables(Xb, max_exp)
        Jb = np.stack([_grad_tab(e, c[bad], tb, bad.size, n) for e, c in polys], axis=1)
        JJT = Jb @ Jb.transpose(0, 2, 1) + eye[None]
        try:
            w = np.linalg.solve(JJT, H[bad][:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            break
        X[bad] = Xb - np.einsum("smn,sm->sn", Jb, w)
    return X


def _solve_nodes(prob: ParametricProblem, Y, config: OracleConfig, node_offset: int):
    """Multistart descent for a batch of parameter nodes at once.

    Constraints that do not mention x freeze to per-node constants: they
    cannot steer the descent, so they only contribute a per-node feasibility
    verdict instead of rows in the inner loops.
    """
    M = Y.shape[0]
    n = prob.n
    S = config.multistarts
    box = config.decision_box(n)
    lo = np.array([a for a, _ in box])
    hi = np.array([b for _, b in box])

    X = np.empty((M * S, n))
    for i in range(M):
        rng = np.random.default_rng((config.seed, node_offset + i))
        X[i * S:(i + 1) * S] = rng.uniform(lo, hi, (S, n))

    param_viol = np.zeros(M)
    ineq_polys = []
    eq_polys = []
    for h, is_eq in prob.constraint_rows():
        exps, C = _freeze_grid(h, Y)
        if not h.uses_x():
            v = C.sum(axis=1)
            param_viol = np.maximum(param_viol, np.abs(v) if is_eq else np.maximum(0.0, -v))
            continue
        (eq_polys if is_eq else ineq_polys).append((exps, np.repeat(C, S, axis=0)))
    f_exps, fC = _freeze_grid(prob.objective, Y)
    f_poly = (f_exps, np.repeat(fC, S, axis=0))

    max_exp = [0] * n
    for exps, _ in [f_poly] + ineq_polys + eq_polys:
        for row in exps:
            for j, e in enumerate(row):
                max_exp[j] = max(max_exp[j], e)

    def score_rows(tabs, fc, ecs, rows):
        s = _eval_tab(f_exps, fc, tabs, rows)
        for (e, _), c in zip(eq_polys, ecs):
            s = s + EQ_PENALTY * _eval_tab(e, c, tabs, rows) ** 2
        return s

    tabs = _power_tables(X, max_exp)
    cur_score = score_rows(tabs, f_poly[1], [c for _, c in eq_polys], M * S)
    cur_viol = np.zeros(M * S)
    for e, c in ineq_polys:
        cur_viol = np.maximum(cur_viol, np.maximum(0.0, -_eval_tab(e, c, tabs, M * S)))
    step = np.full(M * S, 0.5 * float(np.max(hi - lo)))

    for _ in range(config.sweeps):
        # all row operations are independent, so converged starts can drop
        # out of the batch without changing the survivors' trajectories
        active = np.where(step >= MIN_STEP)[0]
        if active.size == 0:
            break
        XA = X[active]
        stepA = step[active]
        scoreA = cur_score[active]
        violA = cur_viol[active]
        fcA = f_poly[1][active]
        iA = [(e, c[active]) for e, c in ineq_polys]
        ecsA = [c[active] for _, c in eq_polys]
        improved = np.zeros(active.size, dtype=bool)
        for j in range(n):
            for sign in (1.0, -1.0):
                P = XA.copy()
                P[:, j] = np.clip(P[:, j] + sign * stepA, lo[j], hi[j])
                if ineq_polys:
                    # pulling boundary-crossing proposals back onto the
                    # violated surface turns blocked axis moves into
                    # tangential slides, without which descent stalls on
                    # curved boundaries
                    P, Hc = _project_onto_ineqs(P, iA, max_exp, lo, hi)
                    new_viol = np.maximum(0.0, -Hc.min(axis=1))
                else:
                    new_viol = np.zeros(active.size)
                better_feas = new_viol < violA - 1e-15
                # rows whose violation got worse cannot be accepted, so the
                # objective is only evaluated where the comparison matters
                cand = new_viol <= violA + 1e-15
                new_score = np.full(active.size, np.inf)
                if cand.any():
                    tc = _power_tables(P[cand], max_exp)
                    new_score[cand] = score_rows(
                        tc, fcA[cand], [c[cand] for c in ecsA], int(cand.sum()))
                take = better_feas | (cand & (new_score < scoreA - 1e-15))
                if take.any():
                    XA[take] = P[take]
                    scoreA[take] = new_score[take]
                    violA[take] = new_viol[take]
                    improved |= take
        X[active] = XA
        cur_score[active] = scoreA
        cur_viol[active] = violA
        step[active[~improved]] *= 0.5

    if eq_polys:
        X = _gauss_newton_polish(X, eq_polys, max_exp)
        X = _refine_on_equalities(X, f_poly, eq_polys, ineq_polys, max_exp, lo, hi, config)
    tabs = _power_tables(X, max_exp)
    f_vals = _eval_tab(f_poly[0], f_poly[1], tabs, M * S)
    total_viol = np.zeros(M * S)
    for e, c in ineq_polys:
        total_viol = np.maximum(total_viol, np.maximum(0.0, -_eval_tab(e, c, tabs, M * S)))
    for e, c in eq_polys:
        total_viol = np.maximum(total_viol, np.abs(_eval_tab(e, c, tabs, M * S)))

    values = np.full(M, np.nan)
    minimizers = np.full((M, n), np.nan)
    ties = np.zeros(M, dtype=bool)
    feas = np.zeros(M, dtype=bool)
    for i in range(M):
        rows = slice(i * S, (i + 1) * S)
        fv = f_vals[rows]
        ok = (total_viol[rows] <= config.feasibility_tol) & (param_viol[i] <= config.feasibility_tol)
        if not ok.any():
            continue
        masked = np.where(ok, fv, np.inf)
        best = int(np.argmin(masked))
        Xi = X[rows]
        near = ok & (fv <= masked[best] + config.value_tie)
        spread = np.abs(Xi[near] - Xi[best]).max(axis=1)
        values[i] = fv[best]
        minimizers[i] = Xi[best]
        ties[i] = bool(np.any(spread > config.x_tie))
        feas[i] = True
    return values, minimizers, ties, feas


def solve_pointwise(prob: ParametricProblem, y, config: OracleConfig,
                    node_index: int = 0) -> PointwiseResult:
    """Best feasible point of the slice problem at y.

    Descent minimizes f plus a quadratic penalty on equality residuals while
    never worsening inequality violation; equality residuals are then driven
    to ~1e-12 by Gauss-Newton and only points feasible within
    config.feasibility_tol compete for the reported value.
    """
    y = tuple(float(v) for v in np.atleast_1d(y))
    if len(y) != prob.p:
        raise OracleError(f"expected {prob.p} parameter values, got {len(y)}")
    values, minimizers, ties, feas = _solve_nodes(
        prob, np.array([y]), config, node_offset=node_index)
    return PointwiseResult(y, float(values[0]), minimizers[0], bool(feas[0]), bool(ties[0]))


def _grid_points(prob: ParametricProblem, config: OracleConfig, grid_size: int):
    bounds = _marginal_box(prob)
    axes = [np.linspace(a, b, grid_size) for a, b in bounds]
    if prob.p == 1:
        return axes[0].reshape(-1, 1)
    if prob.p == 2:
        A, B = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.column_stack([A.ravel(), B.ravel()])
    raise OracleError("oracle grids support one or two parameters")


def _marginal_box(prob: ParametricProblem):
    spec = prob.marginal
    if spec is None or spec.kind == "uniform_box":
        if spec is None or spec.bounds is None:
            return tuple((0.0, 1.0) for _ in range(prob.p))
        return spec.bounds
    if spec.kind == "uniform_simplex" and prob.p == 1:
        return ((0.0, 1.0),)
    raise OracleError(f"no quadrature density available for marginal kind {spec.kind}")


def evaluate_grid(prob: ParametricProblem, config: OracleConfig,
                  grid_size: int | None = None) -> OracleResult:
    pts = _grid_points(prob, config, grid_size or config.grid)
    values, minimizers, ties, feas = _solve_nodes(prob, pts, config, node_offset=0)
    return OracleResult(pts, values, minimizers, ties, feas)


def integrate_value_function(prob: ParametricProblem, grid_size: int,
                             config: OracleConfig) -> float:
    """rho_ref = int J(y) dphi by Gauss-Legendre against the marginal density."""
    bounds = _marginal_box(prob)
    rules = [gauss_legendre_rule(grid_size, a, b) for a, b in bounds]
    density = 1.0
    for a, b in bounds:
        density /= b - a
    if prob.p == 1:
        nodes = rules[0][0].reshape(-1, 1)
        weights = rules[0][1]
    else:
        A, B = np.meshgrid(rules[0][0], rules[1][0], indexing="ij")
        nodes = np.column_stack([A.ravel(), B.ravel()])
        weights = np.outer(rules[0][1], rules[1][1]).ravel()
    values, _, _, feas = _solve_nodes(prob, nodes, config, node_offset=100_000)
    if not feas.all():
        bad = nodes[~feas][0]
        raise OracleError(f"slice problem infeasible at y={tuple(bad)}")
    return float(np.sum(weights * values) * density)


def reference_coordinate_moments(prob: ParametricProblem, k: int, degrees,
                                 config: OracleConfig) -> list[float]:
    """int y^beta x*_k(y) dphi for each requested beta, single-parameter path."""
    if prob.p != 1:
        raise OracleError("reference coordinate moments support a single parameter")
    if not 1 <= k <= prob.n:
        raise OracleError(f"coordinate index {k} out of range 1..{prob.n}")
    (a, b), = _marginal_box(prob)
    nodes, weights = gauss_legendre_rule(config.grid, a, b)
    _, minimizers, _, feas = _solve_nodes(
        prob, nodes.reshape(-1, 1), config, node_offset=200_000)
    if not feas.all():
        raise OracleError(f"slice problem infeasible at y={nodes[~feas][0]}")
    xs = minimizers[:, k - 1]
    density = 1.0 / (b - a)
    return [float(np.sum(weights * nodes ** beta * xs) * density) for beta in degrees]


def write_oracle_csv(path, prob: ParametricProblem, result: OracleResult) -> None:
    header = [f"y{j + 1}" for j in range(prob.p)]
    header += ["J"] + [f"x{k + 1}" for k in range(prob.n)] + ["tie_flag"]
    rows = []
    for i in range(result.grid.shape[0]):
        row = list(result.grid[i]) + [result.values[i]]
        row += list(result.minimizers[i]) + [bool(result.tie_flags[i])]
        rows.append(row)
    write_csv(path, header, rows)
