"""Assembly and solution of the moment relaxations and their SOS duals.

The primal at order i minimizes L_z(f) over sequences z with M_i(z) and all
localizing matrices PSD, subject to the marginal equalities L_z(y^beta) =
gamma_beta for |beta| <= 2i. Its conic dual recovers a polynomial p_i(y)
with p_i <= J pointwise and int p_i dphi = rho*_i; the running pointwise
maximum of the p_i forms the value-function envelope.

Programs are expressed in a small standard form (PSD blocks over a shared
variable vector plus dense equalities) consumed by a pluggable backend; the
reference backend binds cvxopt's conelp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .marginal import MarginalMoments
from .moments import (
    MomentSequence,
    StructuredMatrix,
    build_localizing_matrix,
    build_moment_matrix,
    instantiate,
)
from .polynomials import Polynomial, basis_size, enumerate_basis, _position_map
from .problem import ParametricProblem, min_relaxation_order

__all__ = [
    "RelaxationError",
    "ConicProgram",
    "BackendSolution",
    "RelaxationSolution",
    "SolverBackend",
    "CvxoptBackend",
    "assemble_primal",
    "assemble_dual",
    "solve_primal",
    "solve_dual",
    "recover_dual_from_primal",
    "PiecewisePoly",
    "envelope_update",
    "check_infeasibility_certificate",
    "program_to_text",
]

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"
STATUS_FAILURE = "numerical_failure"


class RelaxationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ConicProgram:
    """min objective . x  s.t. every psd block instantiated at x is PSD and
    each equality row (sparse form, rhs) holds exactly."""

    num_vars: int
    objective: dict[int, float]
    psd_blocks: tuple[StructuredMatrix, ...]
    equalities: tuple[tuple[tuple[tuple[int, float], ...], float], ...]

    def __post_init__(self) -> None:
        for pos in self.objective:
            if not 0 <= pos < self.num_vars:
                raise RelaxationError(f"objective position {pos} out of range")
        for blk in self.psd_blocks:
            for _, _, form in blk.upper_entries():
                for pos, _ in form:
                    if not 0 <= pos < self.num_vars:
                        raise RelaxationError(f"block position {pos} out of range")
        for form, _ in self.equalities:
            for pos, _ in form:
                if not 0 <= pos < self.num_vars:
                    raise RelaxationError(f"equality position {pos} out of range")


@dataclass
class BackendSolution:
    """Raw backend outcome: primal vector, equality multipliers (normalized so
    the dual objective is sum multiplier*rhs), one symmetric PSD multiplier per
    block, and the worst KKT residual actually achieved."""

    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    eq_multipliers: np.ndarray | None = None
    block_multipliers: list[np.ndarray] | None = None
    achieved_tolerance: float = float("nan")
    message: str = ""


@dataclass
class RelaxationSolution:
    order: int
    status: str
    rho: float | None = None
    z: MomentSequence | None = None
    dual_poly: Polynomial | None = None
    dual_objective: float | None = None
    certificates: list[np.ndarray] | None = None
    solver_tolerance: float = float("nan")
    message: str = ""


class SolverBackend:
    """Interface: solve a ConicProgram, report status plus primal/dual data
    with KKT residuals no worse than achieved_tolerance on optimal problems."""

    name = "abstract"
    max_side = 10_000
    max_vars = 1_000_000

    def __init__(self, tolerance: float = 1e-8):
        self.tolerance = float(tolerance)

    def solve(self, program: ConicProgram) -> BackendSolution:  # pragma: no cover
        raise NotImplementedError

    def check_capability(self, program: ConicProgram) -> None:
        if program.num_vars > self.max_vars:
            raise RelaxationError(f"{program.num_vars} variables exceed backend capability")
        worst = max((b.side for b in program.psd_blocks), default=0)
        if worst > self.max_side:
            raise RelaxationError(f"block side {worst} exceeds backend capability")


class CvxoptBackend(SolverBackend):
    """cvxopt conelp on the PSD+equality standard form.

    The LDL KKT factorization is mandatory here: the default chol path
    divides by zero on rank-deficient moment programs. conelp sometimes
    stops with status 'unknown' while holding an excellent iterate (typical
    on empty-interior instances such as equality-constrained problems); such
    iterates are re-certified from their actual KKT residuals and accepted
    as optimal when they pass gates tied to the configured tolerance.
    """

    name = "cvxopt"
    max_side = 120
    max_vars = 20_000

    def solve(self, program: ConicProgram) -> BackendSolution:
        from cvxopt import matrix, solvers, spmatrix

        self.check_capability(program)
        sides = [blk.side for blk in program.psd_blocks]
        total = sum(s * s for s in sides)
        gi: list[int] = []
        gj: list[int] = []
        gv: list[float] = []
        off = 0
        for blk in program.psd_blocks:
            for r, c, form in blk.upper_entries():
                for pos, coef in form:
                    gi.append(off + r * blk.side + c)
                    gj.append(pos)
                    gv.append(-coef)
                    if r != c:
                        gi.append(off + c * blk.side + r)
                        gj.append(pos)
                        gv.append(-coef)
            off += blk.side * blk.side
        G = spmatrix(gv, gi, gj, (total, program.num_vars))
        h = matrix(0.0, (total, 1))
        ai: list[int] = []
        aj: list[int] = []
        av: list[float] = []
        b = matrix(0.0, (len(program.equalities), 1))
        for row, (form, rhs) in enumerate(program.equalities):
            for pos, coef in form:
                ai.append(row)
                aj.append(pos)
                av.append(coef)
            b[row] = rhs
        A = spmatrix(av, ai, aj, (len(program.equalities), program.num_vars))
        c = matrix(0.0, (program.num_vars, 1))
        for pos, coef in program.objective.items():
            c[pos] += coef
        # default iteration cap kept: on empty-interior programs conelp can
        # reach machine-precision iterates, stall, and then divide by zero if
        # pushed further; stopping at 100 leaves an 'unknown' we re-certify
        opts = {
            "abstol": self.tolerance,
            "reltol": self.tolerance,
            "feastol": self.tolerance,
            "show_progress": False,
            "maxiters": 100,
        }
        try:
            raw = solvers.conelp(
                c, G, h, dims={"l": 0, "q": [], "s": sides}, A=A, b=b,
                kktsolver="ldl", options=opts,
            )
        except (ZeroDivisionError, ValueError, ArithmeticError) as exc:
            return BackendSolution(STATUS_FAILURE, message=f"conelp raised {type(exc).__name__}: {exc}")

        status = raw["status"]
        if status == "primal infeasible":
            return BackendSolution(STATUS_INFEASIBLE, message="backend certified primal infeasibility")
        if status == "dual infeasible":
            return BackendSolution(STATUS_UNBOUNDED, message="backend certified dual infeasibility")
        if raw["x"] is None or raw["y"] is None or raw["z"] is None:
            return BackendSolution(STATUS_FAILURE, message=f"conelp status {status} without iterates")

        x = np.array(raw["x"]).ravel()
        lam = -np.array(raw["y"]).ravel()
        zvec = np.array(raw["z"]).ravel()
        blocks = []
        off = 0
        for s in sides:
            M = zvec[off:off + s * s].reshape(s, s)
            blocks.append(0.5 * (M + M.T))
            off += s * s
        pobj = float(np.dot(np.array(c).ravel(), x))
        residual = self._primal_residuals(program, x, pobj, lam, b)
        if status == "optimal":
            achieved = max(self.tolerance, residual)
            return BackendSolution(STATUS_OPTIMAL, x, pobj, lam, blocks, achieved)
        # status 'unknown': accept the iterate iff it certifies near-optimality
        if residual <= 10.0 * self.tolerance:
            return BackendSolution(
                STATUS_OPTIMAL, x, pobj, lam, blocks, max(self.tolerance, residual),
                message="accepted from 'unknown' after residual certification",
            )
        return BackendSolution(
            STATUS_FAILURE, x, pobj, lam, blocks, residual,
            message=f"conelp status {status}, residual {residual:.2e} beyond certification gate",
        )

    def _primal_residuals(self, program: ConicProgram, x: np.ndarray, pobj: float,
                          lam: np.ndarray, b) -> float:
        """Worst of: equality residual, PSD violation, relative duality gap."""
        eq_res = 0.0
        for form, rhs in program.equalities:
            eq_res = max(eq_res, abs(sum(coef * x[pos] for pos, coef in form) - rhs))
        min_eig = 0.0
        for blk in program.psd_blocks:
            M = np.zeros((blk.side, blk.side))
            for r, c, form in blk.upper_entries():
                v = sum(coef * x[pos] for pos, coef in form)
                M[r, c] = v
                M[c, r] = v
            min_eig = min(min_eig, float(np.linalg.eigvalsh(M)[0]))
        dobj = float(sum(l * rhs for l, (_, rhs) in zip(lam, program.equalities)))
        gap = abs(pobj - dobj) / max(1.0, abs(pobj))
        return max(eq_res, -min_eig, gap)


def assemble_primal(prob: ParametricProblem, gamma: MarginalMoments, order: int) -> ConicProgram:
    """Moment program at the given order: one moment block, one localizing
    block per inequality, a +/- pair per equality, and all marginal rows."""
    i0 = min_relaxation_order(prob)
    if order < i0:
        raise RelaxationError(f"order {order} below minimum relaxation order {i0}")
    if gamma.max_degree < 2 * order:
        raise RelaxationError(
            f"marginal moments tabulated to degree {gamma.max_degree}, need {2 * order}"
        )
    n, p = prob.n, prob.p
    num_vars = basis_size(n + p, 2 * order)
    blocks: list[StructuredMatrix] = [build_moment_matrix(n, p, order, order)]
    for h, is_eq in prob.constraint_rows():
        half = order - max(1, -(-h.degree // 2))
        blocks.append(build_localizing_matrix(h, n, p, half, order))
        if is_eq:
            blocks.append(build_localizing_matrix(h.scale(-1.0), n, p, half, order))
    pos = _position_map(n + p, 2 * order)
    equalities = []
    for beta in enumerate_basis(0, p, 2 * order):
        mono = tuple([0] * n) + beta
        equalities.append((((pos[mono], 1.0),), gamma[beta]))
    objective: dict[int, float] = {}
    for mono, coef in prob.objective.terms.items():
        objective[pos[mono]] = objective.get(pos[mono], 0.0) + coef
    return ConicProgram(num_vars, objective, tuple(blocks), tuple(equalities))


def recover_dual_from_primal(eq_multipliers: np.ndarray, p: int, order: int) -> Polynomial:
    """p_i(y) = sum_beta lambda_beta y^beta from the marginal-row multipliers.

    Multiplier ordering matches the equality rows of assemble_primal, which
    follow enumerate_basis(0, p, 2*order).
    """
    betas = enumerate_basis(0, p, 2 * order)
    if len(eq_multipliers) != len(betas):
        raise RelaxationError(
            f"{len(eq_multipliers)} multipliers for {len(betas)} marginal rows"
        )
    return Polynomial(0, p, {beta: float(l) for beta, l in zip(betas, eq_multipliers)})


def solve_primal(prob: ParametricProblem, gamma: MarginalMoments, orders,
                 backend: SolverBackend) -> list[RelaxationSolution]:
    """Solve the hierarchy at the given orders; ascending rho_i expected."""
    out: list[RelaxationSolution] = []
    for order in orders:
        program = assemble_primal(prob, gamma, order)
        res = backend.solve(program)
        sol = RelaxationSolution(order=order, status=res.status,
                                 solver_tolerance=res.achieved_tolerance,
                                 message=res.message)
        if res.status == STATUS_OPTIMAL:
            sol.z = MomentSequence(prob.n, prob.p, order, res.x)
            sol.rho = float(res.objective)
            if res.eq_multipliers is not None:
                sol.dual_poly = recover_dual_from_primal(res.eq_multipliers, prob.p, order)
                sol.dual_objective = float(
                    sum(sol.dual_poly.terms.get(beta, 0.0) * gamma[beta]
                        for beta in enumerate_basis(0, prob.p, 2 * order))
                )
                sol.certificates = res.block_multipliers
        elif res.status == STATUS_FAILURE:
            sol.message = f"order {order}: {res.message}"
        out.append(sol)
    return out


def _triangle_positions(side: int, offset: int) -> dict[tuple[int, int], int]:
    pos = {}
    k = offset
    for r in range(side):
        for c in range(r, side):
            pos[(r, c)] = k
            k += 1
    return pos


def assemble_dual(prob: ParametricProblem, gamma: MarginalMoments, order: int) -> ConicProgram:
    """Explicit SOS program: max int p dphi over deg p <= 2i and Gram matrices
    with f - p = sigma_0 + sum sigma_j h_j, assembled coefficient by
    coefficient. Variables are the p coefficients (graded beta order) followed
    by upper-triangle Gram entries, block by block.
    """
    i0 = min_relaxation_order(prob)
    if order < i0:
        raise RelaxationError(f"order {order} below minimum relaxation order {i0}")
    if gamma.max_degree < 2 * order:
        raise RelaxationError("marginal moment table too short for the requested order")
    n, p = prob.n, prob.p
    betas = enumerate_basis(0, p, 2 * order)
    n_lam = len(betas)
    # sigma_0 plus one sigma per constraint row (equalities get a free-sign
    # pair, matching the +/- localizing blocks of the primal)
    gram_polys: list[Polynomial] = [Polynomial(n, p, {tuple([0] * (n + p)): 1.0})]
    halves: list[int] = [order]
    for h, is_eq in prob.constraint_rows():
        v = max(1, -(-h.degree // 2))
        gram_polys.append(h)
        halves.append(order - v)
        if is_eq:
            gram_polys.append(h.scale(-1.0))
            halves.append(order - v)
    offset = n_lam
    tri_maps = []
    block_bases = []
    blocks = []
    for q, half in zip(gram_polys, halves):
        rows = enumerate_basis(n, p, half)
        side = len(rows)
        tri = _triangle_positions(side, offset)
        offset += side * (side + 1) // 2
        tri_maps.append(tri)
        block_bases.append(rows)
        entry_map: dict[tuple[int, int], tuple[tuple[int, float], ...]] = {}
        for r in range(side):
            for c in range(r, side):
                form = ((tri[(r, c)], 1.0),)
                entry_map[(r, c)] = form
                entry_map[(c, r)] = form
        blocks.append(StructuredMatrix(side, entry_map))
    num_vars = offset

    # coefficient identity per monomial of degree <= 2i:
    #   [f]_mono = [p]_mono + sum_blocks sum_{r<=c} mult * [q * b_r * b_c]_mono * G_rc
    rows_acc: dict[tuple[int, ...], dict[int, float]] = {
        mono: {} for mono in enumerate_basis(n, p, 2 * order)
    }
    for beta_pos, beta in enumerate(betas):
        mono = tuple([0] * n) + beta
        rows_acc[mono][beta_pos] = rows_acc[mono].get(beta_pos, 0.0) + 1.0
    for q, rows, tri in zip(gram_polys, block_bases, tri_maps):
        for r, br in enumerate(rows):
            for c in range(r, len(rows)):
                bc = rows[c]
                mult = 1.0 if r == c else 2.0
                var = tri[(r, c)]
                for mq, cq in q.terms.items():
                    mono = tuple(a + b + u for a, b, u in zip(br, bc, mq))
                    acc = rows_acc[mono]
                    acc[var] = acc.get(var, 0.0) + mult * cq
    equalities = []
    for mono in enumerate_basis(n, p, 2 * order):
        form = tuple(sorted(rows_acc[mono].items()))
        rhs = prob.objective.terms.get(mono, 0.0)
        equalities.append((form, rhs))
    objective = {pos: -gamma[beta] for pos, beta in enumerate(betas)}
    return ConicProgram(num_vars, objective, tuple(blocks), tuple(equalities))


def solve_dual(prob: ParametricProblem, gamma: MarginalMoments, order: int,
               backend: SolverBackend) -> RelaxationSolution:
    """Solve the assembled SOS program; the fallback when primal multipliers
    are unavailable, and the cross-check that both dual routes agree."""
    program = assemble_dual(prob, gamma, order)
    res = backend.solve(program)
    sol = RelaxationSolution(order=order, status=res.status,
                             solver_tolerance=res.achieved_tolerance, message=res.message)
    if res.status != STATUS_OPTIMAL:
        return sol
    betas = enumerate_basis(0, prob.p, 2 * order)
    lam = {beta: float(res.x[pos]) for pos, beta in enumerate(betas)}
    sol.dual_poly = Polynomial(0, prob.p, lam)
    sol.dual_objective = -float(res.objective)
    sol.certificates = [
        _gram_from_vector(res.x, blk) for blk in program.psd_blocks
    ]
    sol.rho = sol.dual_objective
    return sol


def _gram_from_vector(x: np.ndarray, blk: StructuredMatrix) -> np.ndarray:
    M = np.zeros((blk.side, blk.side))
    for r, c, form in blk.upper_entries():
        v = sum(coef * x[pos] for pos, coef in form)
        M[r, c] = v
        M[c, r] = v
    return M


@dataclass(frozen=True)
class PiecewisePoly:
    """Pointwise maximum of a list of polynomials in y."""

    p: int
    members: tuple[Polynomial, ...] = ()

    def evaluate(self, y) -> float:
        if not self.members:
            raise RelaxationError("empty envelope")
        from .polynomials import poly_eval

        return max(poly_eval(q, y) for q in self.members)


def envelope_update(prev: PiecewisePoly | None, poly: Polynomial) -> PiecewisePoly:
    """p~_i = max(p~_{i-1}, p_i) as a member-list representation."""
    if poly.n != 0:
        raise RelaxationError("dual polynomials live in the parameters only")
    if prev is None:
        return PiecewisePoly(poly.p, (poly,))
    if prev.p != poly.p:
        raise RelaxationError("parameter dimension mismatch in envelope update")
    return PiecewisePoly(prev.p, prev.members + (poly,))


def check_infeasibility_certificate(solution: RelaxationSolution) -> str:
    """Human-readable diagnosis: an infeasible relaxation at any order proves
    K_y is empty on a subset of Y of positive phi-measure."""
    if solution.status == STATUS_INFEASIBLE:
        return (
            f"relaxation order {solution.order} infeasible: the slice K_y is empty "
            "on a set of parameters of positive marginal measure"
        )
    return "feasible-so-far"


def program_to_text(program: ConicProgram) -> str:
    """Stable plain-text dump (see README) for debugging against other solvers."""
    lines = [
        "conic-program v1",
        f"vars {program.num_vars}",
        f"blocks {len(program.psd_blocks)}",
        f"equalities {len(program.equalities)}",
    ]
    for pos in sorted(program.objective):
        lines.append(f"obj {pos} {program.objective[pos]:.17g}")
    for bi, blk in enumerate(program.psd_blocks):
        lines.append(f"block {bi} side {blk.side}")
        for r, c, form in sorted(blk.upper_entries()):
            for pos, coef in form:
                lines.append(f"entry {bi} {r} {c} {pos} {coef:.17g}")
    for row, (form, rhs) in enumerate(program.equalities):
        for pos, coef in form:
            lines.append(f"eq {row} {pos} {coef:.17g}")
        lines.append(f"rhs {row} {rhs:.17g}")
    return "\n".join(lines) + "\n"
