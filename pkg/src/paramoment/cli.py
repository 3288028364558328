"""Command-line front end.

Problem files are line oriented (# starts a comment):

    vars x 2
    params y 1
    param_box 0 1                  # one line per parameter
    objective: y1*x1 + (1 - y1)*x2
    constraint: 1 - x1^2 - x2^2 >= 0
    constraint: y1*x1^2 + x2^2 - y1 == 0
    boolean: x1                    # optional, auto-adds x1^2 - x1 = 0
    marginal: uniform              # uniform | simplex | file <path>
    order: 4                       # optional, defaults to i_0 + 2
    density: x1 degree 4           # optional, repeatable
    ball: 2.0                      # optional redundant ball radius

Verbs: solve (relaxations, duals, envelope, densities, persistency),
oracle (pointwise ground truth on a grid), compare (both plus gap tables).
Artifacts are CSVs with 12 significant digits, written deterministically;
companion PNG figures are rendered next to them for single-parameter runs.

Exit codes: 0 solved, 2 infeasibility certificate, 1 failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .marginal import moments_for
from .maxent import (
    DensityEstimate,
    MaxentError,
    density_eval,
    lower_bound_for_shift,
    maxent_fit,
    shifted_moments,
)
from .oracle import (
    OracleConfig,
    OracleError,
    evaluate_grid,
    write_oracle_csv,
)
from .polynomials import PolyError, Polynomial, enumerate_basis, poly_eval, poly_parse, variable
from .postproc import persistency
from .problem import (
    MarginalSpec,
    ParametricProblem,
    _has_boolean_equality,
    add_ball_constraint,
    box_param_constraints,
    min_relaxation_order,
    simplex_param_constraints,
    validate,
)
from .relaxation import (
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    CvxoptBackend,
    PiecewisePoly,
    RelaxationError,
    check_infeasibility_certificate,
    envelope_update,
    solve_primal,
)
from .tables import write_csv

__all__ = ["CliError", "ProblemFile", "parse_problem_file", "run_solve", "run_oracle",
           "run_compare", "main"]

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INFEASIBLE = 2


class CliError(ValueError):
    pass


@dataclass
class ProblemFile:
    path: str
    name: str
    problem: ParametricProblem
    param_box: tuple[tuple[float, float], ...]
    orders: list[int]
    densities: list[tuple[int, int]]


def _strip(line: str) -> str:
    if "#" in line:
        line = line[: line.index("#")]
    return line.strip()


def parse_problem_file(path) -> ProblemFile:
    try:
        with open(path, encoding="utf-8") as fh:
            raw_lines = fh.readlines()
    except OSError as exc:
        raise CliError(f"cannot read problem file: {exc}")
    n = p = None
    boxes: list[tuple[float, float]] = []
    objective_src = None
    constraint_srcs: list[tuple[int, str]] = []
    booleans: list[int] = []
    marginal_kind = "uniform"
    marginal_path = None
    order = None
    densities: list[tuple[int, int]] = []
    ball = None

    def fail(no, msg):
        raise CliError(f"{path}:{no}: {msg}")

    for no, raw in enumerate(raw_lines, start=1):
        line = _strip(raw)
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head == "vars":
            toks = rest.split()
            if len(toks) != 2 or toks[0] != "x":
                fail(no, "expected 'vars x <count>'")
            n = int(toks[1])
        elif head == "params":
            toks = rest.split()
            if len(toks) != 2 or toks[0] != "y":
                fail(no, "expected 'params y <count>'")
            p = int(toks[1])
        elif head == "param_box":
            toks = rest.split()
            if len(toks) != 2:
                fail(no, "expected 'param_box <lo> <hi>'")
            boxes.append((float(toks[0]), float(toks[1])))
        elif head == "objective:":
            objective_src = (no, rest)
        elif head == "constraint:":
            constraint_srcs.append((no, rest))
        elif head == "boolean:":
            tok = rest.strip()
            if not tok.startswith("x"):
                fail(no, "expected 'boolean: x<k>'")
            booleans.append(int(tok[1:]))
        elif head == "marginal:":
            toks = rest.split()
            if toks and toks[0] in ("uniform", "simplex"):
                marginal_kind = toks[0]
            elif len(toks) == 2 and toks[0] == "file":
                marginal_kind = "file"
                marginal_path = os.path.join(os.path.dirname(os.path.abspath(path)), toks[1])
            else:
                fail(no, "expected 'marginal: uniform | simplex | file <path>'")
        elif head == "order:":
            order = int(rest.strip())
        elif head == "density:":
            toks = rest.split()
            if len(toks) != 3 or not toks[0].startswith("x") or toks[1] != "degree":
                fail(no, "expected 'density: x<k> degree <d>'")
            densities.append((int(toks[0][1:]), int(toks[2])))
        elif head == "ball:":
            ball = float(rest.strip())
        else:
            fail(no, f"unknown directive {head!r}")

    if n is None or p is None:
        raise CliError(f"{path}: 'vars' and 'params' lines are required")
    if objective_src is None:
        raise CliError(f"{path}: 'objective:' line is required")
    if marginal_kind != "simplex":
        if len(boxes) != p:
            raise CliError(f"{path}: need {p} 'param_box' lines, found {len(boxes)}")
        for a, b in boxes:
            if not a < b:
                raise CliError(f"{path}: degenerate parameter interval [{a}, {b}]")
    box = tuple(boxes) if boxes else tuple((0.0, 1.0) for _ in range(p))

    def parse_poly(no, text):
        try:
            return poly_parse(text, n, p)
        except PolyError as exc:
            fail(no, str(exc))

    objective = parse_poly(*objective_src)
    joint: list[Polynomial] = []
    flags: list[bool] = []
    for no, src in constraint_srcs:
        for op in (">=", "==", "<="):
            if op in src:
                lhs, rhs = src.split(op, 1)
                poly = parse_poly(no, lhs) - parse_poly(no, rhs)
                if op == "<=":
                    poly = poly.scale(-1.0)
                joint.append(poly)
                flags.append(op == "==")
                break
        else:
            fail(no, "constraint needs a '>=', '<=' or '==' comparison")

    if marginal_kind == "uniform":
        marginal = MarginalSpec("uniform_box", box)
        params = box_param_constraints(n, p, box)
    elif marginal_kind == "simplex":
        marginal = MarginalSpec("uniform_simplex")
        params = simplex_param_constraints(n, p)
    else:
        table = _read_marginal_table(marginal_path, p)
        marginal = MarginalSpec("explicit_moments", box, table)
        params = box_param_constraints(n, p, box)

    prob = ParametricProblem(n, p, objective, tuple(joint), tuple(flags), params,
                             marginal, tuple(sorted(set(booleans))))
    for k in prob.boolean_coords:
        if not 1 <= k <= n:
            raise CliError(f"{path}: boolean coordinate x{k} out of range")
        if not _has_boolean_equality(prob, k):
            xk = variable(n, p, "x", k)
            prob = replace(
                prob,
                joint_constraints=prob.joint_constraints + (xk * xk - xk,),
                equality_flags=prob.equality_flags + (True,),
            )
    if ball is not None:
        prob = add_ball_constraint(prob, ball)
    issues = validate(prob)
    if issues:
        raise CliError(f"{path}: " + "; ".join(issues))
    for k, deg in densities:
        if not 1 <= k <= n:
            raise CliError(f"{path}: density coordinate x{k} out of range")
    default_order = min_relaxation_order(prob) + 2
    orders = [order] if order is not None else [default_order]
    name = os.path.splitext(os.path.basename(path))[0]
    return ProblemFile(str(path), name, prob, box, orders, densities)


def _read_marginal_table(path, p):
    table = {}
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for rec in csv.reader(fh):
                if not rec or rec[0].strip().startswith("#"):
                    continue
                try:
                    beta = tuple(int(v) for v in rec[:p])
                except ValueError:
                    continue
                table[beta] = float(rec[p])
    except OSError as exc:
        raise CliError(f"cannot read marginal moment file: {exc}")
    if not table:
        raise CliError(f"marginal moment file {path} holds no usable rows")
    return table


def _parse_orders(text: str) -> list[int]:
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise CliError(f"empty order range {text!r}")
            return list(range(lo, hi + 1))
        return [int(text)]
    except ValueError:
        raise CliError(f"orders must be an integer or A..B range, got {text!r}")


def _param_grid(box, grid: int) -> np.ndarray:
    axes = [np.linspace(a, b, grid) for a, b in box]
    if len(box) == 1:
        return axes[0].reshape(-1, 1)
    A, B = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([A.ravel(), B.ravel()])


def _log(msg):
    print(msg)


def run_solve(pf: ProblemFile, out_dir, tolerance: float = 1e-8, grid: int = 101,
              figures: bool = True):
    """Solve the hierarchy and write every solve-side artifact.

    Returns (exit_code, solutions, envelope) so compare can reuse the work.
    """
    prob = pf.problem
    backend = CvxoptBackend(tolerance)
    max_order = max(pf.orders)
    gamma = moments_for(prob.marginal, prob.p, 2 * max_order)
    sols = solve_primal(prob, gamma, pf.orders, backend)
    os.makedirs(out_dir, exist_ok=True)

    rho_rows = []
    for s in sols:
        rho_rows.append([
            s.order,
            "" if s.rho is None else s.rho,
            "" if s.dual_objective is None else s.dual_objective,
            s.status,
        ])
        tag = f"order {s.order}: {s.status}"
        if s.status == STATUS_OPTIMAL:
            tag += f", rho = {s.rho:.9g}"
        elif s.message:
            tag += f" ({s.message})"
        _log(tag)
    write_csv(os.path.join(out_dir, "rho.csv"), ["order", "rho", "dual_objective", "status"],
              rho_rows)

    optimal = [s for s in sols if s.status == STATUS_OPTIMAL]
    mono_header = [f"x{i + 1}" for i in range(prob.n)] + [f"y{j + 1}" for j in range(prob.p)]
    moment_rows = []
    for s in optimal:
        for pos, mono in enumerate(enumerate_basis(prob.n, prob.p, 2 * s.order)):
            moment_rows.append([s.order] + list(mono) + [s.z.values[pos]])
    write_csv(os.path.join(out_dir, "moments.csv"), ["order"] + mono_header + ["value"],
              moment_rows)

    dual_rows = []
    envelope: PiecewisePoly | None = None
    for s in optimal:
        if s.dual_poly is None:
            continue
        envelope = envelope_update(envelope, s.dual_poly)
        for beta in enumerate_basis(0, prob.p, 2 * s.order):
            dual_rows.append([s.order] + list(beta) + [s.dual_poly.terms.get(beta, 0.0)])
    write_csv(os.path.join(out_dir, "dual_poly.csv"),
              ["order"] + [f"beta{j + 1}" for j in range(prob.p)] + ["coef"], dual_rows)

    grid_pts = _param_grid(pf.param_box, grid)
    if envelope is not None:
        env_rows = [list(pt) + [envelope.evaluate(tuple(pt))] for pt in grid_pts]
        write_csv(os.path.join(out_dir, "envelope.csv"),
                  [f"y{j + 1}" for j in range(prob.p)] + ["value"], env_rows)
    else:
        _log("envelope.csv skipped: no optimal order with a dual polynomial")

    densities: dict[int, tuple[float, DensityEstimate]] = {}
    if pf.densities and optimal:
        z = optimal[-1].z
        for k, deg in pf.densities:
            try:
                a_k = lower_bound_for_shift(prob, k, optimal[-1].order, backend)
                target = shifted_moments(z, gamma, k, a_k, deg, box=pf.param_box)
                est = maxent_fit(target)
            except MaxentError as exc:
                _log(f"density_x{k}.csv skipped: {exc}")
                continue
            densities[k] = (a_k, est)
            volume = float(np.prod([b - a for a, b in pf.param_box]))
            rows = []
            for pt in grid_pts:
                d = density_eval(est, pt)
                rows.append(list(pt) + [d, a_k + d * volume])
            write_csv(os.path.join(out_dir, f"density_x{k}.csv"),
                      [f"y{j + 1}" for j in range(prob.p)] + ["density", "x_estimate"], rows)
            _log(f"density x{k}: shift {a_k:.6g}, fit residual {est.max_residual:.2e}, "
                 f"{est.iterations} Newton steps")
    elif pf.densities:
        _log("density CSVs skipped: no optimal relaxation to read moments from")
    else:
        _log("density CSVs skipped: no density requests in the problem file")

    if prob.boolean_coords and optimal:
        pers_rows = []
        for k in prob.boolean_coords:
            val, flagged = persistency(optimal[-1].z, k, prob, tolerance)
            pers_rows.append([k, val, flagged])
            _log(f"persistency x{k}: {val:.6f}" + (" (clamped)" if flagged else ""))
        write_csv(os.path.join(out_dir, "persistency.csv"), ["k", "value", "clamped"],
                  pers_rows)
    else:
        _log("persistency.csv skipped: no boolean coordinates"
             if not prob.boolean_coords else
             "persistency.csv skipped: no optimal relaxation")

    if figures:
        _render_solve_figures(pf, out_dir, grid_pts, envelope, densities)

    infeasible = [s for s in sols if s.status == STATUS_INFEASIBLE]
    if infeasible:
        _log(check_infeasibility_certificate(infeasible[0]))
        return EXIT_INFEASIBLE, sols, envelope
    failures = [s for s in sols if s.status not in (STATUS_OPTIMAL,)]
    if failures:
        _log(f"backend failure at order {failures[0].order}: {failures[0].message}")
        return EXIT_FAILURE, sols, envelope
    return EXIT_OK, sols, envelope


def _render_solve_figures(pf, out_dir, grid_pts, envelope, densities):
    if pf.problem.p != 1:
        _log("figures skipped: plots are rendered for single-parameter problems only")
        return
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        _log("figures skipped: matplotlib unavailable")
        return
    ys = grid_pts[:, 0]
    if envelope is not None:
        fig, ax = plt.subplots(figsize=(6, 4))
        for member in envelope.members:
            ax.plot(ys, [poly_eval(member, (y,)) for y in ys], lw=0.8, alpha=0.5)
        ax.plot(ys, [envelope.evaluate((y,)) for y in ys], "k", lw=1.6, label="envelope")
        ax.set_xlabel("y")
        ax.set_ylabel("lower bound")
        ax.legend()
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, "envelope.png"), dpi=120)
        plt.close(fig)
    for k, (a_k, est) in densities.items():
        volume = float(np.prod([b - a for a, b in pf.param_box]))
        fig, ax = plt.subplots(figsize=(6, 4))
        dens = [density_eval(est, (y,)) for y in ys]
        ax.plot(ys, dens, label="fitted density")
        ax.plot(ys, [a_k + d * volume for d in dens], "--", label=f"x{k} estimate")
        ax.set_xlabel("y")
        ax.legend()
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, f"density_x{k}.png"), dpi=120)
        plt.close(fig)


def run_oracle(pf: ProblemFile, out_dir, config: OracleConfig, figures: bool = True):
    prob = pf.problem
    result = evaluate_grid(prob, config)
    os.makedirs(out_dir, exist_ok=True)
    write_oracle_csv(os.path.join(out_dir, "oracle.csv"), prob, result)
    bad = int(np.sum(~result.feasible))
    ties = int(np.sum(result.tie_flags))
    _log(f"oracle: {result.grid.shape[0]} nodes, {bad} infeasible, {ties} tie-flagged")
    if figures and prob.p == 1:
        try:
            import matplotlib

            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            _log("figures skipped: matplotlib unavailable")
            return EXIT_OK, result
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(result.grid[:, 0], result.values, label="J(y)")
        for k in range(prob.n):
            ax.plot(result.grid[:, 0], result.minimizers[:, k], "--", label=f"x{k + 1}*")
        ax.set_xlabel("y")
        ax.legend()
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, "oracle.png"), dpi=120)
        plt.close(fig)
    elif figures:
        _log("figures skipped: plots are rendered for single-parameter problems only")
    return EXIT_OK, result


def run_compare(pf: ProblemFile, out_dir, tolerance: float, config: OracleConfig,
                figures: bool = True) -> int:
    code, sols, envelope = run_solve(pf, out_dir, tolerance, config.grid, figures)
    _, result = run_oracle(pf, out_dir, config, figures=False)
    if envelope is None:
        _log("compare.csv skipped: no envelope available")
        return code
    rows = []
    gaps = []
    for i in range(result.grid.shape[0]):
        pt = tuple(result.grid[i])
        env = envelope.evaluate(pt)
        j = result.values[i]
        gap = j - env if result.feasible[i] else float("nan")
        if result.feasible[i]:
            gaps.append(gap)
        rows.append(list(pt) + [j, env, gap])
    write_csv(os.path.join(out_dir, "compare.csv"),
              [f"y{j + 1}" for j in range(pf.problem.p)] + ["J", "envelope", "gap"], rows)
    if gaps:
        _log(f"compare: gap in [{min(gaps):.3e}, {max(gaps):.3e}] over {len(gaps)} nodes")
    if figures and pf.problem.p == 1:
        try:
            import matplotlib

            matplotlib.use("Agg")
            import matplotlib.pyplot as plt

            fig, ax = plt.subplots(figsize=(6, 4))
            ax.plot(result.grid[:, 0], result.values, label="J(y)")
            ax.plot(result.grid[:, 0],
                    [envelope.evaluate((y,)) for y in result.grid[:, 0]],
                    "--", label="envelope")
            ax.set_xlabel("y")
            ax.legend()
            fig.tight_layout()
            fig.savefig(os.path.join(out_dir, "compare.png"), dpi=120)
            plt.close(fig)
        except ImportError:
            _log("figures skipped: matplotlib unavailable")
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="paramoment",
        description="Moment relaxations for polynomial optimization with parameters",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("solve", "oracle", "compare"):
        sp = sub.add_parser(verb)
        sp.add_argument("file")
        sp.add_argument("--orders", help="order or range, e.g. 4 or 2..4")
        sp.add_argument("--out", help="artifact directory (default: <name>_out)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tolerance", type=float, default=1e-8)
        sp.add_argument("--grid", type=int, default=101)
        sp.add_argument("--no-figures", action="store_true")
    args = parser.parse_args(argv)
    try:
        pf = parse_problem_file(args.file)
        if args.orders:
            pf.orders = _parse_orders(args.orders)
        low = min_relaxation_order(pf.problem)
        if min(pf.orders) < low:
            raise CliError(f"requested order {min(pf.orders)} below minimum {low}")
        out_dir = args.out or f"{pf.name}_out"
        config = OracleConfig(grid=args.grid, seed=args.seed)
        figures = not args.no_figures
        if args.verb == "solve":
            code, _, _ = run_solve(pf, out_dir, args.tolerance, args.grid, figures)
        elif args.verb == "oracle":
            code, _ = run_oracle(pf, out_dir, config, figures)
        else:
            code = run_compare(pf, out_dir, args.tolerance, config, figures)
        return code
    except (CliError, PolyError, RelaxationError, MaxentError, OracleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
