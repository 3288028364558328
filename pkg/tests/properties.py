"""Randomized property drivers shared between the unit tests and the
acceptance run. Each returns the worst observed defect so callers can
assert against their own tolerance and report the margin."""

import numpy as np

from paramoment.maxent import dual_value_grad_hess, gauss_legendre_rule, _node_design
from paramoment.moments import build_moment_matrix, instantiate, MomentSequence
from paramoment.polynomials import Polynomial, enumerate_basis, poly_eval, poly_mul


def random_polynomial(rng, n, p, degree, n_terms):
    basis = enumerate_basis(n, p, degree)
    picks = rng.choice(len(basis), size=min(n_terms, len(basis)), replace=False)
    return Polynomial(n, p, {basis[i]: float(rng.uniform(-2, 2)) for i in picks})


def product_eval_defect(cases=1000, seed=12345):
    """max relative |eval(f*g) - eval(f)*eval(g)| over random sparse pairs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 3))
        p = int(rng.integers(1, 3))
        f = random_polynomial(rng, n, p, int(rng.integers(0, 4)), 4)
        g = random_polynomial(rng, n, p, int(rng.integers(0, 4)), 4)
        pt = rng.uniform(-1, 1, size=n + p)
        lhs = poly_eval(poly_mul(f, g), pt)
        rhs = poly_eval(f, pt) * poly_eval(g, pt)
        scale = max(1.0, abs(lhs), abs(rhs))
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def atomic_measure_sequence(rng, n, p, order, atoms):
    """Moment sequence of a random convex combination of Dirac measures."""
    pts = rng.uniform(-1, 1, size=(atoms, n + p))
    w = rng.uniform(0.1, 1.0, size=atoms)
    w /= w.sum()
    basis = enumerate_basis(n, p, 2 * order)
    vals = np.array([
        float(np.sum(w * np.prod(pts ** np.array(idx), axis=1))) for idx in basis
    ])
    return MomentSequence(n, p, order, vals)


def moment_matrix_psd_defect(cases=100, seed=777):
    """most negative moment-matrix eigenvalue over random atomic measures."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 3))
        p = int(rng.integers(0, 2))
        order = int(rng.integers(1, 3))
        z = atomic_measure_sequence(rng, n, p, order, atoms=int(rng.integers(1, 5)))
        M = instantiate(build_moment_matrix(n, p, order, order), z)
        worst = min(worst, float(np.linalg.eigvalsh(M).min()))
    return worst


def quadrature_exactness_defect(max_nodes=8):
    """max |rule(y^d) - 1/(d+1)| over q nodes, d <= 2q - 1."""
    worst = 0.0
    for q in range(1, max_nodes + 1):
        nodes, weights = gauss_legendre_rule(q, 0.0, 1.0)
        for d in range(2 * q):
            got = float(np.sum(weights * nodes ** d))
            worst = max(worst, abs(got - 1.0 / (d + 1)))
    return worst


def newton_trace(u, degree, num_nodes=64, max_iter=60, tol=1e-10):
    """Replay the damped Newton ascent, recording the dual value and the
    largest Hessian eigenvalue at every iterate."""
    u = np.asarray(u, dtype=float)
    _, weights, Y = _node_design(1, degree, num_nodes)
    lam = np.zeros(len(u))
    lam[0] = np.log(u[0])
    values, eigmax = [], []
    for _ in range(max_iter):
        value, grad, hess = dual_value_grad_hess(lam, u, weights, Y)
        values.append(value)
        eigmax.append(float(np.linalg.eigvalsh(hess).max()))
        if np.max(np.abs(grad)) <= tol:
            break
        step = np.linalg.solve(hess, -grad)
        t = 1.0
        while t > 1e-12:
            v_trial = dual_value_grad_hess(lam + t * step, u, weights, Y)[0]
            if v_trial >= value + 1e-4 * t * float(grad @ step):
                lam = lam + t * step
                break
            t *= 0.5
    return np.array(values), np.array(eigmax)
