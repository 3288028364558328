import numpy as np
import pytest

from paramoment.moments import (
    MomentSequence,
    build_localizing_matrix,
    build_moment_matrix,
    instantiate,
    moment_index,
)
from paramoment.polynomials import Polynomial, basis_size, enumerate_basis, poly_parse
from properties import atomic_measure_sequence, moment_matrix_psd_defect


def dirac_sequence(n, p, order, point):
    basis = enumerate_basis(n, p, 2 * order)
    vals = np.array([float(np.prod(np.array(point) ** np.array(idx))) for idx in basis])
    return MomentSequence(n, p, order, vals)


class TestMomentIndex:
    def test_zero_index(self):
        assert moment_index(2, 1, 2, (0, 0, 0)) == 0

    def test_round_trip_degree_four(self):
        basis = enumerate_basis(2, 1, 4)
        for pos, idx in enumerate(basis):
            assert moment_index(2, 1, 2, idx) == pos

    def test_first_coordinate_comes_first(self):
        assert moment_index(1, 1, 1, (1, 0)) == 1
        assert moment_index(1, 1, 1, (0, 1)) == 2


class TestMomentSequence:
    def test_length_guard(self):
        with pytest.raises(ValueError):
            MomentSequence(1, 1, 2, np.zeros(3))

    def test_getitem_and_mass(self):
        z = dirac_sequence(1, 1, 2, (0.5, 0.25))
        assert z.mass == 1.0
        assert z[(1, 1)] == pytest.approx(0.125)

    def test_apply_is_linear_functional(self):
        z = dirac_sequence(1, 1, 2, (0.5, 0.25))
        f = poly_parse("2*x1^2 - y1 + 3", 1, 1)
        assert z.apply(f) == pytest.approx(2 * 0.25 - 0.25 + 3)


class TestMomentMatrix:
    def test_half_zero_is_mass(self):
        M = build_moment_matrix(1, 1, 0, 2)
        assert M.side == 1
        assert M.entry(0, 0) == ((0, 1.0),)

    def test_side_is_basis_size(self):
        assert build_moment_matrix(2, 1, 2, 2).side == basis_size(3, 2)

    def test_entries_are_single_positions(self):
        M = build_moment_matrix(1, 1, 1, 1)
        for r, c, form in M.upper_entries():
            assert len(form) == 1 and form[0][1] == 1.0

    def test_symmetry(self):
        M = build_moment_matrix(1, 1, 2, 2)
        for r in range(M.side):
            for c in range(M.side):
                assert M.entry(r, c) == M.entry(c, r)

    def test_entry_depends_on_exponent_sum_only(self):
        # rows x1 and y1 meet at z_{x1 y1} both ways
        M = build_moment_matrix(1, 1, 1, 1)
        basis = enumerate_basis(1, 1, 1)
        r, c = basis.index((1, 0)), basis.index((0, 1))
        pos = moment_index(1, 1, 1, (1, 1))
        assert M.entry(r, c) == ((pos, 1.0),)

    def test_dirac_at_origin(self):
        z = dirac_sequence(1, 1, 1, (0.0, 0.0))
        A = instantiate(build_moment_matrix(1, 1, 1, 1), z)
        expect = np.zeros((3, 3))
        expect[0, 0] = 1.0
        assert np.array_equal(A, expect)

    def test_dirac_at_one(self):
        z = dirac_sequence(1, 0, 1, (1.0,))
        A = instantiate(build_moment_matrix(1, 0, 1, 1), z)
        assert np.array_equal(A, np.ones((2, 2)))
        assert np.linalg.matrix_rank(A) == 1
        assert np.linalg.eigvalsh(A).min() >= -1e-14


class TestLocalizingMatrix:
    def test_constant_one_equals_moment_matrix(self):
        one = Polynomial(1, 1, {(0, 0): 1.0})
        L = build_localizing_matrix(one, 1, 1, 1, 2)
        M = build_moment_matrix(1, 1, 1, 2)
        assert L.side == M.side
        for r, c, form in M.upper_entries():
            assert L.entry(r, c) == form

    def test_zero_polynomial_gives_zero_matrix(self):
        zero = Polynomial(1, 1, {})
        L = build_localizing_matrix(zero, 1, 1, 1, 2)
        z = dirac_sequence(1, 1, 2, (0.5, 0.5))
        assert np.array_equal(instantiate(L, z), np.zeros((3, 3)))

    def test_dirac_scales_by_constraint_value(self):
        q = poly_parse("1 - x1^2", 1, 1)
        point = (0.5, 0.25)
        z = dirac_sequence(1, 1, 2, point)
        L = instantiate(build_localizing_matrix(q, 1, 1, 1, 2), z)
        M = instantiate(build_moment_matrix(1, 1, 1, 2), z)
        assert np.allclose(L, (1 - 0.25) * M, atol=1e-14)

    def test_supported_measure_is_psd(self):
        # atoms inside {1 - x^2 >= 0} keep the localizing matrix PSD
        rng = np.random.default_rng(5)
        q = poly_parse("1 - x1^2", 1, 1)
        for _ in range(20):
            z = atomic_measure_sequence(rng, 1, 1, 2, atoms=3)
            L = instantiate(build_localizing_matrix(q, 1, 1, 1, 2), z)
            assert np.linalg.eigvalsh(L).min() >= -1e-10


def test_moment_matrix_psd_property_100_cases():
    assert moment_matrix_psd_defect(cases=100) >= -1e-10
