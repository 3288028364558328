import math

import numpy as np
import pytest

from paramoment.polynomials import (
    PolyError,
    Polynomial,
    basis_size,
    constant,
    enumerate_basis,
    poly_eval,
    poly_mul,
    poly_parse,
    poly_to_string,
    unit_index,
    variable,
)
from properties import product_eval_defect, random_polynomial


class TestBasis:
    def test_sizes_match_binomial(self):
        for nv in range(1, 5):
            for d in range(0, 7):
                assert len(enumerate_basis(nv, 0, d)) == basis_size(nv, d)
                assert basis_size(nv, d) == math.comb(nv + d, d)

    def test_degree_one_two_vars(self):
        assert enumerate_basis(1, 1, 1) == [(0, 0), (1, 0), (0, 1)]

    def test_degree_two_two_vars(self):
        assert enumerate_basis(1, 1, 2) == [
            (0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]

    def test_univariate_powers(self):
        assert enumerate_basis(0, 1, 3) == [(0,), (1,), (2,), (3,)]

    def test_graded_lex_is_strictly_increasing(self):
        # total degree first, then lexicographic with x1 highest priority
        def key(m):
            return (sum(m), tuple(-e for e in m))

        basis = enumerate_basis(2, 2, 5)
        assert all(key(a) < key(b) for a, b in zip(basis, basis[1:]))

    def test_unit_index(self):
        assert unit_index(2, 1, 1) == (1, 0, 0)
        assert unit_index(2, 1, 2) == (0, 1, 0)

    def test_bad_args(self):
        with pytest.raises(PolyError):
            basis_size(0, 2)
        with pytest.raises(PolyError):
            basis_size(2, -1)


class TestParse:
    def test_disk_slice_constraint(self):
        f = poly_parse("1 - x1^2 + y1^2", 1, 1)
        assert f.terms == {(0, 0): 1.0, (2, 0): -1.0, (0, 2): 1.0}

    def test_zero(self):
        assert poly_parse("0", 1, 1).terms == {}

    def test_cancellation(self):
        assert poly_parse("y1*x1 - x1*y1", 1, 1).terms == {}

    def test_parenthesized_products(self):
        f = poly_parse("(1 - 2*y1)*(x1 + x2)", 2, 1)
        assert f.terms == {(1, 0, 0): 1.0, (0, 1, 0): 1.0,
                           (1, 0, 1): -2.0, (0, 1, 1): -2.0}

    def test_unary_minus_and_powers(self):
        f = poly_parse("-x1^2*y1", 1, 1)
        assert f.terms == {(2, 1): -1.0}

    def test_print_parse_round_trip(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            f = random_polynomial(rng, 2, 1, 4, 5)
            g = poly_parse(poly_to_string(f), 2, 1)
            assert set(g.terms) == set(f.terms)
            # coefficients print at 12 significant digits
            for m, c in f.terms.items():
                assert g.terms[m] == pytest.approx(c, rel=1e-11)

    def test_syntax_error_reports_position(self):
        with pytest.raises(PolyError, match="position"):
            poly_parse("1 + + x1", 1, 1)
        with pytest.raises(PolyError):
            poly_parse("x1 *", 1, 1)

    def test_out_of_range_variable(self):
        with pytest.raises(PolyError):
            poly_parse("x3 + 1", 2, 1)
        with pytest.raises(PolyError):
            poly_parse("y2", 1, 1)

    def test_no_division(self):
        with pytest.raises(PolyError):
            poly_parse("x1/2", 1, 1)


class TestEval:
    def test_monomial(self):
        f = poly_parse("-x1^2*y1", 1, 1)
        assert poly_eval(f, (1.0, 0.5)) == pytest.approx(-0.5)

    def test_direction_objective(self):
        f = poly_parse("y1*x1 + (1 - y1)*x2", 2, 1)
        assert poly_eval(f, (1.0, 1.0, 0.25)) == pytest.approx(1.0)

    def test_origin_gives_constant_coefficient(self):
        f = poly_parse("3.5 + x1 - 2*y1^3", 1, 1)
        assert poly_eval(f, (0.0, 0.0)) == pytest.approx(3.5)

    def test_dimension_mismatch(self):
        with pytest.raises(PolyError):
            poly_eval(poly_parse("x1", 1, 1), (1.0,))


class TestArithmetic:
    def test_difference_of_squares(self):
        t = variable(0, 1, "y", 1)
        one = constant(0, 1, 1.0)
        f = poly_mul(one + t, one - t)
        assert f.terms == {(0,): 1.0, (2,): -1.0}

    def test_multiply_by_zero(self):
        f = poly_parse("x1 + y1^2", 1, 1)
        assert poly_mul(f, Polynomial(1, 1, {})).is_zero()

    def test_binomial_square(self):
        f = poly_parse("x1 + y1", 1, 1).pow(2)
        assert f.terms == {(2, 0): 1.0, (1, 1): 2.0, (0, 2): 1.0}

    def test_degree_additive(self):
        f = poly_parse("x1^2 + 1", 1, 1)
        g = poly_parse("y1^3", 1, 1)
        assert poly_mul(f, g).degree == 5

    def test_zero_degree_convention(self):
        assert Polynomial(1, 1, {}).degree == 0

    def test_dimension_guard(self):
        with pytest.raises(PolyError):
            poly_mul(poly_parse("x1", 1, 0), poly_parse("x1", 1, 1))

    def test_uses_flags(self):
        assert poly_parse("x1", 1, 1).uses_x()
        assert not poly_parse("x1", 1, 1).uses_y()
        assert poly_parse("y1^2", 1, 1).uses_y()


def test_product_eval_property_1000_cases():
    assert product_eval_defect(cases=1000) <= 1e-12
