import pytest

from paramoment.polynomials import poly_parse
from paramoment.problem import (
    MarginalSpec,
    ParametricProblem,
    add_ball_constraint,
    box_param_constraints,
    min_relaxation_order,
    simplex_param_constraints,
    validate,
)


def make_problem(objective, constraints=(), eq=None, n=1, p=1, **kw):
    polys = tuple(poly_parse(c, n, p) for c in constraints)
    return ParametricProblem(
        n=n, p=p,
        objective=poly_parse(objective, n, p),
        joint_constraints=polys,
        equality_flags=tuple(eq) if eq else tuple(False for _ in polys),
        **kw,
    )


class TestMinOrder:
    def test_linear_problem(self):
        prob = make_problem("x1 + y1", ["1 - x1 - y1"])
        assert min_relaxation_order(prob) == 1

    def test_constant_unconstrained(self):
        prob = make_problem("2")
        assert min_relaxation_order(prob) == 0

    def test_half_degrees_ceil(self):
        prob = make_problem("-x1^2*y1", ["1 - x1^2 - y1^2", "x1 - x1^2"])
        assert prob.half_degrees() == [1, 1]
        assert min_relaxation_order(prob) == 2  # ceil(3/2) from the objective

    def test_cubic_constraint(self):
        prob = make_problem("x1", ["y1 - y1*x1^2 - x1^3"])
        assert prob.half_degrees() == [2]
        assert min_relaxation_order(prob) == 2


class TestBoxCompilation:
    def test_unit_box(self):
        (h,) = box_param_constraints(1, 1, ((0.0, 1.0),))
        assert h.terms == poly_parse("y1 - y1^2", 1, 1).terms

    def test_shifted_box(self):
        (h,) = box_param_constraints(0, 1, ((-1.0, 2.0),))
        # (y + 1)(2 - y) = 2 + y - y^2
        assert h.terms == poly_parse("2 + y1 - y1^2", 0, 1).terms

    def test_two_parameters(self):
        hs = box_param_constraints(1, 2, ((0.0, 1.0), (0.0, 1.0)))
        assert len(hs) == 2
        assert all(not h.uses_x() for h in hs)

    def test_simplex(self):
        hs = simplex_param_constraints(0, 2)
        assert len(hs) == 3  # y1 >= 0, y2 >= 0, 1 - y1 - y2 >= 0
        assert hs[-1].terms == poly_parse("1 - y1 - y2", 0, 2).terms


class TestBallConstraint:
    def test_unit_ball(self):
        prob = make_problem("x1")
        out = add_ball_constraint(prob, 1.0)
        assert out.joint_constraints[-1].terms == \
            poly_parse("1 - x1^2 - y1^2", 1, 1).terms

    def test_applied_twice_appends_twice(self):
        prob = add_ball_constraint(add_ball_constraint(make_problem("x1"), 1.0), 1.0)
        assert len(prob.joint_constraints) == 2

    def test_radius_two_constant_term(self):
        out = add_ball_constraint(make_problem("x1"), 2.0)
        zero = (0, 0)
        assert out.joint_constraints[-1].terms[zero] == pytest.approx(4.0)

    def test_ball_is_inequality(self):
        out = add_ball_constraint(make_problem("x1"), 1.0)
        assert out.equality_flags[-1] is False


class TestValidate:
    def test_well_formed(self):
        prob = make_problem(
            "-x1^2*y1", ["1 - x1^2 - y1^2", "x1 - x1^2"],
            param_constraints=box_param_constraints(1, 1, ((0.0, 1.0),)),
        )
        assert validate(prob) == []

    def test_param_constraint_with_x(self):
        prob = make_problem("x1", param_constraints=(poly_parse("x1 + y1", 1, 1),))
        diags = validate(prob)
        assert len(diags) == 1 and "decision variable" in diags[0]

    def test_explicit_moments_not_probability(self):
        prob = make_problem(
            "x1",
            marginal=MarginalSpec("explicit_moments", table={(0,): 0.9, (1,): 0.5}),
        )
        diags = validate(prob)
        assert len(diags) == 1 and "gamma_0" in diags[0]

    def test_zero_objective_flagged(self):
        prob = make_problem("0")
        assert any("objective" in d for d in validate(prob))

    def test_boolean_without_equality_flagged(self):
        prob = make_problem("x1", boolean_coords=(1,))
        assert any("x1^2 - x1" in d for d in validate(prob))

    def test_boolean_with_equality_ok(self):
        prob = make_problem("x1", ["x1^2 - x1"], eq=[True], boolean_coords=(1,))
        assert validate(prob) == []


class TestConstraintRows:
    def test_param_rows_are_inequalities(self):
        prob = make_problem(
            "x1", ["x1 - x1^2"],
            param_constraints=box_param_constraints(1, 1, ((0.0, 1.0),)),
        )
        rows = prob.constraint_rows()
        assert len(rows) == 2
        assert rows[0][1] is False
        assert rows[1][1] is False
        assert not rows[1][0].uses_x()

    def test_equality_flag_passthrough(self):
        prob = make_problem("x1 + x2", ["y1*x1^2 + x2^2 - y1"], eq=[True], n=2)
        assert prob.constraint_rows()[0][1] is True

    def test_flags_default_to_inequalities(self):
        prob = ParametricProblem(
            n=1, p=1,
            objective=poly_parse("x1", 1, 1),
            joint_constraints=(poly_parse("x1 - x1^2", 1, 1),),
        )
        assert prob.equality_flags == (False,)
