import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perdouble.errors import (
    ConcavityViolation,
    DomainExceeded,
    NonConvergence,
    OutOfRange,
)
from perdouble.fixed_point import (
    EvenPolynomial,
    RenormFixedPoint,
    cascade_oracle,
    check_invariants,
    eval_g,
    eval_g_prime,
    eval_g_second,
    functional_residual,
    invert_g,
    solve_fixed_point,
)


class TestEvenPolynomial:
    def test_horner_matches_power_sum(self):
        p = EvenPolynomial(np.array([1.0, -2.0, 0.5]))
        x = np.linspace(-1, 1, 11)
        assert np.allclose(p(x), 1 - 2 * x**2 + 0.5 * x**4, atol=1e-15)
        assert p.degree == 4

    def test_derivatives(self):
        p = EvenPolynomial(np.array([1.0, -2.0, 0.5]))
        x = np.linspace(-1, 1, 11)
        assert np.allclose(p.deriv(x), -4 * x + 2 * x**3, atol=1e-15)
        assert np.allclose(p.second(x), -4 + 6 * x**2, atol=1e-15)

    def test_zero_leading_coefficient_rejected(self):
        with pytest.raises(ValueError):
            EvenPolynomial(np.array([1.0, 0.0]))
        assert EvenPolynomial(np.array([0.0])).degree == 0

    def test_coefficients_are_read_only(self):
        p = EvenPolynomial(np.array([1.0, -1.0]))
        with pytest.raises(ValueError):
            p.coefficients[0] = 2.0


class TestSolver:
    def test_normalization(self, fp):
        assert abs(eval_g(fp, 0.0) - 1.0) <= 1e-12

    def test_alpha_definition(self, fp):
        assert fp.alpha == -1.0 / fp.g1

    def test_alpha_value_against_cascade(self, fp, cascade):
        assert abs(fp.alpha - 2.5029) < 1e-4
        assert abs(cascade.alpha_estimates[-1] - fp.alpha) < 1e-4

    def test_third_iterate(self, fp):
        g3 = eval_g(fp, eval_g(fp, eval_g(fp, 1.0)))
        assert abs(g3 - fp.alpha**-2) <= 1e-8

    def test_residual_within_tol(self, fp):
        assert fp.residual <= 1e-12
        assert fp.check_grid_size >= 256

    def test_residual_on_dense_grid(self, fp):
        # the solver fits on 42 points of (0, 1), i.e. 84 on [-1, 1]; go 4x denser
        x = np.linspace(-1, 1, 4 * 84 + 1)
        assert np.max(np.abs(functional_residual(fp.g, x))) <= 1e-12

    def test_all_invariants(self, fp):
        checks = check_invariants(fp)
        assert all(checks.values()), checks

    def test_concave_on_1024_points(self, fp):
        x = np.linspace(-1, 1, 1024)
        assert np.all(eval_g_second(fp, x) < 0)

    def test_degree_robustness(self, fp, fp30):
        assert abs(fp.alpha - fp30.alpha) <= 1e-10

    def test_alpha_exceeds_one_plus_sqrt2(self, fp):
        assert fp.alpha > 1 + math.sqrt(2)

    @pytest.mark.parametrize("degree", [4, 10])
    def test_low_degree_fails_to_converge(self, degree):
        with pytest.raises(NonConvergence):
            solve_fixed_point(degree, 1e-12)

    @pytest.mark.parametrize("degree,tol", [(3, 1e-12), (0, 1e-12), (40, 1e-15), (40, -1.0)])
    def test_bad_arguments(self, degree, tol):
        with pytest.raises(ValueError):
            solve_fixed_point(degree, tol)

    def test_concavity_violation_is_an_invariant_error(self):
        assert issubclass(ConcavityViolation, Exception)


class TestEvaluation:
    def test_examples(self, fp):
        assert eval_g(fp, 0.0) == pytest.approx(1.0, abs=1e-12)
        assert eval_g(fp, 1.0) == -1.0 / fp.alpha
        assert eval_g(fp, -1.0) == eval_g(fp, 1.0)

    def test_derivative_examples(self, fp):
        assert eval_g_prime(fp, 0.0) == 0.0
        assert abs(abs(eval_g_prime(fp, 1.0)) - fp.alpha) <= 1e-8
        assert eval_g_second(fp, 0.0) < 0

    def test_parity_of_derivatives(self, fp):
        x = np.linspace(0, 1, 17)
        assert np.array_equal(eval_g_prime(fp, -x), -eval_g_prime(fp, x))
        assert np.array_equal(eval_g_second(fp, -x), eval_g_second(fp, x))

    def test_evenness_on_random_points(self, fp):
        x = np.random.default_rng(7).uniform(-1, 1, 100)
        assert np.array_equal(eval_g(fp, x), eval_g(fp, -x))

    @given(st.floats(-1.0, 1.0, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_evenness_property(self, fp, x):
        assert eval_g(fp, x) == eval_g(fp, -x)

    def test_margin(self, fp):
        eval_g(fp, 1.04)
        with pytest.raises(DomainExceeded):
            eval_g(fp, 1.06)
        with pytest.raises(DomainExceeded):
            eval_g_prime(fp, -1.2)


class TestInverse:
    def test_endpoints(self, fp):
        assert invert_g(fp, 1.0) == 0.0
        assert invert_g(fp, fp.g1) == pytest.approx(1.0, abs=1e-13)

    def test_round_trip_half(self, fp):
        assert abs(invert_g(fp, eval_g(fp, 0.5)) - 0.5) <= 1e-13

    def test_round_trip_grid(self, fp):
        x = np.linspace(0, 1, 1001)
        assert np.max(np.abs(invert_g(fp, eval_g(fp, x)) - x)) <= 1e-12

    @given(st.floats(0.05, 1.0))
    @settings(max_examples=200, deadline=None)
    def test_round_trip_property(self, fp, x):
        assert abs(invert_g(fp, eval_g(fp, x)) - x) <= 1e-12

    @pytest.mark.parametrize("y", [1.01, -0.5])
    def test_out_of_range(self, fp, y):
        with pytest.raises(OutOfRange):
            invert_g(fp, y)


class TestSerialization:
    def test_round_trip(self, fp):
        back = RenormFixedPoint.from_json(fp.to_json())
        assert np.array_equal(back.g.coefficients, fp.g.coefficients)
        assert back.alpha == fp.alpha
        assert back.residual == fp.residual

    def test_document_shape(self, fp):
        doc = json.loads(fp.to_json())
        assert doc["schema_version"].startswith("1.")
        assert doc["degree"] == fp.degree
        assert all(isinstance(c, str) for c in doc["coefficients"])

    def test_unknown_major_rejected(self, fp):
        doc = json.loads(fp.to_json())
        doc["schema_version"] = "2.0"
        with pytest.raises(ValueError):
            RenormFixedPoint.from_json(json.dumps(doc))


class TestCascade:
    def test_depth_ten_delta(self, cascade):
        assert abs(cascade.delta_estimates[-1] - 4.669) < 1e-3

    def test_superstable(self, cascade):
        from perdouble.fixed_point import _orbit_value

        for n, t in enumerate(cascade.superstable_params):
            assert abs(_orbit_value(t, 2**n)) < 1e-9

    def test_parameters_increase_and_gaps_shrink(self, cascade):
        t = np.array(cascade.superstable_params)
        gaps = np.diff(t)
        assert np.all(gaps > 0) and np.all(np.diff(gaps) < 0)

    def test_deltas_settle(self, cascade):
        d = np.abs(np.diff(cascade.delta_estimates))
        assert np.all(d[-4:][1:] < d[-4:][:-1])

    def test_shallow_depth(self):
        r = cascade_oracle(3)
        assert all(math.isfinite(d) and d > 0 for d in r.delta_estimates)
        assert r.depth == 3

    @pytest.mark.parametrize("depth", [0, 17])
    def test_depth_limits(self, depth):
        with pytest.raises(ValueError):
            cascade_oracle(depth)
