"""Unit tests for sde_envelope.oracle."""

import math

import numpy as np
import pytest

from sde_envelope._errors import GridError, ParameterError
from sde_envelope.oracle import (
    GridSpec,
    Verdict,
    auto_grid,
    build_oracle,
    expectation,
    ks_statistic,
    normalizer,
    potential_minimum,
    sample_stationary,
    tail_verdict,
    widened_expectation,
)
from sde_envelope.simulate import BrownianDriver


class TestGridSpec:
    def test_points(self):
        np.testing.assert_allclose(GridSpec(-1.0, 1.0, 5).points(), [-1.0, -0.5, 0.0, 0.5, 1.0])

    @pytest.mark.parametrize(("x_min", "x_max", "n_points"), [(1.0, 0.0, 5), (0.0, 1.0, 4), (0.0, 1.0, 1)])
    def test_invalid(self, x_min, x_max, n_points):
        with pytest.raises(GridError):
            GridSpec(x_min, x_max, n_points)


class TestAutoGrid:
    def test_quartic_radius(self):
        grid = auto_grid([0.0, 0.0, 0.0, 0.0, 0.25], 1.0)
        assert grid.x_max == pytest.approx(1.25**6)
        assert grid.x_min == -grid.x_max

    def test_tilt_widens(self):
        plain = auto_grid([0.0, 0.0, 0.0, 0.0, 0.25], 1.0)
        tilted = auto_grid([0.0, 0.0, 0.0, 0.0, 0.25], 1.0, tilt=0.5)
        assert tilted.x_max > plain.x_max

    def test_not_confining(self):
        with pytest.raises(GridError):
            auto_grid([0.0, 1.0], 1.0)

    def test_potential_minimum_double_well(self):
        assert potential_minimum([0.0, 0.0, -1.0, 0.0, 0.25]) == pytest.approx(-1.0)


class TestBuildOracle:
    def test_gaussian_normalizer(self, gaussian_oracle):
        assert gaussian_oracle.normalizer == pytest.approx(math.sqrt(2.0 * math.pi), rel=1e-10)
        assert normalizer(gaussian_oracle, "midpoint") == pytest.approx(math.sqrt(2.0 * math.pi), rel=1e-8)

    def test_quartic_normalizer(self, quartic_oracle):
        assert quartic_oracle.normalizer == pytest.approx(2.0 * math.gamma(0.25) / 4.0**0.75, rel=1e-9)

    def test_density_and_cdf(self, gaussian_oracle):
        assert gaussian_oracle.density(np.array([0.0]))[0] == pytest.approx(1.0 / math.sqrt(2.0 * math.pi))
        assert gaussian_oracle.cdf(np.array([0.0]))[0] == pytest.approx(0.5, abs=1e-6)
        assert gaussian_oracle.quantile(np.array([0.975]))[0] == pytest.approx(1.959964, abs=1e-3)

    def test_log_density(self, gaussian_oracle):
        x = np.linspace(-5.0, 5.0, 11)
        np.testing.assert_allclose(np.exp(gaussian_oracle.log_density(x)), gaussian_oracle.density(x), rtol=1e-12)
        assert np.isfinite(gaussian_oracle.log_density(np.array([1e3]))).all()

    def test_variance(self, gaussian_oracle):
        assert gaussian_oracle.variance() == pytest.approx(1.0, rel=1e-9)

    def test_narrow_grid_rejected(self):
        with pytest.raises(GridError, match="widen the grid"):
            build_oracle([0.0, 0.0, 0.5], 1.0, GridSpec(-2.0, 2.0, 101))

    def test_nonpositive_eps(self):
        with pytest.raises(ParameterError):
            build_oracle([0.0, 0.0, 0.5], 0.0)

    def test_unknown_rule(self, gaussian_oracle):
        with pytest.raises(ParameterError):
            normalizer(gaussian_oracle, "trapezoid")


class TestExpectation:
    def test_quartic_moments(self, quartic_oracle):
        assert expectation(quartic_oracle, lambda x: x**4) == pytest.approx(1.0, rel=1e-8)
        assert expectation(quartic_oracle, lambda x: x**8) == pytest.approx(5.0, rel=1e-8)

    def test_rules_agree(self, gaussian_oracle):
        simpson_value = expectation(gaussian_oracle, lambda x: x * x)
        midpoint_value = expectation(gaussian_oracle, lambda x: x * x, rule="midpoint")
        assert simpson_value == pytest.approx(midpoint_value, rel=1e-7)

    def test_heavy_integrand_rejected(self, quartic_oracle):
        with pytest.raises(GridError):
            expectation(quartic_oracle, lambda x: np.exp(x**4 / 8.0))

    def test_widened(self, quartic_oracle):
        value = widened_expectation(quartic_oracle, lambda x: np.exp(x**4 / 8.0))
        assert value == pytest.approx(2.0**0.25, rel=1e-8)


class TestSampling:
    def test_stationary_draws_match_law(self, gaussian_oracle, driver):
        draws = sample_stationary(gaussian_oracle, driver, 5000)
        assert ks_statistic(gaussian_oracle, draws) < 0.03
        assert abs(draws.mean()) < 0.06

    def test_draws_reproducible(self, gaussian_oracle):
        first = sample_stationary(gaussian_oracle, BrownianDriver(3, 1), 10)
        second = sample_stationary(gaussian_oracle, BrownianDriver(3, 1), 10)
        other = sample_stationary(gaussian_oracle, BrownianDriver(3, 2), 10)
        np.testing.assert_array_equal(first, second)
        assert not np.array_equal(first, other)

    @pytest.mark.parametrize("name", ["gaussian_oracle", "quartic_oracle"])
    def test_quantile_monotone(self, request, name):
        oracle = request.getfixturevalue(name)
        u = np.linspace(1e-6, 1.0 - 1e-6, 10_001)
        q = oracle.quantile(u)
        assert np.all(np.diff(q) >= 0.0)
        np.testing.assert_allclose(oracle.cdf(q[::1000]), u[::1000], atol=1e-4)


class TestTailVerdict:
    def test_finite(self, gaussian_oracle):
        assert tail_verdict(gaussian_oracle, lambda x: x**4, 12.0, 18.0) is Verdict.FINITE

    def test_divergent(self, gaussian_oracle):
        assert tail_verdict(gaussian_oracle, lambda x: np.exp(x * x / 2.0), 12.0, 18.0) is Verdict.DIVERGENT

    def test_inconclusive(self, gaussian_oracle):
        verdict = tail_verdict(gaussian_oracle, lambda x: np.exp(0.49 * x * x), 12.0, 18.0)
        assert verdict is Verdict.INCONCLUSIVE

    def test_overflow_is_divergent(self, gaussian_oracle):
        assert tail_verdict(gaussian_oracle, lambda x: np.exp(x**4), 12.0, 18.0) is Verdict.DIVERGENT

    def test_log_scale_avoids_overflow(self, gaussian_oracle):
        verdict = tail_verdict(gaussian_oracle, lambda x: 0.45 * x * x, 30.0, 45.0, log_scale=True)
        assert verdict is Verdict.FINITE

    def test_unordered_radii(self, gaussian_oracle):
        with pytest.raises(ParameterError):
            tail_verdict(gaussian_oracle, lambda x: x, 18.0, 12.0)
