"""Unit tests for sde_envelope.slln."""

import math

import numpy as np
import pytest

from sde_envelope._errors import ParameterError
from sde_envelope.simulate import BrownianDriver, CheckpointSchedule
from sde_envelope.slln import (
    SequenceKind,
    StationarySequenceGen,
    _geometric_counts,
    mz_conjecture_continuous,
    mz_scaled_sums,
    pareto_symmetric,
    running_moment,
)


class TestParetoSymmetric:
    def test_tail_law(self):
        draws = pareto_symmetric(seed=5, alpha=0.8, n=100_000)
        magnitude = np.abs(draws)
        assert magnitude.min() >= 1.0
        assert np.median(magnitude) == pytest.approx(2.0**1.25, rel=0.03)
        assert np.mean(magnitude > 10.0) == pytest.approx(10.0**-0.8, abs=0.01)
        assert abs(np.mean(np.sign(draws))) < 0.02

    def test_reproducible(self):
        np.testing.assert_array_equal(pareto_symmetric(3, 0.5, 50), pareto_symmetric(3, 0.5, 50))
        assert not np.array_equal(pareto_symmetric(3, 0.5, 50), pareto_symmetric(3, 0.5, 50, path_id=1))

    def test_prefix_stable(self):
        np.testing.assert_array_equal(pareto_symmetric(3, 0.5, 10_000)[:100], pareto_symmetric(3, 0.5, 100))

    def test_invalid_alpha(self):
        with pytest.raises(ParameterError):
            pareto_symmetric(1, 0.0, 10)


class TestStationarySequenceGen:
    def test_pareto_needs_heavy_tail(self):
        with pytest.raises(ParameterError):
            StationarySequenceGen(SequenceKind.PARETO, 1, alpha=1.5)

    def test_unknown_functional(self):
        with pytest.raises(ParameterError):
            StationarySequenceGen(SequenceKind.OU_FUNCTIONAL, 1, functional="square")

    def test_tail_index(self):
        assert StationarySequenceGen(SequenceKind.PARETO, 1, alpha=0.8).tail_index == 0.8
        heavy = StationarySequenceGen(SequenceKind.OU_FUNCTIONAL, 1, alpha=0.6, functional="exp-square")
        assert heavy.moment_finite(0.5)
        assert not heavy.moment_finite(0.7)
        assert StationarySequenceGen(SequenceKind.OU_FUNCTIONAL, 1, functional="cube").tail_index == math.inf

    def test_constant(self):
        gen = StationarySequenceGen(SequenceKind.CONSTANT, 1, value=2.0, scale=3.0)
        np.testing.assert_array_equal(gen.draw(4), np.full(4, 6.0))

    def test_ou_samples(self):
        draws = StationarySequenceGen(SequenceKind.OU_FUNCTIONAL, 4, ou_rate=1.0).draw(100_000)
        assert draws.var() == pytest.approx(1.0, abs=0.05)
        lag_one = np.corrcoef(draws[:-1], draws[1:])[0, 1]
        assert lag_one == pytest.approx(math.exp(-0.5), abs=0.02)

    def test_ou_functional_applied(self):
        plain = StationarySequenceGen(SequenceKind.OU_FUNCTIONAL, 4).draw(10)
        cubed = StationarySequenceGen(SequenceKind.OU_FUNCTIONAL, 4, functional="cube").draw(10)
        np.testing.assert_allclose(cubed, plain**3)

    def test_short_ou_draws(self):
        gen = StationarySequenceGen(SequenceKind.OU_FUNCTIONAL, 4)
        assert gen.draw(1).shape == (1,)
        assert gen.draw(0).shape == (0,)


class TestScaledSums:
    def test_geometric_counts(self):
        np.testing.assert_array_equal(_geometric_counts(100, 2.0), [1, 2, 4, 8, 16, 32, 64, 100])
        np.testing.assert_array_equal(_geometric_counts(1000, 10.0), [1, 10, 100, 1000])

    def test_constant_sequence(self):
        series = mz_scaled_sums(StationarySequenceGen(SequenceKind.CONSTANT, 1), 0.5, 1000, ratio=10.0)
        np.testing.assert_allclose(series.values, [1.0, 0.1, 0.01, 0.001])
        assert series.moment_finite

    @pytest.mark.parametrize("kind", [SequenceKind.PARETO, SequenceKind.OU_FUNCTIONAL])
    def test_scale_equivariant(self, kind):
        base = StationarySequenceGen(kind, 4)
        scaled = StationarySequenceGen(kind, 4, scale=-2.0)
        plain = mz_scaled_sums(base, 0.5, 4096)
        stretched = mz_scaled_sums(scaled, 0.5, 4096)
        np.testing.assert_array_equal(plain.ns, stretched.ns)
        np.testing.assert_allclose(stretched.values, -2.0 * plain.values, rtol=1e-12)

    def test_pareto_decays_below_tail_index(self):
        gen = StationarySequenceGen(SequenceKind.PARETO, 9, alpha=0.8)
        series = mz_scaled_sums(gen, 0.5, 100_000)
        assert series.moment_finite
        assert abs(series.values[-1]) < 0.5

    def test_warns_beyond_tail_index(self, caplog):
        gen = StationarySequenceGen(SequenceKind.PARETO, 9, alpha=0.8)
        series = mz_scaled_sums(gen, 0.9, 1000)
        assert not series.moment_finite
        assert "expected to diverge" in caplog.text

    @pytest.mark.parametrize("p", [0.0, 1.0, 1.5])
    def test_invalid_p(self, p):
        with pytest.raises(ParameterError):
            mz_scaled_sums(StationarySequenceGen(SequenceKind.CONSTANT, 1), p, 100)

    def test_invalid_sizes(self):
        with pytest.raises(ParameterError):
            mz_scaled_sums(StationarySequenceGen(SequenceKind.CONSTANT, 1), 0.5, 100, ratio=1.0)


class TestRunningMoment:
    def test_constant(self):
        ns, moments = running_moment(np.full(1000, -2.0), 2.0, n_checkpoints=5)
        np.testing.assert_array_equal(ns, [1, 6, 32, 178, 1000])
        np.testing.assert_allclose(moments, 4.0)

    def test_empty(self):
        with pytest.raises(ParameterError):
            running_moment(np.array([]), 1.0)


class TestContinuousConjecture:
    def test_ou_second_moment_decays(self, ou_model, gaussian_oracle):
        series = mz_conjecture_continuous(
            ou_model,
            lambda x: np.sum(x * x, axis=-1),
            p=0.5,
            eps_exp=0.1,
            schedule=CheckpointSchedule(10.0, 10.0, 3, 0.1),
            driver=BrownianDriver(17, 0),
            scheme="exact-ou",
            x0=None,
            oracle=gaussian_oracle,
        )
        assert series.moment_finite is True
        assert series.times.tolist() == pytest.approx([10.0, 100.0, 1000.0])
        assert series.decays

    def test_without_oracle(self, ou_model, driver):
        series = mz_conjecture_continuous(ou_model, lambda x: x[..., 0], 0.5, 0.1,
                                          CheckpointSchedule(1.0, 2.0, 3, 0.1), driver)
        assert series.moment_finite is None
        assert series.values.shape == (3,)

    def test_infinite_moment_flagged(self, quartic, quartic_oracle, driver, caplog):
        model, _ = quartic
        series = mz_conjecture_continuous(model, lambda x: np.exp(x[..., 0] ** 4), 0.5, 0.1,
                                          CheckpointSchedule(1.0, 2.0, 2, 0.01), driver, oracle=quartic_oracle)
        assert series.moment_finite is False
        assert "is infinite under the invariant law" in caplog.text

    @pytest.mark.parametrize(("p", "eps_exp"), [(1.0, 0.1), (0.5, 0.0)])
    def test_invalid(self, ou_model, driver, p, eps_exp):
        with pytest.raises(ParameterError):
            mz_conjecture_continuous(ou_model, lambda x: x[..., 0], p, eps_exp, CheckpointSchedule(1.0, 2.0, 2, 0.1),
                                     driver)
