"""Acceptance tests: bracket law and ergodic averages against the quadrature oracle."""

import numpy as np
import pytest

from sde_envelope.ergodic import monotone_birkhoff_check
from sde_envelope.models import make_ou
from sde_envelope.runner import compare
from sde_envelope.simulate import BrownianDriver, CheckpointSchedule

from ._helpers import ACCEPTANCE, run_experiment

pytestmark = pytest.mark.skipif(not ACCEPTANCE, reason="SDE_ENVELOPE_ACCEPTANCE not set")


def by_name(rows):
    return {row["estimator"]: row for row in rows}


class TestBracketLaw:
    def test_stationary_ou(self, tmp_path):
        run_experiment(
            {
                "model": {"kind": "ou", "lam": 2.0},
                "scheme": "em",
                "schedule": {"t0": 10.0, "ratio": 10.0, "count": 4, "dt": 1e-2},
                "x0": "stationary",
                "estimators": [{"kind": "martingale", "delta": 0.2}],
                "ensemble": {"seeds": 50, "master_seed": 2024, "batch_size": 25},
            },
            tmp_path,
        )
        rows = by_name(compare(tmp_path))
        qv = rows["martingale:QV_over_t"]
        assert qv["oracle"] == pytest.approx(0.172133, abs=1e-6)
        assert abs(qv["mc_value"] / qv["oracle"] - 1.0) <= 0.1
        assert abs(rows["martingale:M_over_t"]["z_score"]) <= 4.0


class TestBirkhoffAgainstOracle:
    def test_ou_second_moment(self, tmp_path):
        run_experiment(
            {
                "model": {"kind": "ou", "lam": 2.0},
                "scheme": "exact-ou",
                "schedule": {"t0": 10.0, "ratio": 10.0, "count": 4, "dt": 0.1},
                "x0": "stationary",
                "estimators": [{"kind": "birkhoff", "phi": "x2"}],
                "ensemble": {"seeds": 50, "master_seed": 2024},
            },
            tmp_path,
        )
        row = by_name(compare(tmp_path))["birkhoff:x2"]
        assert row["oracle"] == pytest.approx(1.0, rel=1e-8)
        assert abs(row["z_score"]) <= 4.0

    def test_quartic_second_moment(self, tmp_path):
        run_experiment(
            {
                "model": {"kind": "langevin", "coefficients": [0, 0, 0, 0, 0.25], "eps": 1.0},
                "scheme": "em",
                "schedule": {"t0": 1.0, "ratio": 10.0, "count": 4, "dt": 1e-3},
                "x0": "stationary",
                "lyapunov": {"kind": "gibbs"},
                "estimators": [{"kind": "birkhoff", "phi": "x2"}],
                "ensemble": {"seeds": 50, "master_seed": 2024, "batch_size": 25},
            },
            tmp_path,
        )
        row = by_name(compare(tmp_path))["birkhoff:x2"]
        assert abs(row["z_score"]) <= 4.0


class TestMonotoneAverages:
    def test_ou_mean_from_spread_starts(self):
        result = monotone_birkhoff_check(make_ou(2.0), lambda x: x[..., 0], [-10.0, 0.0, 10.0],
                                         BrownianDriver(2024, 0), CheckpointSchedule(10.0, 10.0, 4, 1e-2))
        assert result.ordered
        assert np.all(np.abs(result.averages) <= 0.1)
