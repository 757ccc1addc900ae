"""Acceptance tests: Marcinkiewicz-Zygmund scaled sums of heavy-tailed sequences."""

import numpy as np
import pytest

from ._helpers import ACCEPTANCE, run_experiment, values_at

pytestmark = pytest.mark.skipif(not ACCEPTANCE, reason="SDE_ENVELOPE_ACCEPTANCE not set")

N_MAX = 1_000_000


def scaled_sums(out_dir, p):
    run_experiment(
        {
            "estimators": [{"kind": "slln", "family": "pareto", "alpha": 0.8, "p": p, "n_max": N_MAX, "seeds": 200}],
            "ensemble": {"master_seed": 2024, "batch_size": 25},
        },
        out_dir,
    )
    return values_at(out_dir, "slln", "scaled_sum", N_MAX, key="seed")


class TestParetoScaledSums:
    def test_finite_moment_decays(self, tmp_path):
        sums = scaled_sums(tmp_path, 0.5)
        assert sums.size == 200
        assert np.mean(np.abs(sums) <= 1e-2) >= 0.95

    def test_infinite_moment_control(self, tmp_path):
        inside = scaled_sums(tmp_path / "inside", 0.5)
        outside = scaled_sums(tmp_path / "outside", 0.9)
        assert np.median(np.abs(outside)) >= 10.0 * np.median(np.abs(inside))
