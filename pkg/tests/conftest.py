"""Shared test fixtures for sde-envelope tests."""

import json

import pytest

from sde_envelope.models import make_langevin, make_ou
from sde_envelope.oracle import GridSpec, build_oracle
from sde_envelope.simulate import BrownianDriver


@pytest.fixture
def ou_model():
    """Standard OU: drift -x, diffusion sqrt(2), invariant law N(0, 1)."""
    return make_ou(2.0)


@pytest.fixture
def quartic():
    """Langevin model for U = x^4/4 at eps = 1, with its potential data."""
    return make_langevin([0.0, 0.0, 0.0, 0.0, 0.25], 1.0)


@pytest.fixture
def gaussian_oracle():
    """Oracle of U = x^2/2, eps = 1 on [-12, 12]."""
    return build_oracle([0.0, 0.0, 0.5], 1.0, GridSpec(-12.0, 12.0, 48001))


@pytest.fixture
def quartic_oracle():
    """Oracle of U = x^4/4, eps = 1 on the automatic grid."""
    return build_oracle([0.0, 0.0, 0.0, 0.0, 0.25], 1.0)


@pytest.fixture
def driver():
    """Scalar noise source."""
    return BrownianDriver(master_seed=7, path_id=0)


@pytest.fixture
def small_config():
    """Cheap OU experiment exercising the path estimators."""
    return {
        "model": {"kind": "ou", "lam": 2.0},
        "scheme": "em",
        "schedule": {"t0": 1.0, "ratio": 2.0, "count": 4, "dt": 0.05},
        "x0": 0.5,
        "estimators": [
            {"kind": "envelope", "delta": 0.9},
            {"kind": "martingale", "delta": 0.2},
            {"kind": "birkhoff", "phi": "x2"},
        ],
        "ensemble": {"seeds": 3, "master_seed": 11, "batch_size": 2},
    }


@pytest.fixture
def write_config(tmp_path):
    """Write a config document to a file and return its path."""

    def write(document, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path

    return write
