"""Shared pytest fixtures for acceptance tests."""

import math

import pytest


@pytest.fixture
def geometric_schedule():
    """Build schedule entries ``t0 * ratio**k`` ending exactly at ``t_end``."""

    def build(t_end, count, dt, t0=math.e):
        return {"t0": t0, "ratio": (t_end / t0) ** (1.0 / (count - 1)), "count": count, "dt": dt}

    return build
