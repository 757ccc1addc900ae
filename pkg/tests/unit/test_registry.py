"""Unit tests for sde_envelope._registry (named observables and gauges)."""

import math
from typing import get_args

import numpy as np
import pytest

from sde_envelope._config import GaugeName, ObservableName, Scheme
from sde_envelope._errors import ConfigurationError
from sde_envelope._registry import GAUGE_NAMES, OBSERVABLE_NAMES, observable_label, resolve_gauge, resolve_observable
from sde_envelope.models import quadratic_lyapunov
from sde_envelope.simulate import SCHEMES


class TestRegisteredNames:
    def test_config_names_match_registry(self):
        assert set(get_args(ObservableName)) == OBSERVABLE_NAMES
        assert set(get_args(GaugeName)) == GAUGE_NAMES
        assert set(get_args(Scheme)) == SCHEMES

    @pytest.mark.parametrize("name", sorted(OBSERVABLE_NAMES))
    def test_every_observable_resolves(self, name):
        phi = resolve_observable(name, 2.0, quadratic_lyapunov(1, 0.5))
        assert phi(np.array([[1.0], [-2.0]])).shape == (2,)

    @pytest.mark.parametrize("name", sorted(GAUGE_NAMES))
    def test_every_gauge_resolves(self, name):
        assert resolve_gauge(name)(np.array([math.e]))[0] > 0.0


class TestResolveObservable:
    def test_values(self):
        x = np.array([[-2.0]])
        assert resolve_observable("x")(x)[0] == -2.0
        assert resolve_observable("x2")(x)[0] == 4.0
        assert resolve_observable("abs_pow", 0.5)(x)[0] == pytest.approx(math.sqrt(2.0))
        assert resolve_observable("sign_pow", 0.5)(x)[0] == pytest.approx(-math.sqrt(2.0))

    def test_exp_delta_v(self):
        phi = resolve_observable("exp_delta_v", lyapunov=quadratic_lyapunov(1, 0.5))
        assert phi(np.array([[2.0]]))[0] == pytest.approx(math.e)

    def test_exp_delta_v_needs_lyapunov(self):
        with pytest.raises(ConfigurationError):
            resolve_observable("exp_delta_v")

    def test_unknown(self):
        with pytest.raises(ConfigurationError, match="unknown observable"):
            resolve_observable("x3")

    def test_labels(self):
        assert observable_label("abs_pow", 0.5) == "abs_pow(0.5)"
        assert observable_label("exp_delta_v", delta=0.2) == "exp_delta_v(0.2)"
        assert observable_label("x2") == "x2"


class TestResolveGauge:
    def test_values(self):
        t = np.array([math.e**4])
        assert resolve_gauge("sqrt_2log")(t)[0] == pytest.approx(math.sqrt(8.0))
        assert resolve_gauge("log_power", 0.25)(t)[0] == pytest.approx(math.sqrt(2.0))
        assert resolve_gauge("log")(t)[0] == pytest.approx(4.0)

    def test_unknown(self):
        with pytest.raises(ConfigurationError, match="unknown gauge"):
            resolve_gauge("loglog")
