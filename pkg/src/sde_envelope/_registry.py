"""Observables and envelope gauges resolvable by name from experiment configs."""

import math
from typing import TYPE_CHECKING, Callable, Optional

import numpy as np
import numpy.typing as npt

from ._errors import ConfigurationError

if TYPE_CHECKING:
    from .models import LyapunovSpec

Array = npt.NDArray[np.float64]
Observable = Callable[[Array], Array]
Gauge = Callable[[Array], Array]

OBSERVABLE_NAMES: frozenset[str] = frozenset({"x", "x2", "abs_pow", "sign_pow", "exp_delta_v"})
GAUGE_NAMES: frozenset[str] = frozenset({"sqrt_2log", "log_power", "log"})
# Envelope sups start where log t reaches 1.
DEFAULT_T_MIN = math.e


def resolve_observable(name: str, power: float = 1.0, lyapunov: Optional["LyapunovSpec"] = None) -> Observable:
    """Return the observable ``phi`` registered under ``name``.

    Observables map states ``(..., dim)`` to values ``(...)``; ``x`` reads the first
    coordinate, the others use the Euclidean norm where a norm is needed.

    Args:
        name: One of :data:`OBSERVABLE_NAMES`.
        power: Exponent for ``abs_pow`` and ``sign_pow``.
        lyapunov: Lyapunov function for ``exp_delta_v``.

    Returns:
        The vectorized observable.

    Raises:
        ConfigurationError: If the name is unknown or ``exp_delta_v`` lacks a Lyapunov function.
    """
    if name not in OBSERVABLE_NAMES:
        raise ConfigurationError(f"phi=<{name}> | unknown observable")
    match name:
        case "x":
            return lambda x: np.asarray(x, dtype=float)[..., 0]
        case "x2":
            return lambda x: np.sum(np.square(x), axis=-1)
        case "abs_pow":
            return lambda x: np.linalg.norm(x, axis=-1) ** power
        case "sign_pow":
            return lambda x: np.sign(np.asarray(x)[..., 0]) * np.abs(np.asarray(x)[..., 0]) ** power
        case "exp_delta_v":
            if lyapunov is None:
                raise ConfigurationError("phi=<exp_delta_v> | needs a lyapunov function")
            spec = lyapunov
            return lambda x: np.exp(spec.delta * spec.value(x))
        case _:
            raise RuntimeError(f"phi=<{name}> | registered observable has no implementation")


def observable_label(name: str, power: float = 1.0, delta: Optional[float] = None) -> str:
    """Column label identifying an observable and its parameters."""
    if name in ("abs_pow", "sign_pow"):
        return f"{name}({power:g})"
    if name == "exp_delta_v" and delta is not None:
        return f"{name}({delta:g})"
    return name


def resolve_gauge(name: str, power: float = 0.5) -> Gauge:
    """Return the envelope gauge ``g(t)`` registered under ``name``.

    Args:
        name: One of :data:`GAUGE_NAMES`: ``sqrt_2log`` for sqrt(2 log t), ``log_power`` for
            (log t)^power, ``log`` for log t.
        power: Exponent of ``log_power``.

    Returns:
        The vectorized gauge, defined for t > 1.

    Raises:
        ConfigurationError: If the name is unknown.
    """
    if name not in GAUGE_NAMES:
        raise ConfigurationError(f"gauge=<{name}> | unknown gauge")
    match name:
        case "sqrt_2log":
            return lambda t: np.sqrt(2.0 * np.log(t))
        case "log_power":
            return lambda t: np.log(t) ** power
        case "log":
            return lambda t: np.log(t)
        case _:
            raise RuntimeError(f"gauge=<{name}> | registered gauge has no implementation")

