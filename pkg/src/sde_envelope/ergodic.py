"""Estimators along simulated paths: exponential transform, martingale bracket, ergodic
averages, LIL ratios, growth envelopes and the bootstrap exponent recursion."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import numpy.typing as npt

from ._errors import ConfigurationError, ParameterError
from ._registry import DEFAULT_T_MIN, Gauge, Observable
from .models import LyapunovSpec, SdeModel
from .simulate import BrownianDriver, CheckpointSchedule, StepBlock, em_step, integrate_batch

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]

# log log of the bracket must be positive for the LIL normalization.
LIL_BRACKET_FLOOR = math.e**2
# Default start of the Brownian LIL window, where log log t = 2. Closer to the floor the
# normalizer is small enough that early excursions dominate the running max.
LIL_WINDOW_START = math.exp(math.e**2)


# =============================================================================
# Exponential transform
# =============================================================================


@dataclass(frozen=True)
class ExpTransform:
    """Ito rates of ``Y = exp(delta V(X))``, with ``dY = Y (b~ dt + s~ . dW)``.

    ``b~ = delta grad V . b + delta tr(sigma sigma^T Hess V) / 2 + delta^2 |sigma^T grad V|^2 / 2``
    and ``s~ = delta sigma^T grad V``.
    """

    model: SdeModel
    lyapunov: LyapunovSpec

    @property
    def delta(self) -> float:
        """Transform exponent."""
        return self.lyapunov.delta

    def y(self, x: Array) -> Array:
        """``exp(delta V(x))``."""
        return np.exp(self.delta * self.lyapunov.value(x))

    def drift_rate(self, x: Array) -> Array:
        """``b~(x)`` with shape ``x.shape[:-1]``."""
        x = np.asarray(x, dtype=float)
        grad = self.lyapunov.gradient(x)
        sigma = self.model.diffusion(x)
        covariance = np.einsum("...ik,...jk->...ij", sigma, sigma)
        trace = np.einsum("...ij,...ji->...", covariance, self.lyapunov.hessian(x))
        projected = np.einsum("...ij,...i->...j", sigma, grad)
        delta = self.delta
        return (
            delta * np.sum(grad * self.model.drift(x), axis=-1)
            + 0.5 * delta * trace
            + 0.5 * delta * delta * np.sum(projected * projected, axis=-1)
        )

    def noise_rate(self, x: Array) -> Array:
        """``s~(x)`` with shape ``x.shape[:-1] + (dim_w,)``."""
        x = np.asarray(x, dtype=float)
        return self.delta * np.einsum("...ij,...i->...j", self.model.diffusion(x), self.lyapunov.gradient(x))


def derive_transform(model: SdeModel, lyap: LyapunovSpec) -> ExpTransform:
    """Build the Ito rates of ``exp(delta V)`` along ``model``.

    Raises:
        ParameterError: If delta is outside (0, 1).
    """
    if not 0.0 < lyap.delta < 1.0:
        raise ParameterError(f"delta=<{lyap.delta}> | must lie strictly inside (0, 1)")
    return ExpTransform(model, lyap)


def ito_residual_rms(transform: ExpTransform, x_samples: Array, dt: float, driver: BrownianDriver) -> float:
    """RMS of the one-step residual ``dY - Y (b~ dt + s~ dW)`` under an Euler step.

    The residual is of order dt, so shrinking dt by four shrinks the RMS about fourfold.
    Every sample uses the same standard normals at every dt.
    """
    x = np.asarray(x_samples, dtype=float)
    dw = math.sqrt(dt) * driver.normals(0, x.shape[0])
    following = em_step(x, transform.model, dt, dw)
    y = transform.y(x)
    predicted = y * (transform.drift_rate(x) * dt + np.sum(transform.noise_rate(x) * dw, axis=-1))
    residual = transform.y(following) - y - predicted
    return float(np.sqrt(np.mean(residual * residual)))


# =============================================================================
# Trackers
# =============================================================================


def lil_ratio(m: Array, qv: Array) -> Array:
    """``M / sqrt(2 <M> log log <M>)``, NaN where ``<M>`` has not passed ``e^2``."""
    m = np.asarray(m, dtype=float)
    qv = np.asarray(qv, dtype=float)
    defined = qv > LIL_BRACKET_FLOOR
    safe = np.where(defined, qv, LIL_BRACKET_FLOOR + 1.0)
    return np.where(defined, m / np.sqrt(2.0 * safe * np.log(np.log(safe))), np.nan)


def _running_max_abs(previous: Array, values: Array) -> Array:
    magnitude = np.abs(values)
    magnitude = np.where(np.isfinite(magnitude), magnitude, 0.0)
    return np.maximum(previous, magnitude.max(axis=0)) if magnitude.shape[0] else previous


@dataclass(frozen=True)
class MartingaleRecord:
    """Tracker snapshot at a checkpoint (arrays over the batch)."""

    t: float
    m: Array
    qv: Array
    drift_integral: Array
    lil: Array
    lil_max: Array
    identity_gap: Array

    @property
    def m_over_t(self) -> Array:
        """``M_t / t``."""
        return self.m / self.t

    @property
    def qv_over_t(self) -> Array:
        """``<M>_t / t``."""
        return self.qv / self.t


class MartingaleTracker:
    """Accumulates ``M = int Y s~ . dW``, its bracket ``<M> = int Y^2 |s~|^2 ds`` and ``int Y b~ ds``.

    Left-point sums over the dense steps, using the increments that moved the state.
    """

    def __init__(self, transform: ExpTransform, n_paths: int) -> None:
        """Start all accumulators at zero.

        Args:
            transform: Exponential transform supplying Y, b~ and s~.
            n_paths: Batch size.
        """
        self.transform = transform
        self.m = np.zeros(n_paths)
        self.qv = np.zeros(n_paths)
        self.drift_integral = np.zeros(n_paths)
        self.lil_max = np.zeros(n_paths)
        self.y0: Optional[Array] = None
        self.y = np.ones(n_paths)
        self.records: list[MartingaleRecord] = []

    def on_block(self, block: StepBlock) -> None:
        """Accumulate the block's increments."""
        if block.dw is None:
            raise ConfigurationError("hook=<martingale> | needs the Brownian increments of the dense steps")
        x = block.x[:-1]
        dt = block.dt[:, None]
        y = self.transform.y(x)
        rate = self.transform.noise_rate(x)
        m_path = self.m + np.cumsum(y * np.sum(rate * block.dw, axis=-1), axis=0)
        qv_path = self.qv + np.cumsum(y * y * np.sum(rate * rate, axis=-1) * dt, axis=0)
        self.drift_integral = self.drift_integral + np.sum(y * self.transform.drift_rate(x) * dt, axis=0)
        self.lil_max = _running_max_abs(self.lil_max, lil_ratio(m_path, qv_path))
        if self.y0 is None:
            self.y0 = y[0]
        if m_path.shape[0]:
            self.m, self.qv = m_path[-1], qv_path[-1]
        self.y = self.transform.y(block.x[-1])

    def on_checkpoint(self, index: int, t: float, x: Array) -> None:
        """Snapshot the accumulators."""
        start = self.y if self.y0 is None else self.y0
        self.records.append(
            MartingaleRecord(
                t=t,
                m=self.m.copy(),
                qv=self.qv.copy(),
                drift_integral=self.drift_integral.copy(),
                lil=lil_ratio(self.m, self.qv),
                lil_max=self.lil_max.copy(),
                identity_gap=self.y - start - self.drift_integral - self.m,
            )
        )


def track_martingale(transform: ExpTransform, n_paths: int = 1) -> MartingaleTracker:
    """Create a martingale tracker to attach to an integration."""
    return MartingaleTracker(transform, n_paths)


@dataclass(frozen=True)
class BirkhoffRecord:
    """Running average snapshot at a checkpoint."""

    t: float
    average: Array


class BirkhoffAverage:
    """Running time average ``(1/t) int_0^t phi(X_s) ds`` by the trapezoidal rule."""

    def __init__(self, phi: Observable, n_paths: int, name: str = "phi") -> None:
        """Start the integral at zero.

        Args:
            phi: Observable on states.
            n_paths: Batch size.
            name: Label of the observable.
        """
        self.phi = phi
        self.name = name
        self.integral = np.zeros(n_paths)
        self.t = 0.0
        self.records: list[BirkhoffRecord] = []

    @property
    def average(self) -> Array:
        """Current running average (NaN before the first step)."""
        if self.t <= 0.0:
            return np.full(self.integral.shape, np.nan)
        return self.integral / self.t

    def on_block(self, block: StepBlock) -> None:
        """Add the trapezoidal integral over the block."""
        values = self.phi(block.x)
        self.integral = self.integral + np.sum(0.5 * (values[:-1] + values[1:]) * block.dt[:, None], axis=0)
        self.t = float(block.t[-1])

    def on_checkpoint(self, index: int, t: float, x: Array) -> None:
        """Snapshot the running average."""
        self.records.append(BirkhoffRecord(t, self.average.copy()))


def birkhoff_average(phi: Observable, n_paths: int = 1, name: str = "phi") -> BirkhoffAverage:
    """Create a running-average tracker to attach to an integration."""
    return BirkhoffAverage(phi, n_paths, name)


@dataclass(frozen=True)
class EnvelopeRecord:
    """Envelope snapshot at a checkpoint (arrays over the batch)."""

    t: float
    x: Array
    v: Array
    env_v: Array
    env_gauge: Array


class EnvelopeTracker:
    """Running sups of ``V(X_s) / log s`` and ``|X_s| / g(s)`` over dense grid times ``s > t_min``."""

    def __init__(self, lyapunov: LyapunovSpec, n_paths: int, gauge: Gauge, t_min: float = DEFAULT_T_MIN) -> None:
        """Start both sups at zero.

        Args:
            lyapunov: The Lyapunov function V.
            n_paths: Batch size.
            gauge: Envelope gauge g.
            t_min: Start of the sup window, above 1.

        Raises:
            ParameterError: If ``t_min <= 1``.
        """
        if t_min <= 1.0:
            raise ParameterError(f"t_min=<{t_min}> | must exceed 1")
        self.lyapunov = lyapunov
        self.gauge = gauge
        self.t_min = t_min
        self.env_v = np.zeros(n_paths)
        self.env_gauge = np.zeros(n_paths)
        self._fresh = True
        self.records: list[EnvelopeRecord] = []

    @property
    def report(self) -> list[EnvelopeRecord]:
        """Per-checkpoint envelope report."""
        return self.records

    def on_block(self, block: StepBlock) -> None:
        """Fold the block's grid times into the running sups."""
        start = 0 if self._fresh else 1
        self._fresh = False
        t = block.t[start:]
        window = t > self.t_min
        if not window.any():
            return
        t = t[window]
        x = block.x[start:][window]
        ratio_v = self.lyapunov.value(x) / np.log(t)[:, None]
        ratio_gauge = np.linalg.norm(x, axis=-1) / self.gauge(t)[:, None]
        self.env_v = np.maximum(self.env_v, ratio_v.max(axis=0))
        self.env_gauge = np.maximum(self.env_gauge, ratio_gauge.max(axis=0))

    def on_checkpoint(self, index: int, t: float, x: Array) -> None:
        """Snapshot the sups with the observed state."""
        shown = x[:, 0] if x.shape[-1] == 1 else np.linalg.norm(x, axis=-1)
        self.records.append(
            EnvelopeRecord(t, shown.copy(), self.lyapunov.value(x), self.env_v.copy(), self.env_gauge.copy())
        )


def envelope_statistic(
    lyap: LyapunovSpec, gauge: Gauge, n_paths: int = 1, t_min: float = DEFAULT_T_MIN
) -> EnvelopeTracker:
    """Create an envelope tracker to attach to an integration."""
    return EnvelopeTracker(lyap, n_paths, gauge, t_min)


# =============================================================================
# LIL experiment on a pure Brownian martingale
# =============================================================================


@dataclass(frozen=True)
class LilRun:
    """Brownian martingale with unit integrand on a refined geometric grid."""

    times: Array
    m: Array
    running_max: float
    final_ratio: float


def brownian_lil_run(
    driver: BrownianDriver, t_start: float = LIL_WINDOW_START, t_end: float = 1e8, refine: float = 1e-3
) -> LilRun:
    """Sample ``M = W`` (so ``<M>_t = t``) exactly on ``t_{j+1} = t_j (1 + refine)``.

    Args:
        driver: Noise source.
        t_start: First grid time, at least ``e^2``; defaults to ``exp(e^2)``.
        t_end: Horizon.
        refine: Relative spacing of the grid.

    Returns:
        The path and the running max of ``|M_t| / sqrt(2 t log log t)`` over the grid.

    Raises:
        ParameterError: If the window or spacing is invalid.
    """
    if t_start < LIL_BRACKET_FLOOR or t_end <= t_start or refine <= 0.0:
        raise ParameterError(f"t_start=<{t_start}>, t_end=<{t_end}>, refine=<{refine}> | invalid LIL window")
    count = int(math.ceil(math.log(t_end / t_start) / math.log1p(refine))) + 1
    times = t_start * (1.0 + refine) ** np.arange(count, dtype=float)
    times[-1] = t_end
    gaps = np.diff(np.concatenate([[0.0], times]))
    m = np.cumsum(np.sqrt(gaps) * driver.normals(0, count)[:, 0])
    ratio = np.abs(lil_ratio(m, times))
    ratio = np.where(np.isfinite(ratio), ratio, 0.0)
    return LilRun(times, m, float(ratio.max()), float(ratio[-1]))


# =============================================================================
# Bootstrap recursion
# =============================================================================


@dataclass(frozen=True)
class BootstrapState:
    """Current exponent bound beta of ``limsup V(X_t)/log t <= beta``."""

    beta: float
    iteration: int = 0


def bootstrap_iterate(state: BootstrapState) -> BootstrapState:
    """One improvement ``beta' = max{1, (1 + beta)/2}``.

    Raises:
        ParameterError: If beta < 1.
    """
    if state.beta < 1.0:
        raise ParameterError(f"beta=<{state.beta}> | must be at least 1")
    return BootstrapState(max(1.0, (1.0 + state.beta) / 2.0), state.iteration + 1)


def bootstrap_sequence(beta0: float, iterations: int) -> list[float]:
    """Betas ``beta_0, ..., beta_k`` of the recursion."""
    state = BootstrapState(beta0)
    betas = [state.beta]
    for _ in range(iterations):
        state = bootstrap_iterate(state)
        betas.append(state.beta)
    return betas


def bootstrap_gamma(beta: float, delta: float, eps: float) -> float:
    """Intermediate growth exponent ``max{1 + eps, 1/2 + (delta + 2 eps - 1/2)(beta + 2 eps)}``."""
    return max(1.0 + eps, 0.5 + (delta + 2.0 * eps - 0.5) * (beta + 2.0 * eps))


# =============================================================================
# Monotone coupling of ergodic averages
# =============================================================================


@dataclass(frozen=True)
class MonotoneBirkhoffResult:
    """Final averages per initial point under a shared noise stream."""

    initial_points: tuple[float, ...]
    averages: tuple[float, ...]
    spread: float
    ordered: bool


def monotone_birkhoff_check(
    model: SdeModel,
    phi: Observable,
    initial_points: Sequence[float],
    driver: BrownianDriver,
    schedule: CheckpointSchedule,
    scheme: str = "em",
) -> MonotoneBirkhoffResult:
    """Run the ergodic average of a monotone ``phi`` from several points on one noise orbit.

    Args:
        model: A scalar SDE.
        phi: Nondecreasing observable.
        initial_points: Starting points.
        driver: The shared noise source.
        schedule: Checkpoints; the average is read at the horizon.
        scheme: Dense stepping scheme.

    Returns:
        Averages, their spread, and whether they are nondecreasing in the initial point.

    Raises:
        ConfigurationError: If the model is not scalar.
    """
    if model.dim != 1:
        raise ConfigurationError(f"dim=<{model.dim}> | monotone coupling needs a scalar model")
    points = np.asarray(initial_points, dtype=float)
    tracker = BirkhoffAverage(phi, points.size)
    integrate_batch(model, points[:, None], schedule, [driver] * points.size, scheme, [tracker])
    averages = tracker.average

    order = np.argsort(points, kind="stable")
    ordered = bool(np.all(np.diff(averages[order]) >= 0.0))
    spread = float(averages.max() - averages.min())
    logger.debug("points=<%d>, spread=<%s>, ordered=<%s> | monotone birkhoff check", points.size, spread, ordered)
    return MonotoneBirkhoffResult(tuple(points.tolist()), tuple(averages.tolist()), spread, ordered)

