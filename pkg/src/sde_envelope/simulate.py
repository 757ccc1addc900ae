"""Brownian driving noise and dense-step SDE integration with geometric checkpoints.

Paths are integrated in batches: a batch of ``n`` paths advances as one ``(n, dim)``
array, each path consuming its own counter-based increment stream. Estimators attach as
hooks that receive blocks of consecutive dense steps and a notification at every
checkpoint.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence

import numpy as np
import numpy.typing as npt
from numba import njit
from scipy.signal import lfilter

from ._errors import ConfigurationError, ParameterError, PreconditionError, ScheduleError
from .models import SdeModel

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]
StepFunction = Callable[[Array, SdeModel, float, Array], Array]

# Independent streams of one driver.
STREAM_INCREMENTS = 0
STREAM_BRIDGE = 1
STREAM_INITIAL = 2

# Draws per counter block; also the longest block of steps handed to hooks.
BLOCK_SIZE = 4096
BLOWUP_THRESHOLD = 1e12
# Relative central-difference step for the Milstein correction.
FD_STEP = 1e-5
# Checkpoints closer than this (in units of dt) to a grid time snap onto it.
SNAP_TOLERANCE = 1e-9

SCHEMES: frozenset[str] = frozenset({"em", "tamed", "milstein", "exact-ou"})


@dataclass(frozen=True)
class CheckpointSchedule:
    """Geometric checkpoints ``t_k = t0 * ratio**k`` over a dense grid of step ``dt``.

    Attributes:
        t0: First checkpoint.
        ratio: Growth factor between checkpoints.
        count: Number of checkpoints.
        dt: Dense sub-step.
    """

    t0: float
    ratio: float
    count: int
    dt: float

    def __post_init__(self) -> None:
        """Validate the schedule."""
        if self.t0 <= 0.0 or self.ratio <= 1.0 or self.count < 1:
            raise ScheduleError(f"t0=<{self.t0}>, ratio=<{self.ratio}>, count=<{self.count}> | invalid schedule")
        if not 0.0 < self.dt <= self.t0:
            raise ScheduleError(f"dt=<{self.dt}>, t0=<{self.t0}> | need 0 < dt <= t0")

    @classmethod
    def spanning(cls, t_start: float, t_end: float, count: int, dt: float) -> "CheckpointSchedule":
        """Schedule with ``count`` checkpoints from ``t_start`` to ``t_end``."""
        ratio = (t_end / t_start) ** (1.0 / max(count - 1, 1))
        return cls(t_start, ratio, count, dt)

    def times(self) -> Array:
        """Checkpoint times."""
        return self.t0 * self.ratio ** np.arange(self.count, dtype=float)

    @property
    def horizon(self) -> float:
        """Last checkpoint time."""
        return float(self.times()[-1])

    def locate(self) -> tuple[npt.NDArray[np.int64], Array]:
        """Dense step index and fraction of a step at which each checkpoint falls."""
        scaled = self.times() / self.dt
        steps = np.floor(scaled + SNAP_TOLERANCE).astype(np.int64)
        fractions = scaled - steps
        fractions[fractions < SNAP_TOLERANCE] = 0.0
        return steps, fractions


@dataclass(frozen=True)
class BrownianDriver:
    """Counter-based noise source keyed by ``(master_seed, path_id)``.

    Draw ``i`` of a stream comes from a Philox generator keyed by
    ``(master_seed, path_id, stream, i // BLOCK_SIZE)``, so every draw is a pure function
    of its index and paths can be generated in any order.
    """

    master_seed: int
    path_id: int
    dim_w: int = 1

    def _block(self, stream: int, block: int) -> np.random.Generator:
        seed = np.random.SeedSequence([self.master_seed, self.path_id, stream, block])
        return np.random.Generator(np.random.Philox(seed))

    def _draws(self, start: int, count: int, stream: int, normal: bool) -> Array:
        if count <= 0:
            shape = (0, self.dim_w) if normal else (0,)
            return np.empty(shape)
        first, last = start // BLOCK_SIZE, (start + count - 1) // BLOCK_SIZE
        chunks = []
        for block in range(first, last + 1):
            rng = self._block(stream, block)
            if normal:
                chunks.append(rng.standard_normal((BLOCK_SIZE, self.dim_w)))
            else:
                chunks.append(1.0 - rng.random(BLOCK_SIZE))
        offset = start - first * BLOCK_SIZE
        return np.concatenate(chunks)[offset : offset + count]

    def normals(self, start: int, count: int, stream: int = STREAM_INCREMENTS) -> Array:
        """Standard normal vectors ``(count, dim_w)`` with indices ``start, ..., start+count-1``."""
        return self._draws(start, count, stream, normal=True)

    def uniforms(self, start: int, count: int, stream: int = STREAM_INCREMENTS) -> Array:
        """Uniform draws in (0, 1]."""
        return self._draws(start, count, stream, normal=False)

    def increments(self, n: int, dt: float, start: int = 0) -> Array:
        """Brownian increments ``N(0, dt I)`` of dense steps ``start, ..., start+n-1``.

        Raises:
            ParameterError: If ``dt`` is not positive.
        """
        if dt <= 0.0:
            raise ParameterError(f"dt=<{dt}> | must be positive")
        return math.sqrt(dt) * self.normals(start, n)


@dataclass(frozen=True)
class StepBlock:
    """Consecutive dense steps of a batch.

    Attributes:
        t: Grid times ``(L+1,)``; ``t[0]`` repeats the last time of the previous block.
        x: States ``(L+1, n_paths, dim)``.
        dw: Brownian increments ``(L, n_paths, dim_w)``; ``None`` for exact samplers.
    """

    t: Array
    x: Array
    dw: Optional[Array]

    @property
    def dt(self) -> Array:
        """Step lengths ``(L,)``."""
        return np.diff(self.t)


class StepHook(Protocol):
    """Per-path accumulator fed during integration."""

    def on_block(self, block: StepBlock) -> None:
        """Consume a block of dense steps, in time order."""
        ...

    def on_checkpoint(self, index: int, t: float, x: Array) -> None:
        """Record the accumulator after all grid times up to checkpoint ``t``."""
        ...


@dataclass
class Trajectory:
    """Checkpointed path of one SDE solution.

    Attributes:
        times: Checkpoint times reached before any blowup.
        states: States ``(len(times), dim)`` at those times.
        scheme: Integration scheme label.
        path_id: Driver path id.
        blowup: Whether the path exploded.
        blowup_time: Grid time of the explosion, NaN otherwise.
        steps: Dense steps taken by the batch.
    """

    times: Array
    states: Array
    scheme: str
    path_id: int
    blowup: bool = False
    blowup_time: float = math.nan
    steps: int = 0


class OrderingCounter:
    """Counts dense steps on which coupled pairs lose their order.

    The batch interleaves pairs: paths ``2i`` and ``2i + 1`` are the lower and upper
    member of pair ``i``.
    """

    def __init__(self, n_pairs: int = 1) -> None:
        """Start every pair at zero violations."""
        self.violations = np.zeros(n_pairs, dtype=np.int64)
        self.at_checkpoints: list[npt.NDArray[np.int64]] = []

    def on_block(self, block: StepBlock) -> None:
        """Count ordering violations among the new states of the block."""
        after = block.x[1:, :, 0]
        self.violations += np.count_nonzero(after[:, 0::2] > after[:, 1::2], axis=0)

    def on_checkpoint(self, index: int, t: float, x: Array) -> None:
        """Snapshot the running counts."""
        self.at_checkpoints.append(self.violations.copy())


# =============================================================================
# Step schemes
# =============================================================================


def _diffuse(sigma: Array, dw: Array) -> Array:
    return np.einsum("...ij,...j->...i", sigma, dw)


def em_step(x: Array, model: SdeModel, dt: float, dw: Array) -> Array:
    """Euler-Maruyama step ``x + b(x) dt + sigma(x) dW``."""
    x = np.asarray(x, dtype=float)
    return x + model.drift(x) * dt + _diffuse(model.diffusion(x), np.asarray(dw, dtype=float))


def tamed_em_step(x: Array, model: SdeModel, dt: float, dw: Array) -> Array:
    """Tamed Euler step ``x + b dt / (1 + dt |b|) + sigma dW``, stable for superlinear drift."""
    x = np.asarray(x, dtype=float)
    drift = model.drift(x)
    size = np.linalg.norm(drift, axis=-1, keepdims=True)
    return x + drift * dt / (1.0 + dt * size) + _diffuse(model.diffusion(x), np.asarray(dw, dtype=float))


def milstein_step_1d(x: Array, model: SdeModel, dt: float, dw: Array) -> Array:
    """Milstein step ``x + b dt + sigma dW + sigma sigma' (dW^2 - dt) / 2`` for scalar SDEs.

    Raises:
        ConfigurationError: If the model is not scalar.
    """
    if model.dim != 1 or model.dim_w != 1:
        raise ConfigurationError(f"dim=<{model.dim}>, dim_w=<{model.dim_w}> | milstein needs a scalar model")
    x = np.asarray(x, dtype=float)
    dw = np.asarray(dw, dtype=float)
    h = FD_STEP * (1.0 + np.abs(x))
    sigma = model.diffusion(x)[..., 0]
    slope = (model.diffusion(x + h)[..., 0] - model.diffusion(x - h)[..., 0]) / (2.0 * h)
    return x + model.drift(x) * dt + sigma * dw + 0.5 * sigma * slope * (dw * dw - dt)


STEP_FUNCTIONS: dict[str, StepFunction] = {
    "em": em_step,
    "tamed": tamed_em_step,
    "milstein": milstein_step_1d,
}


def _resolve_step(model: SdeModel, scheme: str) -> StepFunction:
    if scheme not in STEP_FUNCTIONS:
        raise ConfigurationError(f"scheme=<{scheme}> | not a dense stepping scheme")
    if scheme == "milstein" and (model.dim != 1 or model.dim_w != 1):
        raise ConfigurationError(f"scheme=<milstein>, dim=<{model.dim}> | milstein needs a scalar model")
    return STEP_FUNCTIONS[scheme]


# =============================================================================
# Compiled stepper
# =============================================================================


@njit(cache=True, nogil=True)
def _polynomial_steps(
    x0: Array,
    dw: Array,
    coefficients: Array,
    noise: float,
    dt: float,
    tamed: bool,
    frozen: npt.NDArray[np.bool_],
    threshold: float,
) -> tuple[Array, npt.NDArray[np.int64]]:
    """Euler or tamed Euler steps of ``dX = p(X) dt + noise dW`` for a block of scalar paths.

    Horner evaluation runs in the same order as ``numpy.polynomial.Polynomial`` so the
    result tracks :func:`em_step` and :func:`tamed_em_step` to rounding.

    Args:
        x0: States at the start of the block, ``(n_paths,)``.
        dw: Increments, ``(length, n_paths)``.
        coefficients: Ascending coefficients of p.
        noise: Constant diffusion.
        dt: Step.
        tamed: Tame the drift by ``1 + dt |p|``.
        frozen: Paths already exploded before the block.
        threshold: Blowup radius.

    Returns:
        The states ``(length + 1, n_paths)`` and, per path, the block-local step whose
        proposal exploded (``-1`` when none did).
    """
    length, n_paths = dw.shape
    degree = coefficients.shape[0] - 1
    xs = np.empty((length + 1, n_paths))
    fresh_at = np.full(n_paths, -1, dtype=np.int64)
    for i in range(n_paths):
        x = x0[i]
        xs[0, i] = x
        stopped = frozen[i]
        for j in range(length):
            if not stopped:
                b = coefficients[degree]
                for c in range(degree - 1, -1, -1):
                    b = coefficients[c] + b * x
                if tamed:
                    proposal = x + b * dt / (1.0 + dt * abs(b)) + noise * dw[j, i]
                else:
                    proposal = x + b * dt + noise * dw[j, i]
                if not math.isfinite(proposal) or abs(proposal) > threshold:
                    stopped = True
                    fresh_at[i] = j
                else:
                    x = proposal
            xs[j + 1, i] = x
    return xs, fresh_at


def _compiled(model: SdeModel, scheme: str) -> bool:
    return (
        scheme in ("em", "tamed")
        and model.dim == 1
        and model.dim_w == 1
        and model.drift_coefficients is not None
        and model.noise_level is not None
    )


# =============================================================================
# Integration
# =============================================================================


def _noise(drivers: Sequence[BrownianDriver], start: int, count: int, stream: int = STREAM_INCREMENTS) -> Array:
    return np.stack([driver.normals(start, count, stream) for driver in drivers], axis=1)


def _chunks(first: int, stop: int) -> list[tuple[int, int]]:
    """Split steps ``[first, stop)`` at counter-block boundaries."""
    bounds = []
    n = first
    while n < stop:
        end = min(stop, (n // BLOCK_SIZE + 1) * BLOCK_SIZE)
        bounds.append((n, end))
        n = end
    return bounds


def _python_steps(
    step: StepFunction,
    model: SdeModel,
    x: Array,
    dw: Array,
    dt: float,
    first: int,
    blown: npt.NDArray[np.bool_],
    blowup_time: Array,
    drivers: Sequence[BrownianDriver],
) -> Array:
    """Advance a batch through one block with ``step``, freezing paths that explode."""
    length = dw.shape[0]
    xs = np.empty((length + 1,) + x.shape)
    xs[0] = x
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(length):
            proposal = step(xs[j], model, dt, dw[j])
            bad = ~np.all(np.isfinite(proposal), axis=-1) | (np.max(np.abs(proposal), axis=-1) > BLOWUP_THRESHOLD)
            fresh = bad & ~blown
            if fresh.any():
                blown |= fresh
                blowup_time[fresh] = (first + j + 1) * dt
                logger.warning("paths=<%s>, t=<%s> | blowup detected",
                               [drivers[i].path_id for i in np.flatnonzero(fresh)], (first + j + 1) * dt)
            xs[j + 1] = np.where(blown[:, None], xs[j], proposal) if blown.any() else proposal
    return xs


def _trajectories(
    times: Array,
    recorded: Array,
    scheme: str,
    drivers: Sequence[BrownianDriver],
    blowup_time: Array,
    steps: int,
) -> list[Trajectory]:
    paths = []
    for i, driver in enumerate(drivers):
        exploded = bool(np.isfinite(blowup_time[i]))
        keep = times < blowup_time[i] if exploded else np.ones(times.shape, dtype=bool)
        paths.append(
            Trajectory(
                times=times[keep],
                states=recorded[keep, i],
                scheme=scheme,
                path_id=driver.path_id,
                blowup=exploded,
                blowup_time=float(blowup_time[i]),
                steps=steps,
            )
        )
    return paths


def integrate_batch(
    model: SdeModel,
    x0s: Array,
    schedule: CheckpointSchedule,
    drivers: Sequence[BrownianDriver],
    scheme: str = "em",
    hooks: Sequence[StepHook] = (),
) -> list[Trajectory]:
    """Integrate one path per driver on the dense grid and record the checkpoints.

    A checkpoint strictly inside a dense step is observed by splitting that step's
    increment with a Brownian bridge; the observation does not feed back into the dense
    chain. A path whose state leaves ``BLOWUP_THRESHOLD`` or turns non-finite is flagged
    and frozen; the batch halts once every path has exploded.
    Scalar polynomial-drift models with constant noise step through a compiled kernel
    under ``em`` and ``tamed``.

    Args:
        model: The SDE.
        x0s: Initial states ``(n_paths, dim)`` (or anything reshapeable to it).
        schedule: Checkpoints and dense step.
        drivers: One noise source per path; repeating a driver couples paths.
        scheme: ``em``, ``tamed`` or ``milstein``.
        hooks: Accumulators fed with every block and checkpoint.

    Returns:
        One trajectory per driver.

    Raises:
        ConfigurationError: If the scheme does not fit the model.
        PreconditionError: If an initial state is not finite.
    """
    step = _resolve_step(model, scheme)
    n_paths = len(drivers)
    if any(driver.dim_w != model.dim_w for driver in drivers):
        raise ConfigurationError(f"dim_w=<{model.dim_w}> | driver noise dimension does not match the model")
    x = np.asarray(x0s, dtype=float).reshape(n_paths, model.dim)
    if not np.all(np.isfinite(x)):
        raise PreconditionError("x0=<non-finite> | initial states must be finite")

    dt = schedule.dt
    sqrt_dt = math.sqrt(dt)
    times = schedule.times()
    steps, fractions = schedule.locate()
    recorded = np.full((schedule.count, n_paths, model.dim), np.nan)
    blown = np.zeros(n_paths, dtype=bool)
    blowup_time = np.full(n_paths, np.nan)
    compiled = _compiled(model, scheme)
    coefficients = np.asarray(model.drift_coefficients if compiled else (), dtype=float)
    noise = float(model.noise_level) if compiled and model.noise_level is not None else 0.0

    logger.debug("model=<%s>, scheme=<%s>, paths=<%d>, steps=<%d> | integrating batch",
                 model.label, scheme, n_paths, int(steps[-1]))

    n = 0
    for k in range(schedule.count):
        for first, stop in _chunks(n, int(steps[k])):
            length = stop - first
            dw = sqrt_dt * _noise(drivers, first, length)
            if compiled:
                xs, fresh_at = _polynomial_steps(np.ascontiguousarray(x[:, 0]), np.ascontiguousarray(dw[:, :, 0]),
                                                 coefficients, noise, dt, scheme == "tamed", blown, BLOWUP_THRESHOLD)
                xs = xs[:, :, None]
                fresh = fresh_at >= 0
                if fresh.any():
                    blown |= fresh
                    blowup_time[fresh] = (first + fresh_at[fresh] + 1) * dt
                    logger.warning("paths=<%s>, t=<%s> | blowup detected",
                                   [drivers[i].path_id for i in np.flatnonzero(fresh)], blowup_time[fresh].tolist())
            else:
                xs = _python_steps(step, model, x, dw, dt, first, blown, blowup_time, drivers)
            block = StepBlock(t=(first + np.arange(length + 1)) * dt, x=xs, dw=dw)
            for hook in hooks:
                hook.on_block(block)
            x = xs[-1]
            n = stop
            if blown.all():
                break
        if blown.all():
            break

        observed = x
        if fractions[k] > 0.0:
            theta = float(fractions[k])
            full = sqrt_dt * _noise(drivers, n, 1)[0]
            extra = _noise(drivers, n, 1, STREAM_BRIDGE)[0]
            partial = theta * full + math.sqrt(theta * (1.0 - theta) * dt) * extra
            with np.errstate(over="ignore", invalid="ignore"):
                observed = np.where(blown[:, None], x, step(x, model, theta * dt, partial))
        recorded[k] = observed
        for hook in hooks:
            hook.on_checkpoint(k, float(times[k]), observed)

    return _trajectories(times, recorded, scheme, drivers, blowup_time, n)


def integrate(
    model: SdeModel,
    x0: Array,
    schedule: CheckpointSchedule,
    driver: BrownianDriver,
    scheme: str = "em",
    hooks: Sequence[StepHook] = (),
) -> Trajectory:
    """Integrate a single path; see :func:`integrate_batch`."""
    return integrate_batch(model, np.asarray(x0, dtype=float).reshape(1, model.dim), schedule, [driver], scheme,
                           hooks)[0]


def exact_ou_batch(
    lam: float,
    mu_loc: float,
    sigma_scale: float,
    schedule: CheckpointSchedule,
    drivers: Sequence[BrownianDriver],
    x0s: Optional[Array] = None,
    hooks: Sequence[StepHook] = (),
) -> list[Trajectory]:
    """Sample OU paths exactly on the dense grid and at the checkpoints.

    The law is that of ``sigma e^{-lam t/2} B(e^{lam t}) + mu``: over a step of length h
    the centred state contracts by ``e^{-lam h/2}`` and gains independent Gaussian
    variance ``sigma^2 (1 - e^{-lam h})``, the time-changed Brownian increment rescaled
    in log space. Dense steps run as an AR(1) filter; a checkpoint inside a step is drawn
    from the exact OU bridge between its neighbouring grid states.

    Args:
        lam: Rate.
        mu_loc: Stationary mean.
        sigma_scale: Stationary standard deviation.
        schedule: Checkpoints and dense step.
        drivers: One noise source per path.
        x0s: Initial states; when omitted paths start from ``mu + sigma B(1)`` (stationary).
        hooks: Accumulators; blocks carry no Brownian increments.

    Returns:
        One trajectory per driver.

    Raises:
        ParameterError: If ``lam`` or ``sigma_scale`` is not positive.
        ScheduleError: If a variance increment is not finite.
    """
    if lam <= 0.0 or sigma_scale <= 0.0:
        raise ParameterError(f"lam=<{lam}>, sigma_scale=<{sigma_scale}> | must be positive")

    def contraction(h: float) -> tuple[float, float]:
        factor = math.exp(-0.5 * lam * h)
        variance = sigma_scale**2 * -math.expm1(-lam * h)
        if not (math.isfinite(factor) and math.isfinite(variance)):
            raise ScheduleError(f"h=<{h}> | non-finite OU variance increment")
        return factor, variance

    n_paths = len(drivers)
    dt = schedule.dt
    factor, variance = contraction(dt)
    scale = math.sqrt(variance)
    times = schedule.times()
    steps, fractions = schedule.locate()
    recorded = np.full((schedule.count, n_paths, 1), np.nan)

    if x0s is None:
        y = sigma_scale * _noise(drivers, 0, 1, STREAM_INITIAL)[0, :, 0]
    else:
        y = np.asarray(x0s, dtype=float).reshape(n_paths) - mu_loc

    n = 0
    for k in range(schedule.count):
        for first, stop in _chunks(n, int(steps[k])):
            shocks = scale * _noise(drivers, first, stop - first)[:, :, 0]
            path, _ = lfilter([1.0], [1.0, -factor], shocks, axis=0, zi=(factor * y)[None, :])
            centred = np.concatenate([y[None, :], path])
            block = StepBlock(t=(first + np.arange(stop - first + 1)) * dt, x=(mu_loc + centred)[:, :, None], dw=None)
            for hook in hooks:
                hook.on_block(block)
            y = path[-1]
            n = stop

        observed = y
        if fractions[k] > 0.0:
            theta = float(fractions[k])
            following = factor * y + scale * _noise(drivers, n, 1)[0, :, 0]
            a1, v1 = contraction(theta * dt)
            a2, v2 = contraction((1.0 - theta) * dt)
            total = a2 * a2 * v1 + v2
            mean = a1 * y + a2 * v1 / total * (following - a1 * a2 * y)
            spread = math.sqrt(v1 * v2 / total)
            observed = mean + spread * _noise(drivers, n, 1, STREAM_BRIDGE)[0, :, 0]
        recorded[k, :, 0] = mu_loc + observed
        for hook in hooks:
            hook.on_checkpoint(k, float(times[k]), recorded[k])

    return _trajectories(times, recorded, "exact-ou", drivers, np.full(n_paths, np.nan), n)


def exact_ou_path(
    lam: float,
    mu_loc: float,
    sigma_scale: float,
    schedule: CheckpointSchedule,
    driver: BrownianDriver,
    x0: Optional[float] = None,
    hooks: Sequence[StepHook] = (),
) -> Trajectory:
    """Sample a single exact OU path; see :func:`exact_ou_batch`."""
    x0s = None if x0 is None else np.array([x0], dtype=float)
    return exact_ou_batch(lam, mu_loc, sigma_scale, schedule, [driver], x0s, hooks)[0]


def simulate_batch(
    model: SdeModel,
    x0s: Optional[Array],
    schedule: CheckpointSchedule,
    drivers: Sequence[BrownianDriver],
    scheme: str = "em",
    hooks: Sequence[StepHook] = (),
) -> list[Trajectory]:
    """Dispatch a batch to the dense integrator or to the exact OU sampler.

    Args:
        model: The SDE.
        x0s: Initial states; ``None`` starts exact OU paths from the stationary law.
        schedule: Checkpoints and dense step.
        drivers: One noise source per path.
        scheme: One of :data:`SCHEMES`.
        hooks: Accumulators fed during the run.

    Returns:
        One trajectory per driver.

    Raises:
        ConfigurationError: If the scheme is unknown or does not fit the model.
    """
    if scheme not in SCHEMES:
        raise ConfigurationError(f"scheme=<{scheme}> | unknown scheme")
    if scheme == "exact-ou":
        if model.ou_params is None:
            raise ConfigurationError(f"scheme=<exact-ou>, model=<{model.label}> | exact sampling needs an OU model")
        lam, mu_loc, sigma_scale = model.ou_params
        return exact_ou_batch(lam, mu_loc, sigma_scale, schedule, drivers, x0s, hooks)
    if x0s is None:
        raise ConfigurationError(f"scheme=<{scheme}> | dense schemes need explicit initial states")
    return integrate_batch(model, x0s, schedule, drivers, scheme, hooks)


def coupled_batch(
    model: SdeModel,
    x: float,
    y: float,
    schedule: CheckpointSchedule,
    drivers: Sequence[BrownianDriver],
    scheme: str = "em",
    hooks: Sequence[StepHook] = (),
) -> tuple[list[Trajectory], list[Trajectory], OrderingCounter]:
    """Integrate one pair of scalar paths from ``x < y`` per driver, each pair on its driver's stream.

    Args:
        model: A scalar SDE.
        x: Lower initial point.
        y: Upper initial point.
        schedule: Checkpoints and dense step.
        drivers: One shared noise source per pair.
        scheme: Dense stepping scheme.
        hooks: Extra accumulators over the interleaved pair batch.

    Returns:
        Lower trajectories, upper trajectories and the per-pair ordering counter.

    Raises:
        ConfigurationError: If the model is not scalar.
        PreconditionError: If ``x < y`` does not hold.
    """
    if model.dim != 1:
        raise ConfigurationError(f"dim=<{model.dim}> | coupling needs a scalar model")
    if not x < y:
        raise PreconditionError(f"x=<{x}>, y=<{y}> | need x < y")
    counter = OrderingCounter(len(drivers))
    paired = [driver for driver in drivers for _ in range(2)]
    starts = np.tile([[x], [y]], (len(drivers), 1))
    paths = integrate_batch(model, starts, schedule, paired, scheme, [counter, *hooks])
    return paths[0::2], paths[1::2], counter


def coupled_integrate(
    model: SdeModel,
    x: float,
    y: float,
    schedule: CheckpointSchedule,
    driver: BrownianDriver,
    scheme: str = "em",
    hooks: Sequence[StepHook] = (),
) -> tuple[Trajectory, Trajectory, int]:
    """Integrate two scalar paths from ``x < y`` on the same increment stream.

    Returns:
        The lower and upper trajectories and the number of dense steps on which the
        ordering ``X^x <= X^y`` failed.

    Raises:
        ConfigurationError: If the model is not scalar.
        PreconditionError: If ``x < y`` does not hold.
    """
    lows, highs, counter = coupled_batch(model, x, y, schedule, [driver], scheme, hooks)
    return lows[0], highs[0], int(counter.violations[0])
