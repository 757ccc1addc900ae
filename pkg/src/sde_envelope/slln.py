"""Marcinkiewicz-Zygmund scaled sums for stationary sequences and their continuous-time analogue."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import numpy.typing as npt
from scipy.signal import lfilter

from ._errors import GridError, ParameterError
from ._registry import Observable
from .ergodic import BirkhoffAverage
from .models import SdeModel
from .oracle import InvariantOracle1D, Verdict, auto_grid, tail_verdict
from .simulate import (
    STREAM_BRIDGE,
    STREAM_INCREMENTS,
    STREAM_INITIAL,
    BrownianDriver,
    CheckpointSchedule,
    simulate_batch,
)

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]

FUNCTIONALS: frozenset[str] = frozenset({"identity", "cube", "exp-square"})


class SequenceKind(str, Enum):
    """Families of stationary sequences."""

    PARETO = "pareto"
    OU_FUNCTIONAL = "ou-functional"
    CONSTANT = "constant"


def pareto_symmetric(seed: int, alpha: float, n: int, path_id: int = 0) -> Array:
    """IID symmetric Pareto draws ``sign * U^(-1/alpha)``, so ``P(|X| > x) = x^(-alpha)`` for x >= 1.

    Raises:
        ParameterError: If ``alpha`` is not positive.
    """
    if alpha <= 0.0:
        raise ParameterError(f"alpha=<{alpha}> | tail index must be positive")
    driver = BrownianDriver(seed, path_id)
    magnitude = driver.uniforms(0, n, STREAM_INCREMENTS) ** (-1.0 / alpha)
    sign = np.where(driver.uniforms(0, n, STREAM_BRIDGE) <= 0.5, -1.0, 1.0)
    return sign * magnitude


def _functional(name: str, alpha: float) -> Observable:
    match name:
        case "identity":
            return lambda x: x
        case "cube":
            return lambda x: x**3
        case "exp-square":
            # P(|f(X)| > y) decays like y^(-alpha) for standard normal X.
            return lambda x: np.sign(x) * np.exp(x * x / (2.0 * alpha))
        case _:
            raise ParameterError(f"functional=<{name}> | unknown functional")


@dataclass(frozen=True)
class StationarySequenceGen:
    """Deterministic-per-seed generator of a stationary sequence.

    Attributes:
        kind: Sequence family.
        seed: Master seed.
        alpha: Tail index of ``pareto`` and of the ``exp-square`` functional.
        functional: f applied to the OU samples of ``ou-functional``.
        value: The constant of ``constant``.
        scale: Factor applied to every draw.
        ou_rate: Rate of the OU process sampled at integer times.
        path_id: Stream selector, so one seed can feed several sequences.
    """

    kind: SequenceKind
    seed: int
    alpha: float = 0.8
    functional: str = "identity"
    value: float = 1.0
    scale: float = 1.0
    ou_rate: float = 1.0
    path_id: int = 0

    def __post_init__(self) -> None:
        """Validate the family parameters."""
        if self.kind is SequenceKind.PARETO and not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha=<{self.alpha}> | pareto tail index must lie in (0, 1)")
        if self.kind is SequenceKind.OU_FUNCTIONAL:
            if self.functional not in FUNCTIONALS:
                raise ParameterError(f"functional=<{self.functional}> | unknown functional")
            if self.alpha <= 0.0 or self.ou_rate <= 0.0:
                raise ParameterError(f"alpha=<{self.alpha}>, ou_rate=<{self.ou_rate}> | must be positive")

    @property
    def tail_index(self) -> float:
        """Supremum of the q with ``E|X_0|^q`` finite."""
        if self.kind is SequenceKind.PARETO:
            return self.alpha
        if self.kind is SequenceKind.OU_FUNCTIONAL and self.functional == "exp-square":
            return self.alpha
        return math.inf

    def moment_finite(self, p: float) -> bool:
        """Whether ``E|X_0|^p`` is finite."""
        return p < self.tail_index

    def draw(self, n: int) -> Array:
        """The first ``n`` terms of the sequence."""
        match self.kind:
            case SequenceKind.PARETO:
                raw = pareto_symmetric(self.seed, self.alpha, n, self.path_id)
            case SequenceKind.OU_FUNCTIONAL:
                raw = _functional(self.functional, self.alpha)(self._ou_samples(n))
            case SequenceKind.CONSTANT:
                raw = np.full(n, self.value)
        return self.scale * raw

    def _ou_samples(self, n: int) -> Array:
        driver = BrownianDriver(self.seed, self.path_id)
        factor = math.exp(-0.5 * self.ou_rate)
        spread = math.sqrt(-math.expm1(-self.ou_rate))
        start = driver.normals(0, 1, STREAM_INITIAL)[0, 0]
        if n <= 1:
            return np.full(max(n, 0), start)
        shocks = spread * driver.normals(0, n - 1)[:, 0]
        path, _ = lfilter([1.0], [1.0, -factor], shocks, zi=[factor * start])
        return np.concatenate([[start], path])


def _geometric_counts(n_max: int, ratio: float) -> npt.NDArray[np.int64]:
    count = int(math.floor(math.log(n_max) / math.log(ratio) + 1e-9)) + 1
    ns = np.unique(np.round(ratio ** np.arange(count, dtype=float)).astype(np.int64))
    if ns[-1] != n_max:
        ns = np.append(ns, n_max)
    return ns


@dataclass(frozen=True)
class ScaledSumSeries:
    """``n^(-1/p) sum_{k<n} X_k`` at geometric n."""

    ns: npt.NDArray[np.int64]
    values: Array
    p: float
    moment_finite: bool


def mz_scaled_sums(gen: StationarySequenceGen, p: float, n_max: int, ratio: float = 2.0) -> ScaledSumSeries:
    """Scaled partial sums of the sequence at ``n = 1, ratio, ratio^2, ..., n_max``.

    Args:
        gen: Sequence generator.
        p: Exponent in (0, 1).
        n_max: Last sample size.
        ratio: Geometric spacing of the sample sizes.

    Returns:
        The series. A ``p`` at or beyond the tail index only logs a warning.

    Raises:
        ParameterError: If ``p`` is outside (0, 1) or the sizes are invalid.
    """
    if not 0.0 < p < 1.0:
        raise ParameterError(f"p=<{p}> | must lie strictly inside (0, 1)")
    if n_max < 1 or ratio <= 1.0:
        raise ParameterError(f"n_max=<{n_max}>, ratio=<{ratio}> | invalid sample sizes")
    finite = gen.moment_finite(p)
    if not finite:
        logger.warning("p=<%s>, tail_index=<%s> | E|X|^p is infinite, scaled sums are expected to diverge",
                       p, gen.tail_index)

    ns = _geometric_counts(n_max, ratio)
    partial = np.cumsum(gen.draw(int(n_max)))
    values = partial[ns - 1] * ns.astype(float) ** (-1.0 / p)
    return ScaledSumSeries(ns, values, p, finite)


def running_moment(draws: Array, q: float, n_checkpoints: int = 20) -> tuple[npt.NDArray[np.int64], Array]:
    """Running mean of ``|X|^q`` at geometrically spaced sample sizes.

    Returns:
        Sample sizes and the running moments there; stabilizing values indicate a finite moment.
    """
    draws = np.asarray(draws, dtype=float)
    if draws.size == 0:
        raise ParameterError("draws=<empty> | need at least one draw")
    ns = np.unique(np.geomspace(1, draws.size, n_checkpoints).round().astype(np.int64))
    partial = np.cumsum(np.abs(draws) ** q)
    return ns, partial[ns - 1] / ns


# =============================================================================
# Continuous-time analogue
# =============================================================================


class _IntegralRecorder(BirkhoffAverage):
    """Birkhoff accumulator that snapshots the raw integral instead of the average."""

    def __init__(self, phi: Observable, n_paths: int) -> None:
        super().__init__(phi, n_paths)
        self.integrals: list[Array] = []

    def on_checkpoint(self, index: int, t: float, x: Array) -> None:
        self.integrals.append(self.integral.copy())


@dataclass(frozen=True)
class ConjectureSeries:
    """``T^-(1/p + eps_exp) int_0^T phi(X_s) ds`` at the checkpoints of one path."""

    times: Array
    values: Array
    decays: bool
    moment_finite: Optional[bool]


def _moment_verdict(oracle: InvariantOracle1D, phi: Observable, p: float) -> Verdict:
    def integrand(x: Array) -> Array:
        return np.abs(phi(np.asarray(x, dtype=float)[..., None])) ** p

    try:
        reach = auto_grid(oracle.coefficients, oracle.eps, tilt=0.5).x_max
    except GridError:
        return Verdict.INCONCLUSIVE
    return tail_verdict(oracle, integrand, reach, 1.5 * reach)


def mz_conjecture_continuous(
    model: SdeModel,
    phi: Observable,
    p: float,
    eps_exp: float,
    schedule: CheckpointSchedule,
    driver: BrownianDriver,
    scheme: str = "em",
    x0: Optional[float] = 0.0,
    oracle: Optional[InvariantOracle1D] = None,
) -> ConjectureSeries:
    """Scaled ergodic integral series of one path for the continuous-time conjecture.

    The decay flag compares the last value with the value at the first checkpoint at or
    beyond a tenth of the horizon. This is an experiment: nothing is asserted.

    Args:
        model: The SDE.
        phi: Observable.
        p: Moment exponent in (0, 1).
        eps_exp: Extra decay exponent, positive.
        schedule: Checkpoints ``T``.
        driver: Noise source of the path.
        scheme: Stepping scheme.
        x0: Initial state; ``None`` starts exact OU paths from the stationary law.
        oracle: Invariant law used to check that ``E|phi|^p`` is finite.

    Returns:
        The series with its decay flag and the oracle moment check (``None`` without oracle).

    Raises:
        ParameterError: If ``p`` or ``eps_exp`` is out of range.
    """
    if not 0.0 < p < 1.0:
        raise ParameterError(f"p=<{p}> | must lie strictly inside (0, 1)")
    if eps_exp <= 0.0:
        raise ParameterError(f"eps_exp=<{eps_exp}> | must be positive")

    moment_finite: Optional[bool] = None
    if oracle is not None:
        verdict = _moment_verdict(oracle, phi, p)
        moment_finite = verdict is not Verdict.DIVERGENT
        if not moment_finite:
            logger.warning("p=<%s> | E|phi|^p is infinite under the invariant law", p)

    recorder = _IntegralRecorder(phi, 1)
    x0s = None if x0 is None else np.full((1, model.dim), float(x0))
    simulate_batch(model, x0s, schedule, [driver], scheme, [recorder])

    times = schedule.times()[: len(recorder.integrals)]
    integrals = np.array([integral[0] for integral in recorder.integrals])
    values = integrals * times ** (-(1.0 / p + eps_exp))
    reference = int(np.searchsorted(times, times[-1] / 10.0)) if times.size else 0
    decays = bool(times.size and abs(values[-1]) < abs(values[reference]))
    return ConjectureSeries(times, values, decays, moment_finite)
