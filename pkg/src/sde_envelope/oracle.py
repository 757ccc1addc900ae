"""Quadrature ground truth for 1D Gibbs invariant laws ``exp(-U/eps) / Z``."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Callable, Optional, Sequence

import numpy as np
import numpy.typing as npt
from numpy.polynomial import Polynomial
from scipy.integrate import cumulative_trapezoid, simpson
from scipy.stats import kstest

from ._errors import GridError, ParameterError

if TYPE_CHECKING:
    from .simulate import BrownianDriver

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]
Integrand = Callable[[Array], Array]

DEFAULT_POINTS = 48001
# Auto grids reach out to where U/eps has risen by this much above its minimum.
TAIL_EXPONENT = 40.0
DECAY_FLOOR = 1e-14
TAIL_TOLERANCE = 1e-6
TAIL_POINTS = 20001


class Verdict(str, Enum):
    """Tail-integrability verdict."""

    FINITE = "finite"
    DIVERGENT = "divergent"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class GridSpec:
    """Uniform quadrature grid; Simpson's rule needs an odd number of points."""

    x_min: float
    x_max: float
    n_points: int = DEFAULT_POINTS

    def __post_init__(self) -> None:
        """Validate bounds and point count."""
        if not self.x_min < self.x_max:
            raise GridError(f"x_min=<{self.x_min}>, x_max=<{self.x_max}> | empty grid")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise GridError(f"n_points=<{self.n_points}> | need an odd number of at least 3 points")

    def points(self) -> Array:
        """Grid abscissae."""
        return np.linspace(self.x_min, self.x_max, self.n_points)


def potential_minimum(coefficients: Sequence[float]) -> float:
    """Global minimum of a confining polynomial potential over its real critical points."""
    poly = Polynomial(np.asarray(coefficients, dtype=float)).trim()
    critical = poly.deriv().roots()
    real = critical[np.abs(critical.imag) < 1e-9].real
    if real.size == 0:
        return float(poly(0.0))
    return float(np.min(poly(real)))


def auto_grid(coefficients: Sequence[float], eps: float, points: int = DEFAULT_POINTS, tilt: float = 0.0) -> GridSpec:
    """Symmetric grid [-R, R] on which ``(1 - tilt)(U - min U)/eps`` reaches the tail exponent.

    Args:
        coefficients: Ascending coefficients of U.
        eps: Temperature.
        points: Grid points.
        tilt: Exponent already eaten by an integrand growing like ``exp(tilt U/eps)``.

    Returns:
        The grid.

    Raises:
        GridError: If no radius up to 1e6 reaches the tail exponent.
    """
    poly = Polynomial(np.asarray(coefficients, dtype=float))
    floor = potential_minimum(coefficients)
    keep = 1.0 - tilt
    radius = 1.0
    while radius < 1e6:
        rise = min(float(poly(radius)), float(poly(-radius))) - floor
        if keep * rise / eps >= TAIL_EXPONENT:
            return GridSpec(-radius, radius, points)
        radius *= 1.25
    raise GridError(f"eps=<{eps}> | potential does not confine within radius 1e6")


@dataclass(frozen=True, eq=False)
class InvariantOracle1D:
    """Normalized density ``exp(-U/eps) / Z`` tabulated on a grid.

    Attributes:
        coefficients: Ascending coefficients of U.
        eps: Temperature.
        grid: Quadrature grid.
        x: Grid abscissae.
        density_values: Normalized density on the grid.
        normalizer: Z.
        cdf_table: Cumulative distribution on the grid, from 0 to 1.
    """

    coefficients: tuple[float, ...]
    eps: float
    grid: GridSpec
    x: Array
    density_values: Array
    normalizer: float
    cdf_table: Array
    _shift: float
    _mass: float

    def _unnormalized(self, x: Array) -> Array:
        potential = Polynomial(self.coefficients)(np.asarray(x, dtype=float))
        return np.exp(-(potential - self._shift) / self.eps)

    def density(self, x: Array) -> Array:
        """Normalized density at arbitrary positions, including off the grid."""
        return self._unnormalized(x) / self._mass

    def log_density(self, x: Array) -> Array:
        """Logarithm of :meth:`density`, finite wherever U is."""
        potential = Polynomial(self.coefficients)(np.asarray(x, dtype=float))
        return -(potential - self._shift) / self.eps - math.log(self._mass)

    def cdf(self, x: Array) -> Array:
        """Cumulative distribution by linear interpolation of the table."""
        return np.interp(np.asarray(x, dtype=float), self.x, self.cdf_table)

    def quantile(self, u: Array) -> Array:
        """Inverse CDF by monotone linear interpolation of the table."""
        return np.interp(np.asarray(u, dtype=float), self.cdf_table, self.x)

    def variance(self) -> float:
        """Variance of the invariant law."""
        mean = expectation(self, lambda x: x)
        return expectation(self, lambda x: x * x) - mean * mean


def build_oracle(
    coefficients: Sequence[float],
    eps: float,
    grid: Optional[GridSpec] = None,
    points: int = DEFAULT_POINTS,
) -> InvariantOracle1D:
    """Normalize ``exp(-U/eps)`` by composite Simpson quadrature.

    Args:
        coefficients: Ascending coefficients of U.
        eps: Temperature.
        grid: Quadrature grid; chosen automatically when omitted.
        points: Grid points for the automatic grid.

    Returns:
        The oracle.

    Raises:
        ParameterError: If ``eps`` is not positive.
        GridError: If the density has not decayed at both grid ends.
    """
    if eps <= 0.0:
        raise ParameterError(f"eps=<{eps}> | temperature must be positive")
    coefficients = tuple(float(c) for c in coefficients)
    if grid is None:
        grid = auto_grid(coefficients, eps, points)

    x = grid.points()
    shift = potential_minimum(coefficients)
    unnormalized = np.exp(-(Polynomial(coefficients)(x) - shift) / eps)
    peak = float(unnormalized.max())
    if max(unnormalized[0], unnormalized[-1]) >= DECAY_FLOOR * peak:
        raise GridError(
            f"x_min=<{grid.x_min}>, x_max=<{grid.x_max}> | density has not decayed at the grid ends, widen the grid"
        )

    mass = float(simpson(unnormalized, x=x))
    density = unnormalized / mass
    cdf = cumulative_trapezoid(density, x, initial=0.0)
    cdf = np.maximum.accumulate(cdf / cdf[-1])
    normalizer = math.exp(-shift / eps) * mass

    logger.debug("eps=<%s>, grid=<%s>, z=<%s> | built oracle", eps, grid, normalizer)
    return InvariantOracle1D(coefficients, float(eps), grid, x, density, normalizer, cdf, shift, mass)


def normalizer(oracle: InvariantOracle1D, rule: str = "simpson") -> float:
    """Recompute Z with the given rule (``simpson`` or ``midpoint``)."""
    if rule == "simpson":
        mass = float(simpson(oracle._unnormalized(oracle.x), x=oracle.x))
    elif rule == "midpoint":
        mids, width = _midpoints(oracle)
        mass = float(np.sum(oracle._unnormalized(mids)) * width)
    else:
        raise ParameterError(f"rule=<{rule}> | unknown quadrature rule")
    return math.exp(-oracle._shift / oracle.eps) * mass


def _midpoints(oracle: InvariantOracle1D) -> tuple[Array, float]:
    width = (oracle.grid.x_max - oracle.grid.x_min) / (oracle.grid.n_points - 1)
    return 0.5 * (oracle.x[:-1] + oracle.x[1:]), width


def expectation(oracle: InvariantOracle1D, phi: Integrand, rule: str = "simpson") -> float:
    """Quadrature value of E_mu[phi].

    Args:
        oracle: Invariant law.
        phi: Vectorized observable on scalar positions.
        rule: ``simpson`` (primary) or ``midpoint`` (independent cross-check).

    Returns:
        The expectation.

    Raises:
        GridError: If ``phi`` times the density has not decayed at the grid ends.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        integrand = np.asarray(phi(oracle.x), dtype=float) * oracle.density_values
    magnitude = np.abs(integrand)
    if not np.all(np.isfinite(integrand)):
        raise GridError("phi=<non-finite> | integrand overflows on the grid")
    peak = float(magnitude.max())
    if peak > 0.0 and max(magnitude[0], magnitude[-1]) >= DECAY_FLOOR * peak:
        raise GridError("phi=<...> | integrand has not decayed at the grid ends, widen the grid")

    if rule == "simpson":
        return float(simpson(integrand, x=oracle.x))
    if rule == "midpoint":
        mids, width = _midpoints(oracle)
        weights = oracle._unnormalized(mids)
        return float(np.sum(np.asarray(phi(mids), dtype=float) * weights) / np.sum(weights))
    raise ParameterError(f"rule=<{rule}> | unknown quadrature rule")


def widened_expectation(oracle: InvariantOracle1D, phi: Integrand, growth: float = 1.5, attempts: int = 6) -> float:
    """E_mu[phi], widening the grid while the integrand outlives it."""
    current = oracle
    for _ in range(attempts):
        try:
            return expectation(current, phi)
        except GridError:
            grid = current.grid
            wider = GridSpec(grid.x_min * growth, grid.x_max * growth, grid.n_points)
            logger.debug("grid=<%s> | widening oracle grid", wider)
            current = build_oracle(current.coefficients, current.eps, wider)
    return expectation(current, phi)


def sample_stationary(
    oracle: InvariantOracle1D, driver: "BrownianDriver", count: int, start: int = 0, stream: Optional[int] = None
) -> Array:
    """Draw from the invariant law by inverse-CDF transform of the driver's uniforms."""
    from .simulate import STREAM_INITIAL

    uniforms = driver.uniforms(start, count, STREAM_INITIAL if stream is None else stream)
    return oracle.quantile(uniforms)


def ks_statistic(oracle: InvariantOracle1D, draws: Array) -> float:
    """Kolmogorov-Smirnov distance between draws and the oracle CDF."""
    return float(kstest(np.asarray(draws, dtype=float), oracle.cdf).statistic)


def _truncated(oracle: InvariantOracle1D, psi: Integrand, radius: float, points: int, log_scale: bool) -> float:
    x = np.linspace(-radius, radius, points)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        if log_scale:
            values = np.exp(np.asarray(psi(x), dtype=float) + oracle.log_density(x))
        else:
            values = np.asarray(psi(x), dtype=float) * oracle.density(x)
        total = simpson(values, x=x)
    return float(total)


def tail_verdict(
    oracle: InvariantOracle1D,
    psi: Integrand,
    r1: float,
    r2: float,
    tolerance: float = TAIL_TOLERANCE,
    points: int = TAIL_POINTS,
    log_scale: bool = False,
) -> Verdict:
    """Judge whether ``integral psi dmu`` is finite from truncations at growing radii.

    Truncations at ``r0 = 2 r1 - r2`` (or ``r1/2``), ``r1`` and ``r2`` are compared: the
    integral is finite when the last two agree to ``tolerance``, divergent when the outer
    shell contributes at least as much as the inner one, and inconclusive otherwise.

    Args:
        oracle: Invariant law.
        psi: Non-negative integrand on scalar positions.
        r1: Inner truncation radius.
        r2: Outer truncation radius.
        tolerance: Relative change counted as converged.
        points: Quadrature points per truncation.
        log_scale: ``psi`` returns the logarithm of the integrand, which is then combined with
            the log density so that fast-growing integrands do not overflow.

    Returns:
        The verdict.

    Raises:
        ParameterError: If the radii are not ordered.
    """
    if not 0.0 < r1 < r2:
        raise ParameterError(f"r1=<{r1}>, r2=<{r2}> | need 0 < r1 < r2")
    r0 = 2.0 * r1 - r2 if 2.0 * r1 > r2 else 0.5 * r1

    inner, middle, outer = (_truncated(oracle, psi, r, points, log_scale) for r in (r0, r1, r2))
    if not all(math.isfinite(v) for v in (inner, middle, outer)):
        return Verdict.DIVERGENT
    if outer == 0.0:
        return Verdict.FINITE
    if abs(outer - middle) <= tolerance * abs(outer):
        return Verdict.FINITE
    if outer - middle >= middle - inner:
        return Verdict.DIVERGENT
    return Verdict.INCONCLUSIVE
