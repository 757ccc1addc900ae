"""SDE models, Lyapunov functions and runtime checks of the envelope hypotheses.

Every model and Lyapunov function evaluates on arrays whose last axis is the state
dimension, so the same callables serve single points, batches of paths and blocks of
dense steps.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
import numpy.typing as npt
from numpy.polynomial import Polynomial

from ._errors import GridError, ParameterError
from .oracle import TAIL_TOLERANCE, InvariantOracle1D, Verdict, auto_grid, potential_minimum, tail_verdict

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]
ScalarField = Callable[[Array], Array]
VectorField = Callable[[Array], Array]

# Seed of the deterministic sample directions used by growth and monotonicity checks.
DIRECTION_SEED = 20_140_301


@dataclass(frozen=True)
class SdeModel:
    """Autonomous SDE dX = b(X) dt + sigma(X) dW.

    Attributes:
        dim: State dimension.
        dim_w: Dimension of the driving Wiener process.
        drift: ``x (..., dim) -> b(x) (..., dim)``.
        diffusion: ``x (..., dim) -> sigma(x) (..., dim, dim_w)``.
        growth_exponent: Declared polynomial growth exponent m of the coefficients.
        label: Human-readable name.
        potential: Ascending coefficients of U when the model is a 1D gradient flow
            ``dX = -U'(X) dt + sqrt(2 eps) dW``; enables the invariant-density oracle.
        temperature: The eps of that gradient flow.
        ou_params: ``(lam, mu_loc, sigma_scale)`` when the model is an OU process with an exact sampler.
        drift_coefficients: Ascending coefficients of a scalar polynomial drift.
        noise_level: Constant scalar diffusion. Together with ``drift_coefficients`` it selects the compiled
            stepper in ``simulate``.
    """

    dim: int
    dim_w: int
    drift: VectorField
    diffusion: VectorField
    growth_exponent: int
    label: str
    potential: Optional[tuple[float, ...]] = None
    temperature: Optional[float] = None
    ou_params: Optional[tuple[float, float, float]] = None
    drift_coefficients: Optional[tuple[float, ...]] = None
    noise_level: Optional[float] = None

    def __post_init__(self) -> None:
        """Validate dimensions and the growth exponent."""
        if self.dim < 1 or self.dim_w < 1:
            raise ParameterError(f"dim=<{self.dim}>, dim_w=<{self.dim_w}> | dimensions must be positive")
        if self.growth_exponent < 0:
            raise ParameterError(f"growth_exponent=<{self.growth_exponent}> | must be non-negative")

    @property
    def has_oracle(self) -> bool:
        """Whether a quadrature oracle for the invariant law can be built."""
        return self.potential is not None and self.temperature is not None


@dataclass(frozen=True)
class LyapunovSpec:
    """Lyapunov function V with its derivatives and transform parameter delta.

    Attributes:
        value: ``x (..., dim) -> V(x) (...)``.
        gradient: ``x (..., dim) -> grad V(x) (..., dim)``.
        hessian: ``x (..., dim) -> Hess V(x) (..., dim, dim)``.
        delta: Exponent of the transform ``exp(delta V)``, strictly inside (0, 1).
        label: Human-readable name.
        r_mono: Radius beyond which V is declared nondecreasing in the norm.
    """

    value: ScalarField
    gradient: VectorField
    hessian: VectorField
    delta: float
    label: str
    r_mono: float = 1.0

    def __post_init__(self) -> None:
        """Validate the transform parameter."""
        if not 0.0 < self.delta < 1.0:
            raise ParameterError(f"delta=<{self.delta}> | must lie strictly inside (0, 1)")
        if self.r_mono < 0.0:
            raise ParameterError(f"r_mono=<{self.r_mono}> | must be non-negative")


@dataclass(frozen=True)
class LangevinModel:
    """Polynomial potential data of ``dX = -U'(X) dt + sqrt(2 eps) dW``.

    Attributes:
        coefficients: Ascending coefficients of U.
        leading: Leading coefficient c.
        half_degree: p, with deg U = 2p.
        eps: Temperature.
    """

    coefficients: tuple[float, ...]
    leading: float
    half_degree: int
    eps: float

    @classmethod
    def from_potential(cls, coefficients: Sequence[float], eps: float) -> "LangevinModel":
        """Validate a potential and wrap it.

        Args:
            coefficients: Ascending coefficients of U.
            eps: Temperature.

        Returns:
            The validated Langevin data.

        Raises:
            ParameterError: If exp(-U/eps) is not integrable.
        """
        poly = Polynomial(np.asarray(coefficients, dtype=float)).trim()
        degree = poly.degree()
        leading = float(poly.coef[-1])
        if eps <= 0.0:
            raise ParameterError(f"eps=<{eps}> | temperature must be positive")
        if degree < 2 or degree % 2:
            raise ParameterError(f"degree=<{degree}> | potential degree must be even and at least 2")
        if leading <= 0.0:
            raise ParameterError(f"leading=<{leading}> | leading coefficient must be positive")
        return cls(tuple(float(c) for c in poly.coef), leading, degree // 2, float(eps))

    def potential(self, x: Array) -> Array:
        """Evaluate U at scalar positions."""
        return Polynomial(self.coefficients)(np.asarray(x, dtype=float))

    @property
    def envelope_constant(self) -> float:
        """The almost-sure bound (eps/c)^(1/2p) on limsup |X_t| / (log t)^(1/2p)."""
        return float((self.eps / self.leading) ** (1.0 / (2 * self.half_degree)))


@dataclass(frozen=True)
class GrowthReport:
    """Outcome of :func:`growth_check`.

    Attributes:
        c_hat: Largest sampled ratio (|b| + |sigma|) / (1 + |x|^m).
        ratios: Largest ratio per radius.
        passed: Whether the ratio stopped growing across the two largest radii.
    """

    c_hat: float
    ratios: tuple[float, ...]
    passed: bool


@dataclass(frozen=True)
class LyapunovReport:
    """Outcome of :func:`check_lyapunov`."""

    nonnegative: bool
    strictly_positive: bool
    monotone: bool
    superlogarithmic: bool

    @property
    def passed(self) -> bool:
        """Whether every hypothesis held on the sampled points."""
        return self.nonnegative and self.monotone and self.superlogarithmic


# =============================================================================
# Built-in models
# =============================================================================


def _scalar_drift(poly: Polynomial) -> VectorField:
    def drift(x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        return poly(x[..., 0])[..., None]

    return drift


def _constant_diffusion(value: float) -> VectorField:
    def diffusion(x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1] + (1, 1), value)

    return diffusion


def _coefficients(poly: Polynomial) -> tuple[float, ...]:
    return tuple(float(c) for c in poly.coef)


def make_ou(lam: float, mu_loc: float = 0.0, sigma_scale: float = 1.0) -> SdeModel:
    """Build the OU model matching the time change ``sigma e^{-lam t/2} B(e^{lam t}) + mu``.

    Args:
        lam: Rate of the time change; the drift is ``-(lam/2)(x - mu_loc)``.
        mu_loc: Stationary mean.
        sigma_scale: Stationary standard deviation.

    Returns:
        A 1D model with constant diffusion ``sigma_scale * sqrt(lam)`` and m = 1.

    Raises:
        ParameterError: If ``lam`` or ``sigma_scale`` is not positive.
    """
    if lam <= 0.0:
        raise ParameterError(f"lam=<{lam}> | must be positive")
    if sigma_scale <= 0.0:
        raise ParameterError(f"sigma_scale=<{sigma_scale}> | must be positive")

    drift_poly = Polynomial([0.5 * lam * mu_loc, -0.5 * lam])
    noise = sigma_scale * math.sqrt(lam)
    # U = (lam/4)(x - mu)^2 and eps = sigma^2 lam / 2 give the Gaussian N(mu, sigma^2).
    potential = (0.25 * lam * mu_loc**2, -0.5 * lam * mu_loc, 0.25 * lam)
    return SdeModel(
        dim=1,
        dim_w=1,
        drift=_scalar_drift(drift_poly),
        diffusion=_constant_diffusion(noise),
        growth_exponent=1,
        label=f"ou(lam={lam:g}, mu={mu_loc:g}, sigma={sigma_scale:g})",
        potential=potential,
        temperature=0.5 * sigma_scale**2 * lam,
        ou_params=(float(lam), float(mu_loc), float(sigma_scale)),
        drift_coefficients=_coefficients(drift_poly),
        noise_level=noise,
    )


def make_langevin(coefficients: Sequence[float], eps: float) -> tuple[SdeModel, LangevinModel]:
    """Build ``dX = -U'(X) dt + sqrt(2 eps) dW`` for a polynomial potential.

    Args:
        coefficients: Ascending coefficients of U.
        eps: Temperature.

    Returns:
        The SDE model (m = 2p - 1) and its validated potential data.

    Raises:
        ParameterError: If the degree is odd or the leading coefficient is not positive.
    """
    langevin = LangevinModel.from_potential(coefficients, eps)
    drift_poly = -Polynomial(langevin.coefficients).deriv()
    model = SdeModel(
        dim=1,
        dim_w=1,
        drift=_scalar_drift(drift_poly),
        diffusion=_constant_diffusion(math.sqrt(2.0 * langevin.eps)),
        growth_exponent=2 * langevin.half_degree - 1,
        label=f"langevin(p={langevin.half_degree}, c={langevin.leading:g}, eps={langevin.eps:g})",
        potential=langevin.coefficients,
        temperature=langevin.eps,
        drift_coefficients=_coefficients(drift_poly),
        noise_level=math.sqrt(2.0 * langevin.eps),
    )
    logger.debug("model=<%s> | built langevin model", model.label)
    return model, langevin


def make_polynomial_drift(drift_coefficients: Sequence[float], diffusion: float) -> SdeModel:
    """Build a 1D model with polynomial drift and constant diffusion.

    The model is the gradient flow of ``U = -integral(b)`` at temperature ``diffusion^2 / 2``,
    so an oracle exists whenever that potential is confining.

    Args:
        drift_coefficients: Ascending coefficients of b.
        diffusion: Constant diffusion coefficient.

    Returns:
        The model with m equal to the drift degree.

    Raises:
        ParameterError: If ``diffusion`` is not positive.
    """
    if diffusion <= 0.0:
        raise ParameterError(f"diffusion=<{diffusion}> | must be positive")
    drift_poly = Polynomial(np.asarray(drift_coefficients, dtype=float)).trim()
    potential = -drift_poly.integ()
    return SdeModel(
        dim=1,
        dim_w=1,
        drift=_scalar_drift(drift_poly),
        diffusion=_constant_diffusion(float(diffusion)),
        growth_exponent=max(drift_poly.degree(), 0),
        label=f"polynomial-drift(degree={drift_poly.degree()})",
        potential=tuple(float(c) for c in potential.coef),
        temperature=0.5 * float(diffusion) ** 2,
        drift_coefficients=_coefficients(drift_poly),
        noise_level=float(diffusion),
    )


# =============================================================================
# Built-in Lyapunov functions
# =============================================================================


def quadratic_lyapunov(dim: int, delta: float, r_mono: float = 1.0) -> LyapunovSpec:
    """V(x) = |x|^2 / 2."""

    def value(x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum(x * x, axis=-1)

    def gradient(x: Array) -> Array:
        return np.asarray(x, dtype=float).copy()

    def hessian(x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(dim), x.shape[:-1] + (dim, dim)).copy()

    return LyapunovSpec(value, gradient, hessian, delta, "quadratic", r_mono)


def polynomial_lyapunov(coefficients: Sequence[float], delta: float, r_mono: float = 1.0) -> LyapunovSpec:
    """1D polynomial V given by ascending coefficients."""
    poly = Polynomial(np.asarray(coefficients, dtype=float))
    first = poly.deriv()
    second = first.deriv()

    def value(x: Array) -> Array:
        return poly(np.asarray(x, dtype=float)[..., 0])

    def gradient(x: Array) -> Array:
        return first(np.asarray(x, dtype=float)[..., 0])[..., None]

    def hessian(x: Array) -> Array:
        return second(np.asarray(x, dtype=float)[..., 0])[..., None, None]

    return LyapunovSpec(value, gradient, hessian, delta, f"polynomial(degree={poly.degree()})", r_mono)


def gibbs_lyapunov(langevin: LangevinModel, delta: float, r_mono: float = 1.0) -> LyapunovSpec:
    """V(x) = (U(x) - min U) / eps, the exponent of the Gibbs density."""
    shift = potential_minimum(langevin.coefficients)
    scaled = [c / langevin.eps for c in langevin.coefficients]
    scaled[0] -= shift / langevin.eps
    spec = polynomial_lyapunov(scaled, delta, r_mono)
    return replace(spec, label=f"gibbs(p={langevin.half_degree}, eps={langevin.eps:g})")


def constant_lyapunov(level: float, dim: int, delta: float) -> LyapunovSpec:
    """Constant V, whose transform has vanishing rates."""

    def value(x: Array) -> Array:
        return np.full(np.asarray(x).shape[:-1], float(level))

    def gradient(x: Array) -> Array:
        return np.zeros(np.asarray(x).shape[:-1] + (dim,))

    def hessian(x: Array) -> Array:
        return np.zeros(np.asarray(x).shape[:-1] + (dim, dim))

    return LyapunovSpec(value, gradient, hessian, delta, f"constant({level:g})", 0.0)


# =============================================================================
# Hypothesis checks
# =============================================================================


def _sample_directions(dim: int, count: int) -> Array:
    if dim == 1:
        return np.resize(np.array([[1.0], [-1.0]]), (max(count, 2), 1))
    rng = np.random.Generator(np.random.Philox(DIRECTION_SEED))
    directions = rng.standard_normal((max(count, 1), dim))
    return directions / np.linalg.norm(directions, axis=-1, keepdims=True)


def growth_check(model: SdeModel, radii: Sequence[float], samples_per_radius: int = 16) -> GrowthReport:
    """Estimate the polynomial growth constant of the coefficients on sampled rings.

    Args:
        model: The model to check.
        radii: Positive, strictly increasing ring radii (at least two).
        samples_per_radius: Sample directions per ring.

    Returns:
        The largest ratio (|b| + |sigma|) / (1 + |x|^m) and whether it stopped growing
        between the two largest radii. The check reports, it never certifies.

    Raises:
        ParameterError: If the radii are not positive and strictly increasing.
    """
    r = np.asarray(radii, dtype=float)
    if r.size < 2 or np.any(r <= 0.0) or np.any(np.diff(r) <= 0.0):
        raise ParameterError(f"radii=<{list(radii)}> | need at least two positive increasing radii")

    directions = _sample_directions(model.dim, samples_per_radius)
    points = r[:, None, None] * directions[None, :, :]
    drift = np.linalg.norm(model.drift(points), axis=-1)
    noise = np.linalg.norm(model.diffusion(points), axis=(-2, -1))
    ratios = np.max((drift + noise) / (1.0 + r[:, None] ** model.growth_exponent), axis=1)

    passed = bool(ratios[-1] <= ratios[-2] * (1.0 + 1e-9))
    logger.debug("model=<%s>, m=<%d>, c_hat=<%s>, passed=<%s> | growth check", model.label,
                 model.growth_exponent, ratios.max(), passed)
    return GrowthReport(float(ratios.max()), tuple(float(v) for v in ratios), passed)


def check_lyapunov(lyap: LyapunovSpec, dim: int, radii: Sequence[float], samples: int = 16) -> LyapunovReport:
    """Check positivity, radial monotonicity and super-logarithmic growth of V.

    Monotonicity is read radially: along every sampled ray V(r u) must be nondecreasing
    in r beyond ``lyap.r_mono``.

    Args:
        lyap: The Lyapunov function.
        dim: State dimension.
        radii: Ring radii; the largest bounds the monotonicity scan.
        samples: Sample directions.

    Returns:
        The per-hypothesis verdicts.
    """
    directions = _sample_directions(dim, samples)
    r_max = float(max(radii))
    scan = np.linspace(0.0, r_max, 401)
    values = lyap.value(scan[:, None, None] * directions[None, :, :])

    nonnegative = bool(np.all(values >= 0.0))
    strictly_positive = bool(np.all(values > 0.0))
    if nonnegative and not strictly_positive:
        logger.warning("lyapunov=<%s> | V vanishes on sampled points, accepting non-negative V", lyap.label)

    beyond = scan >= lyap.r_mono
    steps = np.diff(values[beyond], axis=0)
    tolerance = 1e-12 * max(1.0, float(np.abs(values).max()))
    monotone = bool(np.all(steps >= -tolerance))

    log_radii = np.asarray([rr for rr in radii if rr > math.e], dtype=float)
    if log_radii.size >= 2:
        ratio = lyap.value(log_radii[:, None, None] * directions[None, :, :]) / np.log(log_radii)[:, None]
        superlogarithmic = bool(np.all(np.diff(ratio.min(axis=1)) > 0.0))
    else:
        superlogarithmic = False

    return LyapunovReport(nonnegative, strictly_positive, monotone, superlogarithmic)


def _integrability_radii(oracle: InvariantOracle1D, delta: float) -> tuple[float, float]:
    reach = max(abs(oracle.grid.x_min), abs(oracle.grid.x_max))
    if 0.0 < delta < 1.0:
        try:
            reach = max(reach, auto_grid(oracle.coefficients, oracle.eps, tilt=delta).x_max)
        except GridError:
            logger.debug("delta=<%s> | no tilted grid, using the oracle grid radius", delta)
    return reach, 1.5 * reach


def integrability_probe(
    lyap: LyapunovSpec,
    oracle: InvariantOracle1D,
    deltas: Sequence[float],
    radii: Optional[tuple[float, float]] = None,
    tolerance: float = TAIL_TOLERANCE,
) -> dict[float, Verdict]:
    """Judge finiteness of the exponential moments of V under the oracle's law.

    The integrand ``exp(delta V)`` is combined with the density in log space. Unless radii
    are given, each exponent is truncated where the tilted density ``exp(-(1 - delta) U/eps)``
    has decayed as far as the oracle grid tails, which suits V of the order of U/eps.

    Args:
        lyap: The Lyapunov function (1D).
        oracle: Invariant law.
        deltas: Exponents to judge.
        radii: Truncation radii shared by every exponent.
        tolerance: Relative change between truncations that counts as converged.

    Returns:
        Verdict per exponent.
    """
    verdicts: dict[float, Verdict] = {}
    for delta in deltas:
        r1, r2 = radii if radii is not None else _integrability_radii(oracle, float(delta))

        def log_integrand(x: Array, delta: float = float(delta)) -> Array:
            return delta * lyap.value(x[..., None])

        verdicts[float(delta)] = tail_verdict(oracle, log_integrand, r1, r2, tolerance, log_scale=True)
    return verdicts
