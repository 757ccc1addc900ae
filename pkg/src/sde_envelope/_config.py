"""Pydantic configuration models for envelope experiments."""

import math
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ._errors import MissingInputError

Scheme = Literal["em", "tamed", "milstein", "exact-ou"]
ObservableName = Literal["x", "x2", "abs_pow", "sign_pow", "exp_delta_v"]
GaugeName = Literal["sqrt_2log", "log_power", "log"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSpec(_Strict):
    """Which SDE to simulate.

    Attributes:
        kind: ``ou``, ``langevin`` or ``custom-polynomial-drift``.
        lam: OU rate.
        mu_loc: OU stationary mean.
        sigma_scale: OU stationary standard deviation.
        coefficients: Ascending coefficients of the Langevin potential U.
        eps: Langevin temperature.
        drift_coefficients: Ascending coefficients of a polynomial drift.
        diffusion: Constant diffusion of the polynomial-drift model.
    """

    kind: Literal["ou", "langevin", "custom-polynomial-drift"] = Field("ou", description="Model family")
    lam: float = Field(1.0, gt=0.0, description="OU rate")
    mu_loc: float = Field(0.0, description="OU stationary mean")
    sigma_scale: float = Field(1.0, gt=0.0, description="OU stationary standard deviation")
    coefficients: Optional[list[float]] = Field(None, description="Ascending coefficients of U")
    eps: float = Field(1.0, gt=0.0, description="Langevin temperature")
    drift_coefficients: Optional[list[float]] = Field(None, description="Ascending drift coefficients")
    diffusion: float = Field(1.0, gt=0.0, description="Constant diffusion coefficient")

    @model_validator(mode="after")
    def coefficients_present(self) -> "ModelSpec":
        """Require the polynomial of polynomial models."""
        if self.kind == "langevin" and not self.coefficients:
            raise ValueError("coefficients=<missing> | langevin models need potential coefficients")
        if self.kind == "custom-polynomial-drift" and not self.drift_coefficients:
            raise ValueError("drift_coefficients=<missing> | polynomial-drift models need drift coefficients")
        return self


class ScheduleSpec(_Strict):
    """Geometric checkpoints ``t0 * ratio**k`` over a dense grid of step ``dt``."""

    t0: float = Field(math.e, gt=0.0, description="First checkpoint")
    ratio: float = Field(2.0, gt=1.0, description="Checkpoint growth factor")
    count: int = Field(10, ge=1, description="Number of checkpoints")
    dt: float = Field(1e-2, gt=0.0, description="Dense step")

    @model_validator(mode="after")
    def step_fits(self) -> "ScheduleSpec":
        """Keep the dense step below the first checkpoint."""
        if self.dt > self.t0:
            raise ValueError(f"dt=<{self.dt}> | must not exceed t0=<{self.t0}>")
        return self


class LyapunovConfig(_Strict):
    """Lyapunov function V used by the transform and envelope estimators."""

    kind: Literal["quadratic", "gibbs", "polynomial"] = "quadratic"
    coefficients: Optional[list[float]] = Field(None, description="Ascending coefficients of a polynomial V")
    r_mono: float = Field(1.0, ge=0.0, description="Radius beyond which V is monotone")

    @model_validator(mode="after")
    def coefficients_present(self) -> "LyapunovConfig":
        """Require coefficients for a polynomial V."""
        if self.kind == "polynomial" and not self.coefficients:
            raise ValueError("coefficients=<missing> | polynomial lyapunov functions need coefficients")
        return self


class EnvelopeEstimator(_Strict):
    """Running sups of ``V(X)/log t`` and ``|X|/g(t)``."""

    kind: Literal["envelope"] = "envelope"
    delta: float = Field(0.9, gt=0.0, lt=1.0)
    gauge: GaugeName = "sqrt_2log"
    gauge_power: float = Field(0.5, gt=0.0)
    t_min: float = Field(math.e, gt=1.0)


class MartingaleEstimator(_Strict):
    """Martingale ``M``, its bracket and the LIL ratio."""

    kind: Literal["martingale"] = "martingale"
    delta: float = Field(0.2, gt=0.0, lt=1.0)


class BirkhoffEstimator(_Strict):
    """Running ergodic average of a named observable."""

    kind: Literal["birkhoff"] = "birkhoff"
    phi: ObservableName = "x2"
    power: float = Field(1.0, gt=0.0)
    delta: float = Field(0.2, gt=0.0, lt=1.0)


class CouplingEstimator(_Strict):
    """Two paths from ordered points on one noise stream."""

    kind: Literal["coupling"] = "coupling"
    x_low: float = 0.0
    x_high: float = 1.0

    @model_validator(mode="after")
    def ordered(self) -> "CouplingEstimator":
        """Require ``x_low < x_high``."""
        if not self.x_low < self.x_high:
            raise ValueError(f"x_low=<{self.x_low}>, x_high=<{self.x_high}> | need x_low < x_high")
        return self


class SllnEstimator(_Strict):
    """Scaled sums of stationary sequences or of ergodic integrals.

    ``pareto`` and ``ou-functional`` draw ``n_max`` terms per seed; ``continuous`` scales
    the ergodic integral of ``phi`` along the configured model up to the schedule horizon.
    """

    kind: Literal["slln"] = "slln"
    family: Literal["pareto", "ou-functional", "continuous"] = "pareto"
    alpha: float = Field(0.8, gt=0.0)
    p: float = Field(0.5, gt=0.0, lt=1.0)
    eps_exp: float = Field(0.1, gt=0.0)
    n_max: int = Field(1_000_000, ge=1)
    functional: Literal["identity", "cube", "exp-square"] = "identity"
    ou_rate: float = Field(1.0, gt=0.0)
    phi: ObservableName = "sign_pow"
    power: float = Field(3.0, gt=0.0)
    delta: float = Field(0.2, gt=0.0, lt=1.0)
    seeds: int = Field(200, ge=1)

    @model_validator(mode="after")
    def pareto_index(self) -> "SllnEstimator":
        """Keep the Pareto tail index inside (0, 1)."""
        if self.family == "pareto" and self.alpha >= 1.0:
            raise ValueError(f"alpha=<{self.alpha}> | pareto tail index must lie in (0, 1)")
        return self


Estimator = Annotated[
    Union[EnvelopeEstimator, MartingaleEstimator, BirkhoffEstimator, CouplingEstimator, SllnEstimator],
    Field(discriminator="kind"),
]


class EnsembleSpec(_Strict):
    """Seeds and batching of the path ensemble."""

    seeds: int = Field(10, ge=1, description="Number of paths")
    master_seed: int = Field(0, ge=0, lt=2**64, description="Master seed of every noise stream")
    batch_size: int = Field(16, ge=1, description="Paths per work unit")


class InvariantSpec(_Strict):
    """Quadrature grid of the invariant-law oracle."""

    grid_radius: Union[Literal["auto"], float] = "auto"
    points: int = Field(48001, ge=3)

    @field_validator("grid_radius")
    @classmethod
    def radius_positive(cls, v: Union[str, float]) -> Union[str, float]:
        """Reject non-positive radii."""
        if not isinstance(v, str) and v <= 0.0:
            raise ValueError(f"grid_radius=<{v}> | must be positive")
        return v

    @field_validator("points")
    @classmethod
    def points_odd(cls, v: int) -> int:
        """Simpson's rule needs an odd point count."""
        if v % 2 == 0:
            raise ValueError(f"points=<{v}> | must be odd")
        return v


class ExperimentConfig(_Strict):
    """One experiment: a model, a scheme, a schedule and the estimators to run.

    Attributes:
        model: SDE to simulate.
        scheme: Stepping scheme.
        schedule: Checkpoints and dense step.
        x0: Initial state, or ``stationary`` to draw it from the invariant law.
        lyapunov: Lyapunov function for the transform-based estimators.
        estimators: Estimators to run.
        ensemble: Seeds and batching.
        invariant: Oracle grid.
        output_dir: Default output directory when ``--out`` is not given.
    """

    model: ModelSpec = Field(default_factory=ModelSpec)
    scheme: Scheme = "em"
    schedule: ScheduleSpec = Field(default_factory=ScheduleSpec)
    x0: Union[Literal["stationary"], float] = 0.0
    lyapunov: LyapunovConfig = Field(default_factory=LyapunovConfig)
    estimators: list[Estimator] = Field(default_factory=list)
    ensemble: EnsembleSpec = Field(default_factory=EnsembleSpec)
    invariant: InvariantSpec = Field(default_factory=InvariantSpec)
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def compatible(self) -> "ExperimentConfig":
        """Check cross-field rules between scheme, model and estimators."""
        kinds = [estimator.kind for estimator in self.estimators]
        for kind in ("envelope", "martingale", "coupling", "slln"):
            if kinds.count(kind) > 1:
                raise ValueError(f"estimators=<{kind}> | at most one {kind} estimator per experiment")
        if self.scheme == "exact-ou":
            if self.model.kind != "ou":
                raise ValueError(f"scheme=<exact-ou>, model=<{self.model.kind}> | exact sampling needs an ou model")
            if "martingale" in kinds or "coupling" in kinds:
                raise ValueError("scheme=<exact-ou> | martingale and coupling estimators need brownian increments")
        if self.lyapunov.kind == "gibbs" and self.model.kind == "custom-polynomial-drift":
            drift = self.model.drift_coefficients or []
            if len(drift) < 2 or len(drift) % 2 or drift[-1] >= 0.0:
                raise ValueError("lyapunov=<gibbs> | drift does not define a confining potential")
        return self


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read and validate a JSON experiment config.

    Raises:
        MissingInputError: If the file does not exist.
        pydantic.ValidationError: If the document is invalid.
    """
    source = Path(path)
    if not source.is_file():
        raise MissingInputError(f"config=<{source}> | file not found")
    return ExperimentConfig.model_validate_json(source.read_text(encoding="utf-8"))
