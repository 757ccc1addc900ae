"""Numerical laboratory for almost-sure growth envelopes of ergodic SDE paths."""

from ._config import ExperimentConfig, load_config
from ._errors import (
    BlowupError,
    ConfigurationError,
    GridError,
    MissingInputError,
    ParameterError,
    PreconditionError,
    ScheduleError,
    SdeEnvelopeError,
)
from .ergodic import (
    BootstrapState,
    ExpTransform,
    MartingaleTracker,
    birkhoff_average,
    bootstrap_iterate,
    derive_transform,
    envelope_statistic,
    lil_ratio,
    monotone_birkhoff_check,
    track_martingale,
)
from .models import LangevinModel, LyapunovSpec, SdeModel, growth_check, make_langevin, make_ou
from .oracle import InvariantOracle1D, build_oracle, expectation, sample_stationary, tail_verdict
from .runner import compare, run
from .simulate import (
    BrownianDriver,
    CheckpointSchedule,
    Trajectory,
    coupled_integrate,
    em_step,
    exact_ou_path,
    integrate,
    milstein_step_1d,
    tamed_em_step,
)
from .slln import StationarySequenceGen, mz_conjecture_continuous, mz_scaled_sums, pareto_symmetric

__all__ = [
    "BlowupError",
    "BootstrapState",
    "BrownianDriver",
    "CheckpointSchedule",
    "ConfigurationError",
    "ExpTransform",
    "ExperimentConfig",
    "GridError",
    "InvariantOracle1D",
    "LangevinModel",
    "LyapunovSpec",
    "MartingaleTracker",
    "MissingInputError",
    "ParameterError",
    "PreconditionError",
    "ScheduleError",
    "SdeEnvelopeError",
    "SdeModel",
    "StationarySequenceGen",
    "Trajectory",
    "birkhoff_average",
    "bootstrap_iterate",
    "build_oracle",
    "compare",
    "coupled_integrate",
    "derive_transform",
    "em_step",
    "envelope_statistic",
    "exact_ou_path",
    "expectation",
    "growth_check",
    "integrate",
    "lil_ratio",
    "load_config",
    "make_langevin",
    "make_ou",
    "milstein_step_1d",
    "monotone_birkhoff_check",
    "mz_conjecture_continuous",
    "mz_scaled_sums",
    "pareto_symmetric",
    "run",
    "sample_stationary",
    "tail_verdict",
    "track_martingale",
]
