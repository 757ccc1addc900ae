"""Ensemble orchestration: deterministic work units, fixed-order reduction and report files."""

import concurrent.futures
import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np

from ._config import (
    BirkhoffEstimator,
    CouplingEstimator,
    EnvelopeEstimator,
    ExperimentConfig,
    InvariantSpec,
    LyapunovConfig,
    MartingaleEstimator,
    ModelSpec,
    SllnEstimator,
)
from ._errors import BlowupError, ConfigurationError, MissingInputError, ParameterError
from ._formatting import read_table, write_table
from ._registry import observable_label, resolve_gauge, resolve_observable
from .ergodic import (
    BirkhoffAverage,
    EnvelopeTracker,
    MartingaleTracker,
    derive_transform,
)
from .models import (
    LangevinModel,
    LyapunovSpec,
    SdeModel,
    check_lyapunov,
    gibbs_lyapunov,
    growth_check,
    make_langevin,
    make_ou,
    make_polynomial_drift,
    polynomial_lyapunov,
    quadratic_lyapunov,
)
from .oracle import GridSpec, InvariantOracle1D, build_oracle, sample_stationary, widened_expectation
from .simulate import BrownianDriver, CheckpointSchedule, StepHook, coupled_batch, simulate_batch
from .slln import SequenceKind, StationarySequenceGen, mz_conjecture_continuous, mz_scaled_sums

logger = logging.getLogger(__name__)

# SLLN sequences draw from path ids above every ensemble path.
SLLN_PATH_OFFSET = 1 << 32
BLOWUP_FRACTION = 0.5
CHECK_RADII = (10.0, 100.0, 1000.0)
OUTPUT_TABLES = ("envelope", "martingale", "birkhoff", "coupling", "slln")

Unit = tuple[str, int, int]


@dataclass
class RunManifest:
    """Record of a finished run.

    Attributes:
        config: Fully resolved config echo.
        versions: Versions of the package and its numerical stack.
        files: SHA-256 checksum per output file.
        wall_clock_seconds: Elapsed time of the run.
        steps: Dense path-steps taken.
        blowups: Path ids that exploded.
        checks: outcomes of the hypothesis checks.
    """

    config: dict[str, Any]
    versions: dict[str, str]
    files: dict[str, str] = field(default_factory=dict)
    wall_clock_seconds: float = 0.0
    steps: int = 0
    blowups: list[int] = field(default_factory=list)
    checks: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        """Serialize with sorted keys."""
        payload = {
            "config": self.config,
            "versions": self.versions,
            "files": self.files,
            "wall_clock_seconds": self.wall_clock_seconds,
            "steps": self.steps,
            "blowups": self.blowups,
            "checks": self.checks,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# =============================================================================
# Builders
# =============================================================================


def build_model(spec: ModelSpec) -> SdeModel:
    """Instantiate the configured SDE."""
    match spec.kind:
        case "ou":
            return make_ou(spec.lam, spec.mu_loc, spec.sigma_scale)
        case "langevin":
            model, _ = make_langevin(spec.coefficients or [], spec.eps)
            return model
        case "custom-polynomial-drift":
            return make_polynomial_drift(spec.drift_coefficients or [], spec.diffusion)
        case _:
            raise ConfigurationError(f"model=<{spec.kind}> | unknown model kind")


def build_oracle_for(model: SdeModel, invariant: InvariantSpec) -> Optional[InvariantOracle1D]:
    """Build the invariant-law oracle of a gradient model, or ``None`` when it has none."""
    if model.potential is None or model.temperature is None:
        return None
    try:
        LangevinModel.from_potential(model.potential, model.temperature)
    except ParameterError:
        logger.warning("model=<%s> | potential is not confining, running without oracle", model.label)
        return None
    grid = None
    if invariant.grid_radius != "auto":
        radius = float(invariant.grid_radius)
        grid = GridSpec(-radius, radius, invariant.points)
    return build_oracle(model.potential, model.temperature, grid, invariant.points)


def build_lyapunov(config: LyapunovConfig, model: SdeModel, delta: float) -> LyapunovSpec:
    """Instantiate the configured Lyapunov function with transform exponent ``delta``."""
    match config.kind:
        case "quadratic":
            return quadratic_lyapunov(model.dim, delta, config.r_mono)
        case "polynomial":
            return polynomial_lyapunov(config.coefficients or [], delta, config.r_mono)
        case "gibbs":
            if model.potential is None or model.temperature is None:
                raise ConfigurationError(f"model=<{model.label}> | gibbs lyapunov needs a gradient model")
            langevin = LangevinModel.from_potential(model.potential, model.temperature)
            return gibbs_lyapunov(langevin, delta, config.r_mono)
        case _:
            raise ConfigurationError(f"lyapunov=<{config.kind}> | unknown lyapunov kind")


def plan_units(config: ExperimentConfig) -> list[Unit]:
    """Work units in output order; their composition depends on the config only."""
    seeds, size = config.ensemble.seeds, config.ensemble.batch_size
    path_kinds = {"envelope", "martingale", "birkhoff"}
    kinds = {estimator.kind for estimator in config.estimators}

    units: list[Unit] = []
    if kinds & path_kinds:
        units.extend(("paths", first, min(size, seeds - first)) for first in range(0, seeds, size))
    if "coupling" in kinds:
        units.extend(("coupling", first, min(size, seeds - first)) for first in range(0, seeds, size))
    for estimator in config.estimators:
        if isinstance(estimator, SllnEstimator):
            count = estimator.seeds
            units.extend(("slln", first, min(size, count - first)) for first in range(0, count, size))
    return units


# =============================================================================
# Work units
# =============================================================================


def _initial_states(
    config: ExperimentConfig, model: SdeModel, oracle: Optional[InvariantOracle1D], drivers: Sequence[BrownianDriver]
) -> Optional[np.ndarray]:
    if config.x0 != "stationary":
        return np.full((len(drivers), model.dim), float(config.x0))
    if config.scheme == "exact-ou":
        return None
    if oracle is None:
        raise ConfigurationError(f"x0=<stationary>, model=<{model.label}> | no invariant law to sample from")
    return np.stack([sample_stationary(oracle, driver, 1) for driver in drivers])


def _path_unit(config: ExperimentConfig, first: int, count: int) -> dict[str, Any]:
    model = build_model(config.model)
    oracle = build_oracle_for(model, config.invariant) if config.x0 == "stationary" else None
    master = config.ensemble.master_seed
    drivers = [BrownianDriver(master, path_id, model.dim_w) for path_id in range(first, first + count)]

    hooks: list[StepHook] = []
    envelope: Optional[EnvelopeTracker] = None
    martingale: Optional[MartingaleTracker] = None
    birkhoffs: list[BirkhoffAverage] = []
    for estimator in config.estimators:
        if isinstance(estimator, EnvelopeEstimator):
            lyap = build_lyapunov(config.lyapunov, model, estimator.delta)
            gauge = resolve_gauge(estimator.gauge, estimator.gauge_power)
            envelope = EnvelopeTracker(lyap, count, gauge, estimator.t_min)
            hooks.append(envelope)
        elif isinstance(estimator, MartingaleEstimator):
            transform = derive_transform(model, build_lyapunov(config.lyapunov, model, estimator.delta))
            martingale = MartingaleTracker(transform, count)
            hooks.append(martingale)
        elif isinstance(estimator, BirkhoffEstimator):
            lyap = build_lyapunov(config.lyapunov, model, estimator.delta)
            phi = resolve_observable(estimator.phi, estimator.power, lyap)
            label = observable_label(estimator.phi, estimator.power, estimator.delta)
            birkhoffs.append(BirkhoffAverage(phi, count, label))
            hooks.append(birkhoffs[-1])

    schedule = CheckpointSchedule(**config.schedule.model_dump())
    paths = simulate_batch(model, _initial_states(config, model, oracle, drivers), schedule, drivers,
                           config.scheme, hooks)

    tables: dict[str, list[dict[str, Any]]] = {name: [] for name in OUTPUT_TABLES}
    for i, path in enumerate(paths):
        reached = len(path.times)
        if envelope is not None:
            for record in envelope.records[:reached]:
                tables["envelope"].append({
                    "path_id": path.path_id,
                    "t": record.t,
                    "x": record.x[i],
                    "V": record.v[i],
                    "env_V_over_logt": record.env_v[i],
                    "env_gauge_ratio": record.env_gauge[i],
                })
        if martingale is not None:
            for mrecord in martingale.records[:reached]:
                tables["martingale"].append({
                    "path_id": path.path_id,
                    "t": mrecord.t,
                    "M": mrecord.m[i],
                    "QV": mrecord.qv[i],
                    "M_over_t": mrecord.m_over_t[i],
                    "QV_over_t": mrecord.qv_over_t[i],
                    "lil_ratio": mrecord.lil[i],
                })
        for birkhoff in birkhoffs:
            for brecord in birkhoff.records[:reached]:
                tables["birkhoff"].append({
                    "path_id": path.path_id,
                    "t": brecord.t,
                    "phi_name": birkhoff.name,
                    "running_avg": brecord.average[i],
                })

    return {
        "tables": tables,
        "blowups": [path.path_id for path in paths if path.blowup],
        "steps": paths[0].steps * len(paths) if paths else 0,
    }


def _coupling_unit(config: ExperimentConfig, first: int, count: int) -> dict[str, Any]:
    model = build_model(config.model)
    schedule = CheckpointSchedule(**config.schedule.model_dump())
    estimator = next(e for e in config.estimators if isinstance(e, CouplingEstimator))
    drivers = [BrownianDriver(config.ensemble.master_seed, path_id, model.dim_w) for path_id in
               range(first, first + count)]
    lows, highs, counter = coupled_batch(model, estimator.x_low, estimator.x_high, schedule, drivers, config.scheme)

    rows: list[dict[str, Any]] = []
    for i, (low, high) in enumerate(zip(lows, highs)):
        if counter.violations[i]:
            logger.warning("path_id=<%d>, violations=<%d> | coupled paths lost their order", low.path_id,
                           counter.violations[i])
        reached = min(len(low.times), len(high.times))
        rows.extend(
            {
                "path_id": low.path_id,
                "t": low.times[k],
                "x_low": low.states[k, 0],
                "x_high": high.states[k, 0],
                "gap": high.states[k, 0] - low.states[k, 0],
                "violations": int(counter.at_checkpoints[k][i]),
            }
            for k in range(reached)
        )
    tables: dict[str, list[dict[str, Any]]] = {name: [] for name in OUTPUT_TABLES}
    tables["coupling"] = rows
    blowups = sorted({path.path_id for path in (*lows, *highs) if path.blowup})
    return {"tables": tables, "blowups": blowups, "steps": 2 * count * (lows[0].steps if lows else 0)}


def _slln_unit(config: ExperimentConfig, first: int, count: int) -> dict[str, Any]:
    estimator = next(e for e in config.estimators if isinstance(e, SllnEstimator))
    master = config.ensemble.master_seed
    rows: list[dict[str, Any]] = []

    if estimator.family == "continuous":
        model = build_model(config.model)
        oracle = build_oracle_for(model, config.invariant)
        schedule = CheckpointSchedule(**config.schedule.model_dump())
        lyap = build_lyapunov(config.lyapunov, model, estimator.delta)
        phi = resolve_observable(estimator.phi, estimator.power, lyap)
        for seed in range(first, first + count):
            driver = BrownianDriver(master, SLLN_PATH_OFFSET + seed, model.dim_w)
            start = _initial_states(config, model, oracle, [driver])
            x0 = None if start is None else float(start[0, 0])
            series = mz_conjecture_continuous(model, phi, estimator.p, estimator.eps_exp, schedule, driver,
                                              config.scheme, x0, oracle)
            rows.extend({"seed": seed, "n_or_T": t, "scaled_sum": v} for t, v in zip(series.times, series.values))
    else:
        kind = SequenceKind(estimator.family)
        for seed in range(first, first + count):
            gen = StationarySequenceGen(
                kind,
                master,
                alpha=estimator.alpha,
                functional=estimator.functional,
                ou_rate=estimator.ou_rate,
                path_id=SLLN_PATH_OFFSET + seed,
            )
            sums = mz_scaled_sums(gen, estimator.p, estimator.n_max)
            rows.extend({"seed": seed, "n_or_T": int(n), "scaled_sum": v} for n, v in zip(sums.ns, sums.values))

    tables: dict[str, list[dict[str, Any]]] = {name: [] for name in OUTPUT_TABLES}
    tables["slln"] = rows
    return {"tables": tables, "blowups": [], "steps": 0}


def run_unit(config_json: str, unit: Unit) -> dict[str, Any]:
    """Execute one work unit; a pure function of the config and the unit.

    Args:
        config_json: Serialized resolved config.
        unit: ``(kind, first, count)``.

    Returns:
        Rows per output table, exploded path ids and dense path-steps.
    """
    config = ExperimentConfig.model_validate_json(config_json)
    kind, first, count = unit
    logger.debug("unit=<%s>, first=<%d>, count=<%d> | running work unit", kind, first, count)
    match kind:
        case "paths":
            return _path_unit(config, first, count)
        case "coupling":
            return _coupling_unit(config, first, count)
        case "slln":
            return _slln_unit(config, first, count)
        case _:
            raise RuntimeError(f"unit=<{kind}> | unknown work unit")


# =============================================================================
# Orchestration
# =============================================================================


def _versions() -> dict[str, str]:
    versions = {}
    for package in ("sde-envelope", "numpy", "scipy", "numba", "pydantic"):
        try:
            versions[package] = version(package)
        except PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _preflight(config: ExperimentConfig, model: SdeModel) -> dict[str, Any]:
    growth = growth_check(model, CHECK_RADII)
    if not growth.passed:
        logger.warning("model=<%s>, c_hat=<%s> | coefficients outgrow the declared exponent", model.label,
                       growth.c_hat)
    checks: dict[str, Any] = {"growth_c_hat": growth.c_hat, "growth_passed": growth.passed}
    deltas = [e.delta for e in config.estimators if isinstance(e, (EnvelopeEstimator, MartingaleEstimator))]
    if deltas:
        report = check_lyapunov(build_lyapunov(config.lyapunov, model, deltas[0]), model.dim, CHECK_RADII)
        if not report.passed:
            logger.warning("lyapunov=<%s>, report=<%s> | lyapunov hypotheses fail on sampled points",
                           config.lyapunov.kind, report)
        checks["lyapunov_passed"] = report.passed
    return checks


def _execute(config_json: str, units: list[Unit], workers: int) -> list[dict[str, Any]]:
    if workers <= 1 or len(units) <= 1:
        return [run_unit(config_json, unit) for unit in units]

    results: dict[int, dict[str, Any]] = {}
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(run_unit, config_json, unit): index for index, unit in enumerate(units)}
        for future in concurrent.futures.as_completed(futures):
            results[futures[future]] = future.result()
    return [results[index] for index in sorted(results)]


def run(config: ExperimentConfig, out_dir: Union[str, Path, None] = None, workers: int = 1) -> RunManifest:
    """Run every configured estimator and write the report files.

    Output bytes depend on the config only: work units have a fixed composition and are
    reduced in unit order, whatever the worker count.

    Args:
        config: Validated experiment.
        out_dir: Output directory; defaults to ``config.output_dir``.
        workers: Worker processes.

    Returns:
        The manifest, also written to ``manifest.json``.

    Raises:
        ConfigurationError: If no output directory is known or the estimators do not fit the model.
        BlowupError: If more than half of the ensemble exploded (after writing the outputs).
    """
    target = out_dir if out_dir is not None else config.output_dir
    if target is None:
        raise ConfigurationError("output_dir=<missing> | pass --out or set output_dir")
    directory = Path(target)
    directory.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    model = build_model(config.model)
    checks = _preflight(config, model)
    units = plan_units(config)
    logger.info("model=<%s>, scheme=<%s>, units=<%d>, workers=<%d> | starting run", model.label, config.scheme,
                len(units), workers)

    config_json = config.model_dump_json()
    results = _execute(config_json, units, workers)

    tables: dict[str, list[dict[str, Any]]] = {name: [] for name in OUTPUT_TABLES}
    blowups: list[int] = []
    steps = 0
    for result in results:
        for name in OUTPUT_TABLES:
            tables[name].extend(result["tables"][name])
        blowups.extend(result["blowups"])
        steps += result["steps"]

    blowups = sorted(set(blowups))
    requested = {estimator.kind for estimator in config.estimators}
    manifest = RunManifest(config=config.model_dump(mode="json"), versions=_versions(), steps=steps,
                           blowups=blowups, checks=checks)
    for name in OUTPUT_TABLES:
        if name in requested:
            path = write_table(directory / f"{name}.csv", name, tables[name])
            manifest.files[path.name] = _sha256(path)

    manifest.wall_clock_seconds = time.perf_counter() - started
    (directory / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    logger.info("files=<%s>, blowups=<%d>, seconds=<%.3f> | run finished", sorted(manifest.files), len(blowups),
                manifest.wall_clock_seconds)

    if len(blowups) > BLOWUP_FRACTION * config.ensemble.seeds:
        raise BlowupError(f"blowups=<{len(blowups)}>, seeds=<{config.ensemble.seeds}> | most of the ensemble exploded")
    return manifest


# =============================================================================
# Comparison against the oracle
# =============================================================================


def _final_values(
    rows: list[dict[str, str]], column: str, excluded: set[int], label: Optional[str] = None
) -> np.ndarray:
    last: dict[int, tuple[float, float]] = {}
    for row in rows:
        if label is not None and row["phi_name"] != label:
            continue
        path_id = int(row["path_id"])
        if path_id in excluded:
            continue
        t = float(row["t"])
        if path_id not in last or t >= last[path_id][0]:
            last[path_id] = (t, float(row[column]))
    return np.array([value for _, (_, value) in sorted(last.items())], dtype=float)


def _deviation(name: str, oracle_value: float, values: np.ndarray) -> dict[str, Any]:
    values = values[np.isfinite(values)]
    mean = float(values.mean()) if values.size else math.nan
    error = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else math.nan
    z = (mean - oracle_value) / error if error > 0.0 else math.nan
    return {"estimator": name, "oracle": oracle_value, "mc_value": mean, "std_error": error, "z_score": z,
            "paths": int(values.size)}


def compare(run_dir: Union[str, Path], oracle_model: Optional[ModelSpec] = None) -> list[dict[str, Any]]:
    """Compare final ensemble estimates of a run with quadrature oracle values.

    Writes ``comparison.csv`` into the run directory. Exploded paths are excluded.

    Args:
        run_dir: Directory written by :func:`run`.
        oracle_model: Model the oracle values should come from; must match the run's model.

    Returns:
        Deviation rows (estimator, oracle, mc_value, std_error, z_score, paths).

    Raises:
        MissingInputError: If the manifest or a needed CSV is missing.
        ConfigurationError: If the models differ or the run's model has no oracle.
    """
    directory = Path(run_dir)
    manifest_path = directory / "manifest.json"
    if not manifest_path.is_file():
        raise MissingInputError(f"run_dir=<{directory}> | manifest.json not found")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    config = ExperimentConfig.model_validate(manifest["config"])
    if oracle_model is not None and oracle_model.model_dump() != config.model.model_dump():
        raise ConfigurationError(f"model=<{oracle_model.kind}> | oracle model does not match the run's model")

    birkhoffs = [e for e in config.estimators if isinstance(e, BirkhoffEstimator)]
    martingales = [e for e in config.estimators if isinstance(e, MartingaleEstimator)]
    rows: list[dict[str, Any]] = []
    if birkhoffs or martingales:
        model = build_model(config.model)
        oracle = build_oracle_for(model, config.invariant)
        if oracle is None:
            raise ConfigurationError(f"model=<{model.label}> | no invariant-law oracle for this model")
        excluded = set(int(i) for i in manifest.get("blowups", []))

        if birkhoffs:
            table = _required(directory, "birkhoff")
            for estimator in birkhoffs:
                lyap = build_lyapunov(config.lyapunov, model, estimator.delta)
                phi = resolve_observable(estimator.phi, estimator.power, lyap)
                label = observable_label(estimator.phi, estimator.power, estimator.delta)
                truth = widened_expectation(oracle, lambda x, phi=phi: phi(x[..., None]))
                rows.append(_deviation(f"birkhoff:{label}", truth, _final_values(table, "running_avg", excluded,
                                                                                   label)))
        for estimator in martingales:
            table = _required(directory, "martingale")
            transform = derive_transform(model, build_lyapunov(config.lyapunov, model, estimator.delta))

            def rate(x: np.ndarray, transform: Any = transform) -> np.ndarray:
                states = x[..., None]
                noise = transform.noise_rate(states)
                return np.sum(noise * noise, axis=-1) * transform.y(states) ** 2

            rows.append(_deviation("martingale:QV_over_t", widened_expectation(oracle, rate),
                                   _final_values(table, "QV_over_t", excluded)))
            rows.append(_deviation("martingale:M_over_t", 0.0, _final_values(table, "M_over_t", excluded)))

    write_table(directory / "comparison.csv", "comparison", rows)
    for row in rows:
        logger.info("estimator=<%s>, oracle=<%s>, mc=<%s>, z=<%s> | comparison", row["estimator"], row["oracle"],
                    row["mc_value"], row["z_score"])
    return rows


def _required(directory: Path, table: str) -> list[dict[str, str]]:
    path = directory / f"{table}.csv"
    if not path.is_file():
        raise MissingInputError(f"file=<{path.name}> | needed for the comparison but missing")
    return read_table(path)


def summarize(rows: Sequence[dict[str, Any]]) -> str:
    """Human-readable deviation table."""
    if not rows:
        return "no estimators to compare"
    lines = [f"{'estimator':<28} {'oracle':>14} {'mc_value':>14} {'z_score':>9} {'paths':>6}"]
    for row in rows:
        lines.append(
            f"{row['estimator']:<28} {row['oracle']:>14.6g} {row['mc_value']:>14.6g} {row['z_score']:>9.3f} "
            f"{row['paths']:>6d}"
        )
    return "\n".join(lines)
