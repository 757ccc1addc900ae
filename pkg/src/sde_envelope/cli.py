"""Command line entry point: ``sde-envelope run | compare | validate``."""

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from ._config import ExperimentConfig, ModelSpec, load_config
from ._errors import EXIT_OK, exit_code_for
from .runner import compare, run, summarize

logger = logging.getLogger(__name__)

WORKERS_ENV = "SDE_ENVELOPE_WORKERS"


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("%s=<%s> | not an integer, using one worker", WORKERS_ENV, raw)
        return 1


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the ``run``, ``compare`` and ``validate`` verbs."""
    parser = argparse.ArgumentParser(prog="sde-envelope", description="Growth envelopes of ergodic SDE paths.")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    verbs = parser.add_subparsers(dest="verb", required=True)

    run_parser = verbs.add_parser("run", help="run an experiment and write its reports")
    run_parser.add_argument("--config", required=True, help="experiment config (JSON)")
    run_parser.add_argument("--out", default=None, help="output directory")
    run_parser.add_argument("--workers", type=int, default=None, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    run_parser.add_argument("--master-seed", type=int, default=None, help="override ensemble.master_seed")

    compare_parser = verbs.add_parser("compare", help="compare a run with quadrature oracle values")
    compare_parser.add_argument("--out", required=True, help="run directory")
    compare_parser.add_argument("--config", default=None, help="config whose model supplies the oracle")

    validate_parser = verbs.add_parser("validate", help="validate a config or print the schema")
    validate_parser.add_argument("--config", default=None, help="experiment config (JSON)")
    validate_parser.add_argument("--schema", action="store_true", help="print the JSON schema")
    return parser


def describe_error(error: BaseException) -> str:
    """One line per validation problem, naming the offending field."""
    if isinstance(error, ValidationError):
        lines = []
        for detail in error.errors():
            location = ".".join(str(part) for part in detail["loc"]) or "<root>"
            lines.append(f"field=<{location}> | {detail['msg']}")
        return "\n".join(lines)
    return str(error)


def _with_seed(config: ExperimentConfig, master_seed: Optional[int]) -> ExperimentConfig:
    if master_seed is None:
        return config
    payload = config.model_dump(mode="json")
    payload["ensemble"]["master_seed"] = master_seed
    return ExperimentConfig.model_validate(payload)


def _oracle_model(path: Optional[str]) -> Optional[ModelSpec]:
    return None if path is None else load_config(path).model


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return the process exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    try:
        match args.verb:
            case "run":
                config = _with_seed(load_config(args.config), args.master_seed)
                workers = args.workers if args.workers is not None else _default_workers()
                manifest = run(config, args.out, workers)
                print(json.dumps({"files": manifest.files, "blowups": len(manifest.blowups)}, sort_keys=True))
            case "compare":
                rows = compare(args.out, _oracle_model(args.config))
                print(summarize(rows))
            case "validate":
                if args.schema:
                    print(json.dumps(ExperimentConfig.model_json_schema(), indent=2, sort_keys=True))
                if args.config is not None:
                    config = load_config(args.config)
                    print(config.model_dump_json(indent=2))
            case _:
                raise RuntimeError(f"verb=<{args.verb}> | unknown verb")
    except Exception as error:
        code = exit_code_for(error)
        print(describe_error(error), file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
