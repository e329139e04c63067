"""Command line entry point: `simulate <experiment> [options]`.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 convergence
warning escalated by --strict.
"""

from __future__ import annotations

import argparse
import sys
import warnings

from .errors import ConsistencyError, IntegrationError, ResourceLimitError
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment, write_outputs
from .fock import TruncationWarning

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_STRICT = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Run one of the packaged motional-entanglement experiments.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="JSON config file (see ExperimentConfig)")
    parser.add_argument("--out", help="output directory (default: current)")
    parser.add_argument("--seed", type=int, help="master RNG seed for trajectory ensembles")
    parser.add_argument("--dims", help="comma-separated truncation dims, e.g. 18,4,4,18")
    parser.add_argument("--dt", type=float, help="explicit integrator step")
    parser.add_argument("--steps-per-period", type=int, help="RK4 steps per fastest period")
    parser.add_argument("--exact-trig", action="store_true",
                        help="use the exact trig coupling in the lab frame (cross-check mode)")
    parser.add_argument("--jumps", choices=["on", "off"],
                        help="sample quantum jumps instead of the no-jump branch")
    parser.add_argument("--ntraj", type=int, help="number of trajectories when jumps are on")
    parser.add_argument("--strict", action="store_true",
                        help="escalate truncation/convergence warnings to exit code 4")
    return parser


def _load_config(args) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_json(args.config)
        if config.experiment != args.experiment:
            raise ValueError(
                f"config is for {config.experiment!r} but {args.experiment!r} was requested"
            )
    else:
        config = ExperimentConfig(experiment=args.experiment)
    if args.out is not None:
        config.out_dir = args.out
    if args.seed is not None:
        config.seed = args.seed
    if args.dims is not None:
        config.dims = [int(d) for d in args.dims.split(",")]
    if args.dt is not None:
        config.dt = args.dt
    if args.steps_per_period is not None:
        config.steps_per_period = args.steps_per_period
    if args.exact_trig:
        config.exact_trig = True
    if args.jumps is not None:
        config.jumps = args.jumps == "on"
    if args.ntraj is not None:
        config.ntraj = args.ntraj
    if args.strict:
        config.strict = True
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            rows = run_experiment(config)
        except (IntegrationError, ConsistencyError, ResourceLimitError,
                ArithmeticError, FloatingPointError) as exc:
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        csv_path, meta_path = write_outputs(config, rows)

    print(f"wrote {csv_path} and {meta_path} ({len(rows)} rows)")
    flagged = [w for w in caught if issubclass(w.category, (TruncationWarning, RuntimeWarning))]
    for w in flagged:
        print(f"warning: {w.message}", file=sys.stderr)
    if config.strict and flagged:
        print("strict mode: warnings escalated", file=sys.stderr)
        return EXIT_STRICT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
