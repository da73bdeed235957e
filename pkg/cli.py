"""Command-line entry point: ``phasefield <subcommand> [options]``.

Exit codes: 0 success, 1 runtime failure, 2 configuration error, 3 failed
acceptance check in ``--check`` mode. Failures print one line
``error kind=<ExceptionName> reason="<message>"`` on stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import harness
from calibrations import CoarseGridError, ReferenceFlowError
from config import ConfigError, ExperimentConfig, Settings
from domain_grid import GridError
from potentials import AngleRangeError
from solver import StabilityCapError

logger = logging.getLogger(__name__)

CONFIG_ERRORS = (ConfigError, ReferenceFlowError, CoarseGridError, GridError, StabilityCapError, AngleRangeError)

_logging_configured = False


def _configure_logging(level: str) -> None:
    global _logging_configured
    if _logging_configured:
        logging.getLogger().setLevel(level)
        return
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    _logging_configured = True


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasefield", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default=None, help="overrides PHASEFIELD_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, config: bool = True) -> None:
        if config:
            p.add_argument("--config", type=Path, required=True, help="experiment INI file")
        p.add_argument("--out", type=Path, default=None, help="output directory")

    p = sub.add_parser("simulate", help="run one simulation and write its reports")
    common(p)
    p.add_argument("--check", action="store_true", help="exit 3 if an acceptance check fails")
    p.add_argument("--no-cache", action="store_true", help="ignore and do not write checkpoints")

    p = sub.add_parser("sweep", help="run every eps of the list and tabulate convergence")
    common(p)
    p.add_argument("--threads", type=int, default=None, help="parallel sweep members")
    p.add_argument("--check", action="store_true")
    p.add_argument("--no-cache", action="store_true")

    p = sub.add_parser("verify-calibration", help="check the calibration conditions of the reference flow")
    common(p)
    p.add_argument("--seed", type=int, default=0, help="seed of the negative-control jitter")
    p.add_argument("--corrupt", action="store_true", help="scale xi above unit length (negative control)")

    p = sub.add_parser("envelope", help="1-Lipschitz relaxation of a tabulated boundary energy")
    p.add_argument("table", type=Path, help="CSV with columns s, sigma")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--method", choices=("two_pass", "brute_force"), default="two_pass")

    p = sub.add_parser("report", help="re-render summary.json from stored CSVs")
    p.add_argument("--out", type=Path, required=True, help="run output directory")
    p.add_argument("--html", action="store_true", help="also write report.html")
    return parser


def _output_dir(args: argparse.Namespace, settings: Settings, config: ExperimentConfig | None = None) -> Path:
    if args.out is not None:
        return args.out
    if config is not None and config.output_dir is not None:
        return config.output_dir
    name = config.name if config is not None else args.command
    return settings.output_dir / name


def _dispatch(args: argparse.Namespace, settings: Settings) -> int:
    if args.command == "envelope":
        out = _output_dir(args, settings)
        summary = harness.cmd_envelope(args.table, out, method=args.method)
        logger.info("jump %.12g, Young angle %s", summary["jump"], summary["young_angle_rad"])
        return 0
    if args.command == "report":
        harness.cmd_report(args.out, html=args.html)
        return 0

    config = ExperimentConfig.from_file(args.config)
    out = _output_dir(args, settings, config)
    if args.command == "simulate":
        harness.cmd_simulate(config, out, settings, check=args.check, use_cache=not args.no_cache)
        return 0
    if args.command == "sweep":
        harness.cmd_sweep(config, out, settings, threads=args.threads, check=args.check,
                          use_cache=not args.no_cache)
        return 0
    if args.command == "verify-calibration":
        report = harness.cmd_verify_calibration(config, out, seed=args.seed, corrupt=args.corrupt)
        if not report["passed"]:
            reason = "failed conditions: " + ", ".join(report["failed"])
            print(f'error kind=CalibrationFailure reason="{reason}"', file=sys.stderr)
            return 1
        return 0
    raise ConfigError(f"unknown command {args.command!r}")


def _reason(exc: BaseException) -> str:
    return " ".join(str(exc).split()).replace('"', "'")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = Settings.from_env()
        _configure_logging(args.log_level or settings.log_level)
        return _dispatch(args, settings)
    except harness.AcceptanceError as exc:
        print(f'error kind=AcceptanceError reason="{_reason(exc)}"', file=sys.stderr)
        return 3
    except CONFIG_ERRORS as exc:
        print(f'error kind={type(exc).__name__} reason="{_reason(exc)}"', file=sys.stderr)
        return 2
    except Exception as exc:
        logger.debug("unhandled failure", exc_info=True)
        print(f'error kind={type(exc).__name__} reason="{_reason(exc)}"', file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
