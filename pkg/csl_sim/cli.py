"""Command-line driver: `python -m csl_sim --config run.json`."""
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from csl_sim import __version__
from csl_sim.services.errors import CollapseSimError, ConfigError
from csl_sim.services.experiments import EXPERIMENTS, load_config, run_experiment, with_overrides
from csl_sim.services.presets import DEFAULT_PRESETS

logger = logging.getLogger("csl_sim")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_CHECK_FAILED = 3

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csl_sim",
        description="Run a collapse-model experiment and write CSV/JSON results.",
        epilog="Experiments: " + ", ".join(sorted(EXPERIMENTS)),
    )
    parser.add_argument("--config", required=True, type=Path, help="JSON experiment config")
    parser.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    parser.add_argument("--out", type=Path, default=None, help="output directory (overrides the config)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for trajectory ensembles")
    parser.add_argument("--preset", choices=sorted(DEFAULT_PRESETS), default=None, help="parameter preset")
    parser.add_argument("--check", action="store_true", help="exit with status 3 when an acceptance check fails")
    parser.add_argument("--archive", type=Path, default=None, help="DuckDB file to archive the run report in")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def setup_logging(out_dir: Path, verbose: bool = False) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    root = logging.getLogger("csl_sim")
    for handler in list(root.handlers):
        handler.close()
        root.removeHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    formatter = logging.Formatter(LOG_FORMAT)
    for handler in (logging.StreamHandler(sys.stderr), logging.FileHandler(out_dir / "csl_sim.log", encoding="utf-8")):
        handler.setFormatter(formatter)
        root.addHandler(handler)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        cfg = load_config(args.config)
        cfg = with_overrides(cfg, seed=args.seed, out_dir=args.out, preset=args.preset)
    except ConfigError as e:
        logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    setup_logging(cfg.out_dir, args.verbose)
    if args.threads < 1:
        logger.error(f"--threads must be >= 1, got {args.threads}")
        return EXIT_CONFIG
    workers = min(args.threads, os.cpu_count() or 1)

    try:
        report = run_experiment(cfg, workers=workers)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except CollapseSimError as e:
        logger.error(f"{cfg.experiment} failed: {type(e).__name__}: {e}")
        return EXIT_NUMERIC
    except OSError as e:
        logger.error(f"Could not write results: {e}")
        return EXIT_NUMERIC
    except Exception as e:
        logger.exception(f"{cfg.experiment} failed unexpectedly: {type(e).__name__}: {e}")
        return EXIT_NUMERIC

    if args.archive is not None:
        try:
            from csl_sim.services.run_archive import RunArchive

            RunArchive.save_report(report, args.archive)
        except Exception as e:
            logger.warning(f"Run not archived: {e}")

    status = "passed" if report.passed else "FAILED " + ", ".join(report.failed_checks())
    logger.info(f"Checks {status}; max rel_err {report.max_rel_err:.3e}")
    if args.check and not report.passed:
        return EXIT_CHECK_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
