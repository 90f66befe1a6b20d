"""
Command line interface: ``cas4dl run|validate|resume|inspect``.

Flags override environment values (``CAS4DL_OUT_DIR``, ``CAS4DL_THREADS``),
which override the configuration file.
"""

import argparse
import json
import logging
import os
import sys
from logging.config import dictConfig
from pathlib import Path
from typing import List, Optional

from dotenv import find_dotenv, load_dotenv

from cas4dl.config import PRECISIONS, ExperimentConfig, config_to_ini, parse_config, parse_config_text
from cas4dl.core.checkpoint import load_checkpoint
from cas4dl.core.errors import Cas4dlError
from cas4dl.driver import run_suite
from cas4dl.observability import setup_otel
from cas4dl.results import emit_suite, load_manifest

logger = logging.getLogger(__name__)


def _log_config(level: str) -> dict:
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "default": {
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
                "datefmt": "%Y-%m-%d %H:%M:%S",
            },
        },
        "handlers": {
            "default": {
                "class": "logging.StreamHandler",
                "formatter": "default",
                "level": level,
                "stream": "ext://sys.stderr",
            },
        },
        "loggers": {
            "": {"handlers": ["default"], "level": level},  # Root logger
        },
    }


def configure_logging() -> None:
    level = os.getenv("CAS4DL_LOG_LEVEL", "INFO").upper()
    dictConfig(_log_config(level))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cas4dl",
        description="Christoffel adaptive sampling experiments for deep-network function approximation",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="run every configured method and trial")
    run.add_argument("config", type=Path, help="experiment configuration (INI)")
    resume = subparsers.add_parser("resume", help="re-execute the configuration stored in a run manifest")
    resume.add_argument("manifest", type=Path, help="manifest.json or the directory containing it")
    for sub in (run, resume):
        sub.add_argument("--out-dir", type=Path, default=None, help="directory for result files")
        sub.add_argument("--trials", type=int, default=None, help="number of trials per method")
        sub.add_argument("--seed", type=int, default=None, help="base seed")
        sub.add_argument("--precision", choices=PRECISIONS, default=None)
        sub.add_argument("--threads", type=int, default=None, help="trials run concurrently")

    validate = subparsers.add_parser("validate", help="print the normalized configuration")
    validate.add_argument("config", type=Path)

    inspect = subparsers.add_parser("inspect", help="summarize a network checkpoint")
    inspect.add_argument("checkpoint", type=Path)
    return parser


def _apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    out_dir = args.out_dir if args.out_dir is not None else os.getenv("CAS4DL_OUT_DIR")
    return config.with_overrides(
        out_dir=str(out_dir) if out_dir is not None else None,
        trials=args.trials,
        seed=args.seed,
        precision=args.precision,
    )


def _threads(args: argparse.Namespace) -> int:
    if args.threads is not None:
        threads = args.threads
    else:
        try:
            threads = int(os.getenv("CAS4DL_THREADS", "1"))
        except ValueError:
            raise Cas4dlError(f"CAS4DL_THREADS must be an integer, got {os.getenv('CAS4DL_THREADS')!r}") from None
    if threads < 1:
        raise Cas4dlError(f"thread count must be positive, got {threads}")
    return threads


def _execute(config: ExperimentConfig, args: argparse.Namespace) -> int:
    config = _apply_overrides(config, args)
    suite = run_suite(config, threads=_threads(args))
    manifest = emit_suite(suite, config.out_dir)
    logger.info(f"Run complete: {len(suite.records)} stage records, manifest at {manifest}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    return _execute(parse_config(args.config), args)


def cmd_resume(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    if "config" not in manifest:
        raise Cas4dlError(f"manifest {args.manifest} does not record a configuration")
    return _execute(parse_config_text(manifest["config"]), args)


def cmd_validate(args: argparse.Namespace) -> int:
    sys.stdout.write(config_to_ini(parse_config(args.config)))
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    if not args.checkpoint.is_file():
        raise Cas4dlError(f"checkpoint not found: {args.checkpoint}")
    try:
        checkpoint = load_checkpoint(args.checkpoint)
    except (OSError, KeyError, ValueError) as e:
        raise Cas4dlError(f"cannot read checkpoint {args.checkpoint}: {e}") from e
    sys.stdout.write(json.dumps(checkpoint.summary(), indent=2, sort_keys=True) + "\n")
    return 0


COMMANDS = {
    "run": cmd_run,
    "resume": cmd_resume,
    "validate": cmd_validate,
    "inspect": cmd_inspect,
}


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv(find_dotenv(usecwd=True))
    configure_logging()
    setup_otel()

    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except Cas4dlError as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
