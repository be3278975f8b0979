"""Command-line entry point: ``hemq quantize|flow|exact1d|estimate|eval``."""

import argparse
import logging
import os
from typing import Dict, List, Optional

from dotenv import find_dotenv, load_dotenv

from . import __version__
from .errors import ConfigError
from .io.runner import load_run_config, report_error, run
from .models.run_spec import RunCommand

logger = logging.getLogger(__name__)

# flag -> flat config key
OVERRIDE_FLAGS = {
    "kernel": "kernel",
    "r": "r",
    "a": "a",
    "sigma": "sigma",
    "lambda_": "lambda",
    "Q": "q",
    "batch": "batch",
    "lr": "lr",
    "iters": "iters",
    "seed": "seed",
    "out": "out",
    "label_col": "label_col",
    "method": "method",
    "target": "target",
    "path": "path",
    "recipe": "recipe",
    "quantizer": "quantizer",
    "xs": "xs",
    "samples": "samples",
    "estimator": "estimator",
    "T": "t",
    "dt": "dt",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hemq", description="Huber-energy measure quantization toolkit"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in RunCommand:
        p = sub.add_parser(command.value)
        p.add_argument("--config", help="KEY=VALUE configuration file")
        p.add_argument("--kernel", help="huber-energy | gaussian | penalized-mean")
        p.add_argument("--r")
        p.add_argument("--a")
        p.add_argument("--sigma")
        p.add_argument("--lambda", dest="lambda_")
        p.add_argument("--Q", dest="Q", help="number of atoms")
        p.add_argument("--batch", help="batch size")
        p.add_argument("--lr", help="Adam learning rate")
        p.add_argument("--iters", help="iteration cap")
        p.add_argument("--seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--label-col", dest="label_col")
        p.add_argument("--standardize", action="store_true", default=None)
        p.add_argument("--method")
        p.add_argument("--target", help="csv | idx | gaussian-mixture | atomic | recipe")
        p.add_argument("--path", help="CSV dataset")
        p.add_argument("--recipe")
        p.add_argument("--quantizer", help="quantizer.json input")
        p.add_argument("--xs", help="CSV of first-measure samples for estimate")
        p.add_argument("--samples")
        p.add_argument("--estimator")
        p.add_argument("--T", dest="T", help="gradient flow horizon")
        p.add_argument("--dt", help="gradient flow step")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Optional[str]]:
    overrides: Dict[str, Optional[str]] = {"command": args.command}
    for attr, key in OVERRIDE_FLAGS.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = str(value)
    if args.standardize:
        overrides["standardize"] = "true"
    return overrides


def configure_logging() -> None:
    debug = os.getenv("HEMQ_DEBUG", "").lower() in ("1", "true", "yes")
    logging.basicConfig(
        level=logging.DEBUG if debug else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    if debug:
        logger.debug("Debug logging enabled via HEMQ_DEBUG environment variable")


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and return its exit code."""
    load_dotenv(find_dotenv(usecwd=True))
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        config = load_run_config(args.config, overrides_from_args(args))
    except ConfigError as e:
        return report_error(args.command, e)
    return run(config)
