"""Command-line entry point: ``invariant-osc <command> [options]``.

Failures print a single JSON line ``{"error": <class>, "message": <text>}``
on stderr. Exit codes: 0 success, 2 configuration or usage error, 3 gradient
check failure, 1 any other OscError.
"""

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from dataclasses import replace
from typing import Any, NoReturn

from invariant_osc.autodiff import inject_fault
from invariant_osc.config import REGIMES, ExperimentConfig, load_config
from invariant_osc.errors import ConfigError, GradientCheckError, OscError
from invariant_osc.harness import runner

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_GRADCHECK = 3


class UsageError(Exception):
    """Bad command line (raised instead of argparse's own exit)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config document")
    common.add_argument("--seed", type=int, help="override the base seed, in [0, 2**64)")
    common.add_argument("--out", metavar="DIR", help="output directory (config out_dir)")
    common.add_argument(
        "--checkpoint",
        metavar="PATH",
        help="trained or pretrained .ckpt, or a train output directory",
    )
    common.add_argument(
        "--parallel", action="store_true", help="run per-seed cells on a thread pool"
    )
    common.add_argument("--cache-dir", metavar="DIR", help="persistent artifact cache")
    common.add_argument(
        "--log-episodes", action="store_true", help="write first-episode CSV and replay logs"
    )
    common.add_argument(
        "--log-level",
        default="INFO",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
    )

    parser = _Parser(prog="invariant-osc", description="Learned-dynamics OSC experiments")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    commands.add_parser("pretrain", parents=[common], help="pretrain the base model per seed")
    commands.add_parser(
        "train", parents=[common], help="train, sweep and evaluate in-distribution"
    )
    evaluate = commands.add_parser(
        "eval", parents=[common], help="evaluate a regime (default: config regime)"
    )
    evaluate.add_argument("--regime", choices=REGIMES)
    commands.add_parser("adapt", parents=[common], help="online adaptation under a new payload")
    commands.add_parser("ablate", parents=[common], help="train and score every model variant")
    commands.add_parser(
        "robustness",
        parents=[common],
        help="train and zero-shot evaluation per seed, with degradation",
    )
    gradcheck = commands.add_parser(
        "gradcheck", parents=[common], help="finite-difference audit of all gradients"
    )
    gradcheck.add_argument("--samples", type=int, default=100)
    gradcheck.add_argument(
        "--inject-gradient-fault", action="store_true", help=argparse.SUPPRESS
    )
    commands.add_parser("sweep-gains", parents=[common], help="per-controller gain sweep")
    return parser


def _configure_logging(level: str) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(level)


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config)
    overrides: dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.checkpoint is not None:
        overrides["checkpoint"] = args.checkpoint
    if getattr(args, "regime", None) is not None:
        overrides["regime"] = args.regime
    if args.log_episodes:
        overrides["evaluation"] = replace(config.evaluation, log_episodes=True)
    return config.with_overrides(**overrides) if overrides else config


def _dispatch(args: argparse.Namespace, config: ExperimentConfig) -> None:
    options = {"cache_dir": args.cache_dir, "parallel": args.parallel}
    if args.command == "pretrain":
        runner.run_pretrain(config, **options)
    elif args.command == "train":
        runner.run_regime(config, "train", **options)
    elif args.command == "eval":
        runner.run_regime(config, config.regime, **options)
    elif args.command == "adapt":
        runner.run_regime(config, "adapt", **options)
    elif args.command == "ablate":
        runner.run_ablation(config, **options)
    elif args.command == "robustness":
        runner.run_robustness(config, **options)
    elif args.command == "sweep-gains":
        runner.run_sweep(config, **options)
    elif args.command == "gradcheck":
        fault = (lambda: inject_fault("softplus")) if args.inject_gradient_fault else None
        runner.run_gradcheck(config, samples=args.samples, fault=fault)


def _report(exc: BaseException) -> None:
    line = json.dumps({"error": type(exc).__name__, "message": str(exc)})
    print(line, file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except UsageError as exc:
        _report(exc)
        return EXIT_USAGE
    _configure_logging(args.log_level)
    try:
        config = _resolve_config(args)
        _dispatch(args, config)
    except GradientCheckError as exc:
        _report(exc)
        return EXIT_GRADCHECK
    except ConfigError as exc:
        _report(exc)
        return EXIT_USAGE
    except OscError as exc:
        logger.debug("command %s failed", args.command, exc_info=True)
        _report(exc)
        return EXIT_ERROR
    return EXIT_OK
