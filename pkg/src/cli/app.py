"""
OvA-INN command line

    python main.py train --mnist-images=train-images-idx3-ubyte.gz \
        --mnist-labels=train-labels-idx1-ubyte.gz --normalize=scale_255 --model=runs/mnist.ovainn
    python main.py eval --mnist-images=t10k-images-idx3-ubyte.gz ... --report=runs/mnist
    python main.py inspect --model=runs/mnist.ovainn

Exit codes: 0 ok, 1 config, 2 data, 3 I/O.
"""
import argparse
import sys
from typing import List, Optional

from ..exceptions import ConfigError, OvaInnError, EXIT_CONFIG, exit_code_for
from ..monitoring.logger import RunLogger
from .commands import COMMANDS
from .config import build_run_config


logger = RunLogger("Main")


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1)"""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _common_options() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key=value file; flags override its values")
    common.add_argument("--preset", choices=["mnist", "cifar100"], help="training hyperparameter preset")

    data = common.add_argument_group("data")
    data.add_argument("--mnist-images")
    data.add_argument("--mnist-labels")
    data.add_argument("--features", help="OVAFEAT1 feature file")
    data.add_argument("--test-mnist-images")
    data.add_argument("--test-mnist-labels")
    data.add_argument("--test-features")
    data.add_argument("--normalize", help="none | scale_255 | affine:shift,scale")
    data.add_argument("--class-order", help="e.g. 0-9 or 3,1,2")
    data.add_argument("--max-per-class", help="keep the first k training samples of each class")
    data.add_argument("--dequantize", action=argparse.BooleanOptionalAction, default=None,
                      help="add U[0,1) noise to raw training values before scaling")
    data.add_argument("--input", help="predict input: CSV rows or OVAFEAT1 file")

    train = common.add_argument_group("training")
    train.add_argument("--lr")
    train.add_argument("--epochs")
    train.add_argument("--weight-decay")
    train.add_argument("--patience")
    train.add_argument("--batch-size")
    train.add_argument("--rank")
    train.add_argument("--blocks")
    train.add_argument("--activation", help="relu | leaky_relu | tanh | identity")
    train.add_argument("--seed")
    train.add_argument("--min-lr")
    train.add_argument("--init-bound")
    train.add_argument("--decoupled-wd", action=argparse.BooleanOptionalAction, default=None)
    train.add_argument("--swap-halves", action=argparse.BooleanOptionalAction, default=None)

    run = common.add_argument_group("run")
    run.add_argument("--model", help="registry file")
    run.add_argument("--report", help="report path; writes <report>.json and <report>.csv")
    run.add_argument("--metrics", help="per-class training summary CSV")
    run.add_argument("--mode", help="single | multi")
    run.add_argument("--tasks", help="task partition, e.g. 0-4;5-9 or a task size")
    run.add_argument("--threads")
    run.add_argument("--parallel-classes", action=argparse.BooleanOptionalAction, default=None)
    run.add_argument("--eval-every-class", action=argparse.BooleanOptionalAction, default=None)
    run.add_argument("--resume", action=argparse.BooleanOptionalAction, default=None,
                     help="skip classes already in --model (default on)")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ovainn", description="One-versus-all invertible networks for continual learning")
    subparsers = parser.add_subparsers(dest="command")
    common = _common_options()
    helps = {
        "train": "train one expert per class, class by class",
        "eval": "evaluate a registry (single- or multi-head)",
        "predict": "print predicted class and per-class scores",
        "baseline": "nearest-prototype baseline on the same protocol",
        "inspect": "print registry header and parameter counts",
    }
    for name, text in helps.items():
        subparsers.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse, build RunConfig, dispatch; mọi lỗi được map sang exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_CONFIG
        flags = {key: value for key, value in vars(args).items() if key not in ("command", "config")}
        cfg = build_run_config(flags, args.config)
        cfg.validate(args.command)
        return COMMANDS[args.command](cfg, sys.stdout)
    except KeyboardInterrupt:
        logger.warning("🛑 Stopped by user")
        return 130
    except (OvaInnError, OSError) as e:
        code = exit_code_for(e)
        logger.error(f"❌ {e}", extra={"error": type(e).__name__, "exit_code": code})
        return code
