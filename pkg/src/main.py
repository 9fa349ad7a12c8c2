"""
Command-line entry point: python -m src.main <subcommand> [flags]

Every failure is reported on stderr as `error category=<category>: <detail>`
with the category's exit code.
"""
import argparse
import logging
import sys
from typing import Dict, List, Optional

from src.commands import analyze_command, eval_command, export_command, ternarize_command, train_command
from src.core import config
from src.core.errors import ConfigError, TernError
from src.helpers.config_file_helpers import parse_overrides
from src.schemas.model_schema import Architecture
from src.schemas.run_schema import CliInvocation, Subcommand
from src.schemas.train_schema import AblationMode, LayerSide

logger = logging.getLogger(__name__)

# ─── SUBCOMMANDS ──────────────────────────────────────────────────
COMMANDS = {
    Subcommand.TRAIN: train_command,
    Subcommand.TERNARIZE: ternarize_command,
    Subcommand.EVAL: eval_command,
    Subcommand.ANALYZE: analyze_command,
    Subcommand.EXPORT: export_command,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", dest="config_path", help="key = value run configuration file")
    common.add_argument("--seed", type=int, help="seed for initialization and shuffling (required for train/ternarize)")
    common.add_argument("--arch", choices=[a.value for a in Architecture])
    common.add_argument("--mode", choices=[m.value for m in AblationMode])
    common.add_argument("--beta", help="comma-separated threshold factors")
    common.add_argument("--tex", type=int, help="expansion factor T_ex")
    common.add_argument("--first-last", dest="first_last", choices=[s.value for s in LayerSide])
    common.add_argument("--out", dest="out_dir", default="out", help="output directory")
    common.add_argument("--pretrained", help="full-precision checkpoint for the fine-tuning modes")
    common.add_argument("--model", dest="model_path", help="model file to evaluate, analyze or export")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    common.add_argument("--fpga", nargs="+", metavar="KEY=N", help="fp_macs=N tern_macs=M")

    parser = _Parser(prog="tern", description="Ternary-weight network toolkit")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for subcommand, command in COMMANDS.items():
        subparsers.add_parser(subcommand.value, help=command.HELP, parents=[common])
    return parser


def _fpga_counts(items: Optional[List[str]]) -> Dict[str, int]:
    counts = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        try:
            counts[key.strip()] = int(value)
        except ValueError:
            raise ConfigError(f"--fpga expects KEY=N with an integer N, got {item!r}")
        if not sep:
            raise ConfigError(f"--fpga expects KEY=N, got {item!r}")
    return counts


def parse_invocation(argv: List[str]) -> CliInvocation:
    args = build_parser().parse_args(argv)
    overrides = parse_overrides(args.overrides)
    flags = {
        "model.arch": args.arch,
        "train.mode": args.mode,
        "train.betas": args.beta,
        "train.t_ex": args.tex,
        "train.first_last": args.first_last,
        "train.pretrained": args.pretrained,
    }
    overrides.update({key: str(value) for key, value in flags.items() if value is not None})
    return CliInvocation(
        subcommand=args.subcommand,
        config_path=args.config_path,
        overrides=overrides,
        out_dir=args.out_dir,
        seed=args.seed,
        model_path=args.model_path,
        fpga=_fpga_counts(args.fpga),
    )


def run(invocation: CliInvocation) -> int:
    return COMMANDS[invocation.subcommand].run(invocation)


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=config.LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return run(parse_invocation(sys.argv[1:] if argv is None else argv))
    except TernError as exc:
        print(f"error category={exc.category}: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:
        logger.exception("unexpected failure")
        print(f"error category=internal: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
