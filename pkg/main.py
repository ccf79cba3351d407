"""
ID-LDP Workbench - Command-Line Entry Point
Solves perturbation profiles, runs frequency-estimation experiments, audits privacy and generates data.
"""

import argparse
import logging
import sys
from typing import List, Optional

from config import APP_DESCRIPTION, APP_TITLE, APP_VERSION, DATABASE_URL
from database import configure_engine, init_db
from errors import EXIT_OK, ConfigError, WorkbenchError
from commands import audit, gendata, optimize, simulate
from commands.common import load_config

logger = logging.getLogger(__name__)

COMMANDS = (optimize, simulate, audit, gendata)


class WorkbenchArgumentParser(argparse.ArgumentParser):
    """Usage errors become ConfigError so they share the exit-code mapping."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _global_flags() -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--config", help="YAML experiment file")
    flags.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="Override one config value; repeatable")
    flags.add_argument("--seed", type=int, help="Master seed for every random stream")
    flags.add_argument("--out", help="Output file (stdout when omitted)")
    flags.add_argument("--threads", type=int, help="Worker threads for restarts and repeats")
    flags.add_argument("--db", help="SQLAlchemy URL of a results store")
    flags.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return flags


def build_parser() -> argparse.ArgumentParser:
    flags = _global_flags()
    parser = WorkbenchArgumentParser(prog="idldp", description=f"{APP_TITLE} {APP_VERSION}: {APP_DESCRIPTION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        sub = subparsers.add_parser(command.NAME, help=command.HELP, parents=[flags])
        sub.set_defaults(handler=command.run)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.log_level:
            logging.getLogger().setLevel(args.log_level)
        if configure_engine(args.db or DATABASE_URL) is not None:
            init_db()
        config = load_config(args.config, args.set, seed=args.seed, threads=args.threads, out=args.out)
        logger.info(f"Running {args.command} with seed {config.seed}")
        args.handler(config)
    except WorkbenchError as exc:
        logger.error(exc.detail)
        return exc.exit_code
    return EXIT_OK


# Run with: python main.py optimize --config experiment.yaml
if __name__ == "__main__":
    sys.exit(main())
