#!/usr/bin/env python3
"""
mixsynth - DDSP mixture model for score-informed music analysis

Main entry point that routes to the subcommands:
- gen: synthetic mixture with ground-truth parameters and score
- train: autoencoder pretraining of a source synthesizer
- fit: mixture fitting, optionally score-informed
- synth: parameter file to WAVs
- eval: F0 / MFCC / loudness errors against references
"""

import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __description__, __version__
from .core.base_command import BaseCommand, CommandParser, UsageError
from .core.config import Config
from .core.errors import ConfigError


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Configure the root logger once: DEBUG, INFO (default) or WARNING."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)-7s %(name)s: %(message)s",
        datefmt="%H:%M:%S",
        stream=sys.stderr,
        force=True,
    )


def build_parser() -> tuple[CommandParser, dict[str, BaseCommand]]:
    parser = CommandParser(prog="mixsynth", description=__description__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--config", type=Path, help="YAML configuration (default: ./mixsynth.yaml if present)"
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    subparsers = parser.add_subparsers(
        dest="command", metavar="COMMAND", parser_class=CommandParser
    )
    commands: dict[str, BaseCommand] = {}
    for name in BaseCommand.COMMAND_MAP:
        command = BaseCommand.create(name)
        sub = subparsers.add_parser(name, help=command.help, description=command.help)
        command.add_arguments(sub)
        commands[name] = command
    return parser, commands


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for mixsynth."""
    parser, commands = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:
        # --help and --version
        return e.code if isinstance(e.code, int) else 0

    if args.command is None:
        parser.print_help()
        return 1

    configure_logging(args.verbose, args.quiet)
    try:
        config = Config(args.config)
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1
    if config.source is not None:
        logging.getLogger(__name__).debug("Using configuration %s", config.source)

    return commands[args.command].run(args, config)


if __name__ == "__main__":
    sys.exit(main())
