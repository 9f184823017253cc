"""Base command class for mixsynth subcommands."""

import argparse
import importlib
import logging
import sys
from abc import ABC, abstractmethod
from pathlib import Path
from typing import NoReturn

from .config import FREE_VARIABLES, Config
from .errors import MixsynthError, RuntimeFailure, ValidationError
from .utils import PerformanceTracker

logger = logging.getLogger(__name__)


class UsageError(ValidationError):
    """Command line could not be parsed."""


class CommandParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors as ValidationError (exit 1)."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}", f"see `{self.prog} --help`")


class BaseCommand(ABC):
    """Base class for the mixsynth subcommands."""

    # Subcommand to handler mapping (module_path, class_name)
    COMMAND_MAP = {
        "gen": ("mixsynth.commands.gen", "GenCommand"),
        "train": ("mixsynth.commands.train", "TrainCommand"),
        "fit": ("mixsynth.commands.fit", "FitCommand"),
        "synth": ("mixsynth.commands.synth", "SynthCommand"),
        "eval": ("mixsynth.commands.evaluate", "EvalCommand"),
    }

    name = ""
    help = ""

    def __init__(self) -> None:
        self.tracker = PerformanceTracker()

    @staticmethod
    def create(name: str) -> "BaseCommand":
        """Factory method: instantiate the handler for a subcommand name.

        Args:
            name: Subcommand as typed on the command line

        Returns:
            Command instance

        Raises:
            UsageError: name is not a known subcommand
        """
        if name not in BaseCommand.COMMAND_MAP:
            raise UsageError(
                f"unknown command '{name}'",
                f"choose from {', '.join(BaseCommand.COMMAND_MAP)}",
            )
        # Lazy import so `mixsynth --help` stays cheap
        module_path, class_name = BaseCommand.COMMAND_MAP[name]
        module = importlib.import_module(module_path)
        command_class = getattr(module, class_name)
        command: BaseCommand = command_class()
        return command

    @abstractmethod
    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        """Register the subcommand's flags."""
        pass

    @abstractmethod
    def execute(self, args: argparse.Namespace, config: Config) -> int:
        """Run the subcommand; raise MixsynthError subclasses on failure."""
        pass

    def run(self, args: argparse.Namespace, config: Config) -> int:
        """Execute and map failures onto exit codes.

        Returns:
            Exit code: 0 (success), 1 (validation error), 2 (runtime failure)
        """
        try:
            code = self.execute(args, config)
        except ValidationError as e:
            print(f"Error: {e}", file=sys.stderr)
            return 1
        except RuntimeFailure as e:
            print(f"Error: {e}", file=sys.stderr)
            return 2
        except MixsynthError as e:
            print(f"Error: {e}", file=sys.stderr)
            return e.exit_code
        except KeyboardInterrupt:
            print("Error: interrupted", file=sys.stderr)
            return 2
        except Exception as e:
            logger.debug("Unexpected failure in %s", self.name, exc_info=True)
            print(f"Error: {self.name} failed unexpectedly: {e}", file=sys.stderr)
            return 2
        logger.debug(self.tracker.get_summary())
        return code


def path_arg(value: str) -> Path:
    return Path(value).expanduser()


def existing_file(path: Path, what: str) -> Path:
    """Return path unchanged, or raise when it is missing."""
    if not path.is_file():
        raise ValidationError(f"{what} {path} does not exist")
    return path


def parse_free(value: str) -> tuple[str, ...]:
    """Comma-separated subset of f0,z,loudness (empty string: nothing free)."""
    names = tuple(v.strip() for v in value.split(",") if v.strip())
    unknown = [n for n in names if n not in FREE_VARIABLES]
    if unknown:
        raise argparse.ArgumentTypeError(
            f"unknown free variable(s) {', '.join(unknown)}; "
            f"choose from {', '.join(FREE_VARIABLES)}"
        )
    return names

