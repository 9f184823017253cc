"""`mixsynth gen`: synthetic mixture, stems and ground truth."""

import argparse
import logging
from pathlib import Path
from typing import Any

import yaml

from ..core.base_command import BaseCommand, existing_file, path_arg
from ..core.config import Config
from ..core.errors import ConfigError, ValidationError
from ..nets.model import init_model
from ..nets.serialization import load_model, save_model
from ..services.synthetic import Scenario, generate_scene, write_scene

logger = logging.getLogger(__name__)


class GenCommand(BaseCommand):
    name = "gen"
    help = "render a synthetic mixture from known parameters"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--out", type=path_arg, required=True, help="output directory")
        parser.add_argument(
            "--sources", type=int, default=2, help="number of sources R (default: 2)"
        )
        parser.add_argument(
            "--duration", type=float, default=12.0, help="length in seconds (default: 12)"
        )
        parser.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
        parser.add_argument(
            "--model",
            type=path_arg,
            help="synthesizer model; created when missing (default: OUT/model.json)",
        )
        parser.add_argument(
            "--scenario",
            type=path_arg,
            help="YAML/JSON per-source pitch and note-length ranges",
        )

    def execute(self, args: argparse.Namespace, config: Config) -> int:
        if args.sources < 1:
            raise ValidationError(f"--sources must be at least 1, got {args.sources}")
        model_path = args.model if args.model is not None else args.out / "model.json"
        if model_path.exists():
            model = load_model(model_path)
        else:
            model = init_model(config.model, seed=args.seed)
            save_model(model, model_path)
            logger.info("Created model %s", model_path)

        if args.scenario is not None:
            existing_file(args.scenario, "scenario")
            scenario = Scenario.from_document(
                _read_scenario(args.scenario), args.sources, args.duration
            )
        else:
            scenario = Scenario.default(args.sources, args.duration)

        self.tracker.start("generate")
        scene = generate_scene(model, scenario, seed=args.seed)
        self.tracker.end("generate")
        scene.params.metadata["models"] = [str(model_path)]
        written = write_scene(scene, args.out)
        logger.info(
            "Generated %d sources, %d samples, T=%d in %s",
            scene.params.n_sources,
            scene.mixture.shape[0],
            scene.params.n_frames,
            args.out,
        )
        for kind, path in written.items():
            logger.debug("  %s: %s", kind, path)
        return 0


def _read_scenario(path: Path) -> Any:
    try:
        return yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read scenario {path}: {e}") from e
