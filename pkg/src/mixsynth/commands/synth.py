"""`mixsynth synth`: render a parameter file to WAVs."""

import argparse
import logging

from ..core.base_command import BaseCommand, existing_file, path_arg
from ..core.config import Config
from ..services.paramfile import load_params
from ..services.wavio import write_wav
from .common import check_hop, load_models, params_seed, render_stems, write_stems

logger = logging.getLogger(__name__)


class SynthCommand(BaseCommand):
    name = "synth"
    help = "synthesize stems and their mixture from a parameter file"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--params", type=path_arg, required=True, help="parameter file")
        parser.add_argument(
            "--model",
            type=path_arg,
            action="append",
            required=True,
            help="model; once (shared) or once per source",
        )
        parser.add_argument("--out-dir", type=path_arg, required=True, help="output directory")
        parser.add_argument(
            "--seed", type=int, help="noise seed (default: the one recorded in the file)"
        )

    def execute(self, args: argparse.Namespace, config: Config) -> int:
        params = load_params(existing_file(args.params, "params"))
        models = load_models(args.model, params.n_sources)
        check_hop(params, models)
        seed = params_seed(params, args.seed)
        n_samples = params.n_frames * models[0].hop

        self.tracker.start("synthesize")
        mixture, stems = render_stems(params, models, n_samples, seed)
        self.tracker.end("synthesize")
        write_wav(args.out_dir / "mixture.wav", mixture)
        write_stems(args.out_dir, stems)
        logger.info("Rendered %d sources (%d samples, seed %d)", len(stems), n_samples, seed)
        return 0
