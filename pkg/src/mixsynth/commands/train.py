"""`mixsynth train`: autoencoder pretraining on monophonic clips."""

import argparse
import copy
import logging

from ..core.base_command import BaseCommand, existing_file, path_arg
from ..core.config import Config
from ..core.errors import ValidationError
from ..dsp.spectral import StftConfig
from ..nets.model import init_model
from ..nets.serialization import load_model, save_model
from ..optim.pretrain import pretrain
from ..services.dataset import load_training_clips

logger = logging.getLogger(__name__)


class TrainCommand(BaseCommand):
    name = "train"
    help = "pretrain a source synthesizer as an autoencoder"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            "--data", type=path_arg, required=True, help="directory of mono 16 kHz WAV clips"
        )
        parser.add_argument("--model", type=path_arg, help="initial model (default: random)")
        parser.add_argument("--out", type=path_arg, required=True, help="trained model path")
        parser.add_argument("--epochs", type=int, help="passes over the data")
        parser.add_argument("--lr", type=float, help="Adam learning rate")
        parser.add_argument("--seed", type=int, help="initialization and noise seed")
        parser.add_argument(
            "--reverb", action="store_true", help="train a reverb impulse response too"
        )

    def execute(self, args: argparse.Namespace, config: Config) -> int:
        settings = config.train
        epochs = args.epochs if args.epochs is not None else settings.epochs
        lr = args.lr if args.lr is not None else settings.lr
        seed = args.seed if args.seed is not None else settings.seed

        if args.model is not None:
            model = load_model(existing_file(args.model, "model"))
            if args.reverb and not model.config.reverb:
                raise ValidationError(
                    f"model {args.model} was built without reverb",
                    "drop --reverb or start from a new model",
                )
        else:
            model_config = copy.deepcopy(config.model)
            model_config.reverb = model_config.reverb or args.reverb
            model = init_model(model_config, seed=seed)

        clips = load_training_clips(args.data, model, settings.clip_seconds)
        self.tracker.start("pretrain")
        result = pretrain(
            clips,
            model,
            epochs=epochs,
            lr=lr,
            clip_norm=settings.clip_norm,
            stft=StftConfig(tuple(settings.loss_windows_ms)),
            seed=seed,
            log_every=settings.log_every,
        )
        self.tracker.end("pretrain")
        save_model(result.model, args.out)
        logger.info(
            "Trained %d epochs: loss %.6g -> %.6g, saved %s",
            epochs,
            result.epoch_losses[0],
            result.epoch_losses[-1],
            args.out,
        )
        return 0
