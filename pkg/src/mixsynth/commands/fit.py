"""`mixsynth fit`: estimate every source's synthesis parameters from a mixture."""

import argparse
import logging
import math
from typing import Optional

import numpy as np

from ..core.base_command import BaseCommand, existing_file, parse_free, path_arg
from ..core.config import Config
from ..core.errors import RuntimeFailure, ValidationError
from ..nets.model import SynthModel, SynthParams
from ..optim.fitting import FitConfig, fit_segmented, plan_segments
from ..score.init import (
    flat_params,
    random_latents,
    random_pitch_params,
    segmented_score_params,
)
from ..score.track import ScoreTrack, load_score, tracks_for_sources
from ..services.paramfile import ParamFile, load_params, save_params
from ..services.wavio import read_wav
from .common import load_models, render_stems, write_stems

logger = logging.getLogger(__name__)


class FitCommand(BaseCommand):
    name = "fit"
    help = "fit the mixture model to an observed mixture"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--mixture", type=path_arg, required=True, help="observed mixture WAV")
        parser.add_argument(
            "--model",
            type=path_arg,
            action="append",
            required=True,
            help="pretrained model; once (shared by all sources) or once per source",
        )
        parser.add_argument("--score", type=path_arg, help="score JSON for score-informed init")
        parser.add_argument(
            "--init-params",
            type=path_arg,
            help="parameter file whose f0 and loudness start the fit",
        )
        parser.add_argument("--sources", type=int, help="number of sources R")
        parser.add_argument("--out", type=path_arg, required=True, help="fitted parameter file")
        parser.add_argument("--trace", type=path_arg, help="loss trace CSV")
        parser.add_argument("--stems-dir", type=path_arg, help="write resynthesized stems here")
        parser.add_argument("--iterations", type=int, help="Adam iterations")
        parser.add_argument(
            "--free", type=parse_free, help="comma-separated variables to optimize (f0,z,loudness)"
        )
        parser.add_argument("--seed", type=int, help="latent and noise seed")
        parser.add_argument("--l-high", type=float, help="initial loudness of active frames [dB]")
        parser.add_argument("--l-low", type=float, help="initial loudness of silent frames [dB]")
        parser.add_argument(
            "--fallback-pitch", type=float, help="MIDI pitch when nothing else sets f0"
        )
        parser.add_argument(
            "--random-pitch",
            action="store_true",
            help="start each source at a random constant pitch",
        )
        parser.add_argument(
            "--keep-init-z",
            action="store_true",
            help="keep z from --init-params instead of drawing it from N(0, 1)",
        )
        parser.add_argument(
            "--segment-seconds", type=float, help="fit independent segments of this length"
        )
        parser.add_argument("--jobs", type=int, default=1, help="parallel segment fits")

    def execute(self, args: argparse.Namespace, config: Config) -> int:
        settings = config.fit
        seed = args.seed if args.seed is not None else settings.seed
        l_high = args.l_high if args.l_high is not None else settings.l_high
        l_low = args.l_low if args.l_low is not None else settings.l_low
        fallback = settings.fallback_pitch
        if args.fallback_pitch is not None:
            fallback = args.fallback_pitch
        if args.jobs < 1:
            raise ValidationError(f"--jobs must be at least 1, got {args.jobs}")
        if args.random_pitch and (args.score or args.init_params):
            raise ValidationError("--random-pitch excludes --score and --init-params")
        if args.score and args.init_params:
            raise ValidationError(
                "--score and --init-params both set the starting f0 and loudness",
                "pass only one of them",
            )

        observed = read_wav(existing_file(args.mixture, "mixture"))
        init_file: Optional[ParamFile] = None
        if args.init_params is not None:
            init_file = load_params(existing_file(args.init_params, "init params"))
        tracks = load_score(existing_file(args.score, "score")) if args.score else None
        n_sources = _source_count(args, init_file, tracks)
        models = load_models(args.model, n_sources)

        hop = models[0].hop
        segment_samples: Optional[int] = None
        if args.segment_seconds:
            segment_samples = int(round(args.segment_seconds * observed.sample_rate))
        segments = plan_segments(len(observed), segment_samples, hop)
        padded_frames = sum(s.n_frames for s in segments)
        rng = np.random.default_rng(seed)
        model_config = models[0].config

        if tracks is not None:
            mode = "score"
            starts = [s.start_sample / observed.sample_rate for s in segments]
            init = [
                segmented_score_params(
                    track,
                    starts,
                    segments[0].n_frames,
                    model_config.latent_dim,
                    rng,
                    model_config.hop_ms,
                    model_config.frame_ms,
                    l_high,
                    l_low,
                    fallback_pitch=fallback,
                )
                for track in tracks_for_sources(tracks, n_sources)
            ]
        elif init_file is not None:
            mode = "params"
            init = _from_param_file(init_file, models, padded_frames, rng, args.keep_init_z)
        elif args.random_pitch:
            mode = "random-pitch"
            init = [
                random_pitch_params(padded_frames, model_config.latent_dim, rng, loudness=l_high)
                for _ in range(n_sources)
            ]
        else:
            mode = "flat"
            logger.warning(
                "No --score or --init-params: every source starts at MIDI %g", fallback
            )
            init = [
                flat_params(padded_frames, model_config.latent_dim, fallback, rng, l_high)
                for _ in range(n_sources)
            ]

        cfg = FitConfig.from_settings(
            settings, iterations=args.iterations, free=args.free, seed=seed
        )
        logger.info(
            "Fitting %d sources (%s init) to %s: %d iterations",
            n_sources,
            mode,
            args.mixture,
            cfg.iterations,
        )
        self.tracker.start("fit")
        result = fit_segmented(observed, models, init, cfg, segment_samples, args.jobs)
        self.tracker.end("fit")

        metadata: dict[str, object] = {
            "seed": seed,
            "init": mode,
            "score_informed": tracks is not None,
            "models": [str(p) for p in args.model],
            "iterations": cfg.iterations,
            "diverged": result.diverged,
        }
        if len(result.trace) and math.isfinite(result.final_loss):
            metadata["initial_loss"] = result.initial_loss
            metadata["final_loss"] = result.final_loss
        fitted = ParamFile(result.sources, hop_ms=model_config.hop_ms, metadata=metadata)
        save_params(fitted, args.out)
        if args.trace is not None:
            result.write_trace(args.trace)
        if args.stems_dir is not None:
            _, stems = render_stems(fitted, models, len(observed), seed)
            write_stems(args.stems_dir, stems)

        if result.diverged:
            raise RuntimeFailure(
                f"fit diverged: {result.message}",
                f"the last finite parameters were written to {args.out}",
            )
        logger.info(
            "Loss %.6g -> %.6g (%.2f%%), wrote %s",
            result.initial_loss,
            result.final_loss,
            100.0 * result.final_loss / result.initial_loss if result.initial_loss else 0.0,
            args.out,
        )
        return 0


def _source_count(
    args: argparse.Namespace, init_file: Optional[ParamFile], tracks: Optional[list[ScoreTrack]]
) -> int:
    """R from --sources, else the init parameters, the score or the model count."""
    if args.sources is not None:
        if args.sources < 1:
            raise ValidationError(f"--sources must be at least 1, got {args.sources}")
        if init_file is not None and init_file.n_sources != args.sources:
            raise ValidationError(
                f"--init-params has {init_file.n_sources} sources, --sources is {args.sources}"
            )
        return int(args.sources)
    if init_file is not None:
        return init_file.n_sources
    if tracks:
        return max(track.source for track in tracks) + 1
    if len(args.model) > 1:
        return len(args.model)
    raise ValidationError(
        "cannot tell how many sources to fit",
        "pass --sources, --score, --init-params or one --model per source",
    )


def _from_param_file(
    params: ParamFile,
    models: list[SynthModel],
    padded_frames: int,
    rng: np.random.Generator,
    keep_z: bool,
) -> list[SynthParams]:
    """f0 and loudness from a parameter file, extended to the padded frame count."""
    if params.hop_ms != models[0].config.hop_ms:
        raise ValidationError(
            f"--init-params uses a {params.hop_ms} ms hop, the model {models[0].config.hop_ms} ms"
        )
    if params.n_frames > padded_frames:
        raise ValidationError(
            f"--init-params has {params.n_frames} frames, the mixture needs {padded_frames}"
        )
    latent_dim = models[0].config.latent_dim
    if keep_z and params.latent_dim != latent_dim:
        raise ValidationError(
            f"--init-params has D={params.latent_dim}, the model expects D={latent_dim}"
        )
    pad = padded_frames - params.n_frames
    init = []
    for source in params.sources:
        z = np.pad(source.z, ((0, pad), (0, 0)), mode="edge") if keep_z else random_latents(
            padded_frames, latent_dim, rng
        )
        init.append(
            SynthParams(
                f0=np.pad(source.f0, (0, pad), mode="edge"),
                z=z,
                loudness=np.pad(source.loudness, (0, pad), mode="edge"),
            )
        )
    return init
