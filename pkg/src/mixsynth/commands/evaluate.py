"""`mixsynth eval`: compare estimated parameters with the ground truth."""

import argparse
import logging
from pathlib import Path
from typing import Optional

import numpy as np

from ..core.base_command import BaseCommand, existing_file, path_arg
from ..core.config import Config
from ..core.errors import ValidationError
from ..core.utils import dump_json, write_text_atomic
from ..nets.model import SynthModel
from ..score.track import SILENCE, load_score, rasterize, tracks_for_sources
from ..services.metrics import (
    EvalReport,
    SourceScores,
    active_mask,
    assign_sources,
    f0_mae_cents,
    loudness_mae,
    mfcc_mae,
)
from ..services.paramfile import ParamFile, load_params
from ..services.wavio import read_wav
from .common import check_hop, load_models, params_seed, render_stems

logger = logging.getLogger(__name__)


class EvalCommand(BaseCommand):
    name = "eval"
    help = "score estimated parameters against references (F0, MFCC, loudness)"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--est", type=path_arg, required=True, help="estimated parameter file")
        parser.add_argument("--ref", type=path_arg, required=True, help="reference parameter file")
        parser.add_argument(
            "--ref-audio",
            type=path_arg,
            help="directory of reference stems source_<r>.wav (default: render --ref)",
        )
        parser.add_argument(
            "--model",
            type=path_arg,
            action="append",
            help="model(s) rendering the estimates (default: those recorded in --est)",
        )
        parser.add_argument("--score", type=path_arg, help="score whose active frames mask F0")
        parser.add_argument(
            "--assign",
            choices=["auto", "index", "best"],
            default="auto",
            help="source pairing; auto = index with --score, else best permutation",
        )
        parser.add_argument("--seed", type=int, help="noise seed of the estimate rendering")
        parser.add_argument("--out", type=path_arg, help="write the report as JSON")

    def execute(self, args: argparse.Namespace, config: Config) -> int:
        est = load_params(existing_file(args.est, "estimate"))
        ref = load_params(existing_file(args.ref, "reference"))
        if est.n_sources != ref.n_sources:
            raise ValidationError(
                f"estimate has {est.n_sources} sources, reference {ref.n_sources}"
            )
        if est.n_frames != ref.n_frames or est.hop_ms != ref.hop_ms:
            raise ValidationError(
                f"estimate has T={est.n_frames} at {est.hop_ms} ms, "
                f"reference T={ref.n_frames} at {ref.hop_ms} ms"
            )
        models = load_models(_model_paths(args.model, est), est.n_sources)
        check_hop(est, models)
        model_config = models[0].config

        if args.score is not None:
            score = load_score(existing_file(args.score, "score"))
            tracks = tracks_for_sources(score, ref.n_sources)
            masks = [
                rasterize(t, ref.n_frames, model_config.hop_ms, model_config.frame_ms) != SILENCE
                for t in tracks
            ]
        else:
            masks = [
                active_mask(p.loudness, config.fit.l_low, config.eval.active_margin_db)
                for p in ref.sources
            ]
        mode = args.assign
        if mode == "auto":
            mode = "index" if args.score is not None else "best"
        pairing = assign_sources(
            [p.f0 for p in est.sources], [p.f0 for p in ref.sources], masks, mode
        )

        ref_audio = self._reference_audio(args.ref_audio, ref, models, args.seed)
        n_samples = ref_audio[0].shape[0]
        self.tracker.start("render")
        _, est_audio = render_stems(est, models, n_samples, params_seed(est, args.seed))
        self.tracker.end("render")

        report = EvalReport()
        for i, j in enumerate(pairing):
            mask = masks[j]
            if mask.any():
                cents = f0_mae_cents(est.sources[i].f0, ref.sources[j].f0, mask)
            else:
                logger.warning("Reference source %d has no active frames; F0 error set to 0", j)
                cents = 0.0
            report.sources.append(
                SourceScores(
                    source=i,
                    reference=j,
                    f0_cents=cents,
                    mfcc=mfcc_mae(est_audio[i], ref_audio[j], config.eval),
                    loudness_db=loudness_mae(
                        est_audio[i], ref_audio[j], model_config.hop_ms, model_config.frame_ms
                    ),
                    voiced_frames=int(np.sum(mask)),
                )
            )

        print(report.to_table())
        if args.out is not None:
            write_text_atomic(args.out, dump_json(report.to_document()))
            logger.info("Wrote report %s", args.out)
        return 0

    def _reference_audio(
        self,
        audio_dir: Optional[Path],
        ref: ParamFile,
        models: list[SynthModel],
        seed: Optional[int],
    ) -> list[np.ndarray]:
        if audio_dir is None:
            n_samples = ref.n_frames * models[0].hop
            _, stems = render_stems(ref, models, n_samples, params_seed(ref, seed))
            return stems
        stems = [
            read_wav(existing_file(audio_dir / f"source_{r}.wav", "reference stem")).samples
            for r in range(ref.n_sources)
        ]
        if len({s.shape[0] for s in stems}) != 1:
            raise ValidationError(f"reference stems in {audio_dir} differ in length")
        return stems


def _model_paths(flags: Optional[list[Path]], est: ParamFile) -> list[Path]:
    if flags:
        return flags
    recorded = est.metadata.get("models")
    if isinstance(recorded, list) and recorded and all(isinstance(p, str) for p in recorded):
        return [Path(p) for p in recorded]
    raise ValidationError(
        "no model to render the estimate with",
        "pass --model, or evaluate a parameter file written by `mixsynth fit`",
    )
