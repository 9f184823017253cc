"""Fitting step: recover per-source synthesis parameters from a mixture.

The synthesizer weights stay fixed; only the free variables among
(f0, z, loudness) of every source follow the Adam updates.
"""

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..core.config import FREE_VARIABLES, FitSettings
from ..core.errors import DivergenceError, RuntimeFailure, ValidationError
from ..core.utils import PerformanceTracker, n_frames
from ..dsp.framing import AudioLike, as_samples
from ..dsp.spectral import StftConfig
from ..mixture.model import MixtureState, build_loss_graph
from ..nets.model import SynthModel, SynthParams
from .adam import AdamState, adam_step, check_schedule

logger = logging.getLogger(__name__)


@dataclass
class FitConfig:
    """Iterations, schedule, loss resolutions and free variables of one fit."""

    iterations: int = 3000
    schedule: list[tuple[int, float]] = field(
        default_factory=lambda: [(0, 0.1), (1000, 0.01), (2000, 0.001)]
    )
    stft: StftConfig = field(default_factory=StftConfig)
    free: tuple[str, ...] = FREE_VARIABLES
    seed: int = 0
    log_every: int = 100

    def __post_init__(self) -> None:
        if self.iterations < 0:
            raise ValidationError(f"iterations must be >= 0, got {self.iterations}")
        self.schedule = check_schedule(self.schedule)
        unknown = set(self.free) - set(FREE_VARIABLES)
        if unknown:
            raise ValidationError(
                f"unknown free variables {sorted(unknown)}",
                f"choose from {', '.join(FREE_VARIABLES)}",
            )
        self.free = tuple(v for v in FREE_VARIABLES if v in self.free)

    @classmethod
    def from_settings(cls, settings: FitSettings, **overrides: object) -> "FitConfig":
        values: dict[str, object] = {
            "iterations": settings.iterations,
            "schedule": [(int(step), float(rate)) for step, rate in settings.schedule],
            "stft": StftConfig(tuple(settings.loss_windows_ms)),
            "free": tuple(settings.free),
            "seed": settings.seed,
            "log_every": settings.log_every,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)  # type: ignore[arg-type]


@dataclass
class FitResult:
    """Fitted parameters and the loss trace.

    trace[i] is the loss before update i; the last entry is the loss of the
    returned parameters. rates[i] is the learning rate of update i.
    """

    sources: list[SynthParams]
    trace: np.ndarray
    rates: np.ndarray
    diverged: bool = False
    message: str = ""

    @property
    def initial_loss(self) -> float:
        return float(self.trace[0])

    @property
    def final_loss(self) -> float:
        return float(self.trace[-1])

    def write_trace(self, path: Path) -> None:
        """CSV with columns iteration, loss, learning_rate."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["iteration", "loss", "learning_rate"])
            for i, loss in enumerate(self.trace):
                rate = f"{self.rates[i]:.6g}" if i < len(self.rates) else ""
                writer.writerow([i, repr(float(loss)), rate])


def _flatten(sources: Sequence[SynthParams], free: Sequence[str]) -> dict[str, np.ndarray]:
    return {f"{r}.{name}": getattr(p, name) for r, p in enumerate(sources) for name in free}


def _unflatten(
    sources: Sequence[SynthParams], values: dict[str, np.ndarray]
) -> list[SynthParams]:
    rebuilt = []
    for r, params in enumerate(sources):
        fields_ = {
            name: values.get(f"{r}.{name}", getattr(params, name)) for name in FREE_VARIABLES
        }
        rebuilt.append(SynthParams(**fields_))
    return rebuilt


def fit_mixture(
    observed: AudioLike,
    models: Sequence[SynthModel],
    init: Sequence[SynthParams],
    cfg: Optional[FitConfig] = None,
) -> FitResult:
    """Minimize the spectral loss between the rendered and the observed mixture.

    Runs a fixed number of Adam iterations from `init`. A non-finite loss or
    gradient stops the fit early; the result then carries diverged=True, the
    last finite parameters and the trace up to the failure.
    """
    cfg = cfg if cfg is not None else FitConfig()
    samples = as_samples(observed)
    models = list(models)
    fingerprints = [m.fingerprint() for m in models]
    sources = [p.copy() for p in init]
    # Validates R, T and D before the first iteration.
    MixtureState(sources, models, samples.shape[0], cfg.seed)

    adam = AdamState(schedule=list(cfg.schedule))
    trace: list[float] = []
    rates: list[float] = []
    tracker = PerformanceTracker()
    diverged, message = False, ""

    for iteration in range(cfg.iterations + 1):
        state = MixtureState(sources, models, samples.shape[0], cfg.seed)
        tracker.start("forward")
        rendered = build_loss_graph(state, samples, cfg.stft, cfg.free)
        tracker.end("forward")
        assert rendered.loss is not None
        loss = rendered.loss.item()
        if not math.isfinite(loss):
            diverged, message = True, DivergenceError(iteration).message
            break
        trace.append(loss)
        if iteration == cfg.iterations or not cfg.free:
            break

        tracker.start("backward")
        rendered.graph.backward(rendered.loss)
        tracker.end("backward")
        grads = {
            f"{r}.{name}": leaf.grad
            for r, source_leaves in enumerate(rendered.leaves)
            for name, leaf in source_leaves.items()
            if name in cfg.free
        }
        rate = adam.rate_at(iteration)
        try:
            values = adam_step(_flatten(sources, cfg.free), grads, adam, iteration)
        except RuntimeFailure as e:
            diverged, message = True, str(e)
            break
        sources = _unflatten(sources, values)
        rates.append(rate)

        if cfg.log_every and iteration % cfg.log_every == 0:
            logger.info("iteration %d  loss %.6g  lr %g", iteration, loss, rate)

    if [m.fingerprint() for m in models] != fingerprints:
        raise RuntimeFailure("model weights changed during fitting")
    if diverged:
        logger.warning("Fit stopped early: %s", message)
    logger.debug(tracker.get_summary())
    return FitResult(
        sources=sources,
        trace=np.asarray(trace, dtype=np.float64),
        rates=np.asarray(rates, dtype=np.float64),
        diverged=diverged,
        message=message,
    )


# ------------------------------------------------------------ segmented fits


@dataclass(frozen=True)
class Segment:
    index: int
    start_sample: int
    start_frame: int
    n_frames: int
    real_frames: int


def plan_segments(n_samples: int, segment_samples: Optional[int], hop: int) -> list[Segment]:
    """Split a signal into equal segments; the last one is zero-padded.

    real_frames counts the frames of a segment that cover actual audio.
    """
    total_frames = n_frames(n_samples, hop)
    if segment_samples is None or segment_samples >= n_samples:
        return [Segment(0, 0, 0, total_frames, total_frames)]
    if segment_samples % hop != 0:
        raise ValidationError(
            f"segment length {segment_samples} samples is not a multiple of the {hop}-sample hop"
        )
    per_segment = segment_samples // hop
    count = -(-n_samples // segment_samples)
    return [
        Segment(
            index=k,
            start_sample=k * segment_samples,
            start_frame=k * per_segment,
            n_frames=per_segment,
            real_frames=min(per_segment, total_frames - k * per_segment),
        )
        for k in range(count)
    ]


def _fit_job(
    observed: np.ndarray,
    models: list[SynthModel],
    init: list[SynthParams],
    cfg: FitConfig,
) -> FitResult:
    return fit_mixture(observed, models, init, cfg)


def fit_segmented(
    observed: AudioLike,
    models: Sequence[SynthModel],
    init: Sequence[SynthParams],
    cfg: FitConfig,
    segment_samples: Optional[int] = None,
    jobs: int = 1,
) -> FitResult:
    """Fit independent segments and join their parameters in time.

    `init` covers every planned segment frame, including the padding of the
    last segment. The combined trace is the per-iteration sum of segment
    losses, cut to the shortest segment trace.
    """
    samples = as_samples(observed)
    hop = models[0].hop
    segments = plan_segments(samples.shape[0], segment_samples, hop)
    padded_frames = sum(s.n_frames for s in segments)
    for params in init:
        if params.n_frames != padded_frames:
            raise ValidationError(
                f"initial parameters have {params.n_frames} frames, segments need {padded_frames}"
            )
    if len(segments) == 1:
        return fit_mixture(samples, models, init, cfg)

    seg_len = segments[0].n_frames * hop
    padded = np.zeros(len(segments) * seg_len)
    padded[: samples.shape[0]] = samples
    jobs_args = [
        (
            padded[s.start_sample : s.start_sample + seg_len],
            list(models),
            [p.slice_frames(s.start_frame, s.start_frame + s.n_frames) for p in init],
            cfg,
        )
        for s in segments
    ]
    logger.info("Fitting %d segments of %d samples (%d jobs)", len(segments), seg_len, jobs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_fit_job, *zip(*jobs_args)))
    else:
        results = [_fit_job(*args) for args in jobs_args]

    sources = []
    for r in range(len(init)):
        parts = [res.sources[r].slice_frames(0, s.real_frames) for res, s in zip(results, segments)]
        sources.append(
            SynthParams(
                np.concatenate([p.f0 for p in parts]),
                np.concatenate([p.z for p in parts]),
                np.concatenate([p.loudness for p in parts]),
            )
        )
    length = min(len(res.trace) for res in results)
    rate_length = min(len(res.rates) for res in results)
    failures = [
        f"segment {s.index}: {res.message}" for res, s in zip(results, segments) if res.diverged
    ]
    return FitResult(
        sources=sources,
        trace=np.sum([res.trace[:length] for res in results], axis=0),
        rates=results[0].rates[:rate_length],
        diverged=bool(failures),
        message="; ".join(failures),
    )
