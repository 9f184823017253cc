"""Evaluation metrics: F0 error in cents, MFCC distance and loudness error."""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from ..core.config import EvalSettings
from ..core.errors import ValidationError
from ..dsp.framing import AudioLike, as_samples
from ..dsp.loudness import a_weighted_loudness
from ..dsp.spectral import mfcc

logger = logging.getLogger(__name__)

F0_FLOOR_HZ = 1e-7
MAX_EXHAUSTIVE_SOURCES = 4


def _same_length(kind: str, a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[0] != b.shape[0]:
        raise ValidationError(f"{kind}: estimate has length {a.shape[0]}, reference {b.shape[0]}")


def f0_mae_cents(est: np.ndarray, ref: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    """Mean |1200 log2(est / ref)| over masked frames; both floored at 1e-7 Hz."""
    est = np.asarray(est, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    _same_length("f0_mae_cents", est, ref)
    mask = np.ones(est.shape[0], dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    _same_length("f0_mae_cents mask", mask, ref)
    if not mask.any():
        raise ValidationError(
            "f0_mae_cents: no active frames, the error is undefined",
            "check the reference loudness or the score",
        )
    ratio = np.maximum(est[mask], F0_FLOOR_HZ) / np.maximum(ref[mask], F0_FLOOR_HZ)
    return float(np.mean(np.abs(1200.0 * np.log2(ratio))))


def mfcc_mae(est: AudioLike, ref: AudioLike, settings: Optional[EvalSettings] = None) -> float:
    """Mean absolute difference of the evaluation MFCC matrices."""
    settings = settings if settings is not None else EvalSettings()
    est_samples, ref_samples = as_samples(est), as_samples(ref)
    _same_length("mfcc_mae", est_samples, ref_samples)

    def features(x: np.ndarray) -> np.ndarray:
        return mfcc(
            x,
            frame_ms=settings.mfcc_frame_ms,
            hop_ms=settings.mfcc_hop_ms,
            n_mels=settings.mfcc_mels,
            fmin=settings.mfcc_fmin,
            fmax=settings.mfcc_fmax,
            n_coeffs=settings.n_mfcc,
        )

    return float(np.mean(np.abs(features(est_samples) - features(ref_samples))))


def loudness_mae(
    est: AudioLike, ref: AudioLike, hop_ms: float = 32.0, frame_ms: float = 64.0
) -> float:
    """Mean absolute framewise A-weighted loudness difference in dB."""
    est_l = a_weighted_loudness(est, hop_ms=hop_ms, frame_ms=frame_ms)
    ref_l = a_weighted_loudness(ref, hop_ms=hop_ms, frame_ms=frame_ms)
    _same_length("loudness_mae", est_l, ref_l)
    return float(np.mean(np.abs(est_l - ref_l)))


def active_mask(ref_loudness: np.ndarray, l_low: float = -10.0, margin: float = 1.0) -> np.ndarray:
    """Frames where the reference source is active: loudness above l_low + margin."""
    return np.asarray(ref_loudness) > l_low + margin


def assign_sources(
    est_f0: Sequence[np.ndarray],
    ref_f0: Sequence[np.ndarray],
    masks: Sequence[np.ndarray],
    mode: str = "index",
) -> list[int]:
    """Reference index for every estimated source.

    'index' pairs sources by position; 'best' searches all permutations for
    the smallest summed F0 error (up to four sources).
    """
    n = len(est_f0)
    if n != len(ref_f0):
        raise ValidationError(f"{n} estimated sources but {len(ref_f0)} references")
    if mode == "index":
        return list(range(n))
    if mode != "best":
        raise ValidationError(f"unknown assignment mode '{mode}'", "use index or best")
    if n > MAX_EXHAUSTIVE_SOURCES:
        logger.warning("%d sources: too many for an exhaustive search, pairing by index", n)
        return list(range(n))

    def cost(perm: tuple[int, ...]) -> float:
        return sum(
            f0_mae_cents(est_f0[i], ref_f0[j], masks[j]) if masks[j].any() else 0.0
            for i, j in enumerate(perm)
        )

    best = min(itertools.permutations(range(n)), key=cost)
    return list(best)


@dataclass
class SourceScores:
    source: int
    reference: int
    f0_cents: float
    mfcc: float
    loudness_db: float
    voiced_frames: int

    def as_dict(self) -> dict[str, Any]:
        return {
            "source": self.source,
            "reference": self.reference,
            "f0_cents": self.f0_cents,
            "mfcc": self.mfcc,
            "loudness_db": self.loudness_db,
            "voiced_frames": self.voiced_frames,
        }


METRICS = ("f0_cents", "mfcc", "loudness_db")


@dataclass
class EvalReport:
    """Per-source MAEs with their mean and standard error across sources."""

    sources: list[SourceScores] = field(default_factory=list)

    def mean(self) -> dict[str, float]:
        return {m: float(np.mean([getattr(s, m) for s in self.sources])) for m in METRICS}

    def standard_error(self) -> dict[str, float]:
        n = len(self.sources)
        if n < 2:
            return {m: 0.0 for m in METRICS}
        return {
            m: float(np.std([getattr(s, m) for s in self.sources], ddof=1) / np.sqrt(n))
            for m in METRICS
        }

    def to_document(self) -> dict[str, Any]:
        return {
            "sources": [s.as_dict() for s in self.sources],
            "mean": self.mean(),
            "standard_error": self.standard_error(),
        }

    def to_table(self) -> str:
        """Aligned text table, one row per source plus mean and standard error."""
        header = ["source", "ref", "F0 [cent]", "MFCC", "Loudness [dB]", "voiced"]
        rows = [
            [
                str(s.source),
                str(s.reference),
                f"{s.f0_cents:.2f}",
                f"{s.mfcc:.3f}",
                f"{s.loudness_db:.2f}",
                str(s.voiced_frames),
            ]
            for s in self.sources
        ]
        mean, sem = self.mean(), self.standard_error()
        for label, summary in (("mean", mean), ("sem", sem)):
            rows.append(
                [
                    label,
                    "",
                    f"{summary['f0_cents']:.2f}",
                    f"{summary['mfcc']:.3f}",
                    f"{summary['loudness_db']:.2f}",
                    "",
                ]
            )
        table = [header, *rows]
        widths = [max(len(row[i]) for row in table) for i in range(len(header))]
        lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in table]
        return "\n".join(lines)
