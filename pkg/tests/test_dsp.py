"""
Tests for the non-learned signal processing: framing helpers, spectra,
MFCCs, A-weighted loudness and autocorrelation pitch estimation.
"""

import numpy as np
import pytest

from mixsynth.core.errors import ValidationError
from mixsynth.core.utils import SAMPLE_RATE, midi_to_hz, ms_to_samples, n_frames
from mixsynth.dsp import (
    AudioBuffer,
    a_weighted_loudness,
    a_weighting_db,
    estimate_f0,
    mel_filterbank,
    mfcc,
    stft_magnitude,
    stft_magnitude_op,
    upsample_framewise,
)
from mixsynth.dsp.loudness import LOUDNESS_FLOOR_DB
from mixsynth.dsp.spectral import cepstrum, stft_frames
from mixsynth.grad import DiffGraph


def sine(freq: float, seconds: float = 1.0, amplitude: float = 1.0) -> np.ndarray:
    n = np.arange(int(seconds * SAMPLE_RATE))
    return amplitude * np.sin(2 * np.pi * freq * n / SAMPLE_RATE)


def test_frame_count_is_one_per_started_hop() -> None:
    assert n_frames(12 * SAMPLE_RATE, ms_to_samples(32.0)) == 375
    assert n_frames(513, 512) == 2
    assert n_frames(0, 512) == 1


def test_ms_to_samples_rejects_fractional_lengths() -> None:
    assert ms_to_samples(4.0) == 64
    with pytest.raises(ValidationError, match="whole number of samples"):
        ms_to_samples(0.01)


def test_midi_to_hz_reference_pitch() -> None:
    assert float(midi_to_hz(69)) == pytest.approx(440.0)
    assert float(midi_to_hz(81)) == pytest.approx(880.0)


def test_audio_buffer_rejects_stereo_and_wrong_rate() -> None:
    with pytest.raises(ValidationError, match="mono"):
        AudioBuffer(np.zeros((10, 2)))
    with pytest.raises(ValidationError, match="16000 Hz"):
        AudioBuffer(np.zeros(10), sample_rate=44100)


def test_upsample_framewise_interpolates_and_holds_ends() -> None:
    out = upsample_framewise(np.array([0.0, 1.0]), hop=4, total=9)
    np.testing.assert_allclose(out, [0.0, 0.25, 0.5, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0])

    # Anchors shifted right: the first frame value is held before its anchor
    shifted = upsample_framewise(np.array([2.0, 4.0]), hop=2, total=6, offset=2)
    np.testing.assert_allclose(shifted, [2.0, 2.0, 2.0, 3.0, 4.0, 4.0])


def test_upsample_framewise_is_linear_and_exact_at_anchors() -> None:
    rng = np.random.default_rng(3)
    u, v = rng.standard_normal(6), rng.standard_normal(6)
    combined = upsample_framewise(2.5 * u - 0.5 * v, hop=8, total=50, offset=3)
    separate = 2.5 * upsample_framewise(u, 8, 50, 3) - 0.5 * upsample_framewise(v, 8, 50, 3)
    np.testing.assert_allclose(combined, separate, rtol=1e-12, atol=1e-12)

    out = upsample_framewise(u, hop=8, total=50, offset=3)
    np.testing.assert_allclose(out[3 + 8 * np.arange(6)], u, rtol=0.0, atol=1e-12)


def test_a_weighting_reference_points() -> None:
    assert a_weighting_db(np.array([1000.0]))[0] == pytest.approx(0.0, abs=0.05)
    assert a_weighting_db(np.array([100.0]))[0] == pytest.approx(-19.1, abs=0.2)
    assert a_weighting_db(np.array([0.0]))[0] == -np.inf


def test_full_scale_sine_loudness() -> None:
    loudness = a_weighted_loudness(sine(1000.0))
    interior = loudness[1:-3]
    np.testing.assert_allclose(interior, -3.01, atol=0.1)


def test_equal_power_sines_weigh_1khz_above_100hz() -> None:
    high = a_weighted_loudness(sine(1000.0))[1:-3]
    low = a_weighted_loudness(sine(100.0))[1:-3]
    assert np.mean(high) - np.mean(low) > 15.0


def test_loudness_tracks_gain_and_floor() -> None:
    x = sine(440.0, amplitude=0.1)
    quiet = a_weighted_loudness(x)
    loud = a_weighted_loudness(2.0 * x)
    np.testing.assert_allclose(loud - quiet, 20 * np.log10(2.0), atol=1e-9)

    silence = a_weighted_loudness(np.zeros(SAMPLE_RATE))
    assert np.all(silence == LOUDNESS_FLOOR_DB)


def test_loudness_frame_count_follows_hop() -> None:
    loudness = a_weighted_loudness(np.zeros(SAMPLE_RATE), hop_ms=4.0, frame_ms=8.0)
    assert loudness.shape == (250,)


def test_stft_magnitude_matches_differentiable_version() -> None:
    x = np.random.default_rng(0).standard_normal(2000)
    reference = stft_magnitude(x, frame_ms=16.0, hop_ms=8.0)
    graph = DiffGraph()
    op = stft_magnitude_op(graph.constant(x), 256, 128)
    assert op.shape == reference.shape == (16, 129)
    np.testing.assert_allclose(op.data, reference, rtol=1e-9, atol=1e-9)


def test_stft_of_silence_is_zero() -> None:
    assert np.all(stft_magnitude(np.zeros(SAMPLE_RATE), frame_ms=64.0, hop_ms=32.0) == 0.0)


def test_1khz_sine_peaks_at_bin_256_for_256ms_frames() -> None:
    magnitude = stft_magnitude(sine(1000.0), frame_ms=256.0, hop_ms=128.0)
    assert magnitude.shape[1] == 2049
    # Frames 0..5 lie wholly inside the one-second signal
    assert np.all(np.argmax(magnitude[:6], axis=1) == 256)


def test_stft_power_matches_windowed_frame_energy() -> None:
    x = np.random.default_rng(2).standard_normal(SAMPLE_RATE)
    frame_length, hop = 1024, 512
    magnitude = stft_magnitude(x, frame_ms=64.0, hop_ms=32.0)
    spectral = (
        magnitude[:, 0] ** 2
        + magnitude[:, -1] ** 2
        + 2.0 * np.sum(magnitude[:, 1:-1] ** 2, axis=1)
    )
    energy = frame_length * np.sum(stft_frames(x, frame_length, hop) ** 2, axis=1)
    np.testing.assert_allclose(spectral, energy, rtol=1e-8)


def test_mel_filterbank_shape_and_range_check() -> None:
    bank = mel_filterbank(40, 1024, 20.0, 8000.0)
    assert bank.shape == (40, 513)
    assert np.all(bank >= 0.0) and np.all(bank <= 1.0)
    # Every filter covers at least one bin
    assert np.all(bank.max(axis=1) > 0.0)

    with pytest.raises(ValidationError, match="mel range"):
        mel_filterbank(40, 1024, 20.0, 9000.0)


def test_mfcc_shape_and_coefficient_limit() -> None:
    features = mfcc(sine(440.0))
    assert features.shape == (32, 30)
    assert np.all(np.isfinite(features))

    with pytest.raises(ValidationError, match="n_coeffs"):
        mfcc(sine(440.0), n_mels=20, n_coeffs=30)


def test_mfcc_ignores_polarity() -> None:
    x = np.random.default_rng(1).standard_normal(SAMPLE_RATE)
    np.testing.assert_allclose(mfcc(x), mfcc(-x), atol=1e-9)


def test_cepstrum_of_flat_log_mel_is_scaled_constant() -> None:
    level, n_mels = -2.5, 40
    coefficients = cepstrum(np.full((3, n_mels), level), n_coeffs=13)
    np.testing.assert_allclose(coefficients[:, 0], level * np.sqrt(n_mels), rtol=1e-12)
    np.testing.assert_allclose(coefficients[:, 1:], 0.0, atol=1e-12)


@pytest.mark.parametrize("freq", [110.0, 220.0, 440.0, 880.0])
def test_estimate_f0_on_sine(freq: float) -> None:
    track = estimate_f0(sine(freq))
    interior = track.f0[2:-3]
    cents = 1200 * np.abs(np.log2(interior / freq))
    assert np.max(cents) < 20.0
    assert np.all(track.voiced[2:-3])


def test_estimate_f0_on_silence_falls_back() -> None:
    track = estimate_f0(np.zeros(SAMPLE_RATE), fmin=60.0)
    assert not track.voiced.any()
    np.testing.assert_allclose(track.f0, 60.0)


def test_estimate_f0_rejects_bad_range() -> None:
    with pytest.raises(ValidationError, match="pitch range"):
        estimate_f0(np.zeros(100), fmin=500.0, fmax=100.0)
    with pytest.raises(ValidationError, match="frames longer"):
        estimate_f0(np.zeros(100), fmin=10.0)
