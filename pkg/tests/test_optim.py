"""
Tests for Adam, the mixture fitting step, segmented fits and pretraining.

The recovery experiments at the end run the full-size fit and are marked
slow; run them with `pytest -m slow`.
"""

from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from mixsynth.core.config import FitSettings, ModelConfig
from mixsynth.core.errors import NonFiniteGradientError, RuntimeFailure, ValidationError
from mixsynth.dsp.spectral import StftConfig
from mixsynth.mixture import MixtureState, synthesize_mixture
from mixsynth.nets import SynthModel, SynthParams, init_model, load_model, save_model
from mixsynth.optim import (
    AdamState,
    FitConfig,
    FitResult,
    adam_step,
    check_schedule,
    clip_by_global_norm,
    fit_mixture,
    fit_segmented,
    global_norm,
    plan_segments,
    prepare_clip,
    pretrain,
    reconstruction_loss,
)
from mixsynth.score import random_pitch_params, rasterize, score_informed_params
from mixsynth.services.metrics import f0_mae_cents, loudness_mae
from mixsynth.services.synthetic import Scenario, generate_scene

from conftest import TINY_HOP, random_params, tiny_config


def small_fit(iterations: int, **overrides: object) -> FitConfig:
    values: dict[str, object] = {
        "iterations": iterations,
        "schedule": [(0, 0.02)],
        "stft": StftConfig((8.0, 16.0)),
        "log_every": 0,
    }
    values.update(overrides)
    return FitConfig(**values)  # type: ignore[arg-type]


def observed_from(model: SynthModel, sources: list[SynthParams], n_samples: int) -> np.ndarray:
    mixture, _ = synthesize_mixture(MixtureState(sources, [model], n_samples, seed=0))
    return mixture


# ------------------------------------------------------------------- adam


def test_first_adam_step_moves_by_the_rate() -> None:
    """Bias correction makes the first update rate * g / (|g| + eps)."""
    state = AdamState(schedule=[(0, 0.1)])
    params = {"w": np.array([1.0, -2.0, 0.5])}
    grads = {"w": np.array([3.0, -0.5, 0.0])}
    updated = adam_step(params, grads, state)

    np.testing.assert_allclose(updated["w"], [0.9, -1.9, 0.5], atol=1e-7)
    assert state.step == 1
    # Inputs are not modified in place
    np.testing.assert_allclose(params["w"], [1.0, -2.0, 0.5])


def test_adam_leaves_parameters_without_gradient() -> None:
    state = AdamState()
    params = {"a": np.ones(2), "b": np.ones(2)}
    updated = adam_step(params, {"a": np.ones(2)}, state)
    assert updated["b"] is params["b"]
    assert "b" not in state.first


def test_schedule_rate_lookup() -> None:
    state = AdamState(schedule=[(0, 0.1), (1000, 0.01), (2000, 0.001)])
    assert state.rate_at(0) == 0.1
    assert state.rate_at(999) == 0.1
    assert state.rate_at(1000) == 0.01
    assert state.rate_at(2999) == 0.001


def test_schedule_validation() -> None:
    with pytest.raises(ValidationError, match="empty"):
        check_schedule([])
    with pytest.raises(ValidationError, match="strictly increase"):
        check_schedule([(0, 0.1), (0, 0.01)])
    with pytest.raises(ValidationError, match="invalid schedule"):
        check_schedule([(0, -0.1)])


def test_non_finite_gradient_aborts_before_update() -> None:
    state = AdamState()
    params = {"w": np.ones(3)}
    with pytest.raises(NonFiniteGradientError, match="'w'"):
        adam_step(params, {"w": np.array([1.0, np.nan, 0.0])}, state)
    assert state.step == 0
    assert state.first == {}


def test_adam_rejects_mismatched_gradients() -> None:
    state = AdamState()
    with pytest.raises(ValidationError, match="unknown parameter"):
        adam_step({"w": np.ones(2)}, {"v": np.ones(2)}, state)
    with pytest.raises(ValidationError, match="shape"):
        adam_step({"w": np.ones(2)}, {"w": np.ones(3)}, state)


def test_clip_by_global_norm() -> None:
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    assert global_norm(grads) == pytest.approx(5.0)
    clipped = clip_by_global_norm(grads, 1.0)
    np.testing.assert_allclose(clipped["a"], [0.6])
    np.testing.assert_allclose(clipped["b"], [0.8])
    assert clip_by_global_norm(grads, 10.0)["a"] is grads["a"]


# -------------------------------------------------------------- fit config


def test_fit_config_from_settings_and_overrides() -> None:
    settings = FitSettings(iterations=50, loss_windows_ms=[8.0, 16.0], free=["z", "f0"])
    cfg = FitConfig.from_settings(settings, iterations=None, seed=3)
    assert cfg.iterations == 50
    assert cfg.seed == 3
    assert cfg.free == ("f0", "z")
    assert cfg.stft.resolutions == ((128, 64), (256, 128))
    assert cfg.schedule == [(0, 0.1), (1000, 0.01), (2000, 0.001)]


def test_fit_config_validation() -> None:
    with pytest.raises(ValidationError, match="unknown free variables"):
        FitConfig(free=("pitch",))
    with pytest.raises(ValidationError, match="iterations"):
        FitConfig(iterations=-1)


# ------------------------------------------------------------------ fitting


def test_fit_lowers_the_loss(model: SynthModel, rng: np.random.Generator) -> None:
    n_frames = 16
    n_samples = n_frames * TINY_HOP
    truth = [random_params(rng, n_frames, model.config.latent_dim, 250.0)]
    observed = observed_from(model, truth, n_samples)
    init = [SynthParams(truth[0].f0, np.zeros_like(truth[0].z), truth[0].loudness - 3.0)]

    result = fit_mixture(observed, [model], init, small_fit(30, free=("z", "loudness")))

    assert len(result.trace) == 31
    assert len(result.rates) == 30
    assert not result.diverged
    assert result.final_loss < result.initial_loss
    # f0 was held fixed
    np.testing.assert_array_equal(result.sources[0].f0, truth[0].f0)
    # The caller's initialization is left alone
    assert np.all(init[0].z == 0.0)


def test_zero_iterations_return_the_initialization(
    model: SynthModel, rng: np.random.Generator
) -> None:
    n_frames = 8
    init = [random_params(rng, n_frames, model.config.latent_dim)]
    observed = np.zeros(n_frames * TINY_HOP)
    result = fit_mixture(observed, [model], init, small_fit(0))
    assert len(result.trace) == 1
    assert len(result.rates) == 0
    np.testing.assert_array_equal(result.sources[0].z, init[0].z)


def test_fit_started_at_the_truth_stays_put(model: SynthModel, rng: np.random.Generator) -> None:
    n_frames = 16
    truth = [random_params(rng, n_frames, model.config.latent_dim, 250.0)]
    observed = observed_from(model, truth, n_frames * TINY_HOP)

    result = fit_mixture(observed, [model], truth, small_fit(20))

    assert result.initial_loss == 0.0
    fitted = result.sources[0]
    for name in ("f0", "z", "loudness"):
        start, end = getattr(truth[0], name), getattr(fitted, name)
        assert np.max(np.abs(end - start)) < 0.01 * np.max(np.abs(start)), name


def test_loudness_only_fit_never_raises_the_loss(
    model: SynthModel, rng: np.random.Generator
) -> None:
    n_frames = 16
    truth = [random_params(rng, n_frames, model.config.latent_dim, 250.0)]
    observed = observed_from(model, truth, n_frames * TINY_HOP)
    init = [SynthParams(truth[0].f0, truth[0].z, truth[0].loudness - 3.0)]

    cfg = small_fit(50, schedule=[(0, 0.01)], free=("loudness",))
    result = fit_mixture(observed, [model], init, cfg)

    assert len(result.trace) == 51
    assert np.all(np.diff(result.trace) <= 1e-9)


def test_fixed_seeds_give_identical_traces(model: SynthModel, rng: np.random.Generator) -> None:
    init = [random_params(rng, 8, model.config.latent_dim)]
    observed = 0.1 * np.random.default_rng(5).standard_normal(8 * TINY_HOP)
    first = fit_mixture(observed, [model], init, small_fit(5, seed=3))
    again = fit_mixture(observed, [model], init, small_fit(5, seed=3))
    np.testing.assert_array_equal(first.trace, again.trace)
    np.testing.assert_array_equal(first.sources[0].z, again.sources[0].z)


def test_fitting_only_latents_keeps_f0_and_loudness(
    model: SynthModel, rng: np.random.Generator
) -> None:
    init = [random_params(rng, 8, model.config.latent_dim)]
    observed = 0.1 * np.random.default_rng(6).standard_normal(8 * TINY_HOP)
    result = fit_mixture(observed, [model], init, small_fit(4, free=("z",)))

    assert np.array_equal(result.sources[0].f0, init[0].f0)
    assert np.array_equal(result.sources[0].loudness, init[0].loudness)
    assert not np.array_equal(result.sources[0].z, init[0].z)


def test_changing_model_weights_during_a_fit_is_an_error(
    model: SynthModel, rng: np.random.Generator
) -> None:
    init = [random_params(rng, 8, model.config.latent_dim)]
    observed = 0.1 * np.random.default_rng(7).standard_normal(8 * TINY_HOP)

    def tampering_step(*args: object, **kwargs: object) -> dict[str, np.ndarray]:
        model.weights["decoder.amplitude.bias"] = model.weights["decoder.amplitude.bias"] + 1.0
        return adam_step(*args, **kwargs)  # type: ignore[arg-type]

    with patch("mixsynth.optim.fitting.adam_step", side_effect=tampering_step):
        with pytest.raises(RuntimeFailure, match="model weights changed"):
            fit_mixture(observed, [model], init, small_fit(2))


def test_fit_rejects_mismatched_initialization(model: SynthModel, rng: np.random.Generator) -> None:
    init = [random_params(rng, 8, model.config.latent_dim)]
    with pytest.raises(ValidationError, match="frames"):
        fit_mixture(np.zeros(12 * TINY_HOP), [model], init, small_fit(1))


def test_non_finite_gradient_marks_fit_diverged(
    model: SynthModel, rng: np.random.Generator
) -> None:
    init = [random_params(rng, 8, model.config.latent_dim)]
    observed = np.zeros(8 * TINY_HOP)
    with patch(
        "mixsynth.optim.fitting.adam_step", side_effect=NonFiniteGradientError(0, "0.f0")
    ):
        result = fit_mixture(observed, [model], init, small_fit(5))

    assert result.diverged
    assert "non-finite gradient" in result.message
    assert len(result.trace) == 1
    np.testing.assert_array_equal(result.sources[0].f0, init[0].f0)


def test_trace_csv(tmp_path: Path, model: SynthModel, rng: np.random.Generator) -> None:
    init = [random_params(rng, 8, model.config.latent_dim)]
    result = fit_mixture(np.zeros(8 * TINY_HOP), [model], init, small_fit(3))
    path = tmp_path / "out" / "trace.csv"
    result.write_trace(path)

    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,loss,learning_rate"
    assert len(lines) == 5
    assert lines[1].startswith("0,") and lines[1].endswith(",0.02")
    assert lines[-1].endswith(",")


def test_plan_segments() -> None:
    whole = plan_segments(1000, None, 64)
    assert len(whole) == 1 and whole[0].n_frames == 16

    even = plan_segments(1024, 256, 64)
    assert [s.start_sample for s in even] == [0, 256, 512, 768]
    assert [s.real_frames for s in even] == [4, 4, 4, 4]

    ragged = plan_segments(1100, 256, 64)
    assert len(ragged) == 5
    assert [s.start_frame for s in ragged] == [0, 4, 8, 12, 16]
    assert ragged[-1].real_frames == 2

    with pytest.raises(ValidationError, match="multiple"):
        plan_segments(1100, 100, 64)


def test_segmented_fit_joins_segments(model: SynthModel, rng: np.random.Generator) -> None:
    n_samples = 1100
    observed = 0.1 * np.random.default_rng(0).standard_normal(n_samples)
    init = [random_params(rng, 20, model.config.latent_dim) for _ in range(2)]
    cfg = small_fit(2)

    result = fit_segmented(observed, [model], init, cfg, segment_samples=256)

    assert len(result.sources) == 2
    assert all(p.n_frames == 18 for p in result.sources)
    assert len(result.trace) == 3
    assert not result.diverged

    # The joint trace is the sum of the per-segment traces
    first_segment = fit_mixture(
        observed[:256], [model], [p.slice_frames(0, 4) for p in init], cfg
    )
    np.testing.assert_allclose(result.sources[0].f0[:4], first_segment.sources[0].f0)
    assert result.trace[0] > first_segment.trace[0]


def test_segmented_fit_checks_padded_frames(model: SynthModel, rng: np.random.Generator) -> None:
    init = [random_params(rng, 18, model.config.latent_dim)]
    with pytest.raises(ValidationError, match="segments need 20"):
        fit_segmented(np.zeros(1100), [model], init, small_fit(1), segment_samples=256)


def test_single_segment_matches_plain_fit(model: SynthModel, rng: np.random.Generator) -> None:
    init = [random_params(rng, 8, model.config.latent_dim)]
    observed = 0.1 * np.random.default_rng(1).standard_normal(8 * TINY_HOP)
    cfg = small_fit(2)
    plain = fit_mixture(observed, [model], init, cfg)
    segmented = fit_segmented(observed, [model], init, cfg)
    np.testing.assert_array_equal(plain.trace, segmented.trace)


# -------------------------------------------------------------- pretraining


def test_prepare_clip_pads_audio_and_extends_f0() -> None:
    model = init_model(tiny_config())
    clip = prepare_clip(np.zeros(300), model, f0=np.array([220.0, 230.0]), clip_samples=640)
    assert clip.audio.shape == (640,)
    np.testing.assert_allclose(clip.f0, [220.0, 230.0] + [230.0] * 8)
    assert clip.loudness.shape == (10,)
    assert clip.features.shape == (10, model.config.encoder_mfcc)


def test_pretrain_smoke() -> None:
    config = tiny_config()
    model = init_model(config, seed=0)
    n = np.arange(640)
    clips = [
        (0.5 * np.sin(2 * np.pi * pitch * n / 16000), np.full(10, pitch))
        for pitch in (220.0, 330.0)
    ]
    before = model.fingerprint()

    result = pretrain(clips, model, epochs=3, lr=1e-3, stft=StftConfig((8.0, 16.0)), log_every=0)

    assert len(result.epoch_losses) == 3
    assert all(np.isfinite(result.epoch_losses))
    assert model.fingerprint() == before
    assert result.model.fingerprint() != before
    clip = prepare_clip(clips[0][0], result.model, clips[0][1])
    assert np.isfinite(reconstruction_loss(clip, result.model, StftConfig((8.0, 16.0))))


def test_pretrain_validation() -> None:
    model = init_model(tiny_config())
    with pytest.raises(ValidationError, match="empty"):
        pretrain([], model)
    with pytest.raises(ValidationError, match="positive"):
        pretrain([(np.zeros(640), None)], model, epochs=0)


# --------------------------------------------------- recovery experiments


def _reduced_config() -> ModelConfig:
    return ModelConfig(n_harmonics=16, n_noise_bands=33)


def _recovery_fit(init_mode: str, seed: int) -> tuple[FitResult, list[float], list[float]]:
    config = _reduced_config()
    model = init_model(config, seed=0)
    scene = generate_scene(model, Scenario.default(2, 12.0), seed=seed)
    truth = scene.params.sources
    n_frames_total = truth[0].n_frames
    rng = np.random.default_rng(seed)
    if init_mode == "score":
        init = [
            score_informed_params(
                rasterize(track, n_frames_total, config.hop_ms, config.frame_ms),
                config.latent_dim,
                rng,
            )
            for track in scene.tracks
        ]
    else:
        init = [random_pitch_params(n_frames_total, config.latent_dim, rng) for _ in truth]
    cfg = FitConfig(stft=StftConfig((32.0, 64.0, 128.0)), seed=seed, log_every=500)
    result = fit_mixture(scene.mixture, [model], init, cfg)

    f0_errors, loudness_errors = [], []
    _, stems = synthesize_mixture(
        MixtureState(result.sources, [model], scene.mixture.shape[0], seed=seed)
    )
    for r, (est, ref) in enumerate(zip(result.sources, truth)):
        active = ref.loudness > -10.0 + 1.0
        f0_errors.append(f0_mae_cents(est.f0, ref.f0, active))
        loudness_errors.append(loudness_mae(stems[r], scene.stems[r]))
    return result, f0_errors, loudness_errors


@pytest.mark.slow
def test_score_informed_fit_recovers_known_parameters() -> None:
    result, f0_errors, loudness_errors = _recovery_fit("score", seed=1)
    assert result.final_loss <= 0.05 * result.initial_loss
    assert max(f0_errors) <= 30.0
    assert max(loudness_errors) <= 3.0


@pytest.mark.slow
def test_score_init_is_more_stable_than_random_pitch() -> None:
    score_mae, random_mae = [], []
    for seed in range(5):
        score_mae.append(np.mean(_recovery_fit("score", seed)[1]))
        random_mae.append(np.mean(_recovery_fit("random", seed)[1]))
    assert np.std(score_mae) <= np.std(random_mae)


@pytest.mark.slow
def test_pretraining_halves_the_loss(tmp_path: Path) -> None:
    config = _reduced_config()
    model = init_model(config, seed=0)
    rng = np.random.default_rng(0)
    n = np.arange(16000)
    clips = []
    for _ in range(10):
        pitch = float(rng.uniform(150.0, 600.0))
        audio = 0.3 * np.sin(2 * np.pi * pitch * n / 16000) + 0.1 * np.sin(
            4 * np.pi * pitch * n / 16000
        )
        clips.append((audio, np.full(32, pitch)))

    result = pretrain(clips, model, epochs=200, lr=1e-3, log_every=50)
    assert result.epoch_losses[-1] < 0.5 * result.epoch_losses[0]

    path = tmp_path / "model.json"
    save_model(result.model, path)
    assert load_model(path).fingerprint() == result.model.fingerprint()
