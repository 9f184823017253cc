"""
Tests for the control decoder, the timbre encoder and the model file format.
"""

import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixsynth.core.config import ModelConfig
from mixsynth.core.errors import SchemaError, ShapeError, ValidationError
from mixsynth.grad import DiffGraph, DiffValue, grad_check, ops
from mixsynth.nets import (
    MODEL_FORMAT,
    SynthModel,
    SynthParams,
    decode,
    decode_op,
    encode_timbre,
    expected_shapes,
    init_model,
    load_model,
    save_model,
)

from conftest import TINY_HOP, audible_model, random_params, tiny_config


def scrambled_model(config: ModelConfig, seed: int, scale: float) -> SynthModel:
    """Model whose weights are drawn from N(0, scale^2)."""
    rng = np.random.default_rng(seed)
    model = init_model(config, seed=seed)
    for name, value in model.weights.items():
        model.weights[name] = scale * rng.standard_normal(value.shape)
    return model


def test_init_model_is_seeded_and_complete() -> None:
    config = tiny_config()
    first = init_model(config, seed=3)
    again = init_model(config, seed=3)
    other = init_model(config, seed=4)
    assert first.fingerprint() == again.fingerprint()
    assert first.fingerprint() != other.fingerprint()
    assert set(first.weights) == set(expected_shapes(config))
    np.testing.assert_allclose(first.weights["decoder.noise.bias"], -5.0)


def test_expected_shapes_track_config() -> None:
    config = tiny_config(decoder_hidden=[8, 6], reverb=True)
    shapes = expected_shapes(config)
    assert shapes["decoder.hidden0.weight"] == (1 + 4 + 1, 8)
    assert shapes["decoder.hidden1.weight"] == (8, 6)
    assert shapes["decoder.harmonics.weight"] == (6, 8)
    assert shapes["decoder.noise.bias"] == (9,)
    assert shapes["reverb.ir"] == (32,)


def test_model_reverb_reads_the_ir_weight() -> None:
    assert not init_model(tiny_config(), seed=0).reverb().enabled

    model = init_model(tiny_config(reverb=True), seed=0)
    reverb = model.reverb()
    assert reverb.enabled
    np.testing.assert_array_equal(reverb.impulse_response, model.weights["reverb.ir"])

    graph = DiffGraph()
    bound = model.bind(graph, trainable=True)
    assert model.reverb(bound).impulse_response is bound["reverb.ir"]


def test_model_rejects_mismatched_weights() -> None:
    config = tiny_config()
    model = init_model(config)
    weights = dict(model.weights)
    weights["decoder.harmonics.bias"] = np.zeros(3)
    with pytest.raises(ShapeError):
        SynthModel(config, weights)
    del weights["decoder.harmonics.bias"]
    with pytest.raises(ValidationError, match="missing"):
        SynthModel(config, weights)


def test_synth_params_validate_shapes() -> None:
    with pytest.raises(ShapeError):
        SynthParams(np.ones(5), np.ones((4, 2)), np.ones(5))
    params = SynthParams(np.ones(5), np.ones((5, 2)), np.ones(5))
    assert params.n_frames == 5 and params.latent_dim == 2
    part = params.slice_frames(1, 3)
    assert part.n_frames == 2
    part.f0[0] = 7.0
    assert params.f0[1] == 1.0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), pitch=st.floats(20.0, 4000.0))
def test_controls_stay_valid_for_wild_weights(seed: int, pitch: float) -> None:
    """Weights from N(0, 10^2) still give a simplex, positive amplitude and finite noise."""
    config = tiny_config()
    model = scrambled_model(config, seed, scale=10.0)
    rng = np.random.default_rng(seed)
    params = SynthParams(
        np.full(6, pitch), 3.0 * rng.standard_normal((6, config.latent_dim)),
        rng.uniform(-80.0, 0.0, 6),
    )
    controls = decode(params, model)

    distribution = controls.distribution.data
    assert np.all(distribution >= 0)
    np.testing.assert_allclose(distribution.sum(axis=1), 1.0, rtol=1e-9)
    assert np.all(controls.amplitude.data > 0)
    assert np.all(np.isfinite(controls.amplitude.data))
    assert np.all(controls.noise.data > 0)
    assert np.all(np.isfinite(controls.noise.data))


def test_decode_rejects_non_finite_params() -> None:
    config = tiny_config()
    params = SynthParams(np.array([220.0, np.nan]), np.zeros((2, 4)), np.zeros(2))
    with pytest.raises(ValidationError, match="non-finite"):
        decode(params, init_model(config))


def test_decode_op_checks_shapes() -> None:
    config = tiny_config()
    graph = DiffGraph()
    params = init_model(config).bind(graph)
    with pytest.raises(ShapeError, match="decode"):
        decode_op(
            graph.constant(np.ones(3)), graph.constant(np.ones((3, 5))),
            graph.constant(np.ones(3)), params, config,
        )


def test_decode_handles_f0_below_floor() -> None:
    config = tiny_config()
    params = SynthParams(np.array([0.0, -5.0, 220.0]), np.zeros((3, 4)), np.zeros(3))
    controls = decode(params, init_model(config))
    assert np.all(np.isfinite(controls.amplitude.data))


def test_decode_gradients_match_finite_differences(rng: np.random.Generator) -> None:
    config = tiny_config()
    model = audible_model(config, seed=2)
    params = random_params(rng, 5, config.latent_dim)
    weights = np.random.default_rng(5).uniform(0.5, 1.5, 5)

    def loss_of(x: DiffValue) -> DiffValue:
        graph = x.graph
        z = ops.reshape(ops.getitem(x, slice(0, 5 * config.latent_dim)), (5, config.latent_dim))
        f0 = ops.getitem(x, slice(5 * config.latent_dim, 5 * config.latent_dim + 5))
        controls = decode_op(f0, z, graph.constant(params.loudness), model.bind(graph), config)
        amplitude = ops.sum(controls.amplitude * weights)
        harmonics = ops.sum(controls.distribution * np.arange(1.0, 9.0))
        return amplitude + harmonics + ops.mean(controls.noise)

    point = np.concatenate([params.z.reshape(-1), params.f0])
    assert grad_check(loss_of, point) < 1e-4


def test_zero_output_layer_gives_zero_latents() -> None:
    config = tiny_config()
    model = init_model(config, seed=1)
    model.weights["encoder.out.weight"] = np.zeros_like(model.weights["encoder.out.weight"])
    audio = np.random.default_rng(0).standard_normal(20 * TINY_HOP)
    z = encode_timbre(audio, model)
    assert z.shape == (20, config.latent_dim)
    assert np.all(z == 0.0)


def test_encode_timbre_frame_count_on_default_config() -> None:
    model = init_model(ModelConfig(), seed=0)
    audio = 0.1 * np.random.default_rng(1).standard_normal(12 * 16000)
    z = encode_timbre(audio, model)
    assert z.shape == (375, 16)
    assert np.all(np.isfinite(z))


def test_encode_timbre_checks_expected_frames() -> None:
    model = init_model(tiny_config())
    with pytest.raises(ValidationError, match="expected 3"):
        encode_timbre(np.zeros(10 * TINY_HOP), model, n_frames_expected=3)


def test_gain_change_moves_latents_but_not_decoding(rng: np.random.Generator) -> None:
    """+6 dB on the encoder input changes z; decoding fixed params ignores the encoder."""
    config = tiny_config()
    model = scrambled_model(config, seed=4, scale=0.5)
    audio = 0.1 * rng.standard_normal(20 * TINY_HOP)
    params = random_params(rng, 20, config.latent_dim)

    before = decode(params, model)
    quiet = encode_timbre(audio, model)
    loud = encode_timbre(2.0 * audio, model)
    after = decode(params, model)

    assert not np.allclose(quiet, loud)
    for name in [n for n in model.weights if n.startswith("encoder.")]:
        model.weights[name] = np.zeros_like(model.weights[name])
    without_encoder = decode(params, model)
    for field in ("amplitude", "distribution", "noise"):
        assert np.array_equal(getattr(before, field).data, getattr(after, field).data)
        assert np.array_equal(getattr(before, field).data, getattr(without_encoder, field).data)


def test_model_file_roundtrip_is_byte_stable(tmp_path: Path) -> None:
    model = init_model(tiny_config(reverb=True), seed=7)
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    save_model(model, first)
    loaded = load_model(first)
    save_model(loaded, second)

    assert first.read_bytes() == second.read_bytes()
    assert loaded.fingerprint() == model.fingerprint()
    assert loaded.config == model.config
    assert loaded.reverb().enabled


def test_model_file_with_wrong_harmonic_count_names_field(tmp_path: Path) -> None:
    path = tmp_path / "model.json"
    save_model(init_model(tiny_config()), path)
    document = json.loads(path.read_text())
    document["config"]["n_harmonics"] = 9
    path.write_text(json.dumps(document))

    with pytest.raises(SchemaError) as excinfo:
        load_model(path)
    assert excinfo.value.field == "weights.decoder.harmonics.weight"
    assert "expected [8, 9]" in str(excinfo.value)


def test_truncated_model_file_rejected(tmp_path: Path) -> None:
    path = tmp_path / "model.json"
    save_model(init_model(tiny_config()), path)
    text = path.read_text()
    path.write_text(text[: len(text) // 2])
    with pytest.raises(SchemaError, match="not valid JSON"):
        load_model(path)


def test_model_file_format_and_config_checked(tmp_path: Path) -> None:
    path = tmp_path / "model.json"
    save_model(init_model(tiny_config()), path)
    document = json.loads(path.read_text())
    assert document["format"] == MODEL_FORMAT

    wrong_format = dict(document, format="other/2")
    path.write_text(json.dumps(wrong_format))
    with pytest.raises(SchemaError, match="format"):
        load_model(path)

    bad_config = json.loads(json.dumps(document))
    bad_config["config"]["latent_dim"] = -1
    path.write_text(json.dumps(bad_config))
    with pytest.raises(SchemaError, match="config.latent_dim"):
        load_model(path)

    corrupt = json.loads(json.dumps(document))
    corrupt["weights"]["decoder.noise.bias"]["data"] = "!!!"
    path.write_text(json.dumps(corrupt))
    with pytest.raises(SchemaError, match="weights.decoder.noise.bias"):
        load_model(path)


def test_missing_model_file(tmp_path: Path) -> None:
    with pytest.raises(ValidationError, match="not found"):
        load_model(tmp_path / "absent.json")
