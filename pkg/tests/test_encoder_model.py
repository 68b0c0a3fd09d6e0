"""Speech encoder: downsampling arithmetic, layer outputs, freeze contract."""

import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from zrslm.corpus import synthesize_features
from zrslm.encoder.model import (
    EncoderConfig,
    LayerStack,
    SpeechEncoder,
    encode,
    freeze,
    is_frozen,
    output_length,
)


@given(st.integers(min_value=1, max_value=5000), st.integers(min_value=1, max_value=16))
def test_output_length_is_ceiling(t, factor):
    assert output_length(t, factor) == math.ceil(t / factor)


def _config(**over):
    base = dict(num_layers=2, d_ae=32, num_heads=2, downsample_factor=4,
                d_feat=8, frame_ms_in=10, ffn_mult=2, conv_kernel=3)
    return EncoderConfig(**{**base, **over})


def test_config_validation():
    with pytest.raises(ValueError, match="divisible"):
        _config(d_ae=30, num_heads=4)
    with pytest.raises(ValueError, match="positive"):
        _config(num_layers=0)
    with pytest.raises(ValueError, match="odd"):
        _config(conv_kernel=4)
    cfg = _config()
    assert cfg.frame_ms_out == 40
    assert cfg.stacked_dim == 32


def test_stack_frames_groups_and_pads():
    torch.manual_seed(0)
    model = SpeechEncoder(_config())
    frames = torch.arange(10 * 8, dtype=torch.float32).reshape(10, 8)
    stacked = model.stack_frames(frames)
    assert stacked.shape == (3, 32)
    assert torch.equal(stacked[0], frames[:4].reshape(-1))
    assert torch.equal(stacked[1], frames[4:8].reshape(-1))
    # last group: two real frames then zero padding
    assert torch.equal(stacked[2, :16], frames[8:].reshape(-1))
    assert torch.all(stacked[2, 16:] == 0)
    with pytest.raises(ValueError, match="feature dim"):
        model.stack_frames(torch.zeros(10, 5))


@pytest.mark.parametrize("t_in", [4, 5, 17, 64])
def test_forward_shapes(t_in):
    torch.manual_seed(1)
    model = SpeechEncoder(_config())
    outs = model(torch.randn(t_in, 8))
    assert len(outs) == 2
    t_out = math.ceil(t_in / 4)
    for layer in outs:
        assert layer.shape == (t_out, 32)
    # layers differ (blocks transform their input)
    assert not torch.allclose(outs[0], outs[1])


def test_freeze_contract():
    model = SpeechEncoder(_config())
    assert not is_frozen(model)
    freeze(model)
    assert is_frozen(model)
    assert all(not p.requires_grad for p in model.parameters())
    model.train()
    assert not is_frozen(model)


def test_encode_requires_frozen_model(lang_a):
    torch.manual_seed(2)
    model = SpeechEncoder(_config(d_feat=16))
    feats = synthesize_features(list(lang_a.phonemes[:2]), lang_a, rng_seed=3,
                                d_feat=16)
    with pytest.raises(ValueError, match="frozen"):
        encode(feats, model)
    freeze(model)
    stack = encode(feats, model)
    assert stack.num_layers == 2
    assert stack.t_out == math.ceil(feats.num_frames / 4)
    assert stack.frame_ms == 40
    assert all(l.shape == (stack.t_out, 32) for l in stack.layers)


def test_encode_validates_feature_metadata(lang_a):
    model = freeze(SpeechEncoder(_config(d_feat=16)))
    sym = [lang_a.phonemes[0]]
    wrong_dim = synthesize_features(sym, lang_a, rng_seed=1, d_feat=8)
    with pytest.raises(ValueError, match="feature dim"):
        encode(wrong_dim, model)
    wrong_rate = synthesize_features(sym, lang_a, rng_seed=1, d_feat=16,
                                     frame_ms=20)
    with pytest.raises(ValueError, match="frame rate"):
        encode(wrong_rate, model)


def test_encode_is_deterministic(tiny_encoder, lang_a):
    feats = synthesize_features(list(lang_a.phonemes[:3]), lang_a, rng_seed=9,
                                d_feat=32)
    a = encode(feats, tiny_encoder)
    b = encode(feats, tiny_encoder)
    for x, y in zip(a.layers, b.layers):
        assert torch.equal(x, y)


def test_layer_stack_validation():
    good = [torch.zeros(3, 4), torch.zeros(3, 4)]
    LayerStack(layers=good, t_out=3, frame_ms=40)
    with pytest.raises(ValueError, match="non-empty"):
        LayerStack(layers=[], t_out=0, frame_ms=40)
    with pytest.raises(ValueError, match="share one shape"):
        LayerStack(layers=[torch.zeros(3, 4), torch.zeros(2, 4)], t_out=3, frame_ms=40)
    with pytest.raises(ValueError, match="t_out"):
        LayerStack(layers=good, t_out=2, frame_ms=40)
