"""Layer pooling and convolutional adapter between encoder and LM."""

import math

import pytest
import torch

from zrslm.encoder.model import LayerStack
from zrslm.slm.bridge import (
    AdapterConfig,
    ConvAdapter,
    LayerWeights,
    adapt,
    adapter_output_length,
    layer_average,
)


def test_layer_weights_start_as_plain_mean():
    w = LayerWeights(3)
    assert w.num_layers == 3
    layers = [torch.randn(4, 6) for _ in range(3)]
    pooled = layer_average(layers, w)
    expected = torch.stack(layers).mean(dim=0)
    assert torch.allclose(pooled, expected, atol=1e-6)


def test_layer_average_weights_each_layer():
    w = LayerWeights(2)
    with torch.no_grad():
        w.w.copy_(torch.tensor([2.0, 0.0]))
    layers = [torch.full((3, 2), 5.0), torch.full((3, 2), 100.0)]
    pooled = layer_average(layers, w)
    # (2*5 + 0*100) / 2
    assert torch.all(pooled == 5.0)


def test_layer_average_accepts_layer_stack():
    w = LayerWeights(2)
    layers = [torch.randn(5, 4), torch.randn(5, 4)]
    stack = LayerStack(layers=layers, t_out=5, frame_ms=40)
    assert torch.equal(layer_average(stack, w), layer_average(layers, w))


def test_layer_average_validates_layer_count():
    w = LayerWeights(3)
    with pytest.raises(ValueError, match="weights cover"):
        layer_average([torch.zeros(2, 2)], w)
    with pytest.raises(ValueError, match="positive"):
        LayerWeights(0)


def test_layer_average_carries_gradient():
    w = LayerWeights(2)
    layers = [torch.randn(4, 3) for _ in range(2)]
    layer_average(layers, w).sum().backward()
    assert w.w.grad is not None
    assert torch.all(w.w.grad != 0)


def test_adapter_config_validation():
    AdapterConfig(d_ae=8, d_llm=16)
    with pytest.raises(ValueError, match="odd"):
        AdapterConfig(kernel=2)
    with pytest.raises(ValueError, match="positive"):
        AdapterConfig(d_ae=0)


@pytest.mark.parametrize("t", [1, 2, 3, 7, 16, 33])
def test_adapter_halves_frame_rate(t):
    torch.manual_seed(0)
    cfg = AdapterConfig(d_ae=8, d_llm=12)
    adapter = ConvAdapter(cfg)
    out = adapt(torch.randn(t, 8), adapter)
    assert out.shape == (adapter_output_length(t, cfg), 12)
    assert out.shape[0] == math.ceil(t / 2)


def test_adapter_batched_and_unbatched_agree():
    torch.manual_seed(1)
    adapter = ConvAdapter(AdapterConfig(d_ae=6, d_llm=10))
    x = torch.randn(9, 6)
    single = adapter(x)
    batched = adapter(torch.stack([x, x]))
    assert batched.shape == (2, single.shape[0], 10)
    assert torch.allclose(batched[0], single, atol=1e-6)
    assert torch.allclose(batched[1], single, atol=1e-6)


def test_adapt_validates_input():
    adapter = ConvAdapter(AdapterConfig(d_ae=4, d_llm=4))
    with pytest.raises(ValueError, match="expected"):
        adapt(torch.randn(2, 3, 4), adapter)
    with pytest.raises(ValueError, match="at least one"):
        adapt(torch.randn(0, 4), adapter)


def test_adapt_rejects_non_finite_output():
    adapter = ConvAdapter(AdapterConfig(d_ae=4, d_llm=4))
    with torch.no_grad():
        adapter.conv1.weight.fill_(float("inf"))
    with pytest.raises(RuntimeError, match="non-finite"):
        adapt(torch.randn(5, 4), adapter)


def test_adapter_is_trainable_end_to_end():
    torch.manual_seed(2)
    adapter = ConvAdapter(AdapterConfig(d_ae=4, d_llm=6))
    out = adapt(torch.randn(8, 4), adapter)
    out.pow(2).sum().backward()
    for p in adapter.parameters():
        assert p.grad is not None
