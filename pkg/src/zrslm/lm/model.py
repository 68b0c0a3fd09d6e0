"""Encoder-decoder text LM operating on character tokens.

Pre-LN transformer with sinusoidal positions and explicit query/key/value
projection modules per attention block, so low-rank deltas can target the
query and value matrices by name.  The output head starts at zero, making
the untrained per-token loss exactly log(vocab).

The encoder accepts either token ids or precomputed input embeddings; the
latter path is how audio soft tokens enter the model.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import torch
from torch import nn

from .tokenizer import BOS, EOS, PAD, CharTokenizer


@dataclass
class LmConfig:
    d_llm: int = 128
    enc_layers: int = 3
    dec_layers: int = 3
    heads: int = 4
    ffn_dim: int = 512
    vocab_size: int = 64
    max_len: int = 512

    def __post_init__(self) -> None:
        if self.d_llm % self.heads != 0:
            raise ValueError(f"d_llm {self.d_llm} not divisible by heads {self.heads}")
        if min(self.enc_layers, self.dec_layers, self.vocab_size, self.max_len) < 1:
            raise ValueError("layer counts, vocab, and max_len must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def sinusoidal_positions(max_len: int, d: int) -> torch.Tensor:
    pos = torch.arange(max_len, dtype=torch.float32).unsqueeze(1)
    div = torch.exp(torch.arange(0, d, 2, dtype=torch.float32) * (-math.log(10000.0) / d))
    pe = torch.zeros(max_len, d)
    pe[:, 0::2] = torch.sin(pos * div)
    pe[:, 1::2] = torch.cos(pos * div[: (d + 1) // 2])
    return pe


class MultiHeadAttention(nn.Module):
    """Attention with named q/k/v/o projections (LoRA attaches to q and v)."""

    def __init__(self, d: int, heads: int) -> None:
        super().__init__()
        self.heads = heads
        self.head_dim = d // heads
        self.q_proj = nn.Linear(d, d)
        self.k_proj = nn.Linear(d, d)
        self.v_proj = nn.Linear(d, d)
        self.o_proj = nn.Linear(d, d)

    def forward(self, query: torch.Tensor, keyvalue: torch.Tensor,
                causal: bool = False,
                pad_mask: Optional[torch.Tensor] = None) -> torch.Tensor:
        b, tq, d = query.shape
        tk = keyvalue.shape[1]
        def split(x: torch.Tensor) -> torch.Tensor:
            return x.view(b, -1, self.heads, self.head_dim).transpose(1, 2)
        q = split(self.q_proj(query))
        k = split(self.k_proj(keyvalue))
        v = split(self.v_proj(keyvalue))
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.head_dim)
        if causal:
            future = torch.triu(torch.ones(tq, tk, dtype=torch.bool,
                                           device=scores.device), diagonal=1)
            scores = scores.masked_fill(future, float("-inf"))
        if pad_mask is not None:
            scores = scores.masked_fill(pad_mask[:, None, None, :], float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, tq, d)
        return self.o_proj(out)


class FeedForward(nn.Module):
    def __init__(self, d: int, ffn_dim: int) -> None:
        super().__init__()
        self.net = nn.Sequential(nn.Linear(d, ffn_dim), nn.GELU(), nn.Linear(ffn_dim, d))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class EncoderLayer(nn.Module):
    def __init__(self, d: int, heads: int, ffn_dim: int) -> None:
        super().__init__()
        self.self_norm = nn.LayerNorm(d)
        self.self_attn = MultiHeadAttention(d, heads)
        self.ffn_norm = nn.LayerNorm(d)
        self.ffn = FeedForward(d, ffn_dim)

    def forward(self, x: torch.Tensor, pad_mask: Optional[torch.Tensor]) -> torch.Tensor:
        h = self.self_norm(x)
        x = x + self.self_attn(h, h, pad_mask=pad_mask)
        return x + self.ffn(self.ffn_norm(x))


class DecoderLayer(nn.Module):
    def __init__(self, d: int, heads: int, ffn_dim: int) -> None:
        super().__init__()
        self.self_norm = nn.LayerNorm(d)
        self.self_attn = MultiHeadAttention(d, heads)
        self.cross_norm = nn.LayerNorm(d)
        self.cross_attn = MultiHeadAttention(d, heads)
        self.ffn_norm = nn.LayerNorm(d)
        self.ffn = FeedForward(d, ffn_dim)

    def forward(self, x: torch.Tensor, memory: torch.Tensor,
                memory_pad_mask: Optional[torch.Tensor]) -> torch.Tensor:
        h = self.self_norm(x)
        x = x + self.self_attn(h, h, causal=True)
        x = x + self.cross_attn(self.cross_norm(x), memory, pad_mask=memory_pad_mask)
        return x + self.ffn(self.ffn_norm(x))


class TextLm(nn.Module):
    def __init__(self, config: LmConfig) -> None:
        super().__init__()
        self.config = config
        d = config.d_llm
        self.token_embedding = nn.Embedding(config.vocab_size, d, padding_idx=PAD)
        self.register_buffer("positions", sinusoidal_positions(config.max_len, d))
        self.encoder_layers = nn.ModuleList(
            EncoderLayer(d, config.heads, config.ffn_dim) for _ in range(config.enc_layers))
        self.encoder_norm = nn.LayerNorm(d)
        self.decoder_layers = nn.ModuleList(
            DecoderLayer(d, config.heads, config.ffn_dim) for _ in range(config.dec_layers))
        self.decoder_norm = nn.LayerNorm(d)
        self.out_head = nn.Linear(d, config.vocab_size)
        nn.init.zeros_(self.out_head.weight)
        nn.init.zeros_(self.out_head.bias)

    def _add_positions(self, x: torch.Tensor) -> torch.Tensor:
        t = x.shape[1]
        if t > self.config.max_len:
            raise ValueError(f"sequence length {t} exceeds max_len {self.config.max_len}")
        return x + self.positions[:t].to(x.dtype)

    def embed_ids(self, ids: torch.Tensor) -> torch.Tensor:
        return self.token_embedding(ids)

    def encode(self, inputs_embeds: torch.Tensor,
               pad_mask: Optional[torch.Tensor] = None) -> torch.Tensor:
        """Run the encoder over input embeddings [b, t, d]."""
        x = self._add_positions(inputs_embeds)
        for layer in self.encoder_layers:
            x = layer(x, pad_mask)
        return self.encoder_norm(x)

    def decode(self, dec_ids: torch.Tensor, memory: torch.Tensor,
               memory_pad_mask: Optional[torch.Tensor] = None) -> torch.Tensor:
        """Logits [b, t, vocab] for decoder input ids attending to `memory`."""
        x = self._add_positions(self.token_embedding(dec_ids))
        for layer in self.decoder_layers:
            x = layer(x, memory, memory_pad_mask)
        return self.out_head(self.decoder_norm(x))

    def forward(self, enc_ids: torch.Tensor, dec_ids: torch.Tensor,
                enc_pad_mask: Optional[torch.Tensor] = None) -> torch.Tensor:
        memory = self.encode(self.embed_ids(enc_ids), enc_pad_mask)
        return self.decode(dec_ids, memory, enc_pad_mask)


def seq2seq_loss(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Mean cross-entropy over non-pad target positions."""
    return nn.functional.cross_entropy(
        logits.reshape(-1, logits.shape[-1]), targets.reshape(-1), ignore_index=PAD)


def pad_id_batch(seqs: list[list[int]], pad_value: int = PAD) -> torch.Tensor:
    width = max(len(s) for s in seqs)
    out = torch.full((len(seqs), width), pad_value, dtype=torch.long)
    for i, s in enumerate(seqs):
        out[i, :len(s)] = torch.tensor(s, dtype=torch.long)
    return out


def greedy_decode(lm: TextLm, memory: torch.Tensor,
                  memory_pad_mask: Optional[torch.Tensor] = None,
                  max_len: int = 256) -> torch.Tensor:
    """Batched greedy decoding until eos; returns ids without the bos column."""
    b = memory.shape[0]
    device = memory.device
    ids = torch.full((b, 1), BOS, dtype=torch.long, device=device)
    finished = torch.zeros(b, dtype=torch.bool, device=device)
    for _ in range(max_len):
        logits = lm.decode(ids, memory, memory_pad_mask)[:, -1]
        next_id = logits.argmax(dim=-1)
        next_id = torch.where(finished, torch.full_like(next_id, PAD), next_id)
        ids = torch.cat([ids, next_id.unsqueeze(1)], dim=1)
        finished |= next_id == EOS
        if bool(finished.all()):
            break
    return ids[:, 1:]


def generate_text(lm: TextLm, tok: CharTokenizer, enc_text: str,
                  max_len: int = 256) -> str:
    """Greedy generation for a plain text encoder input."""
    enc_ids = pad_id_batch([tok.encode(enc_text, add_eos=True)])
    memory = lm.encode(lm.embed_ids(enc_ids))
    out = greedy_decode(lm, memory, max_len=max_len)
    return tok.decode(out[0].tolist())
