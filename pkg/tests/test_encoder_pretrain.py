"""Masked-prediction pre-training: schedule, loss mechanics, checkpointing."""

import math

import numpy as np
import pytest
import torch

from zrslm.corpus import synthesize_features
from zrslm.encoder.bestrq import MaskSpec, RqCodebooks, rq_targets
from zrslm.encoder.model import EncoderConfig, SpeechEncoder, output_length
from zrslm.encoder.pretrain import (
    BestRqPretrainer,
    PretrainConfig,
    lr_at,
    load_encoder,
    make_batch,
    pretrain_step,
    run_pretraining,
    save_encoder,
)


def test_lr_schedule_warmup_then_inverse_sqrt():
    peak, warmup = 1e-3, 100
    assert lr_at(0, peak, warmup) == lr_at(1, peak, warmup)
    assert lr_at(50, peak, warmup) == pytest.approx(peak * 0.5)
    assert lr_at(100, peak, warmup) == pytest.approx(peak)
    assert lr_at(400, peak, warmup) == pytest.approx(peak * 0.5)
    assert lr_at(10_000, peak, warmup) == pytest.approx(peak * 0.1)


def _setup(d_feat=16, span=2):
    cfg = EncoderConfig(num_layers=2, d_ae=16, num_heads=2, downsample_factor=4,
                        d_feat=d_feat, ffn_mult=2)
    torch.manual_seed(3)
    enc = SpeechEncoder(cfg)
    trainer = BestRqPretrainer(enc, num_codebooks=2, vocab=8)
    books = RqCodebooks(num_codebooks=2, vocab=8, dim=4,
                        stacked_dim=cfg.stacked_dim, seed=1, stack_factor=4)
    spec = MaskSpec(span=span, start_prob=0.3)
    return enc, trainer, books, spec


def test_heads_start_at_zero_so_first_loss_is_log_vocab(lang_a):
    _, trainer, books, spec = _setup()
    pool = [synthesize_features(list(lang_a.phonemes[:5]), lang_a, rng_seed=s,
                                d_feat=16) for s in range(4)]
    batch = make_batch(pool, [0, 1, 2, 3], books, spec, rng_seed=0)
    loss = pretrain_step(trainer, batch)
    assert loss.item() == pytest.approx(math.log(8), rel=1e-6)


def test_make_batch_skips_short_utterances(lang_a):
    _, _, books, _ = _setup()
    short = synthesize_features([lang_a.phonemes[0]], lang_a, rng_seed=0,
                                d_feat=16)
    long = synthesize_features(list(lang_a.phonemes[:6]), lang_a, rng_seed=1,
                               d_feat=16)
    wide_spec = MaskSpec(span=output_length(short.num_frames, 4) + 1,
                         start_prob=0.3)
    assert output_length(long.num_frames, 4) >= wide_spec.span
    with pytest.warns(UserWarning, match="skipping utterance"):
        items = make_batch([short, long], [0, 1], books, wide_spec, rng_seed=2)
    assert len(items) == 1
    assert items[0].frames.shape[0] == long.num_frames


def test_make_batch_uses_target_cache(lang_a):
    _, _, books, spec = _setup()
    pool = [synthesize_features(list(lang_a.phonemes[:5]), lang_a, rng_seed=s,
                                d_feat=16) for s in range(2)]
    cache: dict[int, np.ndarray] = {}
    items = make_batch(pool, [0, 1, 0], books, spec, rng_seed=3,
                       target_cache=cache)
    assert set(cache) == {0, 1}
    np.testing.assert_array_equal(items[0].targets.numpy(), cache[0])
    # poisoned cache entries are trusted, proving the cache is actually read
    cache[0] = np.zeros_like(cache[0])
    again = make_batch(pool, [0], books, spec, rng_seed=3, target_cache=cache)
    assert int(again[0].targets.sum()) == 0


def test_pretrain_step_matches_hand_computed_ce(lang_a):
    enc, trainer, books, spec = _setup()
    feats = synthesize_features(list(lang_a.phonemes[:5]), lang_a, rng_seed=4,
                                d_feat=16)
    batch = make_batch([feats], [0], books, spec, rng_seed=5)
    item = batch[0]
    # perturb heads so the loss is non-trivial
    torch.manual_seed(9)
    for head in trainer.heads:
        with torch.no_grad():
            head.weight.normal_(0, 0.1)
    loss = pretrain_step(trainer, batch)

    factor = enc.config.downsample_factor
    frames = item.frames.clone()
    pos = np.flatnonzero(item.mask)
    for i in pos:
        frames[int(i) * factor:(int(i) + 1) * factor] = enc.mask_embedding
    with torch.no_grad():
        hidden = enc(frames)[-1][torch.from_numpy(pos)]
    total, count = 0.0, 0
    for n, head in enumerate(trainer.heads):
        logits = head(hidden)
        logp = torch.log_softmax(logits, dim=-1)
        for row, t in enumerate(pos):
            total += -float(logp[row, item.targets[n][int(t)]])
            count += 1
    assert loss.item() == pytest.approx(total / count, rel=1e-5)


def test_pretrain_step_warns_on_zero_masked(lang_a):
    _, trainer, books, _ = _setup()
    feats = synthesize_features(list(lang_a.phonemes[:5]), lang_a, rng_seed=6,
                                d_feat=16)
    t_out = output_length(feats.num_frames, 4)
    item = make_batch([feats], [0], books, MaskSpec(span=2, start_prob=0.3),
                      rng_seed=7)[0]
    item.mask = np.zeros(t_out, dtype=bool)
    with pytest.warns(UserWarning, match="zero masked frames"):
        loss = pretrain_step(trainer, [item])
    assert loss.item() == 0.0
    assert loss.grad_fn is None


def test_run_pretraining_learns_and_logs(lang_a):
    pool = [synthesize_features(list(lang_a.phonemes[i:i + 5]), lang_a,
                                rng_seed=i, d_feat=16) for i in range(8)]
    enc_cfg = EncoderConfig(num_layers=2, d_ae=16, num_heads=2,
                            downsample_factor=4, d_feat=16, ffn_mult=2)
    cfg = PretrainConfig(steps=30, batch_size=4, peak_lr=2e-3, warmup_steps=5,
                         num_codebooks=2, vocab=8, code_dim=4,
                         mask=MaskSpec(span=2, start_prob=0.3), log_every=10)
    encoder, books, log = run_pretraining(pool, enc_cfg, cfg, seed=21)
    assert log[0]["step"] == 1 and log[-1]["step"] == 30
    assert log[0]["loss"] == pytest.approx(math.log(8), rel=1e-6)
    assert log[-1]["loss"] < log[0]["loss"]
    assert all(entry["stage"] == "encoder_pretrain" for entry in log)
    assert books.stacked_dim == enc_cfg.stacked_dim

    encoder2, _, _ = run_pretraining(pool, enc_cfg, cfg, seed=21)
    for a, b in zip(encoder.state_dict().values(), encoder2.state_dict().values()):
        assert torch.equal(a, b)


def test_run_pretraining_rejects_empty_pool():
    cfg = PretrainConfig(steps=1, num_codebooks=1, vocab=4, code_dim=2)
    with pytest.raises(ValueError, match="pool is empty"):
        run_pretraining([], EncoderConfig(num_layers=1, d_ae=16, num_heads=2,
                                          d_feat=16), cfg, seed=0)


def test_save_load_round_trip(tmp_path, lang_a):
    pool = [synthesize_features(list(lang_a.phonemes[:5]), lang_a, rng_seed=s,
                                d_feat=16) for s in range(4)]
    enc_cfg = EncoderConfig(num_layers=1, d_ae=16, num_heads=2,
                            downsample_factor=4, d_feat=16, ffn_mult=2)
    cfg = PretrainConfig(steps=3, batch_size=2, peak_lr=1e-3, warmup_steps=2,
                         num_codebooks=2, vocab=8, code_dim=4,
                         mask=MaskSpec(span=2, start_prob=0.3))
    encoder, books, _ = run_pretraining(pool, enc_cfg, cfg, seed=13)
    path = str(tmp_path / "enc.zrck")
    save_encoder(path, encoder, books)
    loaded, loaded_books = load_encoder(path)

    assert loaded.config == encoder.config
    for k, v in encoder.state_dict().items():
        assert torch.equal(loaded.state_dict()[k], v), k
    np.testing.assert_array_equal(loaded_books.projection, books.projection)
    np.testing.assert_array_equal(loaded_books.entries, books.entries)
    # targets computed from the reloaded quantizer agree exactly
    np.testing.assert_array_equal(rq_targets(pool[0], loaded_books),
                                  rq_targets(pool[0], books))
