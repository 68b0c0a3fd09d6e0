"""Acoustic synthesis: global prototypes, durations, and the file format."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zrslm.corpus import (
    AcousticFeatures,
    FeatureFormatError,
    WORD_BOUNDARY,
    phoneme_prototype,
    read_features,
    synthesize_features,
    write_features,
)
from zrslm.corpus.features import MAX_PHONE_FRAMES, MIN_PHONE_FRAMES


def test_prototype_is_global_and_unit_norm():
    v1 = phoneme_prototype("ba", 32)
    v2 = phoneme_prototype("ba", 32)
    np.testing.assert_array_equal(v1, v2)
    assert v1.shape == (32,)
    assert v1.dtype == np.float32
    assert np.linalg.norm(v1) == pytest.approx(1.0, abs=1e-5)
    assert not np.allclose(v1, phoneme_prototype("da", 32))
    assert phoneme_prototype("ba", 16).shape == (16,)


def test_noiseless_synthesis_segments_into_prototypes(lang_a):
    symbols = list(lang_a.phonemes[:5])
    feats = synthesize_features(symbols, lang_a, rng_seed=9, noise_level=0.0)
    protos = [phoneme_prototype(s, feats.d_feat) for s in symbols]
    idx = 0
    for proto in protos:
        run = 0
        while (idx + run < feats.num_frames
               and np.array_equal(feats.frames[idx + run], proto)):
            run += 1
        assert MIN_PHONE_FRAMES <= run <= MAX_PHONE_FRAMES
        idx += run
    assert idx == feats.num_frames


def test_total_frames_bounded_by_durations(lang_a):
    symbols = list(lang_a.phonemes[:4]) * 3
    feats = synthesize_features(symbols, lang_a, rng_seed=1)
    n = len(symbols)
    assert MIN_PHONE_FRAMES * n <= feats.num_frames <= MAX_PHONE_FRAMES * n


def test_synthesis_is_seed_deterministic(lang_a):
    symbols = list(lang_a.phonemes[:3])
    f1 = synthesize_features(symbols, lang_a, rng_seed=5)
    f2 = synthesize_features(symbols, lang_a, rng_seed=5)
    np.testing.assert_array_equal(f1.frames, f2.frames)
    f3 = synthesize_features(symbols, lang_a, rng_seed=6)
    assert f3.num_frames != f1.num_frames or not np.array_equal(f3.frames, f1.frames)


def test_noise_level_perturbs_frames(lang_a):
    symbols = [lang_a.phonemes[0]]
    clean = synthesize_features(symbols, lang_a, rng_seed=4, noise_level=0.0)
    noisy = synthesize_features(symbols, lang_a, rng_seed=4, noise_level=0.05)
    assert clean.num_frames == noisy.num_frames
    delta = noisy.frames - clean.frames
    assert 0.0 < float(np.abs(delta).max()) < 1.0


def test_word_boundary_is_synthesizable(lang_a):
    feats = synthesize_features([lang_a.phonemes[0], WORD_BOUNDARY,
                                 lang_a.phonemes[1]], lang_a, rng_seed=0)
    assert feats.num_frames >= 3 * MIN_PHONE_FRAMES


def test_synthesis_validates_inputs(lang_a):
    with pytest.raises(ValueError, match="non-empty"):
        synthesize_features([], lang_a, rng_seed=0)
    with pytest.raises(ValueError, match="noise_level"):
        synthesize_features([lang_a.phonemes[0]], lang_a, rng_seed=0,
                            noise_level=-0.1)
    missing = next(p for p in ("ba", "da", "fa", "ga", "ha", "ka")
                   if p not in lang_a.phonemes)
    with pytest.raises(ValueError, match=missing):
        synthesize_features([missing], lang_a, rng_seed=0)


def test_synthesis_honors_dimensions(lang_a):
    feats = synthesize_features([lang_a.phonemes[0]], lang_a, rng_seed=0,
                                d_feat=16, frame_ms=20)
    assert feats.d_feat == 16
    assert feats.frame_ms == 20


def test_features_validation():
    good = np.zeros((3, 2), dtype=np.float32)
    AcousticFeatures(frames=good)
    with pytest.raises(ValueError, match="2D"):
        AcousticFeatures(frames=np.zeros(3, dtype=np.float32))
    with pytest.raises(ValueError, match="float32"):
        AcousticFeatures(frames=np.zeros((3, 2), dtype=np.float64))
    with pytest.raises(ValueError, match="non-empty"):
        AcousticFeatures(frames=np.zeros((0, 2), dtype=np.float32))
    bad = good.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        AcousticFeatures(frames=bad)
    with pytest.raises(ValueError, match="frame_ms"):
        AcousticFeatures(frames=good, frame_ms=0)


def test_file_round_trip_and_byte_stability(tmp_path, lang_a):
    feats = synthesize_features(list(lang_a.phonemes[:4]), lang_a, rng_seed=2)
    p1, p2 = str(tmp_path / "a.zrsf"), str(tmp_path / "b.zrsf")
    write_features(p1, feats)
    loaded = read_features(p1)
    np.testing.assert_array_equal(loaded.frames, feats.frames)
    assert loaded.frame_ms == feats.frame_ms
    write_features(p2, loaded)
    assert open(p1, "rb").read() == open(p2, "rb").read()
    assert [p.name for p in tmp_path.iterdir() if p.name.endswith(".tmp")] == []


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), t=st.integers(1, 12), d=st.integers(1, 8),
       frame_ms=st.integers(1, 40))
def test_file_round_trip_random_matrices(tmp_path_factory, seed, t, d, frame_ms):
    rng = np.random.default_rng(seed)
    feats = AcousticFeatures(
        frames=rng.standard_normal((t, d)).astype(np.float32), frame_ms=frame_ms)
    path = str(tmp_path_factory.mktemp("feat") / "x.zrsf")
    write_features(path, feats)
    loaded = read_features(path)
    np.testing.assert_array_equal(loaded.frames, feats.frames)
    assert loaded.frame_ms == frame_ms


def test_reader_rejects_corruption(tmp_path, lang_a):
    feats = synthesize_features([lang_a.phonemes[0]], lang_a, rng_seed=0)
    path = str(tmp_path / "x.zrsf")
    write_features(path, feats)
    blob = open(path, "rb").read()
    bad_magic = tmp_path / "magic.zrsf"
    bad_magic.write_bytes(b"XXXX" + blob[4:])
    with pytest.raises(FeatureFormatError, match="magic"):
        read_features(str(bad_magic))
    truncated = tmp_path / "trunc.zrsf"
    truncated.write_bytes(blob[:-5])
    with pytest.raises(FeatureFormatError, match="payload"):
        read_features(str(truncated))
    short = tmp_path / "short.zrsf"
    short.write_bytes(blob[:10])
    with pytest.raises(FeatureFormatError, match="header"):
        read_features(str(short))
    bad_version = tmp_path / "ver.zrsf"
    bad_version.write_bytes(blob[:4] + (99).to_bytes(4, "little") + blob[8:])
    with pytest.raises(FeatureFormatError, match="version"):
        read_features(str(bad_version))
