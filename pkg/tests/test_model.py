"""Transformer building blocks: padding, sequence loss, beam and greedy decode."""

import numpy as np
import pytest

from paraforge.autodiff import Tape, backward
from paraforge.corpus import PAD
from paraforge.model import (ModelConfig, beam_decode, greedy_decode, init_params,
                             pad_batch, positional_encoding, seq_loss)


def tiny_cfg(**kw):
    base = dict(vocab_size=16, enc_blocks=1, dec_blocks=1, heads=2,
                d_model=8, d_ff=16, n_langs=0)
    base.update(kw)
    return ModelConfig(**base)


def test_pad_batch_shapes_and_mask():
    ids, mask = pad_batch([[4, 5, 6], [7]])
    assert ids.shape == (2, 3)
    assert ids[0].tolist() == [4, 5, 6]
    assert ids[1].tolist() == [7, PAD, PAD]
    assert mask.tolist() == [[1.0, 1.0, 1.0], [1.0, 0.0, 0.0]]


def test_pad_batch_empty_list():
    with pytest.raises(ValueError):
        pad_batch([])


def test_positional_encoding_bounded_and_deterministic():
    pe = positional_encoding(10, 8, np.float64)
    assert pe.shape == (10, 8)
    assert np.abs(pe).max() <= 1.0
    assert np.array_equal(pe, positional_encoding(10, 8, np.float64))


def test_init_params_deterministic_per_seed():
    cfg = tiny_cfg()
    a = init_params(cfg, seed=5)
    b = init_params(cfg, seed=5)
    c = init_params(cfg, seed=6)
    assert set(a) == set(b)
    for name in a:
        assert np.array_equal(a[name].data, b[name].data)
    assert any(not np.array_equal(a[n].data, c[n].data) for n in a)


def test_seq_loss_is_finite_and_differentiable():
    cfg = tiny_cfg(dtype="float64")
    params = init_params(cfg, seed=0)
    tape = Tape()
    loss = seq_loss(tape, params, cfg, [[4, 5], [6, 7, 8]], [[5, 4], [6, 6]])
    assert np.isfinite(loss.data)
    backward(tape, loss)
    assert params["emb"].grad is not None


def test_greedy_is_beam_width_one():
    cfg = tiny_cfg()
    params = init_params(cfg, seed=1)
    src = [4, 5, 6, 7]
    assert greedy_decode(params, cfg, src) == beam_decode(params, cfg, src,
                                                          beam_width=1,
                                                          length_norm=0.0)


def test_decode_respects_length_cap():
    cfg = tiny_cfg()
    params = init_params(cfg, seed=2)
    for src in ([4, 5], [4, 5, 6, 7, 8, 9]):
        out = greedy_decode(params, cfg, src)
        assert len(out) <= 2 * len(src) + 5
        assert PAD not in out


def test_decode_is_deterministic():
    cfg = tiny_cfg()
    params = init_params(cfg, seed=3)
    src = [4, 5, 6]
    assert beam_decode(params, cfg, src, beam_width=4) == \
        beam_decode(params, cfg, src, beam_width=4)


def test_decode_empty_source_errors():
    cfg = tiny_cfg()
    params = init_params(cfg, seed=0)
    with pytest.raises(ValueError):
        greedy_decode(params, cfg, [])


def test_beam_output_stays_in_vocabulary():
    cfg = tiny_cfg()
    params = init_params(cfg, seed=4)
    for width in (1, 2, 4):
        out = beam_decode(params, cfg, [4, 5, 6, 7], beam_width=width)
        assert all(0 <= t < cfg.vocab_size for t in out)
