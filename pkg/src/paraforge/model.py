"""Small attention-based encoder-decoder shared by the per-cluster translation
models and the unified surrogate paraphraser.

Pre-norm transformer blocks, shared input embeddings with a tied output
projection, optional language-tag embeddings added to the token embeddings
(used by the unsupervised translation models; the surrogate has none).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .corpus import BOS, EOS, PAD

NEG_INF = -1e9


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    enc_blocks: int = 2
    dec_blocks: int = 2
    heads: int = 2
    d_model: int = 64
    d_ff: int = 256
    max_len: int = 128
    n_langs: int = 0          # 0 = no language tags (surrogate); 2 = src/tgt
    dtype: str = "float32"

    @classmethod
    def paper_preset(cls, vocab_size: int, n_langs: int = 0) -> "ModelConfig":
        # transformer-base scale; selectable but far beyond desk-scale tests
        return cls(vocab_size=vocab_size, enc_blocks=6, dec_blocks=6, heads=8,
                   d_model=512, d_ff=2048, n_langs=n_langs)


def init_params(cfg: ModelConfig, seed: int = 0) -> dict[str, Tensor]:
    rng = np.random.default_rng(seed)
    dt = np.dtype(cfg.dtype)
    params: dict[str, Tensor] = {}

    def w(name, *shape, std=0.02):
        params[name] = Tensor((rng.standard_normal(shape) * std).astype(dt))

    def ln(prefix):
        params[f"{prefix}.g"] = Tensor(np.ones(cfg.d_model, dtype=dt))
        params[f"{prefix}.b"] = Tensor(np.zeros(cfg.d_model, dtype=dt))

    def attn(prefix):
        for nm in ("wq", "wk", "wv", "wo"):
            w(f"{prefix}.{nm}", cfg.d_model, cfg.d_model)
            params[f"{prefix}.{nm}b"] = Tensor(np.zeros(cfg.d_model, dtype=dt))

    def ff(prefix):
        w(f"{prefix}.w1", cfg.d_model, cfg.d_ff)
        params[f"{prefix}.b1"] = Tensor(np.zeros(cfg.d_ff, dtype=dt))
        w(f"{prefix}.w2", cfg.d_ff, cfg.d_model)
        params[f"{prefix}.b2"] = Tensor(np.zeros(cfg.d_model, dtype=dt))

    w("emb", cfg.vocab_size, cfg.d_model)
    if cfg.n_langs:
        w("lang_emb", cfg.n_langs, cfg.d_model)
    for i in range(cfg.enc_blocks):
        ln(f"enc{i}.ln1"); attn(f"enc{i}.attn")
        ln(f"enc{i}.ln2"); ff(f"enc{i}.ff")
    ln("enc.ln")
    for i in range(cfg.dec_blocks):
        ln(f"dec{i}.ln1"); attn(f"dec{i}.self")
        ln(f"dec{i}.ln2"); attn(f"dec{i}.cross")
        ln(f"dec{i}.ln3"); ff(f"dec{i}.ff")
    ln("dec.ln")
    return params


def positional_encoding(max_len: int, d_model: int, dtype) -> np.ndarray:
    pos = np.arange(max_len)[:, None]
    i = np.arange(d_model)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / d_model)
    pe = np.where(i % 2 == 0, np.sin(angle), np.cos(angle))
    return pe.astype(dtype)


def pad_batch(seqs: list[list[int]], dtype=np.int64) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad to the batch max length; returns (ids, float mask)."""
    if not seqs:
        raise ValueError("empty batch")
    L = max(len(s) for s in seqs)
    ids = np.full((len(seqs), L), PAD, dtype=dtype)
    mask = np.zeros((len(seqs), L), dtype=np.float64)
    for r, s in enumerate(seqs):
        ids[r, : len(s)] = s
        mask[r, : len(s)] = 1.0
    return ids, mask


def _heads_split(tape, x: Tensor, heads: int) -> Tensor:
    B, L, d = x.shape
    x = ad.reshape(tape, x, (B, L, heads, d // heads))
    return ad.transpose(tape, x, (0, 2, 1, 3))


def _heads_merge(tape, x: Tensor) -> Tensor:
    B, H, L, dh = x.shape
    x = ad.transpose(tape, x, (0, 2, 1, 3))
    return ad.reshape(tape, x, (B, L, H * dh))


def _mha(tape, params, prefix, q_in: Tensor, kv_in: Tensor, heads: int,
         additive_mask: np.ndarray | None) -> Tensor:
    p = params
    q = ad.affine(tape, q_in, p[f"{prefix}.wq"], p[f"{prefix}.wqb"])
    k = ad.affine(tape, kv_in, p[f"{prefix}.wk"], p[f"{prefix}.wkb"])
    v = ad.affine(tape, kv_in, p[f"{prefix}.wv"], p[f"{prefix}.wvb"])
    q, k, v = (_heads_split(tape, t, heads) for t in (q, k, v))
    out = ad.attention(tape, q, k, v, additive_mask=additive_mask)
    out = _heads_merge(tape, out)
    return ad.affine(tape, out, p[f"{prefix}.wo"], p[f"{prefix}.wob"])


def _ff(tape, params, prefix, x: Tensor) -> Tensor:
    h = ad.affine(tape, x, params[f"{prefix}.w1"], params[f"{prefix}.b1"])
    h = ad.relu(tape, h)
    return ad.affine(tape, h, params[f"{prefix}.w2"], params[f"{prefix}.b2"])


def _ln(tape, params, prefix, x: Tensor) -> Tensor:
    return ad.layer_norm(tape, x, params[f"{prefix}.g"], params[f"{prefix}.b"])


def _embed(tape, params, cfg: ModelConfig, ids: np.ndarray,
           lang: int | None) -> Tensor:
    x = ad.embedding(tape, params["emb"], ids)
    pe = positional_encoding(ids.shape[1], cfg.d_model, cfg.dtype)
    x = ad.add(tape, x, Tensor(pe[None, :, :]))
    if lang is not None:
        tag = ad.embedding(tape, params["lang_emb"], np.array([[lang]]))
        x = ad.add(tape, x, tag)
    return x


def _attn_mask(pad_mask: np.ndarray, causal: bool = False) -> np.ndarray:
    """Additive mask (B, 1, Lq-or-1, Lk) from a key pad mask, optionally causal."""
    B, Lk = pad_mask.shape
    m = np.where(pad_mask[:, None, None, :] > 0, 0.0, NEG_INF)
    if causal:
        tri = np.triu(np.full((Lk, Lk), NEG_INF), k=1)
        m = m + tri[None, None, :, :]
    return m


def encode(tape: Tape, params, cfg: ModelConfig, src_ids: np.ndarray,
           src_mask: np.ndarray, lang: int | None = None) -> Tensor:
    """Encoder latents, one vector per input position."""
    x = _embed(tape, params, cfg, src_ids, lang)
    amask = _attn_mask(src_mask)
    for i in range(cfg.enc_blocks):
        h = _ln(tape, params, f"enc{i}.ln1", x)
        x = ad.add(tape, x, _mha(tape, params, f"enc{i}.attn", h, h, cfg.heads, amask))
        h = _ln(tape, params, f"enc{i}.ln2", x)
        x = ad.add(tape, x, _ff(tape, params, f"enc{i}.ff", h))
    return _ln(tape, params, "enc.ln", x)


def decode_logits(tape: Tape, params, cfg: ModelConfig, memory: Tensor,
                  src_mask: np.ndarray, tgt_in: np.ndarray,
                  tgt_mask: np.ndarray, lang: int | None = None) -> Tensor:
    """Decoder logits over the vocabulary (tied to the input embeddings)."""
    x = _embed(tape, params, cfg, tgt_in, lang)
    self_mask = _attn_mask(tgt_mask, causal=True)
    cross_mask = _attn_mask(src_mask)
    for i in range(cfg.dec_blocks):
        h = _ln(tape, params, f"dec{i}.ln1", x)
        x = ad.add(tape, x, _mha(tape, params, f"dec{i}.self", h, h, cfg.heads, self_mask))
        h = _ln(tape, params, f"dec{i}.ln2", x)
        x = ad.add(tape, x, _mha(tape, params, f"dec{i}.cross", h, memory, cfg.heads, cross_mask))
        h = _ln(tape, params, f"dec{i}.ln3", x)
        x = ad.add(tape, x, _ff(tape, params, f"dec{i}.ff", h))
    x = _ln(tape, params, "dec.ln", x)
    emb_t = ad.transpose(tape, params["emb"], (1, 0))
    return ad.matmul(tape, x, emb_t)


def seq_loss(tape: Tape, params, cfg: ModelConfig, src: list[list[int]],
             tgt: list[list[int]], src_lang: int | None = None,
             tgt_lang: int | None = None) -> Tensor:
    """Teacher-forced mean cross-entropy of generating tgt from src."""
    src_ids, src_mask = pad_batch(src)
    tgt_in, tgt_mask = pad_batch([[BOS] + t for t in tgt])
    tgt_out, _ = pad_batch([t + [EOS] for t in tgt])
    memory = encode(tape, params, cfg, src_ids, src_mask, lang=src_lang)
    logits = decode_logits(tape, params, cfg, memory, src_mask, tgt_in, tgt_mask,
                           lang=tgt_lang)
    return ad.cross_entropy(tape, logits, tgt_out, mask=tgt_mask)


@dataclass
class Hypothesis:
    ids: list[int]
    logprob: float
    finished: bool

    def normalized(self, exponent: float) -> float:
        length = max(1, len(self.ids))
        return self.logprob / (length ** exponent)


def beam_decode(params, cfg: ModelConfig, src: list[int], beam_width: int = 4,
                max_len: int | None = None, length_norm: float = 0.6,
                src_lang: int | None = None, tgt_lang: int | None = None) -> list[int]:
    """Length-capped beam search; beam_width=1 is exactly greedy decoding.

    Returns the completed hypothesis with the highest length-normalized
    log-probability (running hypotheses count as completed at the cap).
    """
    if not src:
        raise ValueError("cannot decode an empty input")
    cap = max_len if max_len is not None else 2 * len(src) + 5
    src_ids, src_mask = pad_batch([src])
    tape = Tape()
    memory = encode(tape, params, cfg, src_ids, src_mask, lang=src_lang)
    memory = memory.detach()

    beams = [Hypothesis(ids=[], logprob=0.0, finished=False)]
    done: list[Hypothesis] = []
    for _ in range(cap):
        alive = [h for h in beams if not h.finished]
        if not alive:
            break
        candidates: list[Hypothesis] = []
        for h in alive:
            tgt_in, tgt_mask = pad_batch([[BOS] + h.ids])
            t = Tape()
            logits = decode_logits(t, params, cfg, memory, src_mask, tgt_in,
                                   tgt_mask, lang=tgt_lang)
            row = logits.data[0, len(h.ids)]
            row = row - row.max()
            logp = row - np.log(np.exp(row).sum())
            # never end on an empty hypothesis; over-select by one so skipping
            # EOS at the first step still yields beam_width candidates
            order = np.argsort(-logp, kind="stable")[: beam_width + 1]
            taken = 0
            for tok in order:
                if taken >= beam_width:
                    break
                tok = int(tok)
                taken += 1
                if tok == EOS and not h.ids:
                    taken -= 1
                    continue
                if tok == EOS:
                    done.append(Hypothesis(h.ids, h.logprob + float(logp[tok]), True))
                else:
                    candidates.append(
                        Hypothesis(h.ids + [tok], h.logprob + float(logp[tok]), False))
        candidates.sort(key=lambda h: (-h.logprob, h.ids))
        beams = candidates[:beam_width]
    done.extend(Hypothesis(h.ids, h.logprob, True) for h in beams)
    if not done:
        return []
    best = max(done, key=lambda h: (h.normalized(length_norm), h.ids))
    return [t for t in best.ids if t != PAD]


def greedy_decode(params, cfg: ModelConfig, src: list[int],
                  max_len: int | None = None, src_lang: int | None = None,
                  tgt_lang: int | None = None) -> list[int]:
    return beam_decode(params, cfg, src, beam_width=1, max_len=max_len,
                       length_norm=0.0, src_lang=src_lang, tgt_lang=tgt_lang)
