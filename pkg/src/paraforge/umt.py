"""Unsupervised translation over a cluster pair: word drop/swap noise,
denoising auto-encoding, back-translation through the model's own greedy
output, adversarial latent alignment, and evenly alternating training of the
encoder-decoder against a binary language discriminator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .model import ModelConfig, decode_logits, encode, greedy_decode, init_params, pad_batch, seq_loss
from .optim import AdamState, adam_step, zero_grads

SRC, TGT = 0, 1


class UmtError(Exception):
    pass


@dataclass(frozen=True)
class NoiseConfig:
    p_drop: float = 0.1
    swap_window: int = 3

    def __post_init__(self):
        if not (0.0 <= self.p_drop < 1.0):
            raise ValueError("p_drop must lie in [0, 1)")
        if self.swap_window < 0:
            raise ValueError("swap_window must be >= 0")


@dataclass(frozen=True)
class LossWeights:
    dae: float = 1.0
    bt: float = 1.0
    adv: float = 1.0


@dataclass
class UmtTrainConfig:
    steps: int = 300
    batch_size: int = 8
    lr: float = 0.00025          # paper default for the translation models
    beta1: float = 0.5
    beta2: float = 0.999
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    weights: LossWeights = field(default_factory=LossWeights)
    init_mode: str = "word-by-word"     # or "none"
    init_steps: int = 1000
    seed: int = 0
    model: ModelConfig | None = None
    disc_hidden: int = 64
    disc_lr: float = 0.00025


@dataclass
class UmtModel:
    cfg: ModelConfig
    params: dict[str, Tensor]            # shared embeddings + encoder/decoder + lang tags
    disc_params: dict[str, Tensor]       # binary classifier over pooled latents


def make_umt_model(vocab_size: int, cfg: ModelConfig | None = None,
                   disc_hidden: int = 64, seed: int = 0) -> UmtModel:
    cfg = cfg or ModelConfig(vocab_size=vocab_size, n_langs=2)
    if cfg.n_langs != 2:
        raise UmtError("UMT model requires 2 language tags")
    params = init_params(cfg, seed=seed)
    rng = np.random.default_rng(seed + 1)
    dt = np.dtype(cfg.dtype)
    disc = {
        "disc.w1": Tensor((rng.standard_normal((cfg.d_model, disc_hidden)) * 0.02).astype(dt)),
        "disc.b1": Tensor(np.zeros(disc_hidden, dtype=dt)),
        "disc.w2": Tensor((rng.standard_normal((disc_hidden, 2)) * 0.02).astype(dt)),
        "disc.b2": Tensor(np.zeros(2, dtype=dt)),
    }
    return UmtModel(cfg=cfg, params=params, disc_params=disc)


def noise_apply(tokens: list, config: NoiseConfig, rng: np.random.Generator) -> list:
    """Drop each token with p_drop (always keeping at least one survivor),
    then locally shuffle so no token moves more than swap_window positions."""
    if not tokens:
        raise UmtError("cannot corrupt an empty sentence")
    keep = rng.random(len(tokens)) >= config.p_drop
    if not keep.any():
        keep[rng.integers(0, len(tokens))] = True
    survivors = [t for t, k in zip(tokens, keep) if k]
    if config.swap_window == 0 or len(survivors) < 2:
        return survivors
    # sorting i + U(0, k+1) displaces every element by at most k
    keys = np.arange(len(survivors)) + rng.uniform(0, config.swap_window + 1,
                                                   size=len(survivors))
    order = np.argsort(keys, kind="stable")
    return [survivors[i] for i in order]


def _pool_latents(tape: Tape, latents: Tensor, mask: np.ndarray) -> Tensor:
    """Mask-aware mean over positions: (B, L, d) -> (B, d)."""
    w = (mask / mask.sum(axis=1, keepdims=True))[:, None, :]
    pooled = ad.matmul(tape, Tensor(w.astype(latents.data.dtype)), latents)
    B, _, d = pooled.shape
    return ad.reshape(tape, pooled, (B, d))


def _disc_logits(tape: Tape, disc_params: dict[str, Tensor], pooled: Tensor) -> Tensor:
    h = ad.affine(tape, pooled, disc_params["disc.w1"], disc_params["disc.b1"])
    h = ad.relu(tape, h)
    return ad.affine(tape, h, disc_params["disc.w2"], disc_params["disc.b2"])


def dae_loss(tape: Tape, model: UmtModel, batch: list[list[int]], lang: int,
             noise: NoiseConfig, rng: np.random.Generator) -> Tensor:
    """Reconstruction loss of each sentence from its corrupted version."""
    if not batch:
        raise UmtError("empty batch")
    noisy = [noise_apply(x, noise, rng) for x in batch]
    return seq_loss(tape, model.params, model.cfg, noisy, batch,
                    src_lang=lang, tgt_lang=lang)


def translate(model: UmtModel, tokens: list[int], direction: tuple[int, int] = (SRC, TGT),
              max_len: int | None = None) -> list[int]:
    """Greedy decoding toward the target language tag, capped at 2*len + 5."""
    if not tokens:
        raise UmtError("cannot translate an empty sentence")
    src_lang, tgt_lang = direction
    return greedy_decode(model.params, model.cfg, tokens, max_len=max_len,
                         src_lang=src_lang, tgt_lang=tgt_lang)


def bt_loss(tape: Tape, model: UmtModel, batch: list[list[int]], l1: int, l2: int,
            noise: NoiseConfig, rng: np.random.Generator,
            translations: list[list[int]] | None = None) -> Tensor:
    """Reconstruct x from a corrupted version of its own translation M(x).

    The inner translation is greedy and detached: no gradient flows through it.
    Pass precomputed translations to hold the decode fixed (the loss is only
    differentiable with the decode frozen, so numeric checks need this).
    """
    if not batch:
        raise UmtError("empty batch")
    if translations is None:
        translations = [translate(model, x, direction=(l1, l2)) for x in batch]
    elif len(translations) != len(batch):
        raise UmtError("translations must match the batch length")
    translated = [y if y else list(x) for x, y in zip(batch, translations)]
    noisy = [noise_apply(y, noise, rng) for y in translated]
    return seq_loss(tape, model.params, model.cfg, noisy, batch,
                    src_lang=l2, tgt_lang=l1)


def disc_loss(tape: Tape, model: UmtModel, latents_and_masks, labels) -> Tensor:
    """-log p(true language | pooled latent) under the discriminator.

    Latents are detached: only discriminator parameters receive gradients.
    """
    labels = np.asarray(labels)
    if not np.isin(labels, (SRC, TGT)).all():
        raise UmtError("labels must be SRC (0) or TGT (1)")
    pooled_rows = []
    for latents, mask in latents_and_masks:
        data = latents.data if isinstance(latents, Tensor) else np.asarray(latents)
        pooled_rows.append(_pool_latents(tape, Tensor(data), mask))
    if len(pooled_rows) == 1:
        pooled = pooled_rows[0]
    else:
        stacked = np.concatenate([p.data for p in pooled_rows], axis=0)
        pooled = Tensor(stacked)            # latents are constants here anyway
    if pooled.shape[0] != labels.shape[0]:
        raise UmtError("one label per latent required")
    logits = _disc_logits(tape, model.disc_params, pooled)
    return ad.cross_entropy(tape, logits, labels)


def adv_loss(tape: Tape, model: UmtModel, batch: list[list[int]], l1: int, l2: int) -> Tensor:
    """-log p(l2 | encoder latent of an l1 sentence), discriminator frozen."""
    if not batch:
        raise UmtError("empty batch")
    ids, mask = pad_batch(batch)
    latents = encode(tape, model.params, model.cfg, ids, mask, lang=l1)
    pooled = _pool_latents(tape, latents, mask)
    frozen = {k: v.detach() for k, v in model.disc_params.items()}
    logits = _disc_logits(tape, frozen, pooled)
    labels = np.full(len(batch), l2)
    return ad.cross_entropy(tape, logits, labels)


def total_loss(tape: Tape, model: UmtModel, batch_src: list[list[int]],
               batch_tgt: list[list[int]], weights: LossWeights,
               noise: NoiseConfig, rng: np.random.Generator,
               translations_src: list[list[int]] | None = None,
               translations_tgt: list[list[int]] | None = None):
    """Weighted sum of both DAE, both BT and both adversarial terms.

    Returns (scalar Tensor, dict of unweighted component values).
    """
    terms = {
        "dae_src": dae_loss(tape, model, batch_src, SRC, noise, rng),
        "dae_tgt": dae_loss(tape, model, batch_tgt, TGT, noise, rng),
        "bt_src_tgt": bt_loss(tape, model, batch_src, SRC, TGT, noise, rng,
                              translations=translations_src),
        "bt_tgt_src": bt_loss(tape, model, batch_tgt, TGT, SRC, noise, rng,
                              translations=translations_tgt),
        "adv_src_tgt": adv_loss(tape, model, batch_src, SRC, TGT),
        "adv_tgt_src": adv_loss(tape, model, batch_tgt, TGT, SRC),
    }
    lam = {"dae": weights.dae, "bt": weights.bt, "adv": weights.adv}
    total = None
    for name, t in terms.items():
        kind = name.split("_")[0]
        weighted = ad.scale(tape, t, lam[kind])
        total = weighted if total is None else ad.add(tape, total, weighted)
    components = {k: float(v.data) for k, v in terms.items()}
    return total, components


def init_word_by_word(model: UmtModel, batches_src, batches_tgt, steps: int,
                      cfg: UmtTrainConfig, rng: np.random.Generator,
                      opt: AdamState | None = None) -> None:
    """Identity-dictionary pretraining: emit each sentence unchanged under the
    opposite language tag (the word-by-word dictionary is the identity)."""
    if steps <= 0:
        return
    opt = opt or AdamState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2)
    for _ in range(steps):
        bs = _sample_batch(batches_src, cfg.batch_size, rng)
        bt = _sample_batch(batches_tgt, cfg.batch_size, rng)
        tape = Tape()
        l_s = seq_loss(tape, model.params, model.cfg, bs, bs, src_lang=SRC, tgt_lang=TGT)
        l_t = seq_loss(tape, model.params, model.cfg, bt, bt, src_lang=TGT, tgt_lang=SRC)
        loss = ad.scale(tape, ad.add(tape, l_s, l_t), 0.5)
        ad.backward(tape, loss)
        adam_step(model.params, opt)
        zero_grads(model.params)


def _sample_batch(sentences: list[list[int]], batch_size: int,
                  rng: np.random.Generator) -> list[list[int]]:
    idx = rng.integers(0, len(sentences), size=min(batch_size, len(sentences)))
    return [sentences[i] for i in idx]


def train_umt(c_src: list[list[int]], c_tgt: list[list[int]], vocab_size: int,
              cfg: UmtTrainConfig):
    """Alternating training: one encoder-decoder step on the combined objective,
    one discriminator step, per iteration. Returns (model, history) where
    history rows are dicts with dae/bt/adv/disc/total values."""
    if not c_src or not c_tgt:
        raise UmtError("both clusters must be non-empty")
    c_src = [s for s in c_src if s]
    c_tgt = [s for s in c_tgt if s]
    rng = np.random.default_rng(cfg.seed)
    model = make_umt_model(vocab_size, cfg.model, disc_hidden=cfg.disc_hidden,
                           seed=cfg.seed)
    opt = AdamState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2)
    disc_opt = AdamState(lr=cfg.disc_lr, beta1=cfg.beta1, beta2=cfg.beta2)

    if cfg.init_mode == "word-by-word":
        init_word_by_word(model, c_src, c_tgt, cfg.init_steps, cfg, rng)
    elif cfg.init_mode != "none":
        raise UmtError(f"unknown init mode {cfg.init_mode!r}")

    history = []
    for step in range(cfg.steps):
        bs = _sample_batch(c_src, cfg.batch_size, rng)
        bt = _sample_batch(c_tgt, cfg.batch_size, rng)

        tape = Tape()
        loss, comps = total_loss(tape, model, bs, bt, cfg.weights, cfg.noise, rng)
        if not np.isfinite(loss.data):
            raise UmtError(f"training diverged (non-finite loss) at step {step}")
        ad.backward(tape, loss)
        adam_step(model.params, opt)
        zero_grads(model.params)

        # discriminator step on detached latents of the same batches
        dtape = Tape()
        ids_s, mask_s = pad_batch(bs)
        ids_t, mask_t = pad_batch(bt)
        lat_s = encode(dtape, model.params, model.cfg, ids_s, mask_s, lang=SRC).detach()
        lat_t = encode(dtape, model.params, model.cfg, ids_t, mask_t, lang=TGT).detach()
        labels = np.concatenate([np.full(len(bs), SRC), np.full(len(bt), TGT)])
        dtape = Tape()
        dloss = disc_loss(dtape, model, [(lat_s, mask_s), (lat_t, mask_t)], labels)
        ad.backward(dtape, dloss)
        adam_step(model.disc_params, disc_opt)
        zero_grads(model.disc_params)

        history.append({
            "step": step,
            "dae": comps["dae_src"] + comps["dae_tgt"],
            "bt": comps["bt_src_tgt"] + comps["bt_tgt_src"],
            "adv": comps["adv_src_tgt"] + comps["adv_tgt_src"],
            "disc": float(dloss.data),
            "total": float(loss.data),
        })
    return model, history
