"""The unified paraphraser: one sequence-to-sequence model trained on the
filtered pseudo pairs, optionally fine-tuned on labeled pairs, decoded with
length-normalized beam search.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .corpus import TokenizerConfig, Vocab, decode, encode, tokenize
from .model import ModelConfig, beam_decode, init_params, seq_loss
from .optim import AdamState, adam_step, zero_grads


class SurrogateError(Exception):
    pass


@dataclass
class SurrogateModel:
    cfg: ModelConfig
    params: dict[str, Tensor]


@dataclass
class SurrogateTrainConfig:
    steps: int = 1000
    batch_size: int = 256        # paper default for the surrogate stage
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    warmup_steps: int = 4000
    seed: int = 0
    model: ModelConfig | None = None
    log_every: int = 0           # 0: log each step; else averaged blocks


@dataclass(frozen=True)
class BeamConfig:
    width: int = 4
    max_len: int | None = None
    length_norm: float = 0.6

    def __post_init__(self):
        if self.width < 1:
            raise SurrogateError("beam width must be >= 1")


def _pair_batches(pairs: list[tuple[list[int], list[int]]], batch_size: int,
                  rng: np.random.Generator):
    idx = rng.integers(0, len(pairs), size=min(batch_size, len(pairs)))
    batch = [pairs[i] for i in idx]
    return [s for s, _ in batch], [t for _, t in batch]


def _train(params, cfg: ModelConfig, pairs, train_cfg: SurrogateTrainConfig,
           opt: AdamState):
    rng = np.random.default_rng(train_cfg.seed)
    history = []
    for step in range(train_cfg.steps):
        src, tgt = _pair_batches(pairs, train_cfg.batch_size, rng)
        tape = Tape()
        loss = seq_loss(tape, params, cfg, src, tgt)
        if not np.isfinite(loss.data):
            raise SurrogateError(f"training diverged (non-finite loss) at step {step}")
        ad.backward(tape, loss)
        adam_step(params, opt)
        zero_grads(params)
        history.append(float(loss.data))
    return history


def train_surrogate(pairs: list[tuple[list[int], list[int]]], vocab_size: int,
                    cfg: SurrogateTrainConfig):
    """Teacher-forced training on (source -> target) id pairs.

    Returns (model, per-step loss history).
    """
    pairs = [(s, t) for s, t in pairs if s and t]
    if not pairs:
        raise SurrogateError("no non-empty training pairs")
    model_cfg = cfg.model or ModelConfig(vocab_size=vocab_size)
    params = init_params(model_cfg, seed=cfg.seed)
    opt = AdamState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2,
                    warmup_steps=cfg.warmup_steps)
    history = _train(params, model_cfg, pairs, cfg, opt)
    return SurrogateModel(cfg=model_cfg, params=params), history


def finetune(model: SurrogateModel, labeled: list[tuple[list[int], list[int]]],
             cfg: SurrogateTrainConfig | None = None):
    """Continue training from the given checkpoint on labeled pairs.

    Supervised-setup optimizer defaults: beta1 0.9, beta2 0.98; batch size,
    learning rate and iteration count stay configurable.
    """
    cfg = cfg or SurrogateTrainConfig(steps=200, batch_size=32, lr=1e-4,
                                      beta2=0.98, warmup_steps=0)
    labeled = [(s, t) for s, t in labeled if s and t]
    if not labeled:
        raise SurrogateError("no non-empty labeled pairs")
    for s, t in labeled:
        top = max(max(s), max(t))
        if top >= model.cfg.vocab_size:
            raise SurrogateError(
                f"labeled pair uses id {top} outside model vocabulary "
                f"({model.cfg.vocab_size})")
    opt = AdamState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2,
                    warmup_steps=cfg.warmup_steps)
    history = _train(model.params, model.cfg, labeled, cfg, opt)
    return model, history


def surrogate_decode(model: SurrogateModel, src: list[int],
                     beam: BeamConfig | None = None) -> list[int]:
    beam = beam or BeamConfig()
    return beam_decode(model.params, model.cfg, src, beam_width=beam.width,
                       max_len=beam.max_len, length_norm=beam.length_norm)


def paraphrase(model: SurrogateModel, vocab: Vocab, text: str,
               beam: BeamConfig | None = None,
               tokenizer: TokenizerConfig | None = None) -> str:
    """End-user entry point: tokenize, beam-decode, detokenize."""
    tokens = tokenize(text, tokenizer or TokenizerConfig())
    if not tokens:
        raise SurrogateError("cannot paraphrase an empty input")
    ids = encode(tokens, vocab)
    out = surrogate_decode(model, ids, beam)
    return " ".join(decode(out, vocab))
