"""Pipeline configuration: one INI-style file with sections, two hyperparameter
profiles (paper-scale defaults vs desk-scale test defaults), and field-path
validation diagnostics.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import TokenizerConfig
from .metrics import MetricConfig
from .model import ModelConfig
from .pseudo import FilterSpec
from .surrogate import BeamConfig
from .umt import LossWeights, NoiseConfig


class ConfigError(Exception):
    """Invalid configuration; the message carries a section.key path."""


# profile -> overridable defaults (paper values vs desk-scale test values)
PROFILES = {
    "paper": dict(
        k=80, sweeps=5, umt_lr=0.00025, umt_beta1=0.5,
        surrogate_lr=1e-4, surrogate_beta1=0.9, surrogate_beta2=0.999,
        warmup=4000, surrogate_batch=256, alpha=0.8,
        enc_blocks=6, dec_blocks=6, heads=8, d_model=512, d_ff=2048,
    ),
    "desk": dict(
        k=4, sweeps=5, umt_lr=0.00025, umt_beta1=0.5,
        surrogate_lr=1e-4, surrogate_beta1=0.9, surrogate_beta2=0.999,
        warmup=4000, surrogate_batch=32, alpha=0.8,
        enc_blocks=2, dec_blocks=2, heads=2, d_model=64, d_ff=256,
    ),
}


@dataclass
class PipelineConfig:
    # pipeline
    seed: int = 0
    out_dir: Path = Path("runs/default")
    profile: str = "desk"
    # corpus
    corpus_path: Path = Path("corpus.txt")
    corpus_format: str = "lines"
    tokenizer: TokenizerConfig = field(default_factory=TokenizerConfig)
    min_count: int = 2
    max_size: int = 30000
    # clustering
    clustering_kind: str = "lda"
    k: int = 4
    sweeps: int = 5
    lda_alpha: float = 0.1
    lda_beta: float = 0.01
    kmeans_max_iter: int = 100
    embeddings: str = "hashed"          # "hashed" or a file path
    embed_dim: int = 16
    review_path: Path | None = None
    # pairing
    strategy: str = "random"
    poly_degree: int = 2
    pairing_labeled_path: Path | None = None
    # umt
    umt_steps: int = 300
    umt_batch: int = 8
    umt_lr: float = 0.00025
    umt_beta1: float = 0.5
    init_mode: str = "word-by-word"
    init_steps: int = 200
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    weights: LossWeights = field(default_factory=LossWeights)
    disc_hidden: int = 64
    workers: int = 1
    # model dims (shared by umt + surrogate)
    enc_blocks: int = 2
    dec_blocks: int = 2
    heads: int = 2
    d_model: int = 64
    d_ff: int = 256
    # distill / filter
    sample_fraction: float = 1.0
    filter_spec: FilterSpec = field(default_factory=FilterSpec)
    # surrogate
    surrogate_epochs: int = 3
    surrogate_steps_per_epoch: int = 0     # 0: one pass over the pairs
    surrogate_batch: int = 32
    surrogate_lr: float = 1e-4
    surrogate_beta1: float = 0.9
    surrogate_beta2: float = 0.999
    warmup: int = 4000
    beam: BeamConfig = field(default_factory=BeamConfig)
    # finetune
    finetune_steps: int = 200
    finetune_batch: int = 32
    finetune_lr: float = 1e-4
    finetune_beta1: float = 0.9
    finetune_beta2: float = 0.98
    finetune_labeled_path: Path | None = None
    # eval
    metric: MetricConfig = field(default_factory=MetricConfig)
    eval_labeled_path: Path | None = None
    # paraphrase
    paraphrase_input: Path | None = None
    # ablate
    ablate_corpus_sizes: list[int] = field(default_factory=list)
    ablate_topic_counts: list[int] = field(default_factory=list)
    ablate_pairing_strategies: list[str] = field(default_factory=list)
    ablate_clustering_methods: list[str] = field(default_factory=list)

    def model_config(self, vocab_size: int, n_langs: int = 0) -> ModelConfig:
        return ModelConfig(vocab_size=vocab_size, enc_blocks=self.enc_blocks,
                           dec_blocks=self.dec_blocks, heads=self.heads,
                           d_model=self.d_model, d_ff=self.d_ff, n_langs=n_langs)


def _get(parser, section, key, conv, default, errors):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        return conv(raw)
    except (ValueError, TypeError):
        errors.append(f"{section}.{key}: cannot parse {raw!r}")
        return default


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _int_list(raw: str) -> list[int]:
    return [int(x) for x in raw.replace(",", " ").split()]


def _str_list(raw: str) -> list[str]:
    return [x for x in raw.replace(",", " ").split()]


def load_config(path, profile: str | None = None, seed: int | None = None,
                out_dir: Path | None = None) -> PipelineConfig:
    """Parse + validate; raises ConfigError with a section.key diagnostic."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from e

    errors: list[str] = []
    g = lambda sec, key, conv, default: _get(parser, sec, key, conv, default, errors)

    profile = profile or g("pipeline", "profile", str, "desk")
    if profile not in PROFILES:
        raise ConfigError(f"pipeline.profile: unknown profile {profile!r}")
    prof = PROFILES[profile]

    cfg = PipelineConfig(
        seed=seed if seed is not None else g("pipeline", "seed", int, 0),
        out_dir=Path(out_dir or os.environ.get("PARAFORGE_OUT")
                     or g("pipeline", "out_dir", str, "runs/default")),
        profile=profile,
        corpus_path=Path(g("corpus", "path", str, "corpus.txt")),
        corpus_format=g("corpus", "format", str, "lines"),
        tokenizer=TokenizerConfig(
            lowercase=g("corpus", "lowercase", _bool, True),
            split_punctuation=g("corpus", "split_punctuation", _bool, True)),
        min_count=g("corpus", "min_count", int, 2),
        max_size=g("corpus", "max_size", int, 30000),
        clustering_kind=g("clustering", "kind", str, "lda"),
        k=g("clustering", "k", int, prof["k"]),
        sweeps=g("clustering", "sweeps", int, prof["sweeps"]),
        lda_alpha=g("clustering", "alpha", float, 0.1),
        lda_beta=g("clustering", "beta", float, 0.01),
        kmeans_max_iter=g("clustering", "max_iter", int, 100),
        embeddings=g("clustering", "embeddings", str, "hashed"),
        embed_dim=g("clustering", "embed_dim", int, 16),
        review_path=_opt_path(g("clustering", "review", str, "")),
        strategy=g("pairing", "strategy", str, "random"),
        poly_degree=g("pairing", "degree", int, 2),
        pairing_labeled_path=_opt_path(g("pairing", "labeled_path", str, "")),
        umt_steps=g("umt", "steps", int, 300),
        umt_batch=g("umt", "batch_size", int, 8),
        umt_lr=g("umt", "lr", float, prof["umt_lr"]),
        umt_beta1=g("umt", "beta1", float, prof["umt_beta1"]),
        init_mode=g("umt", "init_mode", str, "word-by-word"),
        init_steps=g("umt", "init_steps", int, 200),
        noise=NoiseConfig(p_drop=g("umt", "p_drop", float, 0.1),
                          swap_window=g("umt", "swap_window", int, 3)),
        weights=LossWeights(dae=g("umt", "lambda_dae", float, 1.0),
                            bt=g("umt", "lambda_bt", float, 1.0),
                            adv=g("umt", "lambda_adv", float, 1.0)),
        disc_hidden=g("umt", "disc_hidden", int, 64),
        workers=g("umt", "workers", int, 1),
        enc_blocks=g("model", "enc_blocks", int, prof["enc_blocks"]),
        dec_blocks=g("model", "dec_blocks", int, prof["dec_blocks"]),
        heads=g("model", "heads", int, prof["heads"]),
        d_model=g("model", "d_model", int, prof["d_model"]),
        d_ff=g("model", "d_ff", int, prof["d_ff"]),
        sample_fraction=g("distill", "sample_fraction", float, 1.0),
        surrogate_epochs=g("surrogate", "epochs", int, 3),
        surrogate_steps_per_epoch=g("surrogate", "steps_per_epoch", int, 0),
        surrogate_batch=g("surrogate", "batch_size", int, prof["surrogate_batch"]),
        surrogate_lr=g("surrogate", "lr", float, prof["surrogate_lr"]),
        surrogate_beta1=g("surrogate", "beta1", float, prof["surrogate_beta1"]),
        surrogate_beta2=g("surrogate", "beta2", float, prof["surrogate_beta2"]),
        warmup=g("surrogate", "warmup", int, prof["warmup"]),
        beam=BeamConfig(width=g("surrogate", "beam_width", int, 4),
                        length_norm=g("surrogate", "length_norm", float, 0.6)),
        finetune_steps=g("finetune", "steps", int, 200),
        finetune_batch=g("finetune", "batch_size", int, 32),
        finetune_lr=g("finetune", "lr", float, 1e-4),
        finetune_beta1=g("finetune", "beta1", float, 0.9),
        finetune_beta2=g("finetune", "beta2", float, 0.98),
        finetune_labeled_path=_opt_path(g("finetune", "labeled_path", str, "")),
        metric=MetricConfig(
            max_order=g("metrics", "max_order", int, 4),
            smoothing=g("metrics", "smoothing", str, "none"),
            alpha=g("metrics", "alpha", float, prof["alpha"]),
            rouge_mode=g("metrics", "rouge_mode", str, "recall")),
        eval_labeled_path=_opt_path(g("metrics", "labeled_path", str, "")),
        paraphrase_input=_opt_path(g("paraphrase", "input", str, "")),
        ablate_corpus_sizes=g("ablate", "corpus_sizes", _int_list, []),
        ablate_topic_counts=g("ablate", "topic_counts", _int_list, []),
        ablate_pairing_strategies=g("ablate", "pairing_strategies", _str_list, []),
        ablate_clustering_methods=g("ablate", "clustering_methods", _str_list, []),
    )

    if errors:
        raise ConfigError("; ".join(errors))
    _validate(cfg)

    # filter spec from config
    if parser.has_option("filter", "filters"):
        names = _str_list(parser.get("filter", "filters"))
        filters = []
        for n in names:
            params = {}
            if n == "length_ratio":
                params["max_ratio"] = g("filter", "max_ratio", float, 2.0)
            filters.append((n, params))
        try:
            cfg.filter_spec = FilterSpec(filters=filters)
        except Exception as e:
            raise ConfigError(f"filter.filters: {e}") from e
    return cfg


def _opt_path(raw: str) -> Path | None:
    return Path(raw) if raw else None


def _validate(cfg: PipelineConfig) -> None:
    checks = [
        (cfg.k >= 2, "clustering.k: must be >= 2"),
        (cfg.sweeps >= 1, "clustering.sweeps: must be >= 1"),
        (cfg.clustering_kind in ("lda", "kmeans"),
         f"clustering.kind: unknown kind {cfg.clustering_kind!r}"),
        (cfg.corpus_format in ("lines", "jsonl"),
         f"corpus.format: unknown format {cfg.corpus_format!r}"),
        (cfg.strategy in ("random", "largest", "medium", "smallest", "supervised"),
         f"pairing.strategy: unknown strategy {cfg.strategy!r}"),
        (cfg.umt_steps >= 0, "umt.steps: must be >= 0"),
        (cfg.umt_batch >= 1, "umt.batch_size: must be >= 1"),
        (0 < cfg.sample_fraction <= 1.0,
         "distill.sample_fraction: must lie in (0, 1]"),
        (cfg.surrogate_epochs >= 1, "surrogate.epochs: must be >= 1"),
        (cfg.d_model % cfg.heads == 0, "model.d_model: must be divisible by heads"),
        (cfg.workers >= 1, "umt.workers: must be >= 1"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ConfigError(msg)


def snapshot(cfg: PipelineConfig) -> dict:
    """JSON-serializable view of the config (paths as strings)."""
    out = {}
    for key, value in vars(cfg).items():
        if isinstance(value, Path):
            out[key] = str(value)
        elif value is None or isinstance(value, (int, float, str, bool, list)):
            out[key] = value
        else:
            out[key] = {k: (str(v) if isinstance(v, Path) else v)
                        for k, v in vars(value).items()} if hasattr(value, "__dict__") \
                else repr(value)
    return out
