"""Stage implementations behind the CLI: cluster -> pair -> train-umt ->
distill -> filter -> train-surrogate (-> finetune) -> paraphrase / eval,
plus the ablation harness that reruns the pipeline along one config axis.

Each stage reads the artifacts of upstream stages from the output directory,
writes its own atomically, and records digests in the manifest.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import io
import json
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .clustering import (ClusterSet, EmbeddingTable, KMeansModel, ReviewDecisions,
                         TopicModel, apply_review, distance_matrix, hashed_embeddings,
                         kmeans_fit, lda_fit, load_embeddings, save_embeddings, top_words)
from .config import PipelineConfig, snapshot
from .corpus import Vocab, build_vocab, encode_corpus, load_corpus
from .manifest import Manifest, atomic_write_bytes, atomic_write_text
from .metrics import EvalTriple, evaluate
from .model import ModelConfig
from .pairing import PairingPlan, fit_score_function, pair_clusters, pair_supervised
from .plotting import plot_loss_curves, plot_scalar_curve, plot_score_bars, plot_score_distribution
from .pseudo import FilterSpec, ParaphrasePair, generate_pairs, run_filters
from .surrogate import (BeamConfig, SurrogateModel, SurrogateTrainConfig, finetune,
                        paraphrase, train_surrogate)
from .umt import UmtModel, UmtTrainConfig, make_umt_model, train_umt

STAGES = ("cluster", "review-report", "pair", "train-umt", "distill", "filter",
          "train-surrogate", "finetune", "paraphrase", "eval", "ablate")

ABLATION_AXES = ("corpus-size", "topic-count", "pairing-strategy", "clustering-method")


class MissingArtifactError(Exception):
    def __init__(self, path, stage: str):
        super().__init__(f"missing artifact {path}; run the {stage!r} stage first")
        self.stage = stage


class StageError(Exception):
    pass


def stage_seed(global_seed: int, name: str) -> int:
    h = hashlib.sha256(f"{global_seed}:{name}".encode()).digest()
    return int.from_bytes(h[:4], "little")


# --- artifact paths ----------------------------------------------------------

class Workspace:
    def __init__(self, out_dir: Path):
        self.root = Path(out_dir)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.root / name

    def require(self, name: str, stage: str) -> Path:
        p = self.root / name
        if not p.exists():
            raise MissingArtifactError(p, stage)
        return p


def _load_prepared(cfg: PipelineConfig, ws: Workspace):
    """Records tokenized with the config tokenizer + the vocab built by `cluster`."""
    if not cfg.corpus_path.exists():
        raise MissingArtifactError(cfg.corpus_path, "corpus file (config corpus.path)")
    records = load_corpus(cfg.corpus_path, cfg.corpus_format, cfg.tokenizer)
    vocab = Vocab.load(ws.require("vocab.txt", "cluster"))
    encode_corpus(records, vocab)
    return records, vocab


def _load_cluster_model(ws: Workspace):
    params, meta, _ = load_checkpoint(ws.require("clusters.ckpt", "cluster"))
    ids = params["assign_ids"].data.astype(int)
    labels = params["assign_labels"].data.astype(int)
    assignments = {int(i): int(c) for i, c in zip(ids, labels)}
    if meta["kind"] == "lda":
        model = TopicModel(K=meta["K"], phi=params["phi"].data, assignments=assignments,
                           alpha=meta["alpha"], beta=meta["beta"],
                           sweep_count=meta["sweeps"])
    else:
        model = KMeansModel(K=meta["K"], centers=params["centers"].data,
                            assignments=assignments)
    return model, meta


def _load_clusterset(cfg: PipelineConfig, ws: Workspace, model, meta) -> ClusterSet:
    clusters = ClusterSet.from_assignments(meta["kind"], meta["K"], model.assignments)
    if cfg.review_path:
        if not cfg.review_path.exists():
            raise MissingArtifactError(cfg.review_path, "review decisions (human step)")
        clusters = apply_review(clusters, _read_review(cfg.review_path))
    return clusters


def _read_review(path) -> ReviewDecisions:
    decisions = []
    with open(path, encoding="utf-8") as f:
        for ln in f:
            ln = ln.rstrip("\n")
            if not ln or ln.startswith("#"):
                continue
            parts = ln.split("\t")
            cid, verdict = int(parts[0]), parts[1]
            note = parts[2] if len(parts) > 2 else ""
            decisions.append((cid, verdict, note))
    return ReviewDecisions(decisions)


def _load_embedding_table(cfg: PipelineConfig, ws: Workspace) -> EmbeddingTable:
    if cfg.embeddings == "hashed":
        return load_embeddings(ws.require("embeddings.txt", "cluster"))
    return load_embeddings(cfg.embeddings)


def _read_labeled(path) -> list[tuple[str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for ln in f:
            ln = ln.rstrip("\n")
            if not ln:
                continue
            src, ref = ln.split("\t")[:2]
            pairs.append((src, ref))
    return pairs


# --- stages ------------------------------------------------------------------

def run_cluster(cfg: PipelineConfig, ws: Workspace) -> list[Path]:
    records = load_corpus(cfg.corpus_path, cfg.corpus_format, cfg.tokenizer)
    vocab = build_vocab((r.tokens for r in records), cfg.min_count, cfg.max_size)
    encode_corpus(records, vocab)
    vocab.save(ws.path("vocab.txt"))
    outputs = [ws.path("vocab.txt")]

    if cfg.clustering_kind == "lda":
        model = lda_fit(records, vocab, K=cfg.k, sweeps=cfg.sweeps,
                        alpha=cfg.lda_alpha, beta=cfg.lda_beta,
                        seed=stage_seed(cfg.seed, "cluster"))
        arrays = {"phi": model.phi}
        meta = {"kind": "lda", "K": cfg.k, "alpha": cfg.lda_alpha,
                "beta": cfg.lda_beta, "sweeps": cfg.sweeps}
    else:
        if cfg.embeddings == "hashed":
            table = hashed_embeddings(records, cfg.embed_dim)
            save_embeddings(table, ws.path("embeddings.txt"))
            outputs.append(ws.path("embeddings.txt"))
        else:
            table = load_embeddings(cfg.embeddings)
        model = kmeans_fit(table, K=cfg.k, max_iter=cfg.kmeans_max_iter,
                           seed=stage_seed(cfg.seed, "cluster"))
        arrays = {"centers": model.centers}
        meta = {"kind": "kmeans", "K": cfg.k}

    from .autodiff import Tensor
    ids = sorted(model.assignments)
    arrays["assign_ids"] = np.array(ids, dtype=np.int64)
    arrays["assign_labels"] = np.array([model.assignments[i] for i in ids], dtype=np.int64)
    save_checkpoint(ws.path("clusters.ckpt"),
                    {k: Tensor(v) for k, v in arrays.items()}, meta=meta)
    outputs.append(ws.path("clusters.ckpt"))

    buf = io.StringIO()
    for sid in ids:
        buf.write(f"{sid}\t{model.assignments[sid]}\n")
    atomic_write_text(ws.path("assignments.tsv"), buf.getvalue())
    outputs.append(ws.path("assignments.tsv"))

    D = distance_matrix(model)
    buf = io.StringIO()
    for row in D:
        buf.write("\t".join(repr(float(x)) for x in row) + "\n")
    atomic_write_text(ws.path("distances.tsv"), buf.getvalue())
    outputs.append(ws.path("distances.tsv"))
    return outputs


def _read_distances(ws: Workspace) -> np.ndarray:
    path = ws.require("distances.tsv", "cluster")
    rows = []
    with open(path, encoding="utf-8") as f:
        for ln in f:
            if ln.strip():
                rows.append([float(x) for x in ln.split("\t")])
    return np.array(rows)


def run_review_report(cfg: PipelineConfig, ws: Workspace) -> list[Path]:
    model, meta = _load_cluster_model(ws)
    records, vocab = _load_prepared(cfg, ws)
    buf = io.StringIO()
    if isinstance(model, TopicModel):
        words = top_words(model, vocab, n=20)
        for cid in sorted(words):
            toks = " ".join(f"{t}:{p:.4f}" for t, p in words[cid])
            size = sum(1 for c in model.assignments.values() if c == cid)
            buf.write(f"cluster {cid}\tsize {size}\t{toks}\n")
    else:
        by_cluster: dict[int, list[int]] = {}
        for sid, c in model.assignments.items():
            by_cluster.setdefault(c, []).append(sid)
        texts = {r.id: r.text for r in records}
        for cid in range(meta["K"]):
            sample = by_cluster.get(cid, [])[:5]
            joined = " | ".join(texts[s] for s in sample)
            buf.write(f"cluster {cid}\tsize {len(by_cluster.get(cid, []))}\t{joined}\n")
    atomic_write_text(ws.path("cluster_report.tsv"), buf.getvalue())

    # editable decisions template (all clusters kept by default)
    tmpl = "".join(f"{cid}\tkeep\t\n" for cid in range(meta["K"]))
    atomic_write_text(ws.path("review_template.tsv"), tmpl)
    return [ws.path("cluster_report.tsv"), ws.path("review_template.tsv")]


def run_pair(cfg: PipelineConfig, ws: Workspace) -> list[Path]:
    model, meta = _load_cluster_model(ws)
    clusters = _load_clusterset(cfg, ws, model, meta)
    D = _read_distances(ws)
    if cfg.strategy == "supervised":
        plan = _pair_supervised_stage(cfg, ws, model, meta, clusters, D)
    else:
        plan = pair_clusters(clusters.active, D, cfg.strategy,
                             seed=stage_seed(cfg.seed, "pair"))
    plan.save(ws.path("plan.tsv"))
    return [ws.path("plan.tsv")]


def _pair_supervised_stage(cfg, ws, model, meta, clusters, D) -> PairingPlan:
    """Fit the distance->score polynomial on a few trained sample pairs, then
    pick the highest-predicted-score target per source cluster."""
    if not cfg.pairing_labeled_path:
        raise StageError("pairing.labeled_path is required for the supervised strategy")
    if not cfg.pairing_labeled_path.exists():
        raise MissingArtifactError(cfg.pairing_labeled_path, "labeled dev set")
    records, vocab = _load_prepared(cfg, ws)
    dev = _read_labeled(cfg.pairing_labeled_path)

    rng = np.random.default_rng(stage_seed(cfg.seed, "pair-supervised"))
    active = sorted(clusters.active)
    all_pairs = [(s, t) for s in active for t in active if s != t]
    n_samples = min(len(all_pairs), max(cfg.poly_degree + 1, 4))
    idx = rng.choice(len(all_pairs), size=n_samples, replace=False)
    sampled = [all_pairs[i] for i in sorted(idx)]

    from .corpus import tokenize, encode as encode_tokens, decode as decode_ids
    from .umt import translate
    samples = []
    for src_c, tgt_c in sampled:
        m, _ = _train_one_umt(cfg, ws, records, vocab, clusters, src_c, tgt_c,
                              tag=f"probe_{src_c}_{tgt_c}", save=False)
        triples = []
        for s_text, r_text in dev:
            s_toks = tokenize(s_text, cfg.tokenizer)
            if not s_toks:
                continue
            out_ids = translate(m, encode_tokens(s_toks, vocab))
            c_toks = decode_ids(out_ids, vocab)
            if not c_toks:
                continue
            triples.append(EvalTriple(source=s_toks,
                                      reference=tokenize(r_text, cfg.tokenizer),
                                      candidate=c_toks))
        score = evaluate(triples, cfg.metric).ibleu if triples else 0.0
        samples.append((float(D[src_c, tgt_c]), score))
    f = fit_score_function(samples, degree=min(cfg.poly_degree, len(samples) - 1))
    return pair_supervised(clusters.active, D, f)


def _cluster_sentences(records, clusters: ClusterSet, cid: int) -> list[list[int]]:
    by_id = {r.id: r.ids for r in records}
    return [by_id[s] for s in clusters.members[cid] if by_id.get(s)]


def _train_one_umt(cfg: PipelineConfig, ws: Workspace, records, vocab,
                   clusters: ClusterSet, src_c: int, tgt_c: int, tag: str,
                   save: bool = True):
    c_src = _cluster_sentences(records, clusters, src_c)
    c_tgt = _cluster_sentences(records, clusters, tgt_c)
    if not c_src or not c_tgt:
        raise StageError(f"cluster pair ({src_c}, {tgt_c}) has an empty side")
    tcfg = UmtTrainConfig(
        steps=cfg.umt_steps, batch_size=cfg.umt_batch, lr=cfg.umt_lr,
        beta1=cfg.umt_beta1, noise=cfg.noise, weights=cfg.weights,
        init_mode=cfg.init_mode, init_steps=cfg.init_steps,
        seed=stage_seed(cfg.seed, f"umt:{tag}"),
        model=cfg.model_config(len(vocab), n_langs=2),
        disc_hidden=cfg.disc_hidden, disc_lr=cfg.umt_lr)
    model, history = train_umt(c_src, c_tgt, len(vocab), tcfg)
    if save:
        all_params = dict(model.params)
        all_params.update(model.disc_params)
        save_checkpoint(ws.path(f"umt_c{src_c}.ckpt"), all_params,
                        meta={"src": src_c, "tgt": tgt_c,
                              "model": vars(model.cfg)})
        buf = io.StringIO()
        buf.write("step,dae,bt,adv,disc,total\n")
        for row in history:
            buf.write(f"{row['step']},{row['dae']:.6f},{row['bt']:.6f},"
                      f"{row['adv']:.6f},{row['disc']:.6f},{row['total']:.6f}\n")
        atomic_write_text(ws.path(f"umt_c{src_c}_loss.csv"), buf.getvalue())
        plot_loss_curves(history, ws.path(f"umt_c{src_c}_loss.png"),
                         title=f"cluster pair ({src_c} -> {tgt_c})")
    return model, history


def _umt_job(args):
    cfg, out_dir, src_c, tgt_c = args
    ws = Workspace(out_dir)
    records, vocab = _load_prepared(cfg, ws)
    model, meta = _load_cluster_model(ws)
    clusters = _load_clusterset(cfg, ws, model, meta)
    _train_one_umt(cfg, ws, records, vocab, clusters, src_c, tgt_c,
                   tag=f"{src_c}->{tgt_c}")
    return src_c


def run_train_umt(cfg: PipelineConfig, ws: Workspace) -> list[Path]:
    plan = PairingPlan.load(ws.require("plan.tsv", "pair"))
    jobs = [(cfg, ws.root, s, t) for s, t, _ in plan.pairs]
    if cfg.workers > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            list(ex.map(_umt_job, jobs))
    else:
        for job in jobs:
            _umt_job(job)
    outputs = []
    for s, _, _ in plan.pairs:
        outputs += [ws.path(f"umt_c{s}.ckpt"), ws.path(f"umt_c{s}_loss.csv"),
                    ws.path(f"umt_c{s}_loss.png")]
    return outputs


def _load_umt(ws: Workspace, src_c: int) -> UmtModel:
    params, meta, _ = load_checkpoint(ws.require(f"umt_c{src_c}.ckpt", "train-umt"))
    mcfg = ModelConfig(**meta["model"])
    disc = {k: v for k, v in params.items() if k.startswith("disc.")}
    enc_dec = {k: v for k, v in params.items() if not k.startswith("disc.")}
    return UmtModel(cfg=mcfg, params=enc_dec, disc_params=disc)


def run_distill(cfg: PipelineConfig, ws: Workspace) -> list[Path]:
    records, vocab = _load_prepared(cfg, ws)
    model, meta = _load_cluster_model(ws)
    clusters = _load_clusterset(cfg, ws, model, meta)
    plan = PairingPlan.load(ws.require("plan.tsv", "pair"))
    models = {s: _load_umt(ws, s) for s, _, _ in plan.pairs}
    table = None
    if meta["kind"] == "kmeans":
        table = _load_embedding_table(cfg, ws)
    if cfg.sample_fraction < 1.0:
        rng = np.random.default_rng(stage_seed(cfg.seed, "distill"))
        n = max(1, int(round(len(records) * cfg.sample_fraction)))
        keep = set(rng.choice(len(records), size=n, replace=False).tolist())
        records = [r for i, r in enumerate(records) if i in keep]
    pairs = generate_pairs(records, vocab, model, clusters, models,
                           embeddings=table)
    text = "".join(p.to_json() + "\n" for p in pairs)
    atomic_write_text(ws.path("pairs.jsonl"), text)
    return [ws.path("pairs.jsonl")]


def _read_pairs(path) -> list[ParaphrasePair]:
    out = []
    with open(path, encoding="utf-8") as f:
        for ln in f:
            if ln.strip():
                out.append(ParaphrasePair.from_json(ln))
    return out


def run_filter(cfg: PipelineConfig, ws: Workspace) -> list[Path]:
    pairs = _read_pairs(ws.require("pairs.jsonl", "distill"))
    kept, report = run_filters(pairs, cfg.filter_spec)
    atomic_write_text(ws.path("filtered.jsonl"),
                      "".join(p.to_json() + "\n" for p in kept))
    atomic_write_text(ws.path("filter_report.json"), report.to_json() + "\n")
    return [ws.path("filtered.jsonl"), ws.path("filter_report.json")]


def run_train_surrogate(cfg: PipelineConfig, ws: Workspace) -> list[Path]:
    pairs = _read_pairs(ws.require("filtered.jsonl", "filter"))
    _, vocab = _load_prepared(cfg, ws)
    id_pairs = [([vocab.index(t) for t in p.source],
                 [vocab.index(t) for t in p.target]) for p in pairs]
    id_pairs = [(s, t) for s, t in id_pairs if s and t]
    if not id_pairs:
        raise StageError("no usable pairs after filtering; nothing to distill into")
    per_epoch = cfg.surrogate_steps_per_epoch or max(
        1, (len(id_pairs) + cfg.surrogate_batch - 1) // cfg.surrogate_batch)
    scfg = SurrogateTrainConfig(
        steps=cfg.surrogate_epochs * per_epoch, batch_size=cfg.surrogate_batch,
        lr=cfg.surrogate_lr, beta1=cfg.surrogate_beta1, beta2=cfg.surrogate_beta2,
        warmup_steps=cfg.warmup, seed=stage_seed(cfg.seed, "surrogate"),
        model=cfg.model_config(len(vocab)))
    model, history = train_surrogate(id_pairs, len(vocab), scfg)
    save_checkpoint(ws.path("surrogate.ckpt"), model.params,
                    meta={"model": vars(model.cfg)})
    atomic_write_text(ws.path("surrogate_loss.csv"),
                      "step,loss\n" + "".join(f"{i},{v:.6f}\n"
                                              for i, v in enumerate(history)))
    epochs = [float(np.mean(history[i * per_epoch:(i + 1) * per_epoch]))
              for i in range(cfg.surrogate_epochs)]
    atomic_write_text(ws.path("surrogate_epochs.csv"),
                      "epoch,mean_loss\n" + "".join(f"{i},{v:.6f}\n"
                                                    for i, v in enumerate(epochs)))
    plot_scalar_curve(history, ws.path("surrogate_loss.png"),
                      title="surrogate training loss")
    return [ws.path("surrogate.ckpt"), ws.path("surrogate_loss.csv"),
            ws.path("surrogate_epochs.csv"), ws.path("surrogate_loss.png")]


def _load_surrogate(ws: Workspace, prefer_finetuned: bool = True) -> SurrogateModel:
    name = "surrogate_ft.ckpt" if prefer_finetuned and ws.path("surrogate_ft.ckpt").exists() \
        else "surrogate.ckpt"
    params, meta, _ = load_checkpoint(ws.require(name, "train-surrogate"))
    return SurrogateModel(cfg=ModelConfig(**meta["model"]), params=params)


def run_finetune(cfg: PipelineConfig, ws: Workspace) -> list[Path]:
    if not cfg.finetune_labeled_path:
        raise StageError("finetune.labeled_path is required for the finetune stage")
    if not cfg.finetune_labeled_path.exists():
        raise MissingArtifactError(cfg.finetune_labeled_path, "labeled training pairs")
    from .corpus import tokenize, encode as encode_tokens
    model = _load_surrogate(ws, prefer_finetuned=False)
    _, vocab = _load_prepared(cfg, ws)
    labeled = []
    for s_text, r_text in _read_labeled(cfg.finetune_labeled_path):
        s = encode_tokens(tokenize(s_text, cfg.tokenizer), vocab)
        r = encode_tokens(tokenize(r_text, cfg.tokenizer), vocab)
        if s and r:
            labeled.append((s, r))
    fcfg = SurrogateTrainConfig(
        steps=cfg.finetune_steps, batch_size=cfg.finetune_batch,
        lr=cfg.finetune_lr, beta1=cfg.finetune_beta1, beta2=cfg.finetune_beta2,
        warmup_steps=0, seed=stage_seed(cfg.seed, "finetune"), model=model.cfg)
    model, history = finetune(model, labeled, fcfg)
    save_checkpoint(ws.path("surrogate_ft.ckpt"), model.params,
                    meta={"model": vars(model.cfg)})
    atomic_write_text(ws.path("finetune_loss.csv"),
                      "step,loss\n" + "".join(f"{i},{v:.6f}\n"
                                              for i, v in enumerate(history)))
    return [ws.path("surrogate_ft.ckpt"), ws.path("finetune_loss.csv")]


def run_paraphrase(cfg: PipelineConfig, ws: Workspace) -> list[Path]:
    if not cfg.paraphrase_input:
        raise StageError("paraphrase.input is required for the paraphrase stage")
    if not cfg.paraphrase_input.exists():
        raise MissingArtifactError(cfg.paraphrase_input, "paraphrase input file")
    model = _load_surrogate(ws)
    _, vocab = _load_prepared(cfg, ws)
    lines = [ln.strip() for ln in open(cfg.paraphrase_input, encoding="utf-8")
             if ln.strip()]
    outs = [paraphrase(model, vocab, ln, cfg.beam, cfg.tokenizer) for ln in lines]
    atomic_write_text(ws.path("paraphrases.txt"), "".join(o + "\n" for o in outs))
    return [ws.path("paraphrases.txt")]


def run_eval(cfg: PipelineConfig, ws: Workspace) -> list[Path]:
    if not cfg.eval_labeled_path:
        raise StageError("metrics.labeled_path is required for the eval stage")
    if not cfg.eval_labeled_path.exists():
        raise MissingArtifactError(cfg.eval_labeled_path, "labeled eval set")
    from .corpus import tokenize
    model = _load_surrogate(ws)
    _, vocab = _load_prepared(cfg, ws)
    triples = []
    for s_text, r_text in _read_labeled(cfg.eval_labeled_path):
        s_toks = tokenize(s_text, cfg.tokenizer)
        r_toks = tokenize(r_text, cfg.tokenizer)
        if not s_toks or not r_toks:
            continue
        c_text = paraphrase(model, vocab, s_text, cfg.beam, cfg.tokenizer)
        c_toks = c_text.split() or ["<empty>"]
        triples.append(EvalTriple(source=s_toks, reference=r_toks, candidate=c_toks))
    report = evaluate(triples, cfg.metric)
    atomic_write_text(ws.path("eval_report.json"), json.dumps({
        "bleu": report.bleu, "ibleu": report.ibleu,
        "rouge1": report.rouge1, "rouge2": report.rouge2,
        "sentences": len(triples),
    }, sort_keys=True, indent=2) + "\n")
    buf = io.StringIO()
    buf.write("index,bleu,ibleu,rouge1,rouge2\n")
    for i, row in enumerate(report.per_sentence):
        buf.write(f"{i},{row['bleu']:.6f},{row['ibleu']:.6f},"
                  f"{row['rouge1']:.6f},{row['rouge2']:.6f}\n")
    atomic_write_text(ws.path("eval_per_sentence.csv"), buf.getvalue())
    plot_score_distribution(
        {"bleu": [r["bleu"] for r in report.per_sentence],
         "ibleu": [r["ibleu"] for r in report.per_sentence]},
        ws.path("eval_scores.png"))
    return [ws.path("eval_report.json"), ws.path("eval_per_sentence.csv"),
            ws.path("eval_scores.png")]


PIPELINE_SEQUENCE = ("cluster", "pair", "train-umt", "distill", "filter",
                     "train-surrogate", "eval")


def run_stage(stage: str, cfg: PipelineConfig, axis: str | None = None) -> list[Path]:
    """Dispatch one stage, update the manifest; returns written artifacts."""
    ws = Workspace(cfg.out_dir)
    runners = {
        "cluster": run_cluster,
        "review-report": run_review_report,
        "pair": run_pair,
        "train-umt": run_train_umt,
        "distill": run_distill,
        "filter": run_filter,
        "train-surrogate": run_train_surrogate,
        "finetune": run_finetune,
        "paraphrase": run_paraphrase,
        "eval": run_eval,
    }
    start = time.perf_counter()
    if stage == "ablate":
        outputs = run_ablate(cfg, ws, axis)
    elif stage in runners:
        outputs = runners[stage](cfg, ws)
    else:
        raise StageError(f"unknown stage {stage!r}; expected one of {STAGES}")
    elapsed = time.perf_counter() - start
    inputs = [cfg.corpus_path] if cfg.corpus_path.exists() else []
    Manifest(ws.root).record_stage(stage, snapshot(cfg), inputs, outputs, elapsed)
    return outputs


# --- ablation harness --------------------------------------------------------

def _axis_values(cfg: PipelineConfig, axis: str):
    values = {
        "corpus-size": cfg.ablate_corpus_sizes,
        "topic-count": cfg.ablate_topic_counts,
        "pairing-strategy": cfg.ablate_pairing_strategies,
        "clustering-method": cfg.ablate_clustering_methods,
    }[axis]
    if not values:
        raise StageError(f"no values configured for ablation axis {axis!r} "
                         f"(set them in the [ablate] section)")
    return values


def _derived_config(cfg: PipelineConfig, axis: str, value, sub_dir: Path) -> PipelineConfig:
    derived = replace(cfg, out_dir=sub_dir)
    if axis == "corpus-size":
        lines = [ln for ln in open(cfg.corpus_path, encoding="utf-8") if ln.strip()]
        trimmed = sub_dir / "corpus.txt"
        sub_dir.mkdir(parents=True, exist_ok=True)
        atomic_write_text(trimmed, "".join(lines[: int(value)]))
        derived = replace(derived, corpus_path=trimmed)
    elif axis == "topic-count":
        derived = replace(derived, k=int(value))
    elif axis == "pairing-strategy":
        derived = replace(derived, strategy=str(value))
    elif axis == "clustering-method":
        derived = replace(derived, clustering_kind=str(value))
    return derived


def run_ablate(cfg: PipelineConfig, ws: Workspace, axis: str | None) -> list[Path]:
    """Rerun the pipeline per axis value; emit an (axis value, iBLEU) table."""
    if axis not in ABLATION_AXES:
        raise StageError(f"ablate requires --axis, one of {ABLATION_AXES}")
    values = _axis_values(cfg, axis)
    rows = []
    for value in values:
        sub = ws.path(f"ablate_{axis}") / str(value)
        sub.mkdir(parents=True, exist_ok=True)
        derived = _derived_config(cfg, axis, value, sub)
        for stage in PIPELINE_SEQUENCE:
            run_stage(stage, derived)
        report = json.load(open(sub / "eval_report.json", encoding="utf-8"))
        rows.append((value, report["ibleu"]))
    buf = io.StringIO()
    buf.write(f"{axis}\tiBLEU\n")
    for value, score in rows:
        buf.write(f"{value}\t{score:.4f}\n")
    table = ws.path(f"ablate_{axis}.tsv")
    atomic_write_text(table, buf.getvalue())
    png = ws.path(f"ablate_{axis}.png")
    plot_score_bars([str(v) for v, _ in rows], [s for _, s in rows], png,
                    title=f"ablation: {axis}")
    return [table, png]
