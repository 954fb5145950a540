"""Deterministic synthetic corpora for tests and the end-to-end smoke runs:
planted-topic corpora with known labels, two-dialect corpora with a hidden
alignment, and Gaussian embedding blobs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clustering import EmbeddingTable


@dataclass(frozen=True)
class PlantedCorpusSpec:
    topics: int = 3
    vocab_per_topic: int = 30
    sentences_per_topic: int = 200
    min_len: int = 4
    max_len: int = 9
    marker_count: int = 6        # per-topic marker tokens used by dialect corpora
    seed: int = 0


def _topic_vocab(spec: PlantedCorpusSpec, topic: int) -> list[str]:
    return [f"t{topic}w{j:02d}" for j in range(spec.vocab_per_topic)]


def gen_topic_corpus(spec: PlantedCorpusSpec):
    """Sentences drawn from disjoint per-topic vocabularies.

    Returns (lines, labels) where labels[i] is the planted topic of line i.
    Sentences are interleaved across topics so ids do not encode the label
    ordering trivially.
    """
    rng = np.random.default_rng(spec.seed)
    vocabs = [_topic_vocab(spec, k) for k in range(spec.topics)]
    entries = []
    for k in range(spec.topics):
        for _ in range(spec.sentences_per_topic):
            n = rng.integers(spec.min_len, spec.max_len + 1)
            words = rng.choice(vocabs[k], size=n)
            entries.append((k, " ".join(words)))
    order = rng.permutation(len(entries))
    labels = [entries[i][0] for i in order]
    lines = [entries[i][1] for i in order]
    return lines, labels


@dataclass(frozen=True)
class DialectSpec:
    content_vocab: int = 40      # shared across both dialects
    markers: int = 8             # per-dialect exclusive tokens
    sentences: int = 500
    min_len: int = 4
    max_len: int = 9
    markers_per_sentence: int = 2
    seed: int = 0


def gen_dialect_corpus(spec: DialectSpec):
    """Two clusters expressing the same meanings in different surface dialects.

    Dialect B sentences are dialect A sentences with marker tokens substituted
    through a fixed dictionary (da<i> -> db<i>); content tokens are identical.
    Returns (lines_a, lines_b) with row i of each file aligned.
    """
    rng = np.random.default_rng(spec.seed)
    content = [f"c{j:02d}" for j in range(spec.content_vocab)]
    lines_a, lines_b = [], []
    for _ in range(spec.sentences):
        n = int(rng.integers(spec.min_len, spec.max_len + 1))
        words = list(rng.choice(content, size=n))
        positions = rng.choice(n, size=min(spec.markers_per_sentence, n), replace=False)
        marker_ids = rng.integers(0, spec.markers, size=len(positions))
        wa, wb = list(words), list(words)
        for pos, mid in zip(positions, marker_ids):
            wa[pos] = f"da{mid}"
            wb[pos] = f"db{mid}"
        lines_a.append(" ".join(wa))
        lines_b.append(" ".join(wb))
    return lines_a, lines_b


def gen_blob_embeddings(k: int = 3, per_cluster: int = 50, dim: int = 4,
                        separation: float = 20.0, spread: float = 1.0,
                        seed: int = 0):
    """Well-separated Gaussian blobs. Returns (EmbeddingTable, labels)."""
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((k, dim)) * separation
    vectors = {}
    labels = {}
    sid = 0
    for c in range(k):
        for _ in range(per_cluster):
            vectors[sid] = centers[c] + rng.standard_normal(dim) * spread
            labels[sid] = c
            sid += 1
    return EmbeddingTable(dimension=dim, vectors=vectors), labels


def cluster_purity(assignments: dict[int, int], truth: dict[int, int]) -> float:
    """Fraction of sentences in the majority-truth class of their cluster."""
    by_cluster: dict[int, list[int]] = {}
    for sid, c in assignments.items():
        by_cluster.setdefault(c, []).append(truth[sid])
    correct = 0
    for members in by_cluster.values():
        counts: dict[int, int] = {}
        for t in members:
            counts[t] = counts.get(t, 0) + 1
        correct += max(counts.values())
    return correct / len(assignments)


def token_accuracy(produced: list[list[str]], expected: list[list[str]]) -> float:
    """Position-wise token match rate, averaged over sentences."""
    accs = []
    for p, e in zip(produced, expected):
        if not e:
            continue
        hits = sum(1 for a, b in zip(p, e) if a == b)
        accs.append(hits / max(len(p), len(e)))
    return float(np.mean(accs)) if accs else 0.0


@dataclass(frozen=True)
class PipelineFixtureSpec:
    """Combined corpus for end-to-end runs: planted topics plus a small labeled
    split whose references swap designated marker tokens by a fixed dictionary."""
    topics: int = 4
    sentences_per_topic: int = 500
    labeled_pairs: int = 100
    seed: int = 0
    corpus: PlantedCorpusSpec = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "corpus", PlantedCorpusSpec(
            topics=self.topics, sentences_per_topic=self.sentences_per_topic,
            seed=self.seed))


def gen_pipeline_fixture(spec: PipelineFixtureSpec):
    """Returns (corpus lines, labels, labeled (source, reference) pairs).

    References substitute each topic token with its in-topic neighbor
    (t<k>w<j> -> t<k>w<j+1 mod V>), giving a deterministic paraphrase-like
    target for eval/ablation plumbing.
    """
    lines, labels = gen_topic_corpus(spec.corpus)
    rng = np.random.default_rng(spec.seed + 1)
    idx = rng.choice(len(lines), size=min(spec.labeled_pairs, len(lines)), replace=False)
    v = spec.corpus.vocab_per_topic
    pairs = []
    for i in idx:
        src = lines[i].split()
        ref = []
        for t in src:
            k, j = t[1:].split("w")
            ref.append(f"t{k}w{(int(j) + 1) % v:02d}")
        pairs.append((" ".join(src), " ".join(ref)))
    return lines, labels, pairs
