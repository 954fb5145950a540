"""Corpus splitting: LDA via collapsed Gibbs sampling, hard K-means over
sentence embeddings, cluster distances, and human review of clusters.

LDA treats each sentence as one document. The distance between two LDA
clusters is the symmetrized KL divergence between their smoothed vocabulary
distributions; for K-means it is the L2 distance between centers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .corpus import SentenceRecord, Vocab


class ClusteringError(Exception):
    pass


@dataclass
class TopicModel:
    K: int
    phi: np.ndarray                    # (K, V) rows sum to 1, all entries > 0
    assignments: dict[int, int]        # sentence id -> cluster id
    alpha: float
    beta: float
    sweep_count: int

    def __post_init__(self):
        rows = self.phi.sum(axis=1)
        if not np.allclose(rows, 1.0, atol=1e-9):
            raise ClusteringError("phi rows must sum to 1")
        if not (self.phi > 0).all():
            raise ClusteringError("phi must be strictly positive after smoothing")


@dataclass
class KMeansModel:
    K: int
    centers: np.ndarray                # (K, d)
    assignments: dict[int, int]
    sse_history: list[float] = field(default_factory=list)


@dataclass
class EmbeddingTable:
    dimension: int
    vectors: dict[int, np.ndarray]     # sentence id -> (d,)

    def matrix(self, ids) -> np.ndarray:
        return np.stack([self.vectors[i] for i in ids])


@dataclass
class ClusterSet:
    kind: str                          # "lda" | "kmeans"
    K: int
    active: list[int]
    members: dict[int, list[int]]      # cluster id -> sentence ids

    @classmethod
    def from_assignments(cls, kind: str, K: int, assignments: dict[int, int]) -> "ClusterSet":
        members: dict[int, list[int]] = {c: [] for c in range(K)}
        for sid in sorted(assignments):
            members[assignments[sid]].append(sid)
        return cls(kind=kind, K=K, active=list(range(K)), members=members)


@dataclass
class ReviewDecisions:
    decisions: list[tuple[int, str, str]]   # (cluster id, keep|discard, note)


def lda_fit(records: list[SentenceRecord], vocab: Vocab, K: int, sweeps: int = 5,
            alpha: float = 0.1, beta: float = 0.01, seed: int = 0) -> TopicModel:
    """Collapsed Gibbs sampling over token-topic assignments, one sentence = one doc.

    After the final sweep phi is estimated with beta smoothing and every sentence
    is assigned to the topic most likely to have generated it.
    """
    if K < 2:
        raise ClusteringError("K must be >= 2")
    if sweeps < 1:
        raise ClusteringError("sweeps must be >= 1")
    docs = [r for r in records if r.ids]
    if len(docs) < K:
        raise ClusteringError(f"corpus has {len(docs)} usable sentences, need >= K={K}")
    V = len(vocab)
    rng = np.random.default_rng(seed)

    n_dk = np.zeros((len(docs), K), dtype=np.int64)
    n_kv = np.zeros((K, V), dtype=np.int64)
    n_k = np.zeros(K, dtype=np.int64)
    z = []
    for d, rec in enumerate(docs):
        zs = rng.integers(0, K, size=len(rec.ids))
        z.append(zs)
        for w, k in zip(rec.ids, zs):
            n_dk[d, k] += 1
            n_kv[k, w] += 1
            n_k[k] += 1

    for _ in range(sweeps):
        for d, rec in enumerate(docs):
            zs = z[d]
            for i, w in enumerate(rec.ids):
                k_old = zs[i]
                n_dk[d, k_old] -= 1
                n_kv[k_old, w] -= 1
                n_k[k_old] -= 1
                p = (n_dk[d] + alpha) * (n_kv[:, w] + beta) / (n_k + V * beta)
                p /= p.sum()
                k_new = rng.choice(K, p=p)
                zs[i] = k_new
                n_dk[d, k_new] += 1
                n_kv[k_new, w] += 1
                n_k[k_new] += 1

    phi = (n_kv + beta) / (n_k + V * beta)[:, None]
    model = TopicModel(K=K, phi=phi, assignments={}, alpha=alpha, beta=beta,
                       sweep_count=sweeps)
    model.assignments = {rec.id: lda_assign(model, rec.ids) for rec in docs}
    return model


def lda_assign(model: TopicModel, ids, active: list[int] | None = None) -> int:
    """argmax over (active) clusters of sum_w log p(w|c); ties -> lowest id."""
    if len(ids) == 0:
        raise ClusteringError("cannot assign an empty sentence")
    active = sorted(active) if active is not None else list(range(model.K))
    logphi = np.log(model.phi[active][:, ids])       # (|active|, len)
    scores = logphi.sum(axis=1)
    return active[int(np.argmax(scores))]


def kmeans_fit(table: EmbeddingTable, K: int, max_iter: int = 100,
               seed: int = 0) -> KMeansModel:
    """Hard K-means (Lloyd) under squared L2 with k-means++ seeding.

    Stops when assignments are unchanged or max_iter is reached; empty clusters
    keep their previous center so the SSE stays non-increasing.
    """
    ids = sorted(table.vectors)
    X = table.matrix(ids).astype(np.float64)
    n = X.shape[0]
    if K > n:
        raise ClusteringError(f"K={K} exceeds number of points {n}")
    rng = np.random.default_rng(seed)

    centers = np.empty((K, X.shape[1]))
    first = rng.integers(0, n)
    centers[0] = X[first]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for k in range(1, K):
        total = d2.sum()
        if total <= 0:
            centers[k] = X[rng.integers(0, n)]
        else:
            centers[k] = X[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((X - centers[k]) ** 2).sum(axis=1))

    labels = np.full(n, -1, dtype=np.int64)
    sse_history = []
    for _ in range(max_iter):
        dists = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(dists, axis=1)        # argmin takes lowest id on ties
        sse_history.append(float(dists[np.arange(n), new_labels].sum()))
        if (new_labels == labels).all():
            break
        labels = new_labels
        for k in range(K):
            mask = labels == k
            if mask.any():
                centers[k] = X[mask].mean(axis=0)
    assignments = {sid: int(lab) for sid, lab in zip(ids, labels)}
    return KMeansModel(K=K, centers=centers, assignments=assignments,
                       sse_history=sse_history)


def kmeans_assign(model: KMeansModel, embedding: np.ndarray,
                  active: list[int] | None = None) -> int:
    """Cluster whose center is closest in squared L2; ties -> lowest id."""
    if embedding.shape[-1] != model.centers.shape[1]:
        raise ClusteringError(
            f"embedding dimension {embedding.shape[-1]} != centers {model.centers.shape[1]}")
    active = sorted(active) if active is not None else list(range(model.K))
    d2 = ((model.centers[active] - embedding) ** 2).sum(axis=1)
    return active[int(np.argmin(d2))]


def _sym_kl(p: np.ndarray, q: np.ndarray) -> float:
    if (p <= 0).any() or (q <= 0).any():
        raise ClusteringError("distributions must be strictly positive (smoothed)")
    return float(np.sum(p * np.log(p / q)) + np.sum(q * np.log(q / p)))


def cluster_distance(model, m: int, n: int) -> float:
    """Symmetrized KL over vocab distributions (LDA) or center L2 (K-means)."""
    if m == n:
        return 0.0
    if isinstance(model, TopicModel):
        return _sym_kl(model.phi[m], model.phi[n])
    if isinstance(model, KMeansModel):
        return float(np.linalg.norm(model.centers[m] - model.centers[n]))
    raise TypeError(f"unsupported model type {type(model).__name__}")


def distance_matrix(model) -> np.ndarray:
    K = model.K
    D = np.zeros((K, K))
    for m in range(K):
        for n in range(m + 1, K):
            D[m, n] = D[n, m] = cluster_distance(model, m, n)
    return D


def apply_review(clusters: ClusterSet, decisions: ReviewDecisions) -> ClusterSet:
    """Drop discarded clusters from the active set; member lists are untouched."""
    discard = set()
    for cid, verdict, _ in decisions.decisions:
        if cid < 0 or cid >= clusters.K:
            raise ClusteringError(f"review references invalid cluster {cid}")
        if verdict not in ("keep", "discard"):
            raise ClusteringError(f"unknown review verdict {verdict!r}")
        if verdict == "discard":
            discard.add(cid)
    active = [c for c in clusters.active if c not in discard]
    if len(active) < 2:
        raise ClusteringError("review must keep at least 2 clusters")
    return ClusterSet(kind=clusters.kind, K=clusters.K, active=active,
                      members=clusters.members)


def top_words(model: TopicModel, vocab: Vocab, n: int = 20) -> dict[int, list[tuple[str, float]]]:
    """Per-cluster top-n tokens by p(v|c), for the human review report."""
    out = {}
    for k in range(model.K):
        order = np.argsort(-model.phi[k])[:n]
        out[k] = [(vocab.lookup(int(v)), float(model.phi[k, v])) for v in order]
    return out


# --- embedding ingestion -----------------------------------------------------

def load_embeddings(path) -> EmbeddingTable:
    """Read the `d=<int>` header then one `<id> <f1> ... <fd>` row per sentence."""
    with open(path, encoding="utf-8") as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines:
        raise ClusteringError(f"{path}: empty embedding file")
    head = lines[0]
    if not head.startswith("d="):
        raise ClusteringError(f"{path}: expected 'd=<int>' header, got {head!r}")
    d = int(head[2:])
    vectors: dict[int, np.ndarray] = {}
    for rowno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != d + 1:
            raise ClusteringError(
                f"{path}: row {rowno} has {len(parts) - 1} values, expected d={d}")
        sid = int(parts[0])
        vectors[sid] = np.array([float(x) for x in parts[1:]], dtype=np.float64)
    return EmbeddingTable(dimension=d, vectors=vectors)


def save_embeddings(table: EmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"d={table.dimension}\n")
        for sid in sorted(table.vectors):
            vals = " ".join(repr(float(x)) for x in table.vectors[sid])
            f.write(f"{sid} {vals}\n")


def hashed_embeddings(records: list[SentenceRecord], dimension: int = 16) -> EmbeddingTable:
    """Deterministic fallback embedder: per-token hash vectors, averaged.

    Stands in for external sentence embeddings so the K-means path runs with
    no model downloads; the hash seed is derived from the token bytes only.
    """
    cache: dict[str, np.ndarray] = {}

    def vec(token: str) -> np.ndarray:
        if token not in cache:
            h = hashlib.sha256(token.encode("utf-8")).digest()
            seed = int.from_bytes(h[:8], "little")
            cache[token] = np.random.default_rng(seed).standard_normal(dimension)
        return cache[token]

    vectors = {}
    for r in records:
        if r.tokens:
            vectors[r.id] = np.mean([vec(t) for t in r.tokens], axis=0)
        else:
            vectors[r.id] = np.zeros(dimension)
    return EmbeddingTable(dimension=dimension, vectors=vectors)
