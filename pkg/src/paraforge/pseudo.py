"""Pseudo-pair generation and filtering: route every sentence to its cluster's
translation model, pair it with the model's output, then drop pairs with
undesired properties (identical source/target, over-long targets).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .clustering import ClusterSet, EmbeddingTable, KMeansModel, TopicModel, kmeans_assign, lda_assign
from .umt import UmtModel, translate


class PseudoError(Exception):
    pass


@dataclass
class ParaphrasePair:
    source_id: int
    source: list[str]
    target: list[str]
    cluster: int
    model: str

    def to_json(self) -> str:
        return json.dumps({
            "id": self.source_id,
            "src": " ".join(self.source),
            "tgt": " ".join(self.target),
            "cluster": self.cluster,
            "model": self.model,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "ParaphrasePair":
        obj = json.loads(line)
        return cls(source_id=obj["id"], source=obj["src"].split(),
                   target=obj["tgt"].split(), cluster=obj["cluster"],
                   model=obj["model"])


@dataclass
class FilterSpec:
    # ordered (name, params); first rejecting filter gets the drop credit
    filters: list[tuple[str, dict]] = field(default_factory=lambda: [
        ("identity", {}),
        ("length_ratio", {"max_ratio": 2.0}),
    ])

    def __post_init__(self):
        names = [n for n, _ in self.filters]
        if len(set(names)) != len(names):
            raise PseudoError("filter names must be unique")
        for name, params in self.filters:
            if name not in FILTERS:
                raise PseudoError(f"unknown filter predicate {name!r}")
            if name == "length_ratio" and params.get("max_ratio", 2.0) <= 0:
                raise PseudoError("max_ratio must be > 0")


@dataclass
class FilterReport:
    input_count: int
    drops: dict[str, int]
    output_count: int

    def to_json(self) -> str:
        return json.dumps({
            "input": self.input_count,
            "drops": self.drops,
            "output": self.output_count,
        }, sort_keys=True)


def route(clustering, sentence_ids: list[int], active: list[int],
          sentence_id: int | None = None,
          embeddings: EmbeddingTable | None = None) -> int:
    """Cluster of a sentence among the active set (post-review)."""
    if isinstance(clustering, TopicModel):
        return lda_assign(clustering, sentence_ids, active=active)
    if isinstance(clustering, KMeansModel):
        if embeddings is None or sentence_id not in embeddings.vectors:
            raise PseudoError(f"no embedding available for sentence {sentence_id}")
        return kmeans_assign(clustering, embeddings.vectors[sentence_id], active=active)
    raise TypeError(f"unsupported clustering model {type(clustering).__name__}")


def filter_identity(pair: ParaphrasePair, **_) -> bool:
    """keep=True unless source and target token sequences are exactly equal."""
    return pair.source != pair.target


def filter_length_ratio(pair: ParaphrasePair, max_ratio: float = 2.0) -> bool:
    """keep=True unless the target is strictly more than max_ratio times longer."""
    return len(pair.target) <= max_ratio * len(pair.source)


FILTERS = {
    "identity": filter_identity,
    "length_ratio": filter_length_ratio,
}


def run_filters(pairs: list[ParaphrasePair], spec: FilterSpec):
    """Apply predicates in order; a pair is dropped by the first one rejecting it.

    Returns (kept pairs, FilterReport); input = output + sum(drops) always.
    """
    drops = {name: 0 for name, _ in spec.filters}
    kept = []
    for pair in pairs:
        for name, params in spec.filters:
            if not FILTERS[name](pair, **params):
                drops[name] += 1
                break
        else:
            kept.append(pair)
    return kept, FilterReport(input_count=len(pairs), drops=drops,
                              output_count=len(kept))


def generate_pairs(records, vocab, clustering, clusters: ClusterSet,
                   models: dict[int, UmtModel],
                   embeddings: EmbeddingTable | None = None,
                   model_names: dict[int, str] | None = None) -> list[ParaphrasePair]:
    """One pseudo pair per routable sentence, in corpus order.

    The routed cluster picks which translation model produces the target.
    """
    from .corpus import decode as decode_ids

    out = []
    for rec in records:
        if not rec.ids:
            continue
        cluster = route(clustering, rec.ids, clusters.active,
                        sentence_id=rec.id, embeddings=embeddings)
        if cluster not in models:
            raise PseudoError(f"no trained model for cluster {cluster}")
        model = models[cluster]
        target_ids = translate(model, rec.ids)
        name = (model_names or {}).get(cluster, f"umt_c{cluster}")
        out.append(ParaphrasePair(
            source_id=rec.id,
            source=decode_ids(rec.ids, vocab),
            target=decode_ids(target_ids, vocab),
            cluster=cluster,
            model=name,
        ))
    return out
