"""Pseudo-pair generation, routing and the ordered filter chain."""

import numpy as np
import pytest

import paraforge.pseudo
from paraforge.clustering import ClusterSet, EmbeddingTable, KMeansModel, TopicModel
from paraforge.corpus import SentenceRecord, Vocab
from paraforge.pseudo import (FilterSpec, ParaphrasePair, PseudoError,
                              filter_identity, filter_length_ratio,
                              generate_pairs, route, run_filters)


def make_pair(src, tgt, sid=0, cluster=0):
    return ParaphrasePair(source_id=sid, source=src, target=tgt,
                          cluster=cluster, model="umt_c0")


def test_identity_filter_examples():
    assert not filter_identity(make_pair(["a", "b"], ["a", "b"]))
    assert filter_identity(make_pair(["a", "b"], ["b", "a"]))
    assert filter_identity(make_pair(["a"], ["a", "a"]))


def test_length_ratio_filter_examples():
    src = ["w"] * 4
    assert not filter_length_ratio(make_pair(src, ["x"] * 9), max_ratio=2.0)
    assert filter_length_ratio(make_pair(src, ["x"] * 8), max_ratio=2.0)
    assert filter_length_ratio(make_pair(src, ["x"] * 2), max_ratio=2.0)


def fixture_pairs():
    """10 pairs: 5 clean, 3 identities, 2 over-long targets."""
    pairs = []
    for i in range(5):
        pairs.append(make_pair(["a", "b", "c"], ["c", "b", str(i)], sid=i))
    for i in range(5, 8):
        pairs.append(make_pair(["a", "b"], ["a", "b"], sid=i))
    for i in range(8, 10):
        pairs.append(make_pair(["a", "b"], ["x"] * 5, sid=i))
    return pairs


def test_filter_chain_on_fixture():
    kept, report = run_filters(fixture_pairs(), FilterSpec())
    assert len(kept) == 5
    assert report.input_count == 10
    assert report.output_count == 5
    assert report.drops == {"identity": 3, "length_ratio": 2}
    assert report.input_count == report.output_count + sum(report.drops.values())


def test_first_matching_filter_gets_the_credit():
    # identical and over-long at once: identity runs first and takes the drop
    pair = make_pair(["a"], ["a"])
    spec = FilterSpec(filters=[("length_ratio", {"max_ratio": 2.0}), ("identity", {})])
    _, report = run_filters([pair], spec)
    assert report.drops == {"length_ratio": 0, "identity": 1}


def test_empty_filter_spec_keeps_everything():
    pairs = fixture_pairs()
    kept, report = run_filters(pairs, FilterSpec(filters=[]))
    assert kept == pairs
    assert report.drops == {}


def test_filtering_is_idempotent():
    spec = FilterSpec()
    kept, _ = run_filters(fixture_pairs(), spec)
    again, report = run_filters(kept, spec)
    assert again == kept
    assert sum(report.drops.values()) == 0


def test_kept_set_invariant_under_filter_order():
    pairs = fixture_pairs()
    a, _ = run_filters(pairs, FilterSpec(filters=[("identity", {}),
                                                  ("length_ratio", {"max_ratio": 2.0})]))
    b, _ = run_filters(pairs, FilterSpec(filters=[("length_ratio", {"max_ratio": 2.0}),
                                                  ("identity", {})]))
    assert [p.source_id for p in a] == [p.source_id for p in b]


def test_accounting_identity_on_random_pairs():
    rng = np.random.default_rng(0)
    pairs = []
    for i in range(1000):
        src = [str(t) for t in rng.integers(0, 5, size=rng.integers(1, 8))]
        tgt = [str(t) for t in rng.integers(0, 5, size=rng.integers(1, 8))]
        pairs.append(make_pair(src, tgt, sid=i))
    kept, report = run_filters(pairs, FilterSpec())
    assert report.input_count == 1000
    assert report.output_count == len(kept)
    assert report.input_count == report.output_count + sum(report.drops.values())


def test_filter_spec_validation():
    with pytest.raises(PseudoError):
        FilterSpec(filters=[("identity", {}), ("identity", {})])
    with pytest.raises(PseudoError):
        FilterSpec(filters=[("profanity", {})])
    with pytest.raises(PseudoError):
        FilterSpec(filters=[("length_ratio", {"max_ratio": 0.0})])


def test_pair_json_round_trip():
    pair = make_pair(["a", "b"], ["b", "a"], sid=3, cluster=2)
    again = ParaphrasePair.from_json(pair.to_json())
    assert again == pair


def test_report_json_fields():
    _, report = run_filters(fixture_pairs(), FilterSpec())
    import json
    obj = json.loads(report.to_json())
    assert obj == {"input": 10, "output": 5,
                   "drops": {"identity": 3, "length_ratio": 2}}


def test_route_delegates_by_model_type():
    phi = np.array([[0.9, 0.1], [0.1, 0.9]])
    topic = TopicModel(K=2, phi=phi, assignments={}, alpha=0.1, beta=0.01,
                       sweep_count=1)
    assert route(topic, [0, 0], active=[0, 1]) == 0
    assert route(topic, [0, 0], active=[1]) == 1

    km = KMeansModel(K=2, centers=np.array([[0.0, 0.0], [10.0, 0.0]]),
                     assignments={})
    emb = EmbeddingTable(dimension=2, vectors={7: np.array([9.0, 0.0])})
    assert route(km, [], active=[0, 1], sentence_id=7, embeddings=emb) == 1
    with pytest.raises(PseudoError):
        route(km, [], active=[0, 1], sentence_id=8, embeddings=emb)
    with pytest.raises(TypeError):
        route(object(), [0], active=[0, 1])


def test_generate_pairs_with_stub_translator(monkeypatch):
    vocab = Vocab(["a", "b", "c"])
    records = [
        SentenceRecord(id=0, text="a a", tokens=["a", "a"],
                       ids=[vocab.index("a")] * 2),
        SentenceRecord(id=1, text="c", tokens=["c"], ids=[vocab.index("c")]),
        SentenceRecord(id=2, text="", tokens=[], ids=[]),
    ]
    # columns line up with the 7-entry vocab (4 specials + a, b, c);
    # cluster 0 favors "a", cluster 1 favors "c"
    topic = TopicModel(K=2, phi=np.array([
        [0.02, 0.02, 0.02, 0.02, 0.80, 0.06, 0.06],
        [0.02, 0.02, 0.02, 0.02, 0.06, 0.06, 0.80]]),
        assignments={}, alpha=0.1, beta=0.01, sweep_count=1)
    clusters = ClusterSet.from_assignments("lda", 2, {0: 0, 1: 1})

    def identity_translate(model, ids, direction=(0, 1), max_len=None):
        return list(ids)

    monkeypatch.setattr(paraforge.pseudo, "translate", identity_translate)
    pairs = generate_pairs(records, vocab, topic, clusters,
                           models={0: "m0", 1: "m1"})
    assert len(pairs) == 2       # the empty record is skipped
    assert pairs[0].source == ["a", "a"]
    assert pairs[0].target == ["a", "a"]
    assert pairs[0].cluster == 0
    assert pairs[1].cluster == 1
    assert pairs[1].model == "umt_c1"


def test_generate_pairs_requires_model_for_routed_cluster(monkeypatch):
    vocab = Vocab(["a"])
    records = [SentenceRecord(id=0, text="a", tokens=["a"], ids=[4])]
    topic = TopicModel(K=2, phi=np.stack([
        np.full(5, 0.2), np.full(5, 0.2)]), assignments={},
        alpha=0.1, beta=0.01, sweep_count=1)
    clusters = ClusterSet.from_assignments("lda", 2, {0: 0})
    monkeypatch.setattr(paraforge.pseudo, "translate",
                        lambda model, ids, direction=(0, 1), max_len=None: list(ids))
    with pytest.raises(PseudoError):
        generate_pairs(records, vocab, topic, clusters, models={1: "m1"})


def test_discarded_clusters_never_receive_sentences(monkeypatch):
    vocab = Vocab(["a", "b"])
    # sentence clearly belongs to cluster 0, but 0 was discarded in review
    records = [SentenceRecord(id=0, text="a a", tokens=["a", "a"],
                              ids=[vocab.index("a")] * 2)]
    topic = TopicModel(K=2, phi=np.stack([
        np.array([0.05, 0.05, 0.05, 0.05, 0.7, 0.1]),
        np.array([0.05, 0.05, 0.05, 0.05, 0.1, 0.7])]),
        assignments={}, alpha=0.1, beta=0.01, sweep_count=1)
    clusters = ClusterSet.from_assignments("lda", 2, {0: 0})
    clusters.active = [1]
    monkeypatch.setattr(paraforge.pseudo, "translate",
                        lambda model, ids, direction=(0, 1), max_len=None: list(ids))
    pairs = generate_pairs(records, vocab, topic, clusters, models={1: "m1"})
    assert pairs[0].cluster == 1
