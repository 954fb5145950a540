"""BLEU, iBLEU and ROUGE-N against hand-checked and independently computed
reference values."""

import math

import numpy as np
import pytest

from paraforge.metrics import (EvalTriple, MetricConfig, MetricError, bleu,
                               corpus_bleu, evaluate, ibleu, rouge_n)

CFG2 = MetricConfig(max_order=2)


def test_bleu_perfect_match_is_100():
    assert bleu(["a", "b", "c"], [["a", "b", "c"]], CFG2) == pytest.approx(100.0)


def test_bleu_no_overlap_is_0():
    assert bleu(["x", "y"], [["a", "b"]], CFG2) == pytest.approx(0.0)


def test_bleu_clipping_example():
    # "the cat the cat" vs "the cat sat": unigram 2/4 clipped, bigram 1/3,
    # no brevity penalty since the candidate is the longer side
    got = bleu(["the", "cat", "the", "cat"], [["the", "cat", "sat"]], CFG2)
    expected = 100.0 * math.exp(0.5 * (math.log(2 / 4) + math.log(1 / 3)))
    assert got == pytest.approx(expected, abs=1e-9)
    assert got == pytest.approx(40.8248290463863, abs=1e-6)


def test_bleu_brevity_penalty_only_when_short():
    long_c = bleu(["a", "b", "c", "d"], [["a", "b", "c"]], CFG2)
    short_c = bleu(["a", "b"], [["a", "b", "c"]], CFG2)
    # the long candidate pays no brevity penalty
    assert long_c > 0
    assert short_c < 100.0


def test_bleu_multiple_references_takes_best_clip():
    c = ["a", "b"]
    assert bleu(c, [["x", "y"], ["a", "b"]], CFG2) == pytest.approx(100.0)


def test_bleu_smoothing_add_one_on_zero():
    smoothed = MetricConfig(max_order=2, smoothing="add-one-on-zero")
    c, r = ["a", "x"], [["a", "b"]]
    assert bleu(c, r, CFG2) == pytest.approx(0.0)
    got = bleu(c, r, smoothed)
    expected = 100.0 * math.exp(0.5 * (math.log(1 / 2) + math.log(1 / 2)))
    assert got == pytest.approx(expected, abs=1e-9)


def test_bleu_range_and_symmetry_free_checks():
    rng = np.random.default_rng(0)
    for _ in range(50):
        c = [str(t) for t in rng.integers(0, 4, size=rng.integers(1, 6))]
        r = [str(t) for t in rng.integers(0, 4, size=rng.integers(1, 6))]
        score = bleu(c, [r], CFG2)
        assert 0.0 <= score <= 100.0


def test_corpus_bleu_pools_counts():
    pairs = [(["a", "b"], [["a", "b"]]), (["x", "y"], [["x", "z"]])]
    pooled = corpus_bleu(pairs, CFG2)
    mean = (bleu(*pairs[0], CFG2) + bleu(*pairs[1], CFG2)) / 2
    assert pooled != pytest.approx(mean)
    assert 0.0 <= pooled <= 100.0


def test_corpus_bleu_known_value():
    pairs = [(["the", "cat"], [["the", "cat", "sat"]]),
             (["a", "b", "c"], [["a", "b", "c"]])]
    # pooled: unigrams 5/5, bigrams 3/3, cand len 5, ref len 6
    expected = 100.0 * math.exp(1 - 6 / 5)
    assert corpus_bleu(pairs, CFG2) == pytest.approx(expected, abs=1e-9)


def test_ibleu_identity_candidate_examples():
    # candidate equals reference, differs fully from source
    assert ibleu(["p", "q"], ["a", "b"], ["a", "b"],
                 config=CFG2) == pytest.approx(80.0, abs=1e-6)
    # candidate equals source and reference at once
    assert ibleu(["m", "n"], ["m", "n"], ["m", "n"],
                 config=CFG2) == pytest.approx(60.0, abs=1e-6)


def test_ibleu_arithmetic():
    src, ref, cand = ["a", "b"], ["c", "d"], ["e", "f"]
    got = ibleu(src, ref, cand, alpha=0.8, config=CFG2)
    expected = 0.8 * bleu(cand, [ref], CFG2) - 0.2 * bleu(cand, [src], CFG2)
    assert got == pytest.approx(expected, abs=1e-12)


def test_ibleu_penalizes_copying():
    src = ["the", "cat", "sat"]
    ref = ["the", "cat", "sat"]
    copy = ibleu(src, ref, ["the", "cat", "sat"], config=CFG2)
    assert copy == pytest.approx(0.8 * 100.0 - 0.2 * 100.0, abs=1e-9)


def test_ibleu_alpha_validation():
    with pytest.raises(MetricError):
        ibleu(["a"], ["b"], ["c"], alpha=1.5)


def test_rouge_n_recall_and_f1_examples():
    c = ["the", "cat", "sat", "down"]
    r = ["the", "cat", "sat"]
    assert rouge_n(c, r, 2, mode="recall") == pytest.approx(1.0)
    assert rouge_n(c, r, 2, mode="f1") == pytest.approx(0.8, abs=1e-12)
    assert rouge_n(["x"], r, 1, mode="recall") == pytest.approx(0.0)
    assert rouge_n(r, r, 1, mode="recall") == pytest.approx(1.0)


def test_rouge_n_too_short_sequences_are_zero():
    assert rouge_n(["a"], ["b", "c"], 2) == pytest.approx(0.0)


def test_rouge_mode_validation():
    with pytest.raises(MetricError):
        MetricConfig(rouge_mode="precision")
    with pytest.raises(MetricError):
        rouge_n(["a"], ["a"], 0)


def test_eval_triple_validation():
    with pytest.raises(MetricError):
        EvalTriple(source=[], reference=["a"], candidate=["b"])


FIXTURE = [
    EvalTriple(["x", "y", "z"], ["the", "cat", "sat"], ["the", "cat", "the", "cat"]),
    EvalTriple(["p", "q", "r"], ["a", "b", "c"], ["a", "b", "c"]),
    EvalTriple(["m", "n"], ["m", "n"], ["m", "n"]),
    EvalTriple(["u", "v"], ["the", "cat", "sat"], ["the", "cat", "sat", "down"]),
    EvalTriple(["k", "l"], ["w", "x"], ["k", "l"]),
]

# frozen values computed with a standalone implementation of the same
# formulas (corpus-level BLEU pools n-gram counts; ROUGE-1 recall mean,
# ROUGE-2 f1 not reported here; per-sentence rows use sentence BLEU)
EXPECTED_REPORT = {
    "bleu": 63.245553203367585,
    "ibleu": 45.97764040917707,
    "rouge1": 0.7333333333333333,
    "rouge2": 0.7,
}
EXPECTED_ROWS = [
    (40.8248290463863, 32.65986323710904, 0.6666666666666666, 0.5),
    (100.0, 80.0, 1.0, 1.0),
    (100.0, 60.0, 1.0, 1.0),
    (70.71067811865474, 56.5685424949238, 1.0, 1.0),
    (0.0, -20.0, 0.0, 0.0),
]


def test_evaluate_fixture_report():
    report = evaluate(FIXTURE, CFG2)
    for key, want in EXPECTED_REPORT.items():
        assert getattr(report, key) == pytest.approx(want, abs=1e-6), key


def test_evaluate_fixture_per_sentence():
    report = evaluate(FIXTURE, CFG2)
    assert len(report.per_sentence) == 5
    for row, want in zip(report.per_sentence, EXPECTED_ROWS):
        got = (row["bleu"], row["ibleu"], row["rouge1"], row["rouge2"])
        assert got == pytest.approx(want, abs=1e-6)


def test_evaluate_empty_triples_errors():
    with pytest.raises(MetricError):
        evaluate([], CFG2)
