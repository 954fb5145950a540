"""BLEU, iBLEU and ROUGE-N over token sequences, plus corpus-level reports.

BLEU is the geometric mean of clipped n-gram precisions times the brevity
penalty, on a 0-100 scale. iBLEU rewards similarity to the reference while
penalizing similarity to the source: alpha*BLEU(c, r) - (1-alpha)*BLEU(c, s).
ROUGE-N defaults to recall, with F1 selectable.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field


class MetricError(Exception):
    pass


@dataclass(frozen=True)
class MetricConfig:
    max_order: int = 4
    smoothing: str = "none"            # "none" | "add-one-on-zero"
    alpha: float = 0.8                 # iBLEU trade-off
    rouge_mode: str = "recall"         # "recall" | "f1"

    def __post_init__(self):
        if self.max_order < 1:
            raise MetricError("max n-gram order must be >= 1")
        if not (0.0 <= self.alpha <= 1.0):
            raise MetricError("alpha must lie in [0, 1]")
        if self.smoothing not in ("none", "add-one-on-zero"):
            raise MetricError(f"unknown smoothing mode {self.smoothing!r}")
        if self.rouge_mode not in ("recall", "f1"):
            raise MetricError(f"unknown ROUGE mode {self.rouge_mode!r}")


@dataclass
class EvalTriple:
    source: list[str]
    reference: list[str]
    candidate: list[str]

    def __post_init__(self):
        if not (self.source and self.reference and self.candidate):
            raise MetricError("source, reference and candidate must be non-empty")


@dataclass
class EvalReport:
    bleu: float
    ibleu: float
    rouge1: float
    rouge2: float
    per_sentence: list[dict] = field(default_factory=list)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _clipped_counts(candidate: list[str], references: list[list[str]], n: int):
    cand = _ngrams(candidate, n)
    if not cand:
        return 0, 0
    best = Counter()
    for ref in references:
        for g, c in _ngrams(ref, n).items():
            best[g] = max(best[g], c)
    matched = sum(min(c, best[g]) for g, c in cand.items())
    return matched, sum(cand.values())


def _combine(matched: list[int], total: list[int], cand_len: int, ref_len: int,
             smoothing: str) -> float:
    log_sum = 0.0
    used = 0
    for m, t in zip(matched, total):
        if t == 0:
            continue        # candidate shorter than n: skip the order
        used += 1
        if m == 0:
            if smoothing == "add-one-on-zero":
                log_sum += math.log((m + 1) / (t + 1))
            else:
                return 0.0
        else:
            log_sum += math.log(m / t)
    if used == 0:
        return 0.0
    bp = 1.0 if cand_len > ref_len else math.exp(1 - ref_len / max(1, cand_len))
    return 100.0 * bp * math.exp(log_sum / used)


def _closest_ref_len(cand_len: int, references: list[list[str]]) -> int:
    # closest reference length, ties toward the shorter reference
    return min((abs(len(r) - cand_len), len(r)) for r in references)[1]


def bleu(candidate: list[str], references: list[list[str]],
         config: MetricConfig | None = None) -> float:
    """Sentence-level BLEU in [0, 100]."""
    config = config or MetricConfig()
    if not candidate or not references or any(not r for r in references):
        raise MetricError("candidate and references must be non-empty")
    matched, total = [], []
    for n in range(1, config.max_order + 1):
        m, t = _clipped_counts(candidate, references, n)
        matched.append(m)
        total.append(t)
    return _combine(matched, total, len(candidate),
                    _closest_ref_len(len(candidate), references), config.smoothing)


def corpus_bleu(pairs: list[tuple[list[str], list[list[str]]]],
                config: MetricConfig | None = None) -> float:
    """Corpus BLEU: n-gram counts pooled over all (candidate, references) pairs."""
    config = config or MetricConfig()
    matched = [0] * config.max_order
    total = [0] * config.max_order
    cand_len = ref_len = 0
    for candidate, references in pairs:
        for n in range(1, config.max_order + 1):
            m, t = _clipped_counts(candidate, references, n)
            matched[n - 1] += m
            total[n - 1] += t
        cand_len += len(candidate)
        ref_len += _closest_ref_len(len(candidate), references)
    return _combine(matched, total, cand_len, ref_len, config.smoothing)


def ibleu(source: list[str], reference: list[str], candidate: list[str],
          alpha: float = 0.8, config: MetricConfig | None = None) -> float:
    config = config or MetricConfig(alpha=alpha)
    return (alpha * bleu(candidate, [reference], config)
            - (1 - alpha) * bleu(candidate, [source], config))


def rouge_n(candidate: list[str], reference: list[str], n: int,
            mode: str = "recall") -> float:
    """Clipped n-gram recall (or F1) of the candidate against one reference."""
    if n < 1:
        raise MetricError("n must be >= 1")
    ref = _ngrams(reference, n)
    cand = _ngrams(candidate, n)
    ref_total = sum(ref.values())
    if ref_total == 0:
        return 0.0          # reference shorter than n tokens
    matched = sum(min(c, ref[g]) for g, c in cand.items())
    recall = matched / ref_total
    if mode == "recall":
        return recall
    cand_total = sum(cand.values())
    precision = matched / cand_total if cand_total else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def evaluate(triples: list[EvalTriple], config: MetricConfig | None = None) -> EvalReport:
    """Corpus BLEU/iBLEU plus mean per-sentence ROUGE-1/2."""
    config = config or MetricConfig()
    if not triples:
        raise MetricError("no triples to evaluate")
    bleu_cr = corpus_bleu([(t.candidate, [t.reference]) for t in triples], config)
    bleu_cs = corpus_bleu([(t.candidate, [t.source]) for t in triples], config)
    corpus_ibleu = config.alpha * bleu_cr - (1 - config.alpha) * bleu_cs
    per_sentence = []
    r1_sum = r2_sum = 0.0
    for t in triples:
        r1 = rouge_n(t.candidate, t.reference, 1, config.rouge_mode)
        r2 = rouge_n(t.candidate, t.reference, 2, config.rouge_mode)
        r1_sum += r1
        r2_sum += r2
        per_sentence.append({
            "bleu": bleu(t.candidate, [t.reference], config),
            "ibleu": ibleu(t.source, t.reference, t.candidate, config.alpha, config),
            "rouge1": r1,
            "rouge2": r2,
        })
    n = len(triples)
    return EvalReport(bleu=bleu_cr, ibleu=corpus_ibleu,
                      rouge1=r1_sum / n, rouge2=r2_sum / n,
                      per_sentence=per_sentence)
