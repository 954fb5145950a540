"""Target-cluster selection for each source cluster: distance-based strategies
and the supervised polynomial predictor mapping cluster distance to an
expected evaluation score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PairingError(Exception):
    pass


@dataclass
class PairingPlan:
    pairs: list[tuple[int, int, str]]      # (src cluster, tgt cluster, strategy)

    def __post_init__(self):
        srcs = [s for s, _, _ in self.pairs]
        if len(set(srcs)) != len(srcs):
            raise PairingError("each source cluster may appear only once")
        if any(s == t for s, t, _ in self.pairs):
            raise PairingError("src and tgt clusters must differ")

    def tgt_of(self, src: int) -> int:
        for s, t, _ in self.pairs:
            if s == src:
                return t
        raise KeyError(src)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for s, t, strat in self.pairs:
                f.write(f"{s}\t{t}\t{strat}\n")

    @classmethod
    def load(cls, path) -> "PairingPlan":
        pairs = []
        with open(path, encoding="utf-8") as f:
            for ln in f:
                ln = ln.strip()
                if not ln:
                    continue
                s, t, strat = ln.split("\t")
                pairs.append((int(s), int(t), strat))
        return cls(pairs)


@dataclass
class ScoreFunction:
    coeffs: np.ndarray          # ascending powers
    rss: float
    sample_count: int


STRATEGIES = ("random", "largest", "medium", "smallest")


def pair_clusters(active: list[int], matrix: np.ndarray, strategy: str,
                  seed: int = 0) -> PairingPlan:
    """One target per active source cluster; ties broken by lowest cluster id.

    medium picks the candidate at index floor((n-1)/2) of the ascending
    distance list over the n candidates.
    """
    if strategy not in STRATEGIES:
        raise PairingError(f"unknown strategy {strategy!r}")
    active = sorted(active)
    if len(active) < 2:
        raise PairingError("need at least 2 active clusters to pair")
    rng = np.random.default_rng(seed)
    pairs = []
    for src in active:
        cands = [c for c in active if c != src]
        if strategy == "random":
            tgt = cands[rng.integers(0, len(cands))]
        else:
            dists = [(matrix[src, c], c) for c in cands]
            if strategy == "largest":
                tgt = max(dists, key=lambda dc: (dc[0], -dc[1]))[1]
            elif strategy == "smallest":
                tgt = min(dists, key=lambda dc: (dc[0], dc[1]))[1]
            else:   # medium
                dists.sort(key=lambda dc: (dc[0], dc[1]))
                tgt = dists[(len(dists) - 1) // 2][1]
        pairs.append((src, tgt, strategy))
    return PairingPlan(pairs)


def fit_score_function(samples: list[tuple[float, float]], degree: int = 2) -> ScoreFunction:
    """Least-squares polynomial fit of evaluation score against cluster distance."""
    if len(samples) < degree + 1:
        raise PairingError(f"need at least degree+1={degree + 1} samples, got {len(samples)}")
    d = np.array([s[0] for s in samples], dtype=np.float64)
    y = np.array([s[1] for s in samples], dtype=np.float64)
    design = np.vander(d, degree + 1, increasing=True)
    if np.linalg.matrix_rank(design) < degree + 1:
        raise PairingError("rank-deficient design matrix (distances not distinct enough)")
    coeffs, res, _, _ = np.linalg.lstsq(design, y, rcond=None)
    rss = float(res[0]) if res.size else float(((design @ coeffs - y) ** 2).sum())
    return ScoreFunction(coeffs=coeffs, rss=rss, sample_count=len(samples))


def predict_score(f: ScoreFunction, distance: float) -> float:
    acc = 0.0
    for c in f.coeffs[::-1]:        # Horner, ascending coeffs evaluated high-to-low
        acc = acc * distance + c
    return float(acc)


def pair_supervised(active: list[int], matrix: np.ndarray, f: ScoreFunction) -> PairingPlan:
    """Pick the target with the highest predicted score; ties -> lowest id."""
    active = sorted(active)
    if len(active) < 2:
        raise PairingError("need at least 2 active clusters to pair")
    pairs = []
    for src in active:
        cands = [c for c in active if c != src]
        scored = [(predict_score(f, matrix[src, c]), c) for c in cands]
        tgt = max(scored, key=lambda sc: (sc[0], -sc[1]))[1]
        pairs.append((src, tgt, "supervised"))
    return PairingPlan(pairs)


def pair_exhaustive(active: list[int], evaluate_pair, max_k: int = 8) -> PairingPlan:
    """Toy-scale exhaustive search: evaluate_pair(src, tgt) -> score for every
    ordered pair; keeps the argmax target per source. Guarded to small K since
    the cost grows as K*(K-1) model trainings."""
    active = sorted(active)
    if len(active) > max_k:
        raise PairingError(f"exhaustive pairing limited to K <= {max_k}")
    if len(active) < 2:
        raise PairingError("need at least 2 active clusters to pair")
    pairs = []
    for src in active:
        scored = [(evaluate_pair(src, c), c) for c in active if c != src]
        tgt = max(scored, key=lambda sc: (sc[0], -sc[1]))[1]
        pairs.append((src, tgt, "exhaustive"))
    return PairingPlan(pairs)
