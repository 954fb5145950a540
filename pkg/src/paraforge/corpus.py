"""Corpus ingestion: tokenization, vocabulary construction, id encoding.

Every downstream module (clustering, translation models, metrics) works on
the token / id sequences produced here, so all choices are deterministic:
identical (file bytes, config) always yields identical records and vocabs.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

PAD, UNK, BOS, EOS = 0, 1, 2, 3
SPECIALS = ["<pad>", "<unk>", "<bos>", "<eos>"]

_PUNCT_RE = re.compile(r"(\W)", re.UNICODE)


class CorpusError(Exception):
    """Raised for unusable corpus input (empty corpus, malformed files)."""


@dataclass(frozen=True)
class TokenizerConfig:
    lowercase: bool = True
    split_punctuation: bool = True


@dataclass
class SentenceRecord:
    id: int
    text: str
    tokens: list[str]
    ids: list[int] = field(default_factory=list)


def tokenize(text: str, config: TokenizerConfig) -> list[str]:
    """Whitespace tokenization with optional lowercasing / punctuation splitting."""
    if config.lowercase:
        text = text.lower()
    if config.split_punctuation:
        pieces = []
        for chunk in text.split():
            pieces.extend(p for p in _PUNCT_RE.split(chunk) if p and not p.isspace())
        return pieces
    return text.split()


class Vocab:
    """Token <-> index bijection with reserved specials at indices 0-3."""

    def __init__(self, tokens: list[str], counts: dict[str, int] | None = None):
        self.itos = list(SPECIALS) + list(tokens)
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise CorpusError("duplicate token in vocabulary")
        self.counts = dict(counts) if counts else {}

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def index(self, token: str) -> int:
        return self.stoi.get(token, UNK)

    def lookup(self, idx: int) -> str:
        return self.itos[idx]

    def save(self, path) -> None:
        # one token per line; 4-line special header, so line = index
        with open(path, "w", encoding="utf-8") as f:
            for t in self.itos:
                f.write(t + "\n")

    @classmethod
    def load(cls, path) -> "Vocab":
        with open(path, encoding="utf-8") as f:
            lines = [ln.rstrip("\n") for ln in f]
        lines = [ln for ln in lines if ln]
        if lines[:4] != SPECIALS:
            raise CorpusError(f"{path}: missing special-token header")
        return cls(lines[4:])


def build_vocab(sentences, min_count: int = 2, max_size: int = 30000) -> Vocab:
    """Frequency-then-lexicographic vocabulary over a stream of token lists.

    Keeps tokens with frequency >= min_count, truncated to max_size entries
    (specials included) by descending count, ties by ascending token.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    if max_size < 4:
        raise ValueError("max_size must be >= 4")
    counts: dict[str, int] = {}
    n_sent = 0
    for tokens in sentences:
        n_sent += 1
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
    if n_sent == 0:
        raise CorpusError("empty corpus: no sentences to build a vocabulary from")
    kept = [t for t, c in counts.items() if c >= min_count]
    kept.sort(key=lambda t: (-counts[t], t))
    kept = kept[: max_size - len(SPECIALS)]
    return Vocab(kept, counts={t: counts[t] for t in kept})


def encode(tokens: list[str], vocab: Vocab) -> list[int]:
    return [vocab.index(t) for t in tokens]


def decode(ids, vocab: Vocab) -> list[str]:
    return [vocab.lookup(i) for i in ids if i not in (PAD, BOS, EOS)]


def load_corpus(path, fmt: str = "lines", config: TokenizerConfig | None = None):
    """Yield SentenceRecords from a text (one sentence per line) or JSONL file.

    Blank lines are skipped; ids stay dense in encounter order.
    """
    config = config or TokenizerConfig()
    if fmt not in ("lines", "jsonl"):
        raise ValueError(f"unknown corpus format {fmt!r}")
    records = []
    with open(path, encoding="utf-8") as f:
        next_id = 0
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if fmt == "jsonl":
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as e:
                    raise CorpusError(f"{path}: malformed JSON on line {lineno}: {e}") from e
                if not isinstance(obj, dict) or "text" not in obj:
                    raise CorpusError(f"{path}: line {lineno} lacks a 'text' field")
                text = obj["text"]
            else:
                text = line
            tokens = tokenize(text, config)
            records.append(SentenceRecord(id=next_id, text=text, tokens=tokens))
            next_id += 1
    return records


def encode_corpus(records: list[SentenceRecord], vocab: Vocab) -> None:
    for r in records:
        r.ids = encode(r.tokens, vocab)
