"""Corpus loading, vocabulary construction, singleton-UNK policy, contiguous batching."""
from __future__ import annotations

import collections
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyCorpus, InvalidEncoding, MalformedLine

UNK = "<unk>"
# A raw corpus token spelled exactly like the UNK marker is escaped so it can
# never collide with tokens inserted by the UNK policy.
UNK_ESCAPED = "\\<unk>"


@dataclass(frozen=True)
class Corpus:
    """An ordered sequence of whitespace-separated word tokens."""

    tokens: tuple[str, ...]
    source_path: str = ""
    lowercased: bool = False

    def __post_init__(self):
        if not self.tokens:
            raise EmptyCorpus(self.source_path or "<memory>")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


def from_tokens(tokens, lowercased: bool = False, source_path: str = "") -> Corpus:
    return Corpus(tuple(tokens), source_path, lowercased)


def load_corpus(path, lowercase: bool) -> Corpus:
    """Read a whitespace-tokenized UTF-8 text file.

    Lowercasing is requested by callers for word/BPE/morph-unit models and
    skipped for character and character-trigram models.
    """
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidEncoding(f"{path}: not valid UTF-8 ({exc})") from exc
    if lowercase:
        text = text.lower()
    tokens = [UNK_ESCAPED if t == UNK else t for t in text.split()]
    if not tokens:
        raise EmptyCorpus(str(path))
    return Corpus(tuple(tokens), str(path), lowercase)


class Vocabulary:
    """Bidirectional word/id map over the most frequent words plus UNK.

    Id 0 is always UNK; remaining ids are dense and ordered by
    (count descending, word ascending) so construction is deterministic.
    """

    def __init__(self, ordered_words, counts, unk_count: int = 0):
        self.id_to_word: list[str] = [UNK] + list(ordered_words)
        self.word_to_id: dict[str, int] = {w: i for i, w in enumerate(self.id_to_word)}
        if len(self.word_to_id) != len(self.id_to_word):
            raise ValueError("duplicate word in vocabulary")
        self.freq: dict[str, int] = dict(counts)
        self.unk_id = 0
        self.unk_count = unk_count

    @property
    def size(self) -> int:
        return len(self.id_to_word)

    def id(self, word: str) -> int:
        return self.word_to_id.get(word, self.unk_id)

    def __contains__(self, word: str) -> bool:
        return word in self.word_to_id

    def words(self) -> list[str]:
        """Member words, UNK excluded."""
        return self.id_to_word[1:]

    def save(self, path) -> None:
        lines = [f"{UNK}\t{self.unk_count}"]
        for w in self.id_to_word[1:]:
            lines.append(f"{w}\t{self.freq[w]}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        words, counts = [], {}
        unk_count = 0
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise MalformedLine(f"{path}:{lineno + 1}: expected 'word<TAB>count'")
            word, count = parts[0], int(parts[1])
            if lineno == 0:
                if word != UNK:
                    raise MalformedLine(f"{path}:1: first entry must be {UNK}")
                unk_count = count
            else:
                words.append(word)
                counts[word] = count
        return cls(words, counts, unk_count)


def build_vocab(corpus: Corpus, max_size: int) -> Vocabulary:
    """Keep the max_size most frequent words; ties at the cutoff break lexicographically."""
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    counts = collections.Counter(corpus.tokens)
    counts.pop(UNK, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = ranked[:max_size]
    kept_words = [w for w, _ in kept]
    kept_total = sum(c for _, c in kept)
    unk_count = len(corpus) - kept_total
    return Vocabulary(kept_words, dict(kept), unk_count)


def apply_unk_policy(corpus: Corpus, p: float, seed: int) -> Corpus:
    """Replace each singleton token with UNK independently with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    counts = collections.Counter(corpus.tokens)
    rng = np.random.default_rng(seed)
    out = []
    for tok in corpus.tokens:
        if counts[tok] == 1 and rng.random() < p:
            out.append(UNK)
        else:
            out.append(tok)
    return Corpus(tuple(out), corpus.source_path, corpus.lowercased)


class BatchStream:
    """B contiguous streams over an id sequence, yielding truncated-BPTT windows.

    The sequence is split into B streams of length floor(T/B); the surplus tail
    is dropped. Each window pairs inputs with targets shifted one position; the
    final partial window is kept.
    """

    def __init__(self, ids, batch_size: int, unroll: int):
        ids = np.asarray(ids, dtype=np.int64)
        if batch_size < 1 or unroll < 1:
            raise ValueError("batch_size and unroll must be >= 1")
        stream_len = len(ids) // batch_size
        if stream_len < 2:
            raise ValueError(
                f"sequence of {len(ids)} ids too short for {batch_size} streams of length >= 2"
            )
        self.batch_size = batch_size
        self.unroll = unroll
        self.stream_len = stream_len
        self.streams = ids[: batch_size * stream_len].reshape(batch_size, stream_len)

    @property
    def num_targets(self) -> int:
        return self.batch_size * (self.stream_len - 1)

    def __iter__(self):
        start = 0
        while start < self.stream_len - 1:
            width = min(self.unroll, self.stream_len - 1 - start)
            inputs = self.streams[:, start : start + width]
            targets = self.streams[:, start + 1 : start + 1 + width]
            yield inputs, targets
            start += width


def make_batches(ids, batch_size: int, unroll: int) -> BatchStream:
    return BatchStream(ids, batch_size, unroll)
