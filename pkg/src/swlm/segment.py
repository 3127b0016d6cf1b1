"""Subword segmenters: characters, character trigrams, BPE, morphological lexicons.

Also houses reduplication detection and corpus-level reduplication statistics.
"""
from __future__ import annotations

import collections
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import UNK, Corpus
from .errors import EmptyWord, MalformedLine

log = logging.getLogger(__name__)

BOW = "^"  # begin-of-word marker
EOW = "$"  # end-of-word marker


def segment_chars(word: str) -> list[str]:
    """Split into Unicode scalar values wrapped in boundary markers."""
    if not word:
        raise EmptyWord("cannot segment the empty word")
    return [BOW, *word, EOW]


def segment_char_trigrams(word: str) -> list[str]:
    """All width-3 windows over the marker-padded word; yields L units for length L."""
    if not word:
        raise EmptyWord("cannot segment the empty word")
    padded = BOW + word + EOW
    return [padded[i : i + 3] for i in range(len(padded) - 2)]


@dataclass
class MergeTable:
    """Ordered BPE merges; list index is priority (lower applies first)."""

    merges: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.merges)) != len(self.merges):
            raise ValueError("duplicate merge pair")
        self.rank = {pair: i for i, pair in enumerate(self.merges)}

    def __len__(self) -> int:
        return len(self.merges)

    def save(self, path) -> None:
        lines = [f"#bpe-v1 merges={len(self.merges)}"]
        lines += [f"{a} {b}" for a, b in self.merges]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "MergeTable":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or not lines[0].startswith("#bpe-v1"):
            raise MalformedLine(f"{path}:1: missing '#bpe-v1' header")
        merges = []
        for lineno, line in enumerate(lines[1:], start=2):
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise MalformedLine(f"{path}:{lineno}: expected 'left<SPACE>right'")
            merges.append((parts[0], parts[1]))
        return cls(merges)


def _merge_pair(symbols: list[str], pair: tuple[str, str]) -> list[str]:
    """Merge non-overlapping occurrences of pair, leftmost first."""
    left, right = pair
    out = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and symbols[i] == left and symbols[i + 1] == right:
            out.append(left + right)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def train_bpe(corpus: Corpus, num_merges: int) -> MergeTable:
    """Learn merges by repeatedly fusing the most frequent adjacent symbol pair.

    Words are wrapped in boundary markers; pair counts are weighted by word
    frequency; ties break lexicographically on (left, right); learning stops
    early when no pair occurs at least twice.
    """
    if num_merges < 0:
        raise ValueError("num_merges must be >= 0")
    word_freq = collections.Counter(t for t in corpus.tokens if t != UNK)
    seqs = {w: [BOW, *w, EOW] for w in word_freq}
    merges: list[tuple[str, str]] = []
    for _ in range(num_merges):
        pair_counts: collections.Counter = collections.Counter()
        for w, freq in word_freq.items():
            seq = seqs[w]
            for i in range(len(seq) - 1):
                pair_counts[(seq[i], seq[i + 1])] += freq
        if not pair_counts:
            break
        best_count = max(pair_counts.values())
        if best_count < 2:
            break
        best = min(p for p, c in pair_counts.items() if c == best_count)
        merges.append(best)
        for w in seqs:
            seqs[w] = _merge_pair(seqs[w], best)
    return MergeTable(merges)


def apply_bpe(word: str, merges: MergeTable) -> list[str]:
    """Greedily apply merges in priority order, leftmost occurrence first."""
    if not word:
        raise EmptyWord("cannot segment the empty word")
    symbols = [BOW, *word, EOW]
    while True:
        best_rank = None
        best_pos = None
        for i in range(len(symbols) - 1):
            rank = merges.rank.get((symbols[i], symbols[i + 1]))
            if rank is not None and (best_rank is None or rank < best_rank):
                best_rank = rank
                best_pos = i
        if best_rank is None:
            break
        symbols[best_pos : best_pos + 2] = [symbols[best_pos] + symbols[best_pos + 1]]
    return symbols


def strip_markers(text: str) -> str:
    return text.replace(BOW, "").replace(EOW, "")


class MorphAnalysisLexicon:
    """Word -> unit-sequence map loaded from an external segmenter or analyzer."""

    def __init__(self, entries: dict[str, list[str]], kind: str):
        self.entries = entries
        self.kind = kind

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def units(self, word: str) -> list[str]:
        """Units for a word; unknown words fall back to one opaque marked unit."""
        got = self.entries.get(word)
        if got is not None:
            return list(got)
        return [BOW + word + EOW]


def load_segmentation_lexicon(path, kind: str) -> MorphAnalysisLexicon:
    """Parse a "word<TAB>unit1 unit2 ..." file.

    kind="morfessor-style": first/last units carry ^/$ markers and concatenate
    back to the word. kind="analysis": first unit is lemma+POS, the rest are
    "+"-prefixed features.
    """
    if kind not in ("morfessor-style", "analysis"):
        raise ValueError(f"unknown lexicon kind: {kind!r}")
    entries: dict[str, list[str]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise MalformedLine(f"{path}:{lineno}: expected 'word<TAB>units'")
        word, unit_str = parts
        units = unit_str.split(" ")
        if not word or any(not u for u in units):
            raise MalformedLine(f"{path}:{lineno}: empty word or unit")
        if kind == "morfessor-style":
            if not units[0].startswith(BOW) or not units[-1].endswith(EOW):
                raise MalformedLine(f"{path}:{lineno}: morfessor-style units need ^/$ markers")
        else:
            if any(not u.startswith("+") for u in units[1:]):
                raise MalformedLine(f"{path}:{lineno}: feature units must carry a '+' prefix")
        if word in entries:
            if entries[word] != units:
                log.warning("%s:%d: duplicate entry for %r, keeping first", path, lineno, word)
            continue
        entries[word] = units
    return MorphAnalysisLexicon(entries, kind)


# Suffixes stripped when testing whether the halves of a hyphenated word are
# the same morpheme (covers e.g. "buah-buahan").
PARTIAL_REDUP_SUFFIXES = ("an", "nya")


def detect_reduplication(token: str, suffixes=PARTIAL_REDUP_SUFFIXES) -> str:
    """Classify a token as "full", "partial", or "none" reduplication."""
    parts = token.split("-")
    if len(parts) != 2 or not parts[0] or not parts[1]:
        return "none"
    x, y = parts
    if x == y:
        return "full"
    if y.startswith(x) or x.startswith(y):
        return "partial"
    for s in suffixes:
        if y.endswith(s) and y[: -len(s)] == x:
            return "partial"
        if x.endswith(s) and x[: -len(s)] == y:
            return "partial"
    return "none"


def redup_stats(corpus: Corpus) -> tuple[float, float]:
    """(type-level %, token-level %) of tokens classified as full reduplication."""
    counts = collections.Counter(corpus.tokens)
    full_types = sum(1 for w in counts if detect_reduplication(w) == "full")
    full_tokens = sum(c for w, c in counts.items() if detect_reduplication(w) == "full")
    return 100.0 * full_types / len(counts), 100.0 * full_tokens / len(corpus)
