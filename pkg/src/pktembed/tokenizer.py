"""Packet bytes -> hex word documents -> vocabulary / n-gram bucket ids.

A packet is hex-encoded and cut into fixed-width words (``word_bytes`` bytes,
i.e. ``2 * word_bytes`` hex chars each; a shorter tail word is kept). Each word
contributes its vocabulary id, if it has one, followed by the hashed ids of
its bracketed character n-grams. N-gram ids live in ``[V, V + buckets)``.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

import numpy as np

from . import kernels
from .errors import EmptyCorpus, LabelContainsWhitespace, OddLengthHex

LABEL_PREFIX = "__label__"
_WS = re.compile(r"\s")
# dense word tables are only built up to this word width (256**2 + 256 keys)
_DENSE_MAX_WORD_BYTES = 2


@dataclass(frozen=True)
class TokenizerConfig:
    word_bytes: int = 2
    minn: int = 2
    maxn: int = 4
    buckets: int = 2_000_000
    min_count: int = 1
    max_packet_bytes: int = 1500

    def __post_init__(self):
        if not 1 <= self.word_bytes <= 8:
            raise ValueError("word_bytes must be in [1, 8]")
        if not 1 <= self.minn <= self.maxn <= 2 * self.word_bytes + 2:
            raise ValueError("need 1 <= minn <= maxn <= 2*word_bytes + 2")
        if self.buckets < 1:
            raise ValueError("buckets must be >= 1")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")
        if self.max_packet_bytes < 1:
            raise ValueError("max_packet_bytes must be >= 1")


class Origin(NamedTuple):
    source: str
    index: int
    day: Optional[str] = None


@dataclass
class HexDocument:
    words: list
    label: Optional[str] = None
    origin: Optional[Origin] = None


def hex_encode(data: bytes) -> str:
    return bytes(data).hex()


def words_from_hex(hexstr: str, word_bytes: int) -> list:
    if len(hexstr) % 2:
        raise OddLengthHex(f"hex string of odd length {len(hexstr)}")
    w = 2 * word_bytes
    return [hexstr[i : i + w] for i in range(0, len(hexstr), w)]


def char_ngrams(word: str, minn: int, maxn: int) -> list:
    """Substrings of ``<word>`` with length in [minn, maxn], left to right,
    shortest first at each start position."""
    s = "<" + word + ">"
    L = len(s)
    return [s[i : i + n] for i in range(L) for n in range(minn, maxn + 1) if i + n <= L]


def fnv1a32(data) -> int:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return kernels.active.fnv1a32(bytes(data))


def packet_document(data: bytes, cfg: TokenizerConfig, label=None, origin=None) -> HexDocument:
    data = data[: cfg.max_packet_bytes]
    return HexDocument(words_from_hex(hex_encode(data), cfg.word_bytes), label, origin)


class Vocabulary:
    """Word -> id map over hex words, plus the n-gram bucket space after it.

    Ids are assigned by decreasing count, ties broken lexicographically. The
    per-word id lists (word id + n-gram ids) are memoized.
    """

    def __init__(self, words: Iterable[tuple[str, int]], cfg: TokenizerConfig):
        self.words = list(words)
        self.cfg = cfg
        self.index = {w: i for i, (w, _) in enumerate(self.words)}
        self._cache: dict = {}
        self._dense = None

    @property
    def size(self) -> int:
        return len(self.words)

    V = size

    @property
    def buckets(self) -> int:
        return self.cfg.buckets

    @property
    def counts(self) -> np.ndarray:
        return np.array([c for _, c in self.words], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word) -> bool:
        return word in self.index

    def __eq__(self, other) -> bool:
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return self.words == other.words and self.cfg == other.cfg

    def ngram_id(self, ngram: str) -> int:
        return len(self.words) + fnv1a32(ngram.encode("ascii")) % self.cfg.buckets

    def word_ids(self, word: str) -> np.ndarray:
        """[vocab id if present] + n-gram ids for one word (memoized)."""
        ids = self._cache.get(word)
        if ids is None:
            cfg = self.cfg
            grams = kernels.active.word_ngram_ids(word, cfg.minn, cfg.maxn, len(self.words), cfg.buckets)
            wid = self.index.get(word)
            if wid is not None:
                grams = np.concatenate((np.array([wid], dtype=np.int64), grams))
            ids = grams
            self._cache[word] = ids
        return ids

    def doc_to_ids(self, doc) -> np.ndarray:
        words = doc.words if isinstance(doc, HexDocument) else doc
        if not words:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([self.word_ids(w) for w in words])

    def _dense_table(self):
        if self._dense is None:
            wb = self.cfg.word_bytes
            nkeys = sum(256**n for n in range(1, wb + 1))
            key_word = np.full(nkeys, -1, dtype=np.int64)
            for w, i in self.index.items():
                nbytes = len(w) // 2
                if len(w) % 2 == 0 and 1 <= nbytes <= wb:
                    key_word[sum(256**n for n in range(1, nbytes)) + int(w, 16)] = i
            cfg = self.cfg
            self._dense = kernels.active.build_word_table(
                wb, cfg.minn, cfg.maxn, key_word, len(self.words), cfg.buckets
            )
        return self._dense

    def bytes_to_ids(self, data: bytes) -> np.ndarray:
        """Same ids as ``doc_to_ids(packet_document(data))``, without building
        the intermediate strings when the compiled core is available."""
        data = bytes(data[: self.cfg.max_packet_bytes])
        if kernels.active.NAME == "compiled" and self.cfg.word_bytes <= _DENSE_MAX_WORD_BYTES:
            offsets, table = self._dense_table()
            return kernels.active.bytes_to_ids(data, self.cfg.word_bytes, offsets, table)
        return self.doc_to_ids(words_from_hex(data.hex(), self.cfg.word_bytes))


def ngram_id(ngram: str, vocab: Vocabulary) -> int:
    return vocab.ngram_id(ngram)


def build_vocabulary(corpus: Iterable, cfg: TokenizerConfig) -> Vocabulary:
    counts: Counter = Counter()
    ndocs = 0
    for doc in corpus:
        ndocs += 1
        counts.update(doc.words if isinstance(doc, HexDocument) else doc)
    if ndocs == 0:
        raise EmptyCorpus("cannot build a vocabulary from an empty corpus")
    kept = [(w, c) for w, c in counts.items() if c >= cfg.min_count]
    kept.sort(key=lambda wc: (-wc[1], wc[0]))
    return Vocabulary(kept, cfg)


def doc_to_ids(doc: HexDocument, vocab: Vocabulary, cfg: Optional[TokenizerConfig] = None) -> np.ndarray:
    if cfg is not None and cfg != vocab.cfg:
        vocab = Vocabulary(vocab.words, cfg)
    return vocab.doc_to_ids(doc)


def sanitize_label(label: str) -> str:
    """Map whitespace runs to underscores so a label fits the corpus format."""
    return re.sub(r"\s+", "_", label.strip())


def emit_corpus_record(doc: HexDocument, supervised: bool = True) -> str:
    words = " ".join(doc.words)
    if doc.label is None or not supervised:
        return words + "\n"
    if not doc.label or _WS.search(doc.label):
        raise LabelContainsWhitespace(f"label {doc.label!r} contains whitespace")
    if not words:
        return f"{LABEL_PREFIX}{doc.label}\n"
    return f"{LABEL_PREFIX}{doc.label} {words}\n"


def parse_corpus_record(line: str, origin: Optional[Origin] = None) -> HexDocument:
    tokens = line.split()
    label = None
    words = []
    for tok in tokens:
        if tok.startswith(LABEL_PREFIX):
            label = tok[len(LABEL_PREFIX) :]
        else:
            words.append(tok)
    return HexDocument(words, label, origin)


def meta_path(corpus_path) -> str:
    return str(corpus_path) + ".meta.tsv"


def read_corpus(path) -> list:
    """Load a corpus file, attaching origins from the ``.meta.tsv`` sidecar
    when one exists."""
    import os

    origins = None
    mp = meta_path(path)
    if os.path.exists(mp):
        origins = []
        with open(mp, encoding="utf-8") as fh:
            next(fh, None)
            for line in fh:
                src, idx, day = (line.rstrip("\n").split("\t") + ["", "", ""])[:3]
                origins.append(Origin(src, int(idx) if idx else -1, day or None))
    docs = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            origin = origins[i] if origins is not None and i < len(origins) else None
            docs.append(parse_corpus_record(line, origin))
    return docs
