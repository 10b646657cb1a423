"""Single-file model container and text vector export.

Layout (all little-endian)::

    "FPK1"  u32 format_version
    repeated: 4-byte tag, u64 payload length, payload

Sections, each exactly once and in this order: ``CONF`` (tokenizer + model
config), ``VOCB`` (words and counts), ``LABL`` (label list), ``INPT`` and
``OUTP`` (row-major float32 matrices, no header; shapes follow from CONF,
VOCB and LABL), then an optional ``SVMS`` block of one-vs-rest models.
"""
from __future__ import annotations

import io
import math
import os
import struct
import tempfile
from typing import Optional

import numpy as np

from .errors import (
    BadMagic,
    CorruptSection,
    IoFailure,
    NonFiniteValue,
    VersionUnsupported,
)
from .model import BUCKET_PREFIX, EmbeddingModel, ModelConfig, word_vector
from .svm import OneVsRest, SvmModel
from .tokenizer import TokenizerConfig, Vocabulary

MAGIC = b"FPK1"
FORMAT_VERSION = 1

_CONF = struct.Struct("<IIIQII" + "IdIIIqIB")
_MODES = ("supervised", "skipgram")
_REQUIRED = (b"CONF", b"VOCB", b"LABL", b"INPT", b"OUTP")
_OPTIONAL = (b"SVMS",)


def _section(tag: bytes, payload: bytes) -> bytes:
    return tag + struct.pack("<Q", len(payload)) + payload


def _str(s: str) -> bytes:
    b = s.encode("utf-8")
    return struct.pack("<I", len(b)) + b


def _encode(model: EmbeddingModel, svms: Optional[OneVsRest]) -> bytes:
    tc = model.vocab.cfg
    mc = model.config
    conf = _CONF.pack(tc.word_bytes, tc.minn, tc.maxn, tc.buckets, tc.min_count,
                      tc.max_packet_bytes, mc.dim, mc.lr0, mc.epochs, mc.neg, mc.window,
                      mc.seed, mc.threads, _MODES.index(mc.mode))
    vocab = io.BytesIO()
    vocab.write(struct.pack("<Q", len(model.vocab.words)))
    for w, c in model.vocab.words:
        vocab.write(_str(w) + struct.pack("<Q", c))
    labels = struct.pack("<Q", len(model.labels)) + b"".join(_str(lab) for lab in model.labels)
    parts = [
        MAGIC,
        struct.pack("<I", FORMAT_VERSION),
        _section(b"CONF", conf),
        _section(b"VOCB", vocab.getvalue()),
        _section(b"LABL", labels),
        _section(b"INPT", np.ascontiguousarray(model.input, dtype="<f4").tobytes()),
        _section(b"OUTP", np.ascontiguousarray(model.output, dtype="<f4").tobytes()),
    ]
    if svms is not None and svms.models:
        buf = io.BytesIO()
        buf.write(struct.pack("<Q", len(svms.models)))
        for m in svms.models:
            if len(m.w) != model.dim:
                raise ValueError("svm dim does not match model dim")
            buf.write(_str(m.label) + struct.pack("<dd", m.lam, m.bias))
            buf.write(np.asarray(m.w, dtype="<f8").tobytes())
        parts.append(_section(b"SVMS", buf.getvalue()))
    return b"".join(parts)


def save_model(model: EmbeddingModel, path, svms: Optional[OneVsRest] = None) -> None:
    if not model.check_finite():
        raise NonFiniteValue("refusing to save a model with non-finite values")
    if svms is not None and not all(np.isfinite(m.w).all() and math.isfinite(m.bias) for m in svms.models):
        raise NonFiniteValue("refusing to save non-finite svm weights")
    blob = _encode(model, svms)
    path = os.fspath(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), suffix=".tmp")
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


class _Reader:
    def __init__(self, buf: bytes, what: str):
        self.buf = buf
        self.pos = 0
        self.what = what

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.buf):
            raise CorruptSection(f"{self.what}: truncated at byte {self.pos}")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))

    def string(self) -> str:
        (n,) = self.unpack("<I")
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError:
            raise CorruptSection(f"{self.what}: invalid utf-8") from None

    def done(self):
        if self.pos != len(self.buf):
            raise CorruptSection(f"{self.what}: {len(self.buf) - self.pos} trailing bytes")


def _matrix(payload: bytes, rows: int, cols: int, tag: str) -> np.ndarray:
    if len(payload) != rows * cols * 4:
        raise CorruptSection(f"{tag}: {len(payload)} bytes, expected {rows}x{cols} float32")
    mat = np.frombuffer(payload, dtype="<f4").reshape(rows, cols).astype(np.float32)
    if not np.isfinite(mat).all():
        raise NonFiniteValue(f"{tag}: non-finite value")
    return mat


def decode_model(blob: bytes):
    if blob[:4] != MAGIC:
        raise BadMagic("not a model container")
    top = _Reader(blob, "container")
    top.take(4)
    (version,) = top.unpack("<I")
    if version != FORMAT_VERSION:
        raise VersionUnsupported(f"container version {version}")
    sections = {}
    order = []
    while top.pos < len(blob):
        tag = top.take(4)
        (length,) = top.unpack("<Q")
        if tag not in _REQUIRED + _OPTIONAL:
            raise CorruptSection(f"unknown section tag {tag!r}")
        if tag in sections:
            raise CorruptSection(f"duplicate section {tag!r}")
        sections[tag] = top.take(length)
        order.append(tag)
    if tuple(order[: len(_REQUIRED)]) != _REQUIRED:
        raise CorruptSection(f"sections {order} missing or out of order")

    r = _Reader(sections[b"CONF"], "CONF")
    (wb, minn, maxn, buckets, min_count, max_bytes, dim, lr0, epochs, neg, window,
     seed, threads, mode) = r.unpack(_CONF.format)
    r.done()
    try:
        tcfg = TokenizerConfig(wb, minn, maxn, buckets, min_count, max_bytes)
        mcfg = ModelConfig(dim=dim, lr0=lr0, epochs=epochs, neg=neg, window=window, seed=seed,
                           threads=threads, mode=_MODES[mode])
    except (ValueError, IndexError) as exc:
        raise CorruptSection(f"CONF: {exc}") from None

    r = _Reader(sections[b"VOCB"], "VOCB")
    (nwords,) = r.unpack("<Q")
    words = []
    for _ in range(nwords):
        w = r.string()
        (c,) = r.unpack("<Q")
        words.append((w, c))
    r.done()
    vocab = Vocabulary(words, tcfg)
    if len(vocab.index) != len(words):
        raise CorruptSection("VOCB: duplicate words")

    r = _Reader(sections[b"LABL"], "LABL")
    (nlabels,) = r.unpack("<Q")
    labels = [r.string() for _ in range(nlabels)]
    r.done()

    inp = _matrix(sections[b"INPT"], nwords + buckets, dim, "INPT")
    nout = nlabels if mcfg.mode == "supervised" else nwords
    out = _matrix(sections[b"OUTP"], nout, dim, "OUTP")
    model = EmbeddingModel(mcfg, vocab, inp, out, labels)

    svms = None
    if b"SVMS" in sections:
        r = _Reader(sections[b"SVMS"], "SVMS")
        (count,) = r.unpack("<Q")
        svms = OneVsRest()
        for _ in range(count):
            label = r.string()
            lam, bias = r.unpack("<dd")
            w = np.frombuffer(r.take(8 * dim), dtype="<f8").astype(np.float64)
            if not (np.isfinite(w).all() and math.isfinite(bias) and math.isfinite(lam)):
                raise NonFiniteValue("SVMS: non-finite value")
            svms.models.append(SvmModel(w, bias, lam, label))
        r.done()
    return model, svms


def load_model(path):
    """Returns ``(model, svms)``; ``svms`` is None when the file has none."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return decode_model(blob)


def _fmt(vec) -> str:
    return " ".join("%.6g" % float(v) for v in vec)


def export_vectors(model: EmbeddingModel, path, scope: str = "words") -> None:
    """Write the text vector format.

    ``words``: one composed vector (word row + n-gram rows) per vocab word.
    ``full``: the raw input rows, vocab words then ``__bucket__<i>``.
    """
    if scope not in ("words", "full"):
        raise ValueError("scope must be 'words' or 'full'")
    V = len(model.vocab)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            if scope == "words":
                fh.write(f"{V} {model.dim}\n")
                for w, _ in model.vocab.words:
                    fh.write(f"{w} {_fmt(word_vector(model, w))}\n")
            else:
                fh.write(f"{model.input.shape[0]} {model.dim}\n")
                for i, (w, _) in enumerate(model.vocab.words):
                    fh.write(f"{w} {_fmt(model.input[i])}\n")
                for b in range(model.vocab.buckets):
                    fh.write(f"{BUCKET_PREFIX}{b} {_fmt(model.input[V + b])}\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
