"""Embedding model: input rows over (vocab + buckets), output rows over
labels (supervised) or vocab words (skip-gram)."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DimMismatch, EmptyDocument, NoLabels, NotSupervised, OutOfVocabulary
from .tokenizer import Vocabulary

MODES = ("supervised", "skipgram")
BUCKET_PREFIX = "__bucket__"


@dataclass(frozen=True)
class ModelConfig:
    dim: int = 64
    lr0: Optional[float] = None  # None -> 0.1 supervised, 0.05 skipgram
    epochs: int = 5
    neg: int = 5
    window: int = 5
    seed: int = 0
    threads: int = 1
    mode: str = "supervised"
    dtype: str = "float32"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.lr0 is None:
            object.__setattr__(self, "lr0", 0.1 if self.mode == "supervised" else 0.05)
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.lr0 > 0:
            raise ValueError("lr0 must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.neg < 1 or self.window < 1:
            raise ValueError("neg and window must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")


@dataclass
class EmbeddingModel:
    config: ModelConfig
    vocab: Vocabulary
    input: np.ndarray
    output: np.ndarray
    labels: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.input.shape[1]

    @property
    def supervised(self) -> bool:
        return self.config.mode == "supervised"

    def label_index(self) -> dict:
        return {lab: i for i, lab in enumerate(self.labels)}

    def copy(self) -> "EmbeddingModel":
        return replace(self, input=self.input.copy(), output=self.output.copy(), labels=list(self.labels))

    def equals(self, other: "EmbeddingModel") -> bool:
        return (
            self.config == other.config
            and self.vocab == other.vocab
            and self.labels == other.labels
            and self.input.dtype == other.input.dtype
            and np.array_equal(self.input, other.input)
            and np.array_equal(self.output, other.output)
        )

    def check_finite(self) -> bool:
        return bool(np.isfinite(self.input).all() and np.isfinite(self.output).all())


def init_model(cfg: ModelConfig, vocab: Vocabulary, labels=None) -> EmbeddingModel:
    labels = list(labels or [])
    if cfg.mode == "supervised":
        if not labels:
            raise NoLabels("supervised model needs at least one label")
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be unique")
        nout = len(labels)
    else:
        nout = len(vocab)
    rng = np.random.default_rng(cfg.seed)
    bound = 1.0 / cfg.dim
    nrows = len(vocab) + vocab.buckets
    inp = rng.uniform(-bound, bound, size=(nrows, cfg.dim)).astype(cfg.dtype)
    out = np.zeros((nout, cfg.dim), dtype=cfg.dtype)
    return EmbeddingModel(cfg, vocab, inp, out, labels)


def packet_vector(ids, model: EmbeddingModel) -> np.ndarray:
    """Mean of the selected input rows, summed in sorted-id order."""
    ids = np.sort(np.asarray(ids, dtype=np.int64))
    if len(ids) == 0:
        raise EmptyDocument("packet has no ids")
    return np.add.reduce(model.input[ids], axis=0, dtype=np.float64) / len(ids)


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()


def predict(model: EmbeddingModel, ids, k: int = 1) -> list:
    if not model.supervised:
        raise NotSupervised("predict needs a supervised model")
    h = packet_vector(ids, model)
    p = softmax(model.output.astype(np.float64) @ h)
    order = sorted(range(len(p)), key=lambda i: (-p[i], i))
    return [(model.labels[i], float(p[i])) for i in order[: max(k, 0)]]


def word_vector(model: EmbeddingModel, word: str) -> np.ndarray:
    """Composed vector: word row (if any) plus its n-gram rows, summed."""
    ids = np.sort(model.vocab.word_ids(word))
    return np.add.reduce(model.input[ids], axis=0, dtype=np.float64)


def composed_vectors(model: EmbeddingModel) -> np.ndarray:
    vecs = np.empty((len(model.vocab), model.dim), dtype=np.float64)
    for i, (w, _) in enumerate(model.vocab.words):
        vecs[i] = word_vector(model, w)
    return vecs


def cosine(a, b) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def nearest_neighbors(model: EmbeddingModel, word: str, k: int = 10) -> list:
    if word not in model.vocab:
        raise OutOfVocabulary(word)
    vecs = composed_vectors(model)
    norms = np.linalg.norm(vecs, axis=1)
    q = vecs[model.vocab.index[word]]
    qn = np.linalg.norm(q)
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where((norms > 0) & (qn > 0), vecs @ q / (norms * qn), 0.0)
    self_id = model.vocab.index[word]
    order = [i for i in np.argsort(-sims, kind="stable") if i != self_id]
    return [(model.vocab.words[i][0], float(sims[i])) for i in order[:k]]


def read_vectors(path) -> tuple[int, dict]:
    """Parse a text vector file into (dim, {token: vector})."""
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().split()
        if len(head) != 2:
            raise DimMismatch(f"{path}: header must be 'count dim'")
        count, dim = int(head[0]), int(head[1])
        vecs = {}
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise DimMismatch(f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}")
            vecs[parts[0]] = np.array([float(x) for x in parts[1:]], dtype=np.float64)
    if len(vecs) != count:
        raise DimMismatch(f"{path}: header declares {count} rows, found {len(vecs)}")
    return dim, vecs


def load_pretrained(model: EmbeddingModel, vectors) -> EmbeddingModel:
    """Overwrite input rows from a text vector file (path or parsed dict).

    Word rows are matched by token. Bucket rows (``__bucket__<i>``) are copied
    only when the file carries exactly this model's bucket count.
    """
    if isinstance(vectors, tuple):
        dim, vecs = vectors
    else:
        dim, vecs = read_vectors(vectors)
    if dim != model.dim:
        raise DimMismatch(f"vector dim {dim} != model dim {model.dim}")
    out = model.copy()
    V = len(model.vocab)
    bucket_rows = {}
    for tok, vec in vecs.items():
        if tok.startswith(BUCKET_PREFIX):
            bucket_rows[int(tok[len(BUCKET_PREFIX):])] = vec
        else:
            wid = model.vocab.index.get(tok)
            if wid is not None:
                out.input[wid] = vec
    if bucket_rows and len(bucket_rows) == model.vocab.buckets:
        for b, vec in bucket_rows.items():
            if 0 <= b < model.vocab.buckets:
                out.input[V + b] = vec
    return out

