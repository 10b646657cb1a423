"""Linear SVM on packet vectors, trained with Pegasos.

The bias is an unregularized extra term updated alongside ``w`` and left
out of the norm-ball projection. Multi-class problems use one-vs-rest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, EmptyDataset, EmptyDocument, NonpositiveLambda
from .model import EmbeddingModel, packet_vector


@dataclass
class VectorDataset:
    X: np.ndarray  # (n, dim) float64
    y: np.ndarray  # (n,) of +1 / -1

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return len(self.y)

    @property
    def rows(self):
        return list(zip(self.X, self.y))


@dataclass
class SvmModel:
    w: np.ndarray
    bias: float
    lam: float
    label: str = ""


def embed_dataset(model: EmbeddingModel, corpus, positive_label: str) -> VectorDataset:
    """``corpus`` is an iterable of (ids, label string)."""
    X, y = [], []
    for ids, label in corpus:
        if len(ids) == 0:
            raise EmptyDocument("cannot embed an empty document")
        X.append(packet_vector(ids, model))
        y.append(1 if label == positive_label else -1)
    X = np.asarray(X, dtype=np.float64).reshape(len(y), model.dim)
    return VectorDataset(X, np.asarray(y, dtype=np.int64))


def pegasos_train(data: VectorDataset, lam: float, epochs: int = 20, seed: int = 0,
                  check_bound: bool = False) -> SvmModel:
    if len(data) == 0:
        raise EmptyDataset("no training rows")
    if not lam > 0:
        raise NonpositiveLambda(f"lambda must be > 0, got {lam}")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    X, y = data.X, data.y.astype(np.float64)
    w = np.zeros(data.dim, dtype=np.float64)
    b = 0.0
    radius = 1.0 / math.sqrt(lam)
    picks = np.random.default_rng(seed).integers(0, len(data), size=epochs * len(data))
    for t, i in enumerate(picks, start=1):
        eta = 1.0 / (lam * t)
        xi, yi = X[i], y[i]
        if yi * (w @ xi + b) < 1.0:
            w *= 1.0 - eta * lam
            w += eta * yi * xi
            b += eta * yi
        else:
            w *= 1.0 - eta * lam
        norm = math.sqrt(w @ w)
        if norm > radius:
            w *= radius / norm
        if check_bound:
            assert math.sqrt(w @ w) <= radius + 1e-9
    return SvmModel(w, b, lam)


def svm_predict(model: SvmModel, x) -> tuple[float, int]:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.w.shape:
        raise DimMismatch(f"vector dim {x.shape} != model dim {model.w.shape}")
    score = float(model.w @ x + model.bias)
    return score, (1 if score >= 0 else -1)


@dataclass
class OneVsRest:
    models: list = field(default_factory=list)

    @property
    def labels(self):
        return [m.label for m in self.models]

    def predict(self, x) -> str:
        scores = [svm_predict(m, x)[0] for m in self.models]
        return self.models[int(np.argmax(scores))].label


def train_one_vs_rest(X: np.ndarray, labels, classes, lam: float, epochs: int = 20,
                      seed: int = 0) -> OneVsRest:
    X = np.asarray(X, dtype=np.float64)
    ovr = OneVsRest()
    for c in classes:
        y = np.array([1 if lab == c else -1 for lab in labels], dtype=np.int64)
        m = pegasos_train(VectorDataset(X, y), lam, epochs, seed)
        m.label = c
        ovr.models.append(m)
    return ovr
