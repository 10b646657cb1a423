"""Train/test splitting and confusion-matrix metrics."""
from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyPartition, UnknownDay, UnknownLabel

DAYS = ("monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday")


def normalize_day(name: str) -> str:
    key = name.strip().lower()
    for day in DAYS:
        if key == day or (len(key) >= 3 and day.startswith(key)):
            return day
    raise UnknownDay(f"not a day name: {name!r}")


@dataclass
class SplitSpec:
    strategy: str = "stratified_random"  # or "by_day"
    train_fraction: float = 0.8
    seed: int = 0
    train_days: Sequence[str] = ()
    test_days: Sequence[str] = ()

    def __post_init__(self):
        if self.strategy not in ("by_day", "stratified_random"):
            raise ValueError(f"unknown split strategy {self.strategy!r}")
        if self.strategy == "stratified_random" and not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.strategy == "by_day":
            train = {normalize_day(d) for d in self.train_days}
            test = {normalize_day(d) for d in self.test_days}
            if train & test:
                raise ValueError(f"days in both train and test: {sorted(train & test)}")


def _doc_day(doc) -> Optional[str]:
    origin = getattr(doc, "origin", None)
    return getattr(origin, "day", None) if origin is not None else None


def _doc_label(doc):
    return getattr(doc, "label", None)


def split_corpus(corpus: Sequence, spec: SplitSpec) -> tuple[list, list]:
    """Partition documents into (train, test).

    ``by_day`` routes each document by the day in its origin; documents on a
    day in neither list are left out. ``stratified_random`` shuffles each
    label group with the seed and puts ``round(fraction * n)`` in train.
    """
    corpus = list(corpus)
    if spec.strategy == "by_day":
        train_days = {normalize_day(d) for d in spec.train_days}
        test_days = {normalize_day(d) for d in spec.test_days}
        train, test = [], []
        for doc in corpus:
            day = _doc_day(doc)
            if day is None:
                raise UnknownDay("document has no day metadata")
            day = normalize_day(day)
            if day in train_days:
                train.append(doc)
            elif day in test_days:
                test.append(doc)
    else:
        groups = defaultdict(list)
        for i, doc in enumerate(corpus):
            groups[_doc_label(doc)].append(i)
        rng = np.random.default_rng(spec.seed)
        train_idx, test_idx = [], []
        for label in sorted(groups, key=lambda v: (v is None, str(v))):
            idx = np.array(groups[label])
            rng.shuffle(idx)
            k = int(round(spec.train_fraction * len(idx)))
            train_idx.extend(idx[:k].tolist())
            test_idx.extend(idx[k:].tolist())
        train = [corpus[i] for i in sorted(train_idx)]
        test = [corpus[i] for i in sorted(test_idx)]
    if not train or not test:
        raise EmptyPartition(f"split produced {len(train)} train / {len(test)} test documents")
    return train, test


@dataclass
class MetricsReport:
    labels: list
    confusion: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    macro_f1: float
    accuracy: float
    # (metric, label) pairs whose denominator was zero and were set to 0
    zero_division: list = field(default_factory=list)

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    def per_class(self, label: str) -> dict:
        k = self.labels.index(label)
        return {"precision": self.precision[k], "recall": self.recall[k], "f1": self.f1[k]}

    def rows(self):
        """Flat (metric, label, value) rows."""
        out = [("accuracy", "", self.accuracy), ("macro_f1", "", self.macro_f1),
               ("total", "", self.total)]
        for k, lab in enumerate(self.labels):
            out += [("precision", lab, self.precision[k]), ("recall", lab, self.recall[k]),
                    ("f1", lab, self.f1[k]), ("support", lab, int(self.confusion[k].sum()))]
        for i, truth in enumerate(self.labels):
            for j, pred in enumerate(self.labels):
                out.append(("confusion", f"{truth}->{pred}", int(self.confusion[i, j])))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", "label", "value"])
        for metric, label, value in self.rows():
            writer.writerow([metric, label, repr(float(value)) if isinstance(value, float) else value])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"accuracy: {self.accuracy:.6f}", f"macro_f1: {self.macro_f1:.6f}",
                 f"total: {self.total}", ""]
        for k, lab in enumerate(self.labels):
            lines.append(f"{lab}: precision={self.precision[k]:.6f} "
                         f"recall={self.recall[k]:.6f} f1={self.f1[k]:.6f} "
                         f"support={int(self.confusion[k].sum())}")
        if self.zero_division:
            lines.append("")
            lines.append("zero denominators (reported as 0): "
                         + ", ".join(f"{m}[{lab}]" for m, lab in self.zero_division))
        lines.append("")
        lines.append("confusion (rows = truth, cols = predicted):")
        width = max([len(lab) for lab in self.labels] + [len(str(self.total)), 5])
        lines.append(" " * width + " | " + " ".join(lab.rjust(width) for lab in self.labels))
        for i, lab in enumerate(self.labels):
            lines.append(lab.rjust(width) + " | "
                         + " ".join(str(int(v)).rjust(width) for v in self.confusion[i]))
        return "\n".join(lines) + "\n"


def evaluate(pairs, labels) -> MetricsReport:
    """Metrics from (truth, predicted) pairs over a fixed label order."""
    labels = list(labels)
    index = {lab: i for i, lab in enumerate(labels)}
    K = len(labels)
    cm = np.zeros((K, K), dtype=np.int64)
    for truth, pred in pairs:
        try:
            cm[index[truth], index[pred]] += 1
        except KeyError as exc:
            raise UnknownLabel(f"label {exc.args[0]!r} not in label list") from None
    tp = np.diag(cm).astype(np.float64)
    pred_tot = cm.sum(axis=0).astype(np.float64)
    true_tot = cm.sum(axis=1).astype(np.float64)
    flags = []
    precision = np.zeros(K)
    recall = np.zeros(K)
    f1 = np.zeros(K)
    for k, lab in enumerate(labels):
        if pred_tot[k] > 0:
            precision[k] = tp[k] / pred_tot[k]
        else:
            flags.append(("precision", lab))
        if true_tot[k] > 0:
            recall[k] = tp[k] / true_tot[k]
        else:
            flags.append(("recall", lab))
        if precision[k] + recall[k] > 0:
            f1[k] = 2 * precision[k] * recall[k] / (precision[k] + recall[k])
        else:
            flags.append(("f1", lab))
    present = true_tot > 0
    macro = float(f1[present].mean()) if present.any() else 0.0
    total = cm.sum()
    accuracy = float(tp.sum() / total) if total else 0.0
    return MetricsReport(labels, cm, precision, recall, f1, macro, accuracy, flags)
