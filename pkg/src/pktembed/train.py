"""SGD trainers for the supervised classifier and skip-gram pre-training.

Learning rate decays linearly from ``lr0`` to 0 over ``epochs * tokens``,
where a supervised document counts ``len(ids)`` tokens and a skip-gram
document counts one token per word position. With ``threads == 1`` and a
fixed seed the result is bit-reproducible. With more threads the corpus is
sharded and workers update the shared matrices without locking; the result
then depends on scheduling.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import kernels
from .errors import EmptyCorpus, NumericError
from .model import EmbeddingModel, ModelConfig, init_model
from .tokenizer import HexDocument, Vocabulary

log = logging.getLogger(__name__)


@dataclass
class TrainReport:
    epoch_losses: list = field(default_factory=list)
    tokens: int = 0
    wall_time: float = 0.0
    pairs: int = 0


def supervised_step(model: EmbeddingModel, ids, label_idx: int, lr: float, backend=None) -> float:
    """One softmax SGD step on a single document; returns the pre-update loss."""
    if not 0 <= label_idx < model.output.shape[0]:
        raise IndexError(f"label index {label_idx} out of range")
    ids = np.sort(np.asarray(ids, dtype=np.int64))
    be = kernels.get_backend(backend)
    return be.supervised_step(model.input, model.output, ids, int(label_idx), float(lr))


def skipgram_step(model: EmbeddingModel, center_word_ids, context_word: int, negatives,
                  lr: float, backend=None) -> float:
    """One negative-sampling step for a (center, context) pair."""
    V = len(model.vocab)
    if not 0 <= context_word < V or any(not 0 <= n < V for n in negatives):
        raise IndexError("context and negatives must be word ids < V")
    center = np.sort(np.asarray(center_word_ids, dtype=np.int64))
    be = kernels.get_backend(backend)
    return be.skipgram_step(model.input, model.output, center, int(context_word),
                            [int(n) for n in negatives], float(lr))


def _csr(seqs) -> tuple[np.ndarray, np.ndarray]:
    lengths = np.fromiter((len(s) for s in seqs), dtype=np.int64, count=len(seqs))
    offsets = np.zeros(len(seqs) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    flat = np.concatenate([np.asarray(s, dtype=np.int64) for s in seqs]) if seqs else np.zeros(0, np.int64)
    return flat.astype(np.int64, copy=False), offsets


def _shards(order: np.ndarray, threads: int):
    if threads == 1:
        return [order]
    return [s for s in np.array_split(order, threads) if len(s)]


def _check_finite(model: EmbeddingModel):
    if not model.check_finite():
        raise NumericError("non-finite value in model parameters")


def train_supervised(corpus: Iterable, cfg: ModelConfig, vocab: Vocabulary, labels,
                     init: Optional[EmbeddingModel] = None, backend=None):
    """Train the softmax classifier on ``(ids, label_idx)`` pairs.

    ``init`` lets a caller start from pretrained input rows; its output
    matrix is reset to zero for the given label set.
    """
    if cfg.mode != "supervised":
        raise ValueError("train_supervised needs mode='supervised'")
    pairs = [(np.sort(np.asarray(ids, dtype=np.int64)), int(y)) for ids, y in corpus]
    if not pairs:
        raise EmptyCorpus("supervised corpus is empty")
    if init is None:
        model = init_model(cfg, vocab, labels)
    else:
        model = EmbeddingModel(cfg, vocab, init.input.astype(cfg.dtype, copy=True),
                               np.zeros((len(labels), cfg.dim), dtype=cfg.dtype), list(labels))
    be = kernels.get_backend(backend)
    flat, offsets = _csr([p[0] for p in pairs])
    ntok = np.diff(offsets)
    ys = np.array([p[1] for p in pairs], dtype=np.int64)
    if ys.min() < 0 or ys.max() >= len(model.labels):
        raise IndexError("label index out of range")
    ndocs = len(pairs)
    rng = np.random.default_rng(cfg.seed)
    report = TrainReport()
    t0 = time.perf_counter()
    for epoch in range(cfg.epochs):
        order = rng.permutation(ndocs).astype(np.int64)
        shards = _shards(order, cfg.threads)
        loss = 0.0
        if len(shards) == 1:
            total = max(int(ntok.sum()) * cfg.epochs, 1)
            loss, _ = be.supervised_epoch(model.input, model.output, flat, offsets, ntok, ys,
                                          order, cfg.lr0, int(ntok.sum()) * epoch, total)
        else:
            def work(shard):
                shard_tok = int(ntok[shard].sum())
                total = max(shard_tok * cfg.epochs, 1)
                return be.supervised_epoch(model.input, model.output, flat, offsets, ntok, ys,
                                           shard, cfg.lr0, shard_tok * epoch, total)[0]

            with ThreadPoolExecutor(len(shards)) as pool:
                loss = sum(pool.map(work, shards))
        report.epoch_losses.append(loss / ndocs)
        report.tokens += int(ntok.sum())
        log.info("epoch %d/%d supervised loss %.6f", epoch + 1, cfg.epochs, loss / ndocs)
    report.wall_time = time.perf_counter() - t0
    _check_finite(model)
    return model, report


class NegativeSampler:
    """Alias-method sampler over word ids with probability ∝ count**0.75."""

    def __init__(self, counts, power: float = 0.75):
        counts = np.asarray(counts, dtype=np.float64)
        if len(counts) == 0:
            raise EmptyCorpus("negative sampling needs a non-empty vocabulary")
        w = counts**power
        self.probabilities = w / w.sum()
        n = len(w)
        scaled = self.probabilities * n
        prob = np.zeros(n, dtype=np.float64)
        alias = np.arange(n, dtype=np.int64)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = scaled[g] + scaled[s] - 1.0
            (small if scaled[g] < 1.0 else large).append(g)
        for i in small + large:
            prob[i] = 1.0
        self.prob = prob
        self.alias = alias

    def sample(self, n: int, seed: int = 0, exclude: int = -1, backend=None) -> np.ndarray:
        be = kernels.get_backend(backend)
        drawn, _ = be.draw_negatives(exclude, n, self.prob, self.alias, seed)
        return np.asarray(drawn, dtype=np.int64)


def negative_sampling_table(vocab: Vocabulary) -> NegativeSampler:
    return NegativeSampler(vocab.counts)


def _word_id_docs(corpus, vocab: Vocabulary) -> list:
    docs = []
    for doc in corpus:
        if isinstance(doc, np.ndarray):
            docs.append(doc.astype(np.int64))
            continue
        words = doc.words if isinstance(doc, HexDocument) else doc
        # out-of-vocabulary words are dropped from the position sequence
        docs.append(np.array([vocab.index[w] for w in words if w in vocab.index], dtype=np.int64))
    return docs


def train_unsupervised(corpus: Iterable, cfg: ModelConfig, vocab: Vocabulary,
                       backend=None):
    """Skip-gram with negative sampling over documents of hex words."""
    if cfg.mode != "skipgram":
        raise ValueError("train_unsupervised needs mode='skipgram'")
    docs = _word_id_docs(corpus, vocab)
    if not docs:
        raise EmptyCorpus("unsupervised corpus is empty")
    model = init_model(cfg, vocab)
    be = kernels.get_backend(backend)
    sampler = negative_sampling_table(vocab)
    words_flat, doc_offsets = _csr(docs)
    ntok = np.diff(doc_offsets)
    sub_flat, sub_offsets = _csr([np.sort(vocab.word_ids(w)) for w, _ in vocab.words])
    rng = np.random.default_rng(cfg.seed)
    states = [int(s) for s in rng.integers(0, 2**63, size=cfg.threads, dtype=np.int64)]
    ndoc = len(docs)
    report = TrainReport()
    t0 = time.perf_counter()
    for epoch in range(cfg.epochs):
        order = np.arange(ndoc, dtype=np.int64)
        shards = _shards(order, cfg.threads)

        def work(t):
            shard = shards[t]
            shard_tok = int(ntok[shard].sum())
            total = max(shard_tok * cfg.epochs, 1)
            loss, npairs, _, st = be.skipgram_epoch(
                model.input, model.output, words_flat, doc_offsets, sub_flat, sub_offsets,
                sampler.prob, sampler.alias, shard, cfg.window, cfg.neg, cfg.lr0,
                shard_tok * epoch, total, states[t],
            )
            states[t] = st
            return loss, npairs

        if len(shards) == 1:
            results = [work(0)]
        else:
            with ThreadPoolExecutor(len(shards)) as pool:
                results = list(pool.map(work, range(len(shards))))
        loss = sum(r[0] for r in results)
        npairs = sum(r[1] for r in results)
        report.epoch_losses.append(loss / npairs if npairs else 0.0)
        report.pairs += npairs
        report.tokens += int(ntok.sum())
        log.info("epoch %d/%d skipgram loss %.6f (%d pairs)", epoch + 1, cfg.epochs,
                 report.epoch_losses[-1], npairs)
    report.wall_time = time.perf_counter() - t0
    _check_finite(model)
    return model, report
