import math

import numpy as np
import pytest

from pktembed.errors import EmptyCorpus
from pktembed.model import ModelConfig, cosine, init_model, word_vector
from pktembed.synth import motif_dataset
from pktembed.tokenizer import HexDocument, TokenizerConfig, Vocabulary, build_vocabulary, packet_document
from pktembed.train import (
    NegativeSampler,
    skipgram_step,
    supervised_step,
    train_supervised,
    train_unsupervised,
)


@pytest.fixture
def vocab():
    words = [(format(i * 4369, "04x"), 10 - i) for i in range(8)]
    return Vocabulary(words, TokenizerConfig(buckets=64))


def test_initial_supervised_loss_is_log_k(vocab, backend):
    for k in (2, 3, 7):
        m = init_model(ModelConfig(dim=6, dtype="float64"), vocab, [str(i) for i in range(k)])
        loss = supervised_step(m, [0, 9, 20], 0, 0.1, backend=backend)
        assert abs(loss - math.log(k)) < 1e-9


def test_initial_skipgram_loss(vocab, backend):
    m = init_model(ModelConfig(dim=6, mode="skipgram", dtype="float64"), vocab)
    neg = [1, 2, 3, 4, 5]
    loss = skipgram_step(m, vocab.word_ids(vocab.words[0][0]), 6, neg, 0.1, backend=backend)
    assert abs(loss - 6 * math.log(2)) < 1e-9


def test_repeated_steps_decrease_loss(vocab, backend):
    m = init_model(ModelConfig(dim=6, dtype="float64", seed=2), vocab, ["a", "b", "c"])
    ids = [1, 3, 30, 41]
    losses = [supervised_step(m, ids, 1, 0.5, backend=backend) for _ in range(10)]
    assert all(b < a for a, b in zip(losses, losses[1:]))

    s = init_model(ModelConfig(dim=6, mode="skipgram", dtype="float64", seed=2), vocab)
    center = vocab.word_ids(vocab.words[0][0])
    losses = [skipgram_step(s, center, 2, [4, 5], 0.1, backend=backend) for _ in range(10)]
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_zero_lr_leaves_model(vocab, backend):
    m = init_model(ModelConfig(dim=6), vocab, ["a", "b"])
    before = m.copy()
    supervised_step(m, [2, 5, 40], 1, 0.0, backend=backend)
    assert m.equals(before)


def test_step_range_checks(vocab):
    m = init_model(ModelConfig(dim=4), vocab, ["a", "b"])
    with pytest.raises(IndexError):
        supervised_step(m, [1], 2, 0.1)
    s = init_model(ModelConfig(dim=4, mode="skipgram"), vocab)
    with pytest.raises(IndexError):
        skipgram_step(s, [0], 8, [1], 0.1)


def test_epochs_zero_rejected():
    with pytest.raises(ValueError):
        ModelConfig(epochs=0)


def _separable(n=40, seed=0):
    cfg = TokenizerConfig(buckets=2003)
    rows = motif_dataset(n // 2, n // 2, bytes.fromhex("abcd"), seed=seed, min_len=32, max_len=48)
    docs = [packet_document(p, cfg, lab) for p, lab in rows]
    vocab = build_vocabulary(docs, cfg)
    labels = ["attack", "benign"]
    return vocab, labels, [(vocab.doc_to_ids(d), labels.index(d.label)) for d in docs]


def test_supervised_loss_falls(backend):
    vocab, labels, corpus = _separable()
    cfg = ModelConfig(dim=16, lr0=10.0, epochs=5)
    model, report = train_supervised(corpus, cfg, vocab, labels, backend=backend)
    assert len(report.epoch_losses) == 5
    assert report.epoch_losses[-1] < report.epoch_losses[0]
    assert report.tokens == 5 * sum(len(ids) for ids, _ in corpus)


def test_supervised_reproducible():
    vocab, labels, corpus = _separable()
    cfg = ModelConfig(dim=8, lr0=2.0, epochs=2, seed=3)
    a, _ = train_supervised(corpus, cfg, vocab, labels)
    b, _ = train_supervised(corpus, cfg, vocab, labels)
    assert a.equals(b)


def test_supervised_threads():
    vocab, labels, corpus = _separable(80)
    cfg = ModelConfig(dim=8, lr0=2.0, epochs=2, threads=4)
    model, report = train_supervised(corpus, cfg, vocab, labels)
    assert model.check_finite()
    assert model.input.shape == (len(vocab) + 2003, 8)


def test_supervised_init_reuses_input_rows():
    vocab, labels, corpus = _separable()
    cfg = ModelConfig(dim=8, lr0=1e-12, epochs=1)
    seed_model = init_model(ModelConfig(dim=8, seed=99), vocab, labels)
    model, _ = train_supervised(corpus, cfg, vocab, labels, init=seed_model)
    assert np.allclose(model.input, seed_model.input, atol=1e-9)


def test_empty_corpora(vocab):
    with pytest.raises(EmptyCorpus):
        train_supervised([], ModelConfig(), vocab, ["a"])
    with pytest.raises(EmptyCorpus):
        train_unsupervised([], ModelConfig(mode="skipgram"), vocab)


def test_trainer_mode_mismatch(vocab):
    with pytest.raises(ValueError):
        train_supervised([([1], 0)], ModelConfig(mode="skipgram"), vocab, ["a"])
    with pytest.raises(ValueError):
        train_unsupervised([["0000"]], ModelConfig(), vocab)


def test_sampler_single_word(backend):
    s = NegativeSampler([5])
    assert s.probabilities.tolist() == [1.0]
    assert set(s.sample(100, seed=1, backend=backend).tolist()) == {0}


def test_sampler_smoothed_frequencies(backend):
    s = NegativeSampler([8, 1])
    expected = 8**0.75 / (8**0.75 + 1)  # 0.8263
    assert s.probabilities[0] == pytest.approx(expected, abs=1e-12)
    draws = s.sample(1_000_000 if backend == "compiled" else 100_000, seed=7, backend=backend)
    assert abs((draws == 0).mean() - expected) < 0.01


def test_sampler_excludes_context():
    s = NegativeSampler([1, 1, 1])
    assert 1 not in s.sample(500, seed=0, exclude=1).tolist()


def _pairs(docs, window, words):
    vocab = Vocabulary([(w, 1) for w in words], TokenizerConfig(buckets=8))
    cfg = ModelConfig(dim=4, mode="skipgram", window=window, epochs=1, neg=1)
    return train_unsupervised(docs, cfg, vocab)


def test_window_one_adjacent_pairs(backend):
    words = ["0001", "0002", "0003", "0004"]
    _, report = _pairs([HexDocument(words)], 1, words)
    assert report.pairs == 2 * (len(words) - 1)


def test_single_word_document_has_no_pairs():
    model, report = _pairs([HexDocument(["0001"])], 5, ["0001"])
    assert report.pairs == 0
    assert model.equals(init_model(model.config, model.vocab))


def test_oov_words_are_dropped():
    _, report = _pairs([HexDocument(["0001", "ffff", "0002"])], 1, ["0001", "0002"])
    assert report.pairs == 2


def test_shared_context_words_become_similar():
    # aaaa/bbbb both sit next to 1111, cccc/dddd both next to 2222
    rng = np.random.default_rng(0)
    docs = []
    for _ in range(400):
        if rng.random() < 0.5:
            docs.append(HexDocument([["aaaa", "bbbb"][rng.integers(2)], "1111"]))
        else:
            docs.append(HexDocument([["cccc", "dddd"][rng.integers(2)], "2222"]))
    cfg = TokenizerConfig(buckets=512, minn=6, maxn=6)
    vocab = build_vocabulary(docs, cfg)
    model, _ = train_unsupervised(docs, ModelConfig(dim=16, mode="skipgram", window=1, epochs=5,
                                                    neg=2, lr0=0.1), vocab)
    same = cosine(word_vector(model, "aaaa"), word_vector(model, "bbbb"))
    cross = cosine(word_vector(model, "aaaa"), word_vector(model, "cccc"))
    assert same > cross + 0.3


def test_skipgram_reproducible_and_threads():
    vocab, _, _ = _separable()
    rows = motif_dataset(20, 20, b"\xab\xcd", seed=0, min_len=32, max_len=48)
    docs = [packet_document(p, vocab.cfg) for p, _ in rows]
    cfg = ModelConfig(dim=8, mode="skipgram", epochs=1, seed=5)
    a, _ = train_unsupervised(docs, cfg, vocab)
    b, _ = train_unsupervised(docs, cfg, vocab)
    assert a.equals(b)
    c, _ = train_unsupervised(docs, ModelConfig(dim=8, mode="skipgram", epochs=1, threads=3), vocab)
    assert c.check_finite() and c.input.shape == a.input.shape
