import numpy as np
import pytest

from gradcheck import check
from pktembed import kernels
from pktembed.model import ModelConfig
from pktembed.synth import motif_dataset
from pktembed.tokenizer import TokenizerConfig, build_vocabulary, packet_document
from pktembed.train import train_supervised, train_unsupervised

# first three outputs of splitmix64 seeded with 0, from the published reference
SPLITMIX_0 = [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_backend_selection():
    assert "python" in kernels.available()
    assert kernels.get_backend("python").NAME == "python"
    assert kernels.active.NAME in kernels.available()
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_splitmix_reference(backend):
    be = kernels.get_backend(backend)
    state, out = 0, []
    for _ in range(3):
        value, state = be.rng_next(state)
        out.append(value)
    assert out == SPLITMIX_0


@pytest.mark.parametrize("mode", ["supervised", "skipgram"])
def test_gradients_match_finite_differences(mode, backend):
    err, n = check(mode, backend)
    assert n == 100
    assert err < 1e-4


def test_gradcheck_detects_a_wrong_gradient(monkeypatch):
    # negative control: a step that doubles the update must be flagged
    be = kernels.get_backend("python")
    real = be.supervised_step

    def doubled(inp, out, ids, label, lr):
        return real(inp, out, ids, label, 2 * lr)

    monkeypatch.setattr(be, "supervised_step", doubled)
    err, _ = check("supervised", "python")
    assert err > 0.1


def _corpus():
    cfg = TokenizerConfig(buckets=5003)
    rows = motif_dataset(30, 30, bytes.fromhex("c0ffee00deadbeef"), seed=4)
    docs = [packet_document(p, cfg, lab) for p, lab in rows]
    return cfg, docs, build_vocabulary(docs, cfg)


def _same(a, b, dtype):
    # float32 storage hides the last-bit summation differences of float64
    if dtype == "float32":
        return np.array_equal(a, b)
    return np.allclose(a, b, rtol=0, atol=1e-12)


needs_core = pytest.mark.skipif(len(kernels.available()) < 2, reason="compiled core not built")


@needs_core
@pytest.mark.parametrize("dtype", ["float32", "float64"])
def test_backends_agree_supervised(dtype):
    cfg, docs, vocab = _corpus()
    labels = ["attack", "benign"]
    corpus = [(vocab.doc_to_ids(d), labels.index(d.label)) for d in docs]
    mcfg = ModelConfig(dim=8, lr0=1.0, epochs=2, dtype=dtype)
    a, ra = train_supervised(corpus, mcfg, vocab, labels, backend="compiled")
    b, rb = train_supervised(corpus, mcfg, vocab, labels, backend="python")
    assert _same(a.input, b.input, dtype) and _same(a.output, b.output, dtype)
    assert np.allclose(ra.epoch_losses, rb.epoch_losses, rtol=1e-12)


@needs_core
@pytest.mark.parametrize("dtype", ["float32", "float64"])
def test_backends_agree_skipgram(dtype):
    cfg, docs, vocab = _corpus()
    mcfg = ModelConfig(dim=8, mode="skipgram", epochs=1, dtype=dtype)
    a, ra = train_unsupervised(docs, mcfg, vocab, backend="compiled")
    b, rb = train_unsupervised(docs, mcfg, vocab, backend="python")
    assert _same(a.input, b.input, dtype) and _same(a.output, b.output, dtype)
    assert ra.pairs == rb.pairs
