import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pktembed.errors import (
    BadMagic,
    ContainerError,
    CorruptSection,
    NonFiniteValue,
    PktEmbedError,
    VersionUnsupported,
)
from pktembed.model import ModelConfig, init_model, load_pretrained, predict, word_vector
from pktembed.store import decode_model, export_vectors, load_model, save_model
from pktembed.svm import OneVsRest, SvmModel
from pktembed.tokenizer import TokenizerConfig, Vocabulary


def small(V=2, B=4, dim=3, mode="supervised", seed=0):
    words = [(format(0xA0 + i, "04x"), V - i) for i in range(V)]
    vocab = Vocabulary(words, TokenizerConfig(buckets=B))
    labels = ["attack", "benign"] if mode == "supervised" else []
    m = init_model(ModelConfig(dim=dim, mode=mode, seed=seed), vocab, labels)
    m.output[:] = np.random.default_rng(seed).normal(size=m.output.shape)
    return m


def sections(blob):
    pos, out = 8, {}
    while pos < len(blob):
        tag = blob[pos:pos + 4]
        (n,) = struct.unpack("<Q", blob[pos + 4:pos + 12])
        out[tag] = blob[pos + 12:pos + 12 + n]
        pos += 12 + n
    return out


def test_roundtrip(tmp_path):
    m = small()
    p = tmp_path / "m.bin"
    save_model(m, p)
    back, svms = load_model(p)
    assert svms is None
    assert back.equals(m)
    assert back.vocab.words == m.vocab.words and back.labels == m.labels


def test_resave_is_byte_identical(tmp_path):
    m = small(V=5, B=16, dim=4)
    save_model(m, tmp_path / "a")
    back, _ = load_model(tmp_path / "a")
    save_model(back, tmp_path / "b")
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_layout(tmp_path):
    save_model(small(V=2, B=4, dim=3), tmp_path / "m")
    blob = (tmp_path / "m").read_bytes()
    assert blob[:4] == b"FPK1"
    assert struct.unpack("<I", blob[4:8]) == (1,)
    secs = sections(blob)
    assert list(secs) == [b"CONF", b"VOCB", b"LABL", b"INPT", b"OUTP"]
    assert len(secs[b"INPT"]) == 72
    assert len(secs[b"OUTP"]) == 2 * 3 * 4


def test_skipgram_roundtrip(tmp_path):
    m = small(mode="skipgram")
    save_model(m, tmp_path / "m")
    assert load_model(tmp_path / "m")[0].equals(m)


def test_svms_roundtrip(tmp_path):
    m = small()
    ovr = OneVsRest([SvmModel(np.array([0.1, -2.0, 3.5]), 0.25, 1e-3, "attack"),
                     SvmModel(np.array([1.0, 0.0, -1.0]), -1.5, 1e-3, "benign")])
    save_model(m, tmp_path / "m", ovr)
    _, back = load_model(tmp_path / "m")
    assert back.labels == ["attack", "benign"]
    for a, b in zip(back.models, ovr.models):
        assert np.array_equal(a.w, b.w) and (a.bias, a.lam) == (b.bias, b.lam)


def test_bad_magic():
    with pytest.raises(BadMagic):
        decode_model(b"NOPE" + bytes(20))


def test_version(tmp_path):
    save_model(small(), tmp_path / "m")
    blob = bytearray((tmp_path / "m").read_bytes())
    blob[4:8] = struct.pack("<I", 2)
    with pytest.raises(VersionUnsupported):
        decode_model(bytes(blob))


def test_unknown_and_duplicate_sections(tmp_path):
    save_model(small(), tmp_path / "m")
    blob = (tmp_path / "m").read_bytes()
    with pytest.raises(CorruptSection):
        decode_model(blob + b"XTRA" + struct.pack("<Q", 0))
    with pytest.raises(CorruptSection):
        decode_model(blob + b"OUTP" + struct.pack("<Q", 0))


def test_nonfinite_rejected(tmp_path):
    m = small()
    m.input[0, 0] = np.nan
    with pytest.raises(NonFiniteValue):
        save_model(m, tmp_path / "m")
    assert not (tmp_path / "m").exists()


def test_nonfinite_on_load(tmp_path):
    save_model(small(), tmp_path / "m")
    blob = bytearray((tmp_path / "m").read_bytes())
    start = blob.index(b"INPT") + 12
    blob[start:start + 4] = struct.pack("<f", float("inf"))
    with pytest.raises(NonFiniteValue):
        decode_model(bytes(blob))


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_truncation_is_typed(data):
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        save_model(small(), d + "/m", OneVsRest([SvmModel(np.ones(3), 0.0, 0.1, "attack")]))
        blob = open(d + "/m", "rb").read()
    cut = data.draw(st.integers(0, len(blob) - 1))
    with pytest.raises(ContainerError):
        decode_model(blob[:cut])


def test_load_missing_file(tmp_path):
    with pytest.raises(PktEmbedError):
        load_model(tmp_path / "absent")


def test_predictions_survive_roundtrip(tmp_path):
    m = small(V=6, B=32, dim=5)
    save_model(m, tmp_path / "m")
    back, _ = load_model(tmp_path / "m")
    rng = np.random.default_rng(0)
    for _ in range(100):
        ids = rng.integers(0, 38, size=int(rng.integers(1, 20)))
        assert predict(m, ids, 2) == predict(back, ids, 2)


def test_export_words(tmp_path):
    m = small(V=3, B=8, dim=2)
    export_vectors(m, tmp_path / "v.txt")
    lines = (tmp_path / "v.txt").read_text().splitlines()
    assert lines[0] == "3 2"
    assert len(lines) == 4
    tok, *vals = lines[1].split()
    assert tok == m.vocab.words[0][0]
    assert np.allclose([float(v) for v in vals], word_vector(m, tok), atol=1e-5)


def test_export_full_feeds_load_pretrained(tmp_path):
    src = small(V=4, B=16, dim=3, mode="skipgram", seed=1)
    export_vectors(src, tmp_path / "v.txt", scope="full")
    lines = (tmp_path / "v.txt").read_text().splitlines()
    assert lines[0] == "20 3" and lines[-1].startswith("__bucket__15 ")
    fresh = small(V=4, B=16, dim=3, seed=2)
    loaded = load_pretrained(fresh, tmp_path / "v.txt")
    for w, _ in src.vocab.words:
        assert np.allclose(word_vector(loaded, w), word_vector(src, w), atol=1e-5)


def test_export_bad_scope(tmp_path):
    with pytest.raises(ValueError):
        export_vectors(small(), tmp_path / "v", scope="some")
