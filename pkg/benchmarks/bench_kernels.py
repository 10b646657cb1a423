"""Compare the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--packets 2000] [--repeat 3]

Each kernel runs on identical inputs under every available backend; the
table reports the best wall time of ``--repeat`` runs and the speedup of
each backend over the fallback.
"""
import argparse
import time

import numpy as np

from pktembed import kernels
from pktembed.model import ModelConfig, init_model
from pktembed.synth import motif_dataset
from pktembed.tokenizer import TokenizerConfig, build_vocabulary, packet_document
from pktembed.train import _csr, _word_id_docs, negative_sampling_table


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--packets", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--dim", type=int, default=64)
    ap.add_argument("--buckets", type=int, default=200_003)
    args = ap.parse_args()

    cfg = TokenizerConfig(buckets=args.buckets)
    rows = motif_dataset(args.packets // 2, args.packets // 2, bytes.fromhex("c0ffee00deadbeef"), seed=0)
    payloads = [p for p, _ in rows]
    docs = [packet_document(p, cfg, lab) for p, lab in rows]
    vocab = build_vocabulary(docs, cfg)
    labels = ["attack", "benign"]
    pairs = [(vocab.doc_to_ids(d), labels.index(d.label)) for d in docs]

    # one shared lookup table so the tokenizer timing isolates the per-packet kernel
    key_word = np.full(256 + 65536, -1, dtype=np.int64)
    for w, i in vocab.index.items():
        if len(w) == 4:
            key_word[256 + int(w, 16)] = i
        elif len(w) == 2:
            key_word[int(w, 16)] = i
    offsets, table = kernels.active.build_word_table(2, cfg.minn, cfg.maxn, key_word, len(vocab), cfg.buckets)

    # epoch kernels run on copies of one initialized model; init cost is excluded
    sup = init_model(ModelConfig(dim=args.dim), vocab, labels)
    sg = init_model(ModelConfig(dim=args.dim, mode="skipgram"), vocab)
    flat, doc_off = _csr([ids for ids, _ in pairs])
    ntok_per = np.diff(doc_off)
    ys = np.array([y for _, y in pairs], dtype=np.int64)
    order = np.arange(len(pairs), dtype=np.int64)
    words_flat, word_off = _csr(_word_id_docs(docs, vocab))
    sub_flat, sub_off = _csr([np.sort(vocab.word_ids(w)) for w, _ in vocab.words])
    sampler = negative_sampling_table(vocab)
    ntok = int(ntok_per.sum())
    nwords = len(words_flat)

    def sup_epoch(be):
        inp, out = sup.input.copy(), sup.output.copy()
        return lambda: be.supervised_epoch(inp, out, flat, doc_off, ntok_per, ys, order, 1.0, 0, ntok)

    def sg_epoch(be):
        inp, out = sg.input.copy(), sg.output.copy()
        return lambda: be.skipgram_epoch(inp, out, words_flat, word_off, sub_flat, sub_off,
                                         sampler.prob, sampler.alias, order, 5, 5, 0.05, 0, nwords, 1)

    results = {}
    for name in kernels.available():
        be = kernels.get_backend(name)
        results[name] = {
            "fnv1a32": best_of(lambda: [be.fnv1a32(p) for p in payloads], args.repeat),
            "tokenize": best_of(lambda: [be.bytes_to_ids(p, 2, offsets, table) for p in payloads], args.repeat),
            "supervised epoch": best_of(sup_epoch(be), args.repeat),
            "skip-gram epoch": best_of(sg_epoch(be), args.repeat),
        }

    print(f"{args.packets} packets, {ntok} supervised ids, {nwords} word positions, dim {args.dim}")
    names = list(results)
    print(f"{'kernel':<18}" + "".join(f"{n + ' (s)':>16}" for n in names) + f"{'speedup':>10}")
    for kernel in results["python"]:
        row = f"{kernel:<18}" + "".join(f"{results[n][kernel]:>16.4f}" for n in names)
        if "compiled" in results:
            row += f"{results['python'][kernel] / results['compiled'][kernel]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
