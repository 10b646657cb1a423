"""Command-line entry point: ``pktembed <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import kernels
from .errors import DataError, NumericError, PktEmbedError, UsageError
from .evaluation import SplitSpec, evaluate, split_corpus
from .labels import load_label_table, label_packet
from .model import ModelConfig, init_model, load_pretrained, nearest_neighbors, packet_vector, predict
from .pcap import extract_five_tuple, iter_pcap_file, slice_embedding_bytes
from .store import export_vectors, load_model, save_model
from .svm import embed_dataset, pegasos_train, svm_predict, train_one_vs_rest
from .tokenizer import (
    Origin,
    TokenizerConfig,
    build_vocabulary,
    emit_corpus_record,
    meta_path,
    packet_document,
    read_corpus,
    sanitize_label,
)
from .train import train_supervised, train_unsupervised

log = logging.getLogger("pktembed")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
SLICE_FLAGS = {"full": "full", "ip": "ip_onward", "payload": "payload_only"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_list(text: str) -> list:
    return [t for t in (s.strip() for s in text.split(",")) if t]


# -- ingest ----------------------------------------------------------------------


def cmd_ingest(args) -> int:
    cfg = TokenizerConfig(word_bytes=args.word_bytes, minn=1, maxn=1, max_packet_bytes=args.max_bytes)
    table = None
    if args.labels:
        with open(args.labels, encoding="utf-8", newline="") as fh:
            table = load_label_table(fh)
    default = args.default_label if args.default_label else ("BENIGN" if table is not None else None)
    policy = SLICE_FLAGS[args.slice]
    written = skipped = 0
    t0 = time.perf_counter()
    with open(args.out, "w", encoding="utf-8") as out, \
            open(meta_path(args.out), "w", encoding="utf-8") as meta:
        meta.write("source\tindex\tday\n")
        for path in args.pcap:
            source = os.path.basename(path)
            for pkt in iter_pcap_file(path):
                data = slice_embedding_bytes(pkt, policy)
                if not data:
                    skipped += 1
                    continue
                label = None
                if table is not None or default is not None:
                    key = extract_five_tuple(pkt)
                    raw = label_packet(key, pkt.ts, table, default) if table is not None else default
                    label = sanitize_label(raw)
                doc = packet_document(data, cfg, label, Origin(source, pkt.index, args.day))
                out.write(emit_corpus_record(doc))
                meta.write(f"{source}\t{pkt.index}\t{args.day or ''}\n")
                written += 1
    dt = time.perf_counter() - t0
    log.info("wrote %d documents (%d empty skipped) in %.2fs", written, skipped, dt)
    print(f"ingested {written} packets into {args.out} ({skipped} empty skipped)")
    return EXIT_OK


# -- training ----------------------------------------------------------------------


def _infer_word_bytes(docs, override):
    if override:
        return override
    longest = max((len(w) for d in docs for w in d.words), default=4)
    return max(1, (longest + 1) // 2)


def _tokenizer_cfg(args, docs) -> TokenizerConfig:
    return TokenizerConfig(word_bytes=_infer_word_bytes(docs, args.word_bytes), minn=args.minn,
                           maxn=args.maxn, buckets=args.buckets, min_count=args.min_count)


def _model_cfg(args, mode) -> ModelConfig:
    return ModelConfig(dim=args.dim, lr0=args.lr, epochs=args.epochs, neg=args.neg,
                       window=args.window, seed=args.seed, threads=args.threads, mode=mode)


def _load_docs(path):
    docs = read_corpus(path)
    if not docs:
        raise DataError(f"{path}: corpus is empty")
    return docs


def cmd_pretrain(args) -> int:
    docs = _load_docs(args.corpus)
    vocab = build_vocabulary(docs, _tokenizer_cfg(args, docs))
    model, report = train_unsupervised(docs, _model_cfg(args, "skipgram"), vocab)
    save_model(model, args.out)
    print(f"pretrained {len(vocab)} words, {report.pairs} pairs, "
          f"final loss {report.epoch_losses[-1]:.4f} -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    docs = _load_docs(args.corpus)
    if any(d.label is None for d in docs):
        raise DataError("supervised training needs a __label__ on every line")
    labels = sorted({d.label for d in docs})
    vocab = build_vocabulary(docs, _tokenizer_cfg(args, docs))
    cfg = _model_cfg(args, "supervised")
    init = None
    if args.pretrained:
        init = load_pretrained(init_model(cfg, vocab, labels), args.pretrained)
    lab_idx = {lab: i for i, lab in enumerate(labels)}
    pairs = [(vocab.doc_to_ids(d), lab_idx[d.label]) for d in docs]
    pairs = [p for p in pairs if len(p[0])]
    model, report = train_supervised(pairs, cfg, vocab, labels, init=init)
    svms = None
    if args.svm:
        X = np.array([packet_vector(ids, model) for ids, _ in pairs])
        svms = train_one_vs_rest(X, [labels[y] for _, y in pairs], labels, args.svm_lambda,
                                 args.svm_epochs, args.seed)
    save_model(model, args.out, svms)
    print(f"trained on {len(pairs)} documents, {len(labels)} labels, "
          f"final loss {report.epoch_losses[-1]:.4f} -> {args.out}")
    return EXIT_OK


# -- inference ------------------------------------------------------------------------


def cmd_predict(args) -> int:
    model, svms = load_model(args.model)
    if args.svm and svms is None:
        raise UsageError(f"{args.model} holds no svm models")
    docs = read_corpus(args.corpus)
    with open(args.out, "w", encoding="utf-8") as out:
        for doc in docs:
            ids = model.vocab.doc_to_ids(doc)
            if args.svm:
                x = packet_vector(ids, model)
                scores = sorted(((svm_predict(m, x)[0], m.label) for m in svms.models),
                                key=lambda t: -t[0])[: args.k]
                out.write("\t".join(f"{lab}\t{s:.6g}" for s, lab in scores) + "\n")
            else:
                top = predict(model, ids, args.k)
                out.write("\t".join(f"{lab}\t{p:.6g}" for lab, p in top) + "\n")
    print(f"wrote {len(docs)} predictions to {args.out}")
    return EXIT_OK


def _write_report(report, path, header: str):
    text = header + report.to_text()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    stem, ext = os.path.splitext(path)
    csv_path = stem + ".csv" if ext != ".csv" else path + ".flat.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
    return csv_path


def cmd_evaluate(args) -> int:
    model, _ = load_model(args.model)
    docs = _load_docs(args.corpus)
    if any(d.label is None for d in docs):
        raise DataError("evaluation needs a __label__ on every line")
    if args.split == "by-day":
        spec = SplitSpec("by_day", seed=args.seed, train_days=_csv_list(args.train_days or ""),
                         test_days=_csv_list(args.test_days or ""))
    else:
        spec = SplitSpec("stratified_random", train_fraction=args.fraction, seed=args.seed)
    train_docs, test_docs = split_corpus(docs, spec)
    enc = lambda ds: [(model.vocab.doc_to_ids(d), d.label) for d in ds]
    train, test = enc(train_docs), enc(test_docs)

    if args.retrain:
        labels = sorted({lab for _, lab in train})
        idx = {lab: i for i, lab in enumerate(labels)}
        cfg = ModelConfig(**{**model.config.__dict__, "mode": "supervised"})
        model, _ = train_supervised([(ids, idx[lab]) for ids, lab in train if len(ids)], cfg,
                                    model.vocab, labels)

    if args.svm:
        pos = args.svm
        other = "not_" + pos
        data = embed_dataset(model, train, pos)
        svm = pegasos_train(data, args.svm_lambda, args.svm_epochs, args.seed)
        pairs = []
        for ids, lab in test:
            cls = svm_predict(svm, packet_vector(ids, model))[1]
            pairs.append((pos if lab == pos else other, pos if cls == 1 else other))
        labels = [pos, other]
        path_name = f"embed+svm ({pos} vs rest)"
    else:
        pairs = [(lab, predict(model, ids, 1)[0][0]) for ids, lab in test]
        labels = list(model.labels) + sorted({lab for _, lab in test} - set(model.labels))
        path_name = "supervised softmax"
    report = evaluate(pairs, labels)
    header = (f"path: {path_name}\nsplit: {spec.strategy}\ntrain: {len(train)}\n"
              f"test: {len(test)}\n")
    csv_path = _write_report(report, args.report, header)
    print(f"macro_f1 {report.macro_f1:.4f} accuracy {report.accuracy:.4f} "
          f"-> {args.report}, {csv_path}")
    return EXIT_OK


def cmd_export(args) -> int:
    model, _ = load_model(args.model)
    export_vectors(model, args.out, args.scope)
    print(f"exported {args.scope} vectors to {args.out}")
    return EXIT_OK


def cmd_neighbors(args) -> int:
    model, _ = load_model(args.model)
    for word, sim in nearest_neighbors(model, args.word, args.k):
        print(f"{word}\t{sim:.6f}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------


def _hyper(p, mode):
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.1 if mode == "supervised" else 0.05)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--minn", type=int, default=2)
    p.add_argument("--maxn", type=int, default=4)
    p.add_argument("--buckets", type=int, default=2_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--neg", type=int, default=5)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--word-bytes", type=int, default=None,
                   help="word width; inferred from the corpus when omitted")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pktembed", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="pcap files -> labeled hex corpus")
    p.add_argument("--pcap", nargs="+", required=True)
    p.add_argument("--labels")
    p.add_argument("--slice", choices=sorted(SLICE_FLAGS), default="ip")
    p.add_argument("--word-bytes", type=int, default=2)
    p.add_argument("--max-bytes", type=int, default=1500)
    p.add_argument("--day")
    p.add_argument("--default-label")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("pretrain", help="skip-gram pre-training on a corpus")
    p.add_argument("--corpus", required=True)
    _hyper(p, "skipgram")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train", help="supervised classifier training")
    p.add_argument("--corpus", required=True)
    p.add_argument("--pretrained")
    _hyper(p, "supervised")
    p.add_argument("--svm", action="store_true", help="also fit one-vs-rest SVMs on the embeddings")
    p.add_argument("--svm-lambda", type=float, default=1e-3)
    p.add_argument("--svm-epochs", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="top-k labels per corpus line")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--svm", action="store_true", help="score with the stored SVMs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="split, predict and report metrics")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--svm", metavar="POSITIVE_LABEL")
    p.add_argument("--svm-lambda", type=float, default=1e-3)
    p.add_argument("--svm-epochs", type=int, default=20)
    p.add_argument("--split", choices=["by-day", "stratified"], default="stratified")
    p.add_argument("--train-days")
    p.add_argument("--test-days")
    p.add_argument("--fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--retrain", action="store_true",
                   help="retrain the classifier on the train split before scoring")
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-vecs", help="write text vectors")
    p.add_argument("--model", required=True)
    p.add_argument("--scope", choices=["words", "full"], default="words")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("neighbors", help="nearest vocabulary words by cosine")
    p.add_argument("--model", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(func=cmd_neighbors)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.debug("kernel backend %s", kernels.active.NAME)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"pktembed: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except UsageError as exc:
        print(f"pktembed: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, PktEmbedError, OSError, UnicodeDecodeError) as exc:
        print(f"pktembed: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # config invariants (dim < 1, minn > maxn, ...) are caller mistakes
        print(f"pktembed: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
