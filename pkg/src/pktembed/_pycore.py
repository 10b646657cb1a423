"""Pure-Python/numpy implementation of the hot kernels.

Mirrors ``_core.pyx`` function for function. Used when the extension is not
built or when ``PKTEMBED_PURE=1`` is set. Sampling uses the same splitmix64
stream as the compiled core, so both backends visit identical
(center, context, negative) sequences; floating-point results agree to
rounding.
"""
import math

import numpy as np

NAME = "python"

_MASK = 0xFFFFFFFFFFFFFFFF
_FNV_OFFSET = 2166136261
_FNV_PRIME = 16777619


def fnv1a32(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & 0xFFFFFFFF
    return h


def word_ngram_ids(word: str, minn: int, maxn: int, nwords: int, buckets: int) -> np.ndarray:
    s = "<" + word + ">"
    L = len(s)
    out = []
    for i in range(L):
        for n in range(minn, maxn + 1):
            if i + n > L:
                break
            out.append(nwords + fnv1a32(s[i : i + n].encode("ascii")) % buckets)
    return np.asarray(out, dtype=np.int64)


def _key_to_word(key: int, word_bytes: int) -> str:
    # keys enumerate words of length 1..word_bytes bytes: base(L) + value
    base = 0
    for length in range(1, word_bytes + 1):
        span = 256**length
        if key < base + span:
            return format(key - base, "0%dx" % (2 * length))
        base += span
    raise ValueError("key out of range")


def build_word_table(word_bytes, minn, maxn, key_word_ids, nwords, buckets):
    """CSR table: key -> [word id if in vocab] + n-gram ids."""
    nkeys = len(key_word_ids)
    offsets = np.zeros(nkeys + 1, dtype=np.int64)
    chunks = []
    for key in range(nkeys):
        grams = word_ngram_ids(_key_to_word(key, word_bytes), minn, maxn, nwords, buckets)
        wid = key_word_ids[key]
        if wid >= 0:
            grams = np.concatenate(([wid], grams)).astype(np.int64)
        chunks.append(grams)
        offsets[key + 1] = offsets[key] + len(grams)
    ids = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
    return offsets, ids


def bytes_to_keys(data: bytes, word_bytes: int) -> np.ndarray:
    arr = np.frombuffer(data, dtype=np.uint8).astype(np.int64)
    nfull = len(arr) // word_bytes
    keys = np.zeros(nfull, dtype=np.int64)
    for j in range(word_bytes):
        keys = keys * 256 + arr[j : nfull * word_bytes : word_bytes]
    base_full = sum(256**length for length in range(1, word_bytes))
    keys += base_full
    rem = len(arr) - nfull * word_bytes
    if rem:
        v = 0
        for b in arr[nfull * word_bytes :]:
            v = v * 256 + int(b)
        keys = np.append(keys, sum(256**length for length in range(1, rem)) + v)
    return keys


def bytes_to_ids(data: bytes, word_bytes: int, offsets: np.ndarray, table: np.ndarray) -> np.ndarray:
    keys = bytes_to_keys(data, word_bytes)
    if len(keys) == 0:
        return np.zeros(0, dtype=np.int64)
    starts = offsets[keys]
    lens = offsets[keys + 1] - starts
    total = int(lens.sum())
    shift = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    return table[np.arange(total, dtype=np.int64) + shift]


# -- randomness ---------------------------------------------------------------


def rng_next(state: int):
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31), state


def _softplus(x: float) -> float:
    # log(1 + exp(x)) without overflow
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


# -- supervised ---------------------------------------------------------------


def supervised_step(inp, out, ids, label, lr):
    ids = np.asarray(ids, dtype=np.int64)
    n = len(ids)
    h = np.add.reduce(inp[ids], axis=0, dtype=np.float64) / n
    z = out.astype(np.float64) @ h
    zmax = z.max()
    e = np.exp(z - zmax)
    s = e.sum()
    loss = math.log(s) + zmax - z[label]
    g = e / s
    g[label] -= 1.0
    grad_h = out.T.astype(np.float64) @ g
    out[...] = out - lr * np.outer(g, h)
    upd = (-lr / n) * grad_h
    for i in ids:
        inp[i] = inp[i] + upd
    return float(loss)


def supervised_epoch(inp, out, flat, offsets, ntok, labels, order, lr0, done, total):
    loss_sum = 0.0
    for d in order:
        lr = lr0 * max(0.0, 1.0 - done / total)
        ids = flat[offsets[d] : offsets[d + 1]]
        if len(ids):
            loss_sum += supervised_step(inp, out, ids, int(labels[d]), lr)
        done += int(ntok[d])
    return loss_sum, done


# -- skip-gram ----------------------------------------------------------------


def skipgram_step(inp, out, center_ids, context, negatives, lr):
    center_ids = np.asarray(center_ids, dtype=np.int64)
    h = np.add.reduce(inp[center_ids], axis=0, dtype=np.float64)
    grad = np.zeros_like(h)
    loss = 0.0
    targets = [(int(context), 1.0)] + [(int(t), 0.0) for t in negatives]
    for target, lab in targets:
        row = out[target]
        score = float(row.astype(np.float64) @ h)
        loss += _softplus(-score) if lab else _softplus(score)
        sig = 1.0 / (1.0 + math.exp(-score)) if score >= 0 else math.exp(score) / (1.0 + math.exp(score))
        alpha = lr * (lab - sig)
        grad += alpha * row.astype(np.float64)
        out[target] = row + alpha * h
    for i in center_ids:
        inp[i] = inp[i] + grad
    return loss


def draw_negatives(context, neg, alias_prob, alias_idx, state):
    n = len(alias_prob)
    drawn = []
    for _ in range(neg):
        for _attempt in range(20):
            r, state = rng_next(state)
            col = r % n
            r, state = rng_next(state)
            u = (r >> 11) * (1.0 / 9007199254740992.0)
            cand = col if u < alias_prob[col] else int(alias_idx[col])
            if cand != context:
                drawn.append(cand)
                break
    return drawn, state


def skipgram_epoch(inp, out, words_flat, doc_offsets, sub_flat, sub_offsets,
                   alias_prob, alias_idx, order, window, neg, lr0, done, total, state):
    loss_sum = 0.0
    npairs = 0
    for d in order:
        words = words_flat[doc_offsets[d] : doc_offsets[d + 1]]
        L = len(words)
        for i in range(L):
            lr = lr0 * max(0.0, 1.0 - done / total)
            r, state = rng_next(state)
            b = 1 + r % window
            w = int(words[i])
            center = sub_flat[sub_offsets[w] : sub_offsets[w + 1]]
            for c in range(max(0, i - b), min(L, i + b + 1)):
                if c == i:
                    continue
                ctx = int(words[c])
                negs, state = draw_negatives(ctx, neg, alias_prob, alias_idx, state)
                loss_sum += skipgram_step(inp, out, center, ctx, negs, lr)
                npairs += 1
            done += 1
    return loss_sum, npairs, done, state
