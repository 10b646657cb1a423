# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: FNV-1a hashing, word/n-gram id tables, and the
supervised / skip-gram SGD loops. Same surface as ``_pycore``."""

import numpy as np
cimport numpy as cnp
from cython cimport floating
from libc.math cimport exp, log, log1p
from libc.stdint cimport int64_t, uint8_t, uint32_t, uint64_t
from libc.stdlib cimport malloc, free

cnp.import_array()

NAME = "compiled"

cdef uint32_t FNV_OFFSET = 2166136261u
cdef uint32_t FNV_PRIME = 16777619u
cdef const char* HEXCHARS = b"0123456789abcdef"


cdef inline uint32_t _fnv(const uint8_t* data, Py_ssize_t n) noexcept nogil:
    cdef uint32_t h = FNV_OFFSET
    cdef Py_ssize_t i
    for i in range(n):
        h = (h ^ data[i]) * FNV_PRIME
    return h


def fnv1a32(const uint8_t[::1] data):
    if data.shape[0] == 0:
        return int(FNV_OFFSET)
    return int(_fnv(&data[0], data.shape[0]))


cdef Py_ssize_t _ngrams_into(const uint8_t* s, Py_ssize_t L, int minn, int maxn,
                             int64_t nwords, int64_t buckets, int64_t* out) noexcept nogil:
    # s is the bracketed word "<...>"
    cdef Py_ssize_t i, k = 0
    cdef int n
    for i in range(L):
        for n in range(minn, maxn + 1):
            if i + n > L:
                break
            out[k] = nwords + <int64_t>(_fnv(s + i, n) % <uint64_t>buckets)
            k += 1
    return k


def word_ngram_ids(str word, int minn, int maxn, int64_t nwords, int64_t buckets):
    cdef bytes b = ("<" + word + ">").encode("ascii")
    cdef const uint8_t* s = b
    cdef Py_ssize_t L = len(b)
    cdef cnp.ndarray[int64_t, ndim=1] out = np.empty(max(L * (maxn - minn + 1), 1), dtype=np.int64)
    cdef Py_ssize_t k = _ngrams_into(s, L, minn, maxn, nwords, buckets, &out[0])
    return out[:k].copy()


def build_word_table(int word_bytes, int minn, int maxn, const int64_t[::1] key_word_ids,
                     int64_t nwords, int64_t buckets):
    """CSR table: key -> [word id if in vocab] + n-gram ids."""
    cdef Py_ssize_t nkeys = key_word_ids.shape[0]
    cdef int maxlen = 2 * word_bytes + 2
    cdef Py_ssize_t per = maxlen * (maxn - minn + 1) + 1
    cdef cnp.ndarray[int64_t, ndim=1] offsets = np.zeros(nkeys + 1, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] ids = np.empty(max(nkeys * per, 1), dtype=np.int64)
    cdef int64_t[::1] ov = offsets
    cdef int64_t[::1] iv = ids
    cdef uint8_t buf[20]
    cdef Py_ssize_t key, pos = 0, base, span
    cdef int length, j
    cdef uint64_t value
    with nogil:
        for key in range(nkeys):
            base = 0
            length = 1
            span = 256
            while key >= base + span:
                base += span
                length += 1
                span *= 256
            value = <uint64_t>(key - base)
            buf[0] = 60  # '<'
            for j in range(2 * length):
                buf[2 * length - j] = HEXCHARS[value & 0xF]
                value >>= 4
            buf[2 * length + 1] = 62  # '>'
            if key_word_ids[key] >= 0:
                iv[pos] = key_word_ids[key]
                pos += 1
            pos += _ngrams_into(buf, 2 * length + 2, minn, maxn, nwords, buckets, &iv[pos])
            ov[key + 1] = pos
    return offsets, ids[:pos].copy()


def bytes_to_ids(const uint8_t[::1] data, int word_bytes, const int64_t[::1] offsets,
                 const int64_t[::1] table):
    cdef Py_ssize_t n = data.shape[0]
    cdef Py_ssize_t nfull = n // word_bytes
    cdef Py_ssize_t rem = n - nfull * word_bytes
    cdef Py_ssize_t i, j, total = 0, pos = 0
    cdef int64_t key, base_full = 0, base_rem = 0, span = 1
    for j in range(1, word_bytes + 1):
        span *= 256
        if j < word_bytes:
            base_full += span
        if j < rem:
            base_rem += span
    cdef Py_ssize_t nkeys = nfull + (1 if rem else 0)
    cdef cnp.ndarray[int64_t, ndim=1] keys = np.empty(max(nkeys, 1), dtype=np.int64)
    for i in range(nfull):
        key = 0
        for j in range(word_bytes):
            key = key * 256 + data[i * word_bytes + j]
        keys[i] = key + base_full
        total += offsets[keys[i] + 1] - offsets[keys[i]]
    if rem:
        key = 0
        for j in range(rem):
            key = key * 256 + data[nfull * word_bytes + j]
        keys[nfull] = key + base_rem
        total += offsets[keys[nfull] + 1] - offsets[keys[nfull]]
    cdef cnp.ndarray[int64_t, ndim=1] out = np.empty(total, dtype=np.int64)
    cdef int64_t a, b
    for i in range(nkeys):
        a = offsets[keys[i]]
        b = offsets[keys[i] + 1]
        while a < b:
            out[pos] = table[a]
            pos += 1
            a += 1
    return out


# -- randomness -----------------------------------------------------------------

cdef inline uint64_t _splitmix(uint64_t* state) noexcept nogil:
    state[0] += 0x9E3779B97F4A7C15ULL
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def rng_next(uint64_t state):
    cdef uint64_t r = _splitmix(&state)
    return r, state


cdef inline double _softplus(double x) noexcept nogil:
    if x > 0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline double _sigmoid(double x) noexcept nogil:
    cdef double e
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


# -- supervised -----------------------------------------------------------------

cdef double _sup_step(floating[:, ::1] inp, floating[:, ::1] out, const int64_t* ids,
                      Py_ssize_t n, Py_ssize_t label, double lr,
                      double* h, double* z, double* grad) noexcept nogil:
    cdef Py_ssize_t dim = inp.shape[1], K = out.shape[0]
    cdef Py_ssize_t i, j, k
    cdef int64_t row
    cdef double zmax, s, loss, gk, scale
    for j in range(dim):
        h[j] = 0.0
        grad[j] = 0.0
    for i in range(n):
        row = ids[i]
        for j in range(dim):
            h[j] += inp[row, j]
    for j in range(dim):
        h[j] /= n
    zmax = -1e308
    for k in range(K):
        s = 0.0
        for j in range(dim):
            s += out[k, j] * h[j]
        z[k] = s
        if s > zmax:
            zmax = s
    s = 0.0
    for k in range(K):
        s += exp(z[k] - zmax)
    loss = log(s) + zmax - z[label]
    for k in range(K):
        gk = exp(z[k] - zmax) / s
        if k == label:
            gk -= 1.0
        for j in range(dim):
            grad[j] += out[k, j] * gk
        for j in range(dim):
            out[k, j] = out[k, j] - lr * gk * h[j]
    scale = -lr / n
    for i in range(n):
        row = ids[i]
        for j in range(dim):
            inp[row, j] = inp[row, j] + scale * grad[j]
    return loss


def supervised_step(floating[:, ::1] inp, floating[:, ::1] out, const int64_t[::1] ids,
                    Py_ssize_t label, double lr):
    cdef Py_ssize_t dim = inp.shape[1]
    cdef double[::1] h = np.empty(dim)
    cdef double[::1] grad = np.empty(dim)
    cdef double[::1] z = np.empty(out.shape[0])
    return _sup_step(inp, out, &ids[0], ids.shape[0], label, lr, &h[0], &z[0], &grad[0])


def supervised_epoch(floating[:, ::1] inp, floating[:, ::1] out,
                     const int64_t[::1] flat, const int64_t[::1] offsets,
                     const int64_t[::1] ntok, const int64_t[::1] labels,
                     const int64_t[::1] order, double lr0, int64_t done, int64_t total):
    cdef Py_ssize_t dim = inp.shape[1]
    cdef double[::1] h = np.empty(dim)
    cdef double[::1] grad = np.empty(dim)
    cdef double[::1] z = np.empty(out.shape[0])
    cdef double loss_sum = 0.0, lr, frac
    cdef Py_ssize_t t, d, n
    with nogil:
        for t in range(order.shape[0]):
            d = order[t]
            frac = 1.0 - <double>done / <double>total
            lr = lr0 * (frac if frac > 0.0 else 0.0)
            n = offsets[d + 1] - offsets[d]
            if n > 0:
                loss_sum += _sup_step(inp, out, &flat[offsets[d]], n, labels[d], lr,
                                      &h[0], &z[0], &grad[0])
            done += ntok[d]
    return loss_sum, done


# -- skip-gram ------------------------------------------------------------------

cdef double _sg_step(floating[:, ::1] inp, floating[:, ::1] out, const int64_t* center,
                     Py_ssize_t n, int64_t context, const int64_t* negs, Py_ssize_t nneg,
                     double lr, double* h, double* grad) noexcept nogil:
    cdef Py_ssize_t dim = inp.shape[1]
    cdef Py_ssize_t i, j, t
    cdef int64_t target, row
    cdef double score, alpha, loss = 0.0, lab
    for j in range(dim):
        h[j] = 0.0
        grad[j] = 0.0
    for i in range(n):
        row = center[i]
        for j in range(dim):
            h[j] += inp[row, j]
    for t in range(nneg + 1):
        if t == 0:
            target = context
            lab = 1.0
        else:
            target = negs[t - 1]
            lab = 0.0
        score = 0.0
        for j in range(dim):
            score += out[target, j] * h[j]
        if lab > 0:
            loss += _softplus(-score)
        else:
            loss += _softplus(score)
        alpha = lr * (lab - _sigmoid(score))
        for j in range(dim):
            grad[j] += alpha * out[target, j]
        for j in range(dim):
            out[target, j] = out[target, j] + alpha * h[j]
    for i in range(n):
        row = center[i]
        for j in range(dim):
            inp[row, j] = inp[row, j] + grad[j]
    return loss


def skipgram_step(floating[:, ::1] inp, floating[:, ::1] out, const int64_t[::1] center_ids,
                  int64_t context, negatives, double lr):
    cdef Py_ssize_t dim = inp.shape[1]
    cdef double[::1] h = np.empty(dim)
    cdef double[::1] grad = np.empty(dim)
    cdef int64_t[::1] negs = np.asarray(list(negatives) + [0], dtype=np.int64)
    return _sg_step(inp, out, &center_ids[0], center_ids.shape[0], context,
                    &negs[0], negs.shape[0] - 1, lr, &h[0], &grad[0])


cdef inline Py_ssize_t _draw_negatives(int64_t context, int neg, const double[::1] prob,
                                       const int64_t[::1] alias, uint64_t* state,
                                       int64_t* out) noexcept nogil:
    cdef Py_ssize_t ncols = prob.shape[0], k = 0
    cdef int i, attempt
    cdef uint64_t r
    cdef int64_t col, cand
    cdef double u
    for i in range(neg):
        for attempt in range(20):
            r = _splitmix(state)
            col = <int64_t>(r % <uint64_t>ncols)
            r = _splitmix(state)
            u = (r >> 11) * (1.0 / 9007199254740992.0)
            cand = col if u < prob[col] else alias[col]
            if cand != context:
                out[k] = cand
                k += 1
                break
    return k


def draw_negatives(int64_t context, int neg, const double[::1] alias_prob,
                   const int64_t[::1] alias_idx, uint64_t state):
    cdef int64_t[::1] buf = np.empty(max(neg, 1), dtype=np.int64)
    cdef Py_ssize_t k = _draw_negatives(context, neg, alias_prob, alias_idx, &state, &buf[0])
    return [int(buf[i]) for i in range(k)], state


def skipgram_epoch(floating[:, ::1] inp, floating[:, ::1] out,
                   const int64_t[::1] words_flat, const int64_t[::1] doc_offsets,
                   const int64_t[::1] sub_flat, const int64_t[::1] sub_offsets,
                   const double[::1] alias_prob, const int64_t[::1] alias_idx,
                   const int64_t[::1] order, int window, int neg, double lr0,
                   int64_t done, int64_t total, uint64_t state):
    cdef Py_ssize_t dim = inp.shape[1]
    cdef double[::1] h = np.empty(dim)
    cdef double[::1] grad = np.empty(dim)
    cdef int64_t[::1] negs = np.empty(max(neg, 1), dtype=np.int64)
    cdef double loss_sum = 0.0, lr, frac
    cdef int64_t npairs = 0, w, ctx
    cdef Py_ssize_t t, d, i, c, L, start, lo, hi, nneg
    cdef int b
    with nogil:
        for t in range(order.shape[0]):
            d = order[t]
            start = doc_offsets[d]
            L = doc_offsets[d + 1] - start
            for i in range(L):
                frac = 1.0 - <double>done / <double>total
                lr = lr0 * (frac if frac > 0.0 else 0.0)
                b = 1 + <int>(_splitmix(&state) % <uint64_t>window)
                w = words_flat[start + i]
                lo = i - b if i - b > 0 else 0
                hi = i + b + 1 if i + b + 1 < L else L
                for c in range(lo, hi):
                    if c == i:
                        continue
                    ctx = words_flat[start + c]
                    nneg = _draw_negatives(ctx, neg, alias_prob, alias_idx, &state, &negs[0])
                    loss_sum += _sg_step(inp, out, &sub_flat[sub_offsets[w]],
                                         sub_offsets[w + 1] - sub_offsets[w], ctx,
                                         &negs[0], nneg, lr, &h[0], &grad[0])
                    npairs += 1
                done += 1
    return loss_sum, npairs, done, state
