# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled trigram-hashing similarity kernel.

Semantics must stay bit-identical to ``clarforge.kernels.pure``: integer
trigram counts, exact int64 dot/norms, one final float division.
"""

from libc.math cimport sqrt
from libc.stdint cimport int64_t, uint64_t
from libc.string cimport memset

DEF DIM = 1024

cdef uint64_t FNV_OFFSET = 14695981039346656037u
cdef uint64_t FNV_PRIME = 1099511628211u

BACKEND = "compiled"


cdef inline bint _is_word_byte(unsigned char b) nogil:
    return (0x61 <= b <= 0x7A) or (0x30 <= b <= 0x39) or b == 0x5F or b >= 0x80


cdef inline uint64_t _fnv1a3(unsigned char b0, unsigned char b1, unsigned char b2) nogil:
    cdef uint64_t h = FNV_OFFSET
    h = (h ^ b0) * FNV_PRIME
    h = (h ^ b1) * FNV_PRIME
    h = (h ^ b2) * FNV_PRIME
    return h


cdef void _count_into(bytes data, int64_t* counts):
    cdef const unsigned char* buf = data
    cdef Py_ssize_t n = len(data)
    cdef Py_ssize_t i = 0, j, k
    cdef int prev2, prev1, cur
    cdef unsigned char pad = 0x23
    while i < n:
        if not _is_word_byte(buf[i]):
            i += 1
            continue
        j = i
        while j < n and _is_word_byte(buf[j]):
            j += 1
        prev2 = -1
        prev1 = pad
        for k in range(i, j):
            cur = buf[k]
            if prev2 >= 0:
                counts[_fnv1a3(<unsigned char> prev2, <unsigned char> prev1, <unsigned char> cur) & (DIM - 1)] += 1
            prev2 = prev1
            prev1 = cur
        counts[_fnv1a3(<unsigned char> prev2, <unsigned char> prev1, pad) & (DIM - 1)] += 1
        i = j


def trigram_counts(text):
    """Hashed character-trigram counts of ``text`` (1024 bins)."""
    cdef int64_t buf[DIM]
    memset(buf, 0, sizeof(buf))
    _count_into(text.lower().encode("utf-8"), buf)
    return [buf[i] for i in range(DIM)]


cdef double _cosine_raw(int64_t* a, int64_t* b) nogil:
    cdef int64_t dot = 0, na = 0, nb = 0
    cdef Py_ssize_t i
    for i in range(DIM):
        dot += a[i] * b[i]
        na += a[i] * a[i]
        nb += b[i] * b[i]
    if na == 0 or nb == 0:
        return 0.0
    return dot / (sqrt(<double> na) * sqrt(<double> nb))


def similarity(a, b):
    """Cosine similarity of the hashed trigram counts of two texts."""
    cdef int64_t ca[DIM]
    cdef int64_t cb[DIM]
    memset(ca, 0, sizeof(ca))
    memset(cb, 0, sizeof(cb))
    _count_into(a.lower().encode("utf-8"), ca)
    _count_into(b.lower().encode("utf-8"), cb)
    return _cosine_raw(ca, cb)


def pair_scores(texts_a, texts_b):
    """All-pairs similarity matrix, |texts_a| rows by |texts_b| columns."""
    cdef Py_ssize_t na = len(texts_a), nb = len(texts_b)
    cdef Py_ssize_t i, j
    import array
    cdef object store_a = array.array("q", bytes(8 * DIM * max(na, 1)))
    cdef object store_b = array.array("q", bytes(8 * DIM * max(nb, 1)))
    cdef int64_t[:] va = store_a
    cdef int64_t[:] vb = store_b
    for i in range(na):
        _count_into(texts_a[i].lower().encode("utf-8"), &va[i * DIM])
    for j in range(nb):
        _count_into(texts_b[j].lower().encode("utf-8"), &vb[j * DIM])
    out = []
    for i in range(na):
        row = []
        for j in range(nb):
            row.append(_cosine_raw(&va[i * DIM], &vb[j * DIM]))
        out.append(row)
    return out


def unit_vector(text):
    """L2-normalized trigram count vector (all zeros for wordless text)."""
    cdef int64_t buf[DIM]
    memset(buf, 0, sizeof(buf))
    _count_into(text.lower().encode("utf-8"), buf)
    cdef int64_t nsq = 0
    cdef Py_ssize_t i
    for i in range(DIM):
        nsq += buf[i] * buf[i]
    if nsq == 0:
        return [0.0] * DIM
    cdef double norm = sqrt(<double> nsq)
    return [buf[i] / norm for i in range(DIM)]
