"""Pure-Python trigram-hashing similarity kernel.

Reference implementation of the lexical encoder primitive: texts are
lowercased, split into words on the UTF-8 byte level (``[0-9a-z_]`` and all
bytes >= 0x80 are word bytes), each word is padded with ``#`` at both
boundaries, and every 3-byte window is hashed with 64-bit FNV-1a into 1024
bins.  Similarity is the cosine over the resulting count vectors.

The compiled kernel in ``_trigram.pyx`` must produce bit-identical floats:
dot product and norms are exact integer sums, and the final
``dot / (sqrt(na) * sqrt(nb))`` uses only correctly-rounded IEEE-754 ops.
"""

from math import sqrt

DIM = 1024
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

BACKEND = "pure"


def _is_word_byte(b: int) -> bool:
    return (
        0x61 <= b <= 0x7A  # a-z
        or 0x30 <= b <= 0x39  # 0-9
        or b == 0x5F  # _
        or b >= 0x80  # any non-ASCII byte
    )


def _fnv1a3(b0: int, b1: int, b2: int) -> int:
    h = _FNV_OFFSET
    h = ((h ^ b0) * _FNV_PRIME) & _MASK64
    h = ((h ^ b1) * _FNV_PRIME) & _MASK64
    h = ((h ^ b2) * _FNV_PRIME) & _MASK64
    return h


def trigram_counts(text: str) -> list[int]:
    """Hashed character-trigram counts of ``text`` (1024 bins)."""
    counts = [0] * DIM
    data = text.lower().encode("utf-8")
    n = len(data)
    i = 0
    pad = 0x23  # '#'
    while i < n:
        if not _is_word_byte(data[i]):
            i += 1
            continue
        j = i
        while j < n and _is_word_byte(data[j]):
            j += 1
        # padded word: '#' + data[i:j] + '#'
        prev2, prev1 = -1, pad
        for k in range(i, j):
            cur = data[k]
            if prev2 >= 0:
                counts[_fnv1a3(prev2, prev1, cur) & (DIM - 1)] += 1
            prev2, prev1 = prev1, cur
        counts[_fnv1a3(prev2, prev1, pad) & (DIM - 1)] += 1
        i = j
    return counts


def _cosine(a: list[int], b: list[int]) -> float:
    dot = 0
    na = 0
    nb = 0
    for i in range(DIM):
        x = a[i]
        y = b[i]
        dot += x * y
        na += x * x
        nb += y * y
    if na == 0 or nb == 0:
        return 0.0
    return dot / (sqrt(float(na)) * sqrt(float(nb)))


def similarity(a: str, b: str) -> float:
    """Cosine similarity of the hashed trigram counts of two texts."""
    return _cosine(trigram_counts(a), trigram_counts(b))


def pair_scores(texts_a: list[str], texts_b: list[str]) -> list[list[float]]:
    """All-pairs similarity matrix, |texts_a| rows by |texts_b| columns."""
    va = [trigram_counts(t) for t in texts_a]
    vb = [trigram_counts(t) for t in texts_b]
    return [[_cosine(x, y) for y in vb] for x in va]


def unit_vector(text: str) -> list[float]:
    """L2-normalized trigram count vector (all zeros for wordless text)."""
    counts = trigram_counts(text)
    norm = sqrt(float(sum(c * c for c in counts)))
    if norm == 0.0:
        return [0.0] * DIM
    return [c / norm for c in counts]
