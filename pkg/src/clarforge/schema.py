"""Schema extraction: scored keyphrases plus (verb, key-phrase, relation) elements.

Keyphrases come from an unsupervised statistical scorer in the YAKE family:
candidate n-grams (up to ``max_len`` tokens, never starting or ending on a
stopword) are scored from per-term casing, position, frequency,
relatedness-to-context and sentence-dispersion features; lower scores mean
more important phrases.

Each keyphrase becomes a schema element: a triplet when a governing verb is
found (via a supplied dependency parse, or by token distance against the
bundled verb lexicon when no parse is available), otherwise a unary element.
"""

import re
from dataclasses import dataclass, field
from math import log
from statistics import median

from clarforge.textdata import STOPWORDS, is_verb_token

DEFAULT_MAX_LEN = 3
DEFAULT_TOP_K = 10
DEFAULT_WINDOW = 1
DEFAULT_DEDUP = 0.9

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_SENTENCE_END = ".!?"


@dataclass(frozen=True)
class SchemaElement:
    kind: str  # "triplet" | "unary"
    keyphrase: str
    verb: str | None = None
    relation: str | None = None

    @property
    def surface(self) -> str:
        if self.kind == "triplet":
            return f"{self.verb} {self.keyphrase}"
        return self.keyphrase

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "keyphrase": self.keyphrase,
            "verb": self.verb,
            "relation": self.relation,
            "surface": self.surface,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SchemaElement":
        return cls(kind=d["kind"], keyphrase=d["keyphrase"], verb=d.get("verb"),
                   relation=d.get("relation"))


@dataclass(frozen=True)
class ParsedText:
    """Dependency parse of one text; heads are 1-based, 0 marks a root."""

    tokens: list[str]
    lemmas: list[str]
    pos: list[str]
    heads: list[int]
    deprels: list[str]


@dataclass
class Keyphrase:
    phrase: str  # lowercased, whitespace as in the source span
    score: float
    first_index: int  # word-token index of the first occurrence
    span: tuple[int, int]  # [start, end] word-token indices, inclusive
    char_span: tuple[int, int] = field(default=(0, 0))


@dataclass
class _Word:
    surface: str
    lower: str
    start: int
    end: int
    sentence: int
    chunk: int
    sent_initial: bool


def _tokenize_words(text: str) -> tuple[list[_Word], int]:
    """Word tokens annotated with sentence/chunk ids; returns (words, n_sentences)."""
    words: list[_Word] = []
    sentence = 0
    chunk = 0
    prev_end = 0
    sent_has_word = False
    for m in _TOKEN_RE.finditer(text):
        gap = text[prev_end: m.start()]
        if "\n" in gap and sent_has_word:
            sentence += 1
            chunk += 1
            sent_has_word = False
        tok = m.group()
        prev_end = m.end()
        if not re.match(r"\w", tok):
            chunk += 1
            if tok in _SENTENCE_END and sent_has_word:
                sentence += 1
                sent_has_word = False
            continue
        words.append(_Word(
            surface=tok,
            lower=tok.lower(),
            start=m.start(),
            end=m.end(),
            sentence=sentence,
            chunk=chunk,
            sent_initial=not sent_has_word,
        ))
        sent_has_word = True
    n_sentences = (words[-1].sentence + 1) if words else 0
    return words, n_sentences


def _term_scores(words: list[_Word], n_sentences: int, window: int) -> dict[str, float]:
    """Per-term importance S(t); lower is more important."""
    occurrences: dict[str, list[int]] = {}
    for i, w in enumerate(words):
        occurrences.setdefault(w.lower, []).append(i)

    tf_all = {t: len(idxs) for t, idxs in occurrences.items()}
    valid_tfs = [tf for t, tf in tf_all.items() if t not in STOPWORDS]
    if valid_tfs:
        mean_tf = sum(valid_tfs) / len(valid_tfs)
        var = sum((v - mean_tf) ** 2 for v in valid_tfs) / len(valid_tfs)
        std_tf = var ** 0.5
    else:
        mean_tf, std_tf = 1.0, 0.0
    max_tf = max(tf_all.values()) if tf_all else 1

    scores: dict[str, float] = {}
    for term, idxs in occurrences.items():
        tf = tf_all[term]
        tf_upper = 0
        tf_acronym = 0
        sentences = set()
        left: list[str] = []
        right: list[str] = []
        for i in idxs:
            w = words[i]
            sentences.add(w.sentence)
            if w.surface.isupper() and len(w.surface) > 1:
                tf_acronym += 1
            elif w.surface[0].isupper() and not w.sent_initial:
                tf_upper += 1
            for j in range(max(0, i - window), i):
                if words[j].chunk == w.chunk:
                    left.append(words[j].lower)
            for j in range(i + 1, min(len(words), i + 1 + window)):
                if words[j].chunk == w.chunk:
                    right.append(words[j].lower)
        t_case = max(tf_upper, tf_acronym) / (1.0 + log(tf))
        t_pos = log(log(3.0 + median(sorted(sentences))))
        t_fnorm = tf / (mean_tf + std_tf) if (mean_tf + std_tf) > 0 else tf
        dl = (len(set(left)) / len(left)) if left else 0.0
        dr = (len(set(right)) / len(right)) if right else 0.0
        t_rel = 1.0 + (dl + dr) * (tf / max_tf)
        t_sent = len(sentences) / n_sentences if n_sentences else 0.0
        scores[term] = (t_rel * t_pos) / (t_case + t_fnorm / t_rel + t_sent / t_rel)
    return scores


def _levenshtein_ratio(a: str, b: str) -> float:
    if a == b:
        return 1.0
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return 0.0
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        ca = a[i - 1]
        for j in range(1, lb + 1):
            cost = 0 if ca == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return 1.0 - prev[lb] / max(la, lb)


def extract_keyphrases(
    text: str,
    max_len: int = DEFAULT_MAX_LEN,
    top_k: int = DEFAULT_TOP_K,
    window: int = DEFAULT_WINDOW,
    dedup_threshold: float = DEFAULT_DEDUP,
) -> list[Keyphrase]:
    """Top keyphrases of ``text``, ascending score, ties by first occurrence."""
    words, n_sentences = _tokenize_words(text)
    if not words:
        return []
    scores = _term_scores(words, n_sentences, window)

    # enumerate candidate n-grams within chunks; count phrase frequency
    spans: dict[tuple[str, ...], list[tuple[int, int]]] = {}
    for i, w in enumerate(words):
        for n in range(1, max_len + 1):
            j = i + n - 1
            if j >= len(words) or words[j].chunk != w.chunk:
                break
            key = tuple(words[k].lower for k in range(i, j + 1))
            spans.setdefault(key, []).append((i, j))

    candidates: list[Keyphrase] = []
    for key, occ in spans.items():
        if key[0] in STOPWORDS or key[-1] in STOPWORDS:
            continue
        term_s = [scores[t] for t in key]
        prod = 1.0
        for s in term_s:
            prod *= s
        tf_phrase = len(occ)
        score = prod / (tf_phrase * (1.0 + sum(term_s)))
        i, j = occ[0]
        phrase = text[words[i].start: words[j].end].lower()
        candidates.append(Keyphrase(
            phrase=phrase,
            score=score,
            first_index=i,
            span=(i, j),
            char_span=(words[i].start, words[j].end),
        ))

    candidates.sort(key=lambda kp: (kp.score, kp.first_index, kp.phrase))
    kept: list[Keyphrase] = []
    for kp in candidates:
        if any(_levenshtein_ratio(kp.phrase, other.phrase) >= dedup_threshold for other in kept):
            continue
        kept.append(kp)
        if len(kept) >= top_k:
            break
    return kept


def _fallback_verb(words: list[_Word], span: tuple[int, int]) -> str | None:
    """Nearest lexicon verb outside the phrase span; ties prefer the preceding one."""
    i, j = span
    best: tuple[int, int, int] | None = None
    best_tok = None
    for v, w in enumerate(words):
        if i <= v <= j or not is_verb_token(w.lower):
            continue
        dist = i - v if v < i else v - j
        key = (dist, 0 if v < i else 1, v)
        if best is None or key < best:
            best = key
            best_tok = w.lower
    return best_tok


def _match_span(parse_tokens: list[str], phrase_words: list[str]) -> tuple[int, int] | None:
    lowered = [t.lower() for t in parse_tokens]
    n = len(phrase_words)
    for i in range(len(lowered) - n + 1):
        if lowered[i: i + n] == phrase_words:
            return (i, i + n - 1)
    return None


def _parse_verb(parse: ParsedText, span: tuple[int, int]) -> tuple[str, str] | None:
    """(verb surface lowercased, phrase-head relation) via the head chain."""
    i, j = span
    head_tok = None
    for t in range(i, j + 1):
        h = parse.heads[t]
        if h == 0 or not (i + 1 <= h <= j + 1):
            head_tok = t
    if head_tok is None:
        head_tok = j
    relation = parse.deprels[head_tok]
    cur = parse.heads[head_tok]
    seen = set()
    while cur != 0 and cur not in seen:
        seen.add(cur)
        if parse.pos[cur - 1] == "VERB":
            return parse.tokens[cur - 1].lower(), relation
        cur = parse.heads[cur - 1]
    return None


def extract_schema(
    text: str,
    parse: ParsedText | None = None,
    max_len: int = DEFAULT_MAX_LEN,
    top_k: int = DEFAULT_TOP_K,
) -> list[SchemaElement]:
    """Schema elements for ``text``: one element per extracted keyphrase."""
    words, _ = _tokenize_words(text)
    elements: list[SchemaElement] = []
    for kp in extract_keyphrases(text, max_len=max_len, top_k=top_k):
        verb = None
        relation = None
        if parse is not None:
            span = _match_span(parse.tokens, kp.phrase.split())
            if span is not None:
                found = _parse_verb(parse, span)
                if found is not None:
                    verb, relation = found
        else:
            verb = _fallback_verb(words, kp.span)
            if verb is not None:
                relation = "dep"
        if verb is not None:
            elements.append(SchemaElement(kind="triplet", keyphrase=kp.phrase,
                                          verb=verb, relation=relation))
        else:
            elements.append(SchemaElement(kind="unary", keyphrase=kp.phrase))
    return elements
