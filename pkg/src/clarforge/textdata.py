"""Frozen lexical resources: stopwords and a verb lexicon.

Both lists are versioned with the package so that extraction results are
reproducible; do not edit without bumping LEXICON_VERSION.
"""

LEXICON_VERSION = "1"

STOPWORDS = frozenset("""
a about above after again against all am an and any are aren't as at be because
been before being below between both but by can can't cannot could couldn't did
didn't do does doesn't doing don't down during each few for from further had
hadn't has hasn't have haven't having he he'd he'll he's her here here's hers
herself him himself his how how's i i'd i'll i'm i've if in into is isn't it
it's its itself let's me more most mustn't my myself no nor not of off on once
only or other ought our ours ourselves out over own same shan't she she'd
she'll she's should shouldn't so some such than that that's the their theirs
them themselves then there there's these they they'd they'll they're they've
this those through to too under until up very was wasn't we we'd we'll we're
we've were weren't what what's when when's where where's which while who who's
whom why why's with won't would wouldn't you you'd you'll you're you've your
yours yourself yourselves
""".split())

# Lemmas of verbs common in API documentation and notebook narration.  Used by
# the parse-free schema fallback to spot verb tokens; inflected forms are
# reduced with suffix stripping before lookup.
VERB_LEMMAS = frozenset("""
add aggregate align analyze append apply assign attach build calculate call
change check clean combine compare compute concatenate construct convert copy
count create decode delete describe detect display downcast draw drop dump
encode estimate evaluate explore export extract fill filter find fit flatten
generate get give group handle impute include insert inspect join keep learn
load look make map merge normalize obtain optimize persist pick plot
predict prepare preprocess print process read reduce remove rename replace
resample resize return run save scale score search select set show shuffle
sort split stack standardize start store submit sum summarize test tokenize
train transform try tune update use validate visualize write
""".split())

_DOUBLED = frozenset("bdgklmnprt")


def strip_verb_suffix(token: str) -> str:
    """Reduce an inflected verb form to a candidate lemma.

    Handles -s/-es, -ed and -ing with doubled-consonant repair
    (fitting -> fit, dropped -> drop).  Crude but deterministic.
    """
    w = token.lower()
    for suffix in ("ing", "ed"):
        if w.endswith(suffix) and len(w) > len(suffix) + 1:
            stem = w[: -len(suffix)]
            if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] in _DOUBLED:
                stem = stem[:-1]
            if stem in VERB_LEMMAS:
                return stem
            if stem + "e" in VERB_LEMMAS:
                return stem + "e"
    if w.endswith("es") and w[:-2] in VERB_LEMMAS:
        return w[:-2]
    if w.endswith("s") and not w.endswith("ss") and w[:-1] in VERB_LEMMAS:
        return w[:-1]
    return w


def is_verb_token(token: str) -> bool:
    return strip_verb_suffix(token) in VERB_LEMMAS
