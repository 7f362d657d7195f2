"""Aligned/missing classification of key operations.

Every key operation's documentation schema is compared against the NLD
schema pair-by-pair; the operation is *missing* when the best pair
similarity falls strictly below the threshold (or either schema is empty).
The threshold is calibrated by grid search over midpoints, maximizing the
F1 of the missing class.

Similarity comes from a pluggable text encoder: the deterministic lexical
trigram encoder (default, fully offline) or the HTTP sidecar.  Pair scores
are cached on disk keyed by (encoder id, SHA-256 of the surface pair).
"""

import json
import os
import threading
from dataclasses import dataclass, field

from clarforge import kernels
from clarforge.codegraph import OpNode
from clarforge.docindex import DocEntry
from clarforge.errors import CalibrationError, MetricsError
from clarforge.schema import SchemaElement
from clarforge.util import sha256_text

LEXICAL_ENCODER_ID = "lexical-trigram-v1"
DEFAULT_THRESHOLD = 0.41

STATUS_ALIGNED = "aligned"
STATUS_MISSING = "missing"


@dataclass
class AlignmentConfig:
    threshold: float = DEFAULT_THRESHOLD
    encoder_id: str = LEXICAL_ENCODER_ID
    cache_path: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")


@dataclass
class KeyOperation:
    node: OpNode
    doc: DocEntry
    nld_elements: list[SchemaElement]
    doc_elements: list[SchemaElement]
    best_score: float
    best_pair: tuple[int, int] | None
    status: str

    def to_dict(self) -> dict:
        return {
            "node": self.node.to_dict(),
            "doc": self.doc.to_dict(),
            "nld_elements": [e.to_dict() for e in self.nld_elements],
            "doc_elements": [e.to_dict() for e in self.doc_elements],
            "best_score": self.best_score,
            "best_pair": list(self.best_pair) if self.best_pair is not None else None,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KeyOperation":
        pair = d.get("best_pair")
        return cls(
            node=OpNode.from_dict(d["node"]),
            doc=DocEntry.from_dict(d["doc"]),
            nld_elements=[SchemaElement.from_dict(e) for e in d["nld_elements"]],
            doc_elements=[SchemaElement.from_dict(e) for e in d["doc_elements"]],
            best_score=d["best_score"],
            best_pair=(pair[0], pair[1]) if pair else None,
            status=d["status"],
        )


# -- encoders ----------------------------------------------------------------


class LexicalTrigramEncoder:
    """Deterministic offline encoder: hashed character-trigram cosine."""

    encoder_id = LEXICAL_ENCODER_ID

    def similarity(self, a: str, b: str) -> float:
        return kernels.similarity(a, b)

    def pair_scores(self, texts_a: list[str], texts_b: list[str]) -> list[list[float]]:
        return kernels.pair_scores(texts_a, texts_b)


class SidecarEncoder:
    """Encoder backed by the embedding sidecar; cosine of served unit vectors."""

    def __init__(self, client, model: str | None = None):
        self.client = client
        self.model = model
        self.encoder_id = model or "sidecar-default"

    def _dot(self, u: list[float], v: list[float]) -> float:
        return sum(x * y for x, y in zip(u, v))

    def similarity(self, a: str, b: str) -> float:
        model_id, vectors = self.client.embed([a, b], model=self.model)
        self.encoder_id = model_id
        return self._dot(vectors[0], vectors[1])

    def pair_scores(self, texts_a: list[str], texts_b: list[str]) -> list[list[float]]:
        unique = list(dict.fromkeys(texts_a + texts_b))
        model_id, vectors = self.client.embed(unique, model=self.model)
        self.encoder_id = model_id
        by_text = dict(zip(unique, vectors))
        return [[self._dot(by_text[a], by_text[b]) for b in texts_b] for a in texts_a]


def get_encoder(encoder_id: str = LEXICAL_ENCODER_ID, endpoint: str | None = None):
    if encoder_id == LEXICAL_ENCODER_ID:
        return LexicalTrigramEncoder()
    from clarforge.sidecar import SidecarClient

    return SidecarEncoder(SidecarClient(endpoint), model=encoder_id)


# -- similarity cache ---------------------------------------------------------


class SimilarityCache:
    """Disk-backed pair-score cache; concurrent readers, serialized writers.

    Entries never mix across encoder ids: the key embeds the encoder id.
    """

    def __init__(self, path: str | None = None):
        self.path = path
        self._data: dict[str, float] = {}
        self._lock = threading.Lock()
        if path and os.path.exists(path):
            with open(path, "r", encoding="utf-8") as f:
                for line in f:
                    if line.strip():
                        obj = json.loads(line)
                        self._data[obj["key"]] = obj["score"]

    @staticmethod
    def key_for(encoder_id: str, a: str, b: str) -> str:
        return f"{encoder_id}:{sha256_text(a + chr(31) + b)}"

    def get(self, encoder_id: str, a: str, b: str) -> float | None:
        return self._data.get(self.key_for(encoder_id, a, b))

    def put(self, encoder_id: str, a: str, b: str, score: float) -> None:
        key = self.key_for(encoder_id, a, b)
        with self._lock:
            if key in self._data:
                return
            self._data[key] = score
            if self.path:
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(json.dumps({"key": key, "score": score}) + "\n")

    def __len__(self) -> int:
        return len(self._data)


class CacheOnlyEncoder:
    """Resolves similarities purely from a recorded cache (no transport)."""

    def __init__(self, encoder_id: str, cache: SimilarityCache):
        self.encoder_id = encoder_id
        self.cache = cache

    def similarity(self, a: str, b: str) -> float:
        score = self.cache.get(self.encoder_id, a, b)
        if score is None:
            raise MetricsError(f"similarity not recorded for pair under {self.encoder_id}")
        return score

    def pair_scores(self, texts_a: list[str], texts_b: list[str]) -> list[list[float]]:
        return [[self.similarity(a, b) for b in texts_b] for a in texts_a]


def similarity(a: str, b: str, encoder=None) -> float:
    """Similarity of two surface texts under the given encoder (lexical default)."""
    encoder = encoder or LexicalTrigramEncoder()
    return encoder.similarity(a, b)


# -- classification ------------------------------------------------------------


def classify_key_operation(
    nld_elements: list[SchemaElement],
    op: OpNode,
    doc: DocEntry,
    doc_elements: list[SchemaElement],
    config: AlignmentConfig,
    encoder=None,
    cache: SimilarityCache | None = None,
) -> KeyOperation:
    """Score all NLD x doc element pairs and label the operation."""
    encoder = encoder or get_encoder(config.encoder_id)
    if not nld_elements or not doc_elements:
        return KeyOperation(
            node=op, doc=doc, nld_elements=nld_elements, doc_elements=doc_elements,
            best_score=0.0, best_pair=None, status=STATUS_MISSING,
        )
    surfaces_a = [e.surface for e in nld_elements]
    surfaces_b = [e.surface for e in doc_elements]

    scores: list[list[float]] = [[0.0] * len(surfaces_b) for _ in surfaces_a]
    missing_pairs = []
    for i, a in enumerate(surfaces_a):
        for j, b in enumerate(surfaces_b):
            hit = cache.get(encoder.encoder_id, a, b) if cache is not None else None
            if hit is None:
                missing_pairs.append((i, j))
            else:
                scores[i][j] = hit
    if missing_pairs:
        if len(missing_pairs) == len(surfaces_a) * len(surfaces_b):
            computed = encoder.pair_scores(surfaces_a, surfaces_b)
            for i in range(len(surfaces_a)):
                for j in range(len(surfaces_b)):
                    scores[i][j] = computed[i][j]
        else:
            for i, j in missing_pairs:
                scores[i][j] = encoder.similarity(surfaces_a[i], surfaces_b[j])
        if cache is not None:
            for i, j in missing_pairs:
                cache.put(encoder.encoder_id, surfaces_a[i], surfaces_b[j], scores[i][j])

    best_score = scores[0][0]
    best_pair = (0, 0)
    for i in range(len(surfaces_a)):
        for j in range(len(surfaces_b)):
            if scores[i][j] > best_score:
                best_score = scores[i][j]
                best_pair = (i, j)
    status = STATUS_MISSING if best_score < config.threshold else STATUS_ALIGNED
    return KeyOperation(
        node=op, doc=doc, nld_elements=nld_elements, doc_elements=doc_elements,
        best_score=best_score, best_pair=best_pair, status=status,
    )


# -- calibration ----------------------------------------------------------------


def _f1_missing(labeled: list[tuple[float, str]], t: float) -> float:
    tp = fp = fn = 0
    for score, gold in labeled:
        pred_missing = score < t
        if pred_missing and gold == STATUS_MISSING:
            tp += 1
        elif pred_missing and gold != STATUS_MISSING:
            fp += 1
        elif not pred_missing and gold == STATUS_MISSING:
            fn += 1
    if tp == 0:
        return 0.0
    # single exact division: equal rational F1s compare equal, so the
    # smallest-threshold tie-break is well defined
    return 2 * tp / (2 * tp + fp + fn)


def calibrate_threshold(labeled: list[tuple[float, str]]) -> float:
    """Grid-search threshold maximizing missing-class F1.

    Candidates are the midpoints between consecutive distinct sorted scores
    plus {0, 1}; ties resolve to the smallest threshold.
    """
    if not any(gold == STATUS_MISSING for _, gold in labeled):
        raise CalibrationError("no missing-labeled examples: F1 is undefined")
    distinct = sorted({score for score, _ in labeled})
    candidates = {0.0, 1.0}
    for lo, hi in zip(distinct, distinct[1:]):
        candidates.add((lo + hi) / 2.0)
    best_t = 0.0
    best_f1 = -1.0
    for t in sorted(candidates):
        f1 = _f1_missing(labeled, t)
        if f1 > best_f1:
            best_f1 = f1
            best_t = t
    return best_t


@dataclass
class AlignmentMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    false_positives: list = field(default_factory=list)
    false_negatives: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
        }


def evaluate_alignment(predictions: dict, gold: dict) -> AlignmentMetrics:
    """Binary metrics with missing as the positive class, plus FP/FN lists.

    Both mappings are keyed by (sample id, operation occurrence); a key
    mismatch raises with the orphan keys listed.
    """
    pred_keys = set(predictions)
    gold_keys = set(gold)
    if pred_keys != gold_keys:
        orphans = sorted(map(str, pred_keys.symmetric_difference(gold_keys)))
        raise MetricsError(f"prediction/gold key mismatch: {', '.join(orphans)}")
    tp = fp = fn = tn = 0
    fps = []
    fns = []
    for key in sorted(predictions):
        p = predictions[key] == STATUS_MISSING
        g = gold[key] == STATUS_MISSING
        if p and g:
            tp += 1
        elif p and not g:
            fp += 1
            fps.append(key)
        elif not p and g:
            fn += 1
            fns.append(key)
        else:
            tn += 1
    total = tp + fp + fn + tn
    accuracy = (tp + tn) / total if total else 0.0
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
    return AlignmentMetrics(accuracy=accuracy, precision=precision, recall=recall,
                            f1=f1, false_positives=fps, false_negatives=fns)
