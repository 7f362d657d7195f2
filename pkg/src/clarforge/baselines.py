"""Deterministic baselines: BM25 CQ ranking, recall@k, training-pair
exporters, and a hashed-feature logistic-regression clarification-need
predictor."""

import json
import random
import warnings
from dataclasses import dataclass, field
from math import exp, log

from clarforge.errors import MetricsError
from clarforge.evalkit import tokenize

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a(text: str) -> int:
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


# -- universal CQ set and BM25 ----------------------------------------------------


@dataclass
class UniversalCQSet:
    """Deduplicated pool of CQ strings with the statistics BM25 needs."""

    questions: list[str]
    doc_tokens: list[list[str]] = field(init=False)
    doc_lengths: list[int] = field(init=False)
    avgdl: float = field(init=False)
    df: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.doc_tokens = [[t.lower() for t in tokenize(q)] for q in self.questions]
        self.doc_lengths = [len(d) for d in self.doc_tokens]
        n = len(self.questions)
        self.avgdl = sum(self.doc_lengths) / n if n else 0.0
        self.df = {}
        for doc in self.doc_tokens:
            for term in set(doc):
                self.df[term] = self.df.get(term, 0) + 1

    def __len__(self) -> int:
        return len(self.questions)

    @property
    def id_by_question(self) -> dict[str, int]:
        return {q: i for i, q in enumerate(self.questions)}


def build_universal_cq_set(records) -> UniversalCQSet:
    """Collect the deduplicated CQ questions of a built dataset, in first-seen
    order (cq_ids dense from 0)."""
    seen: dict[str, int] = {}
    for record in records:
        for cqa in record.cqas:
            if cqa.question not in seen:
                seen[cqa.question] = len(seen)
    return UniversalCQSet(questions=list(seen))


@dataclass
class RankResult:
    sample_id: str
    ranking: list[tuple[int, float]]  # (cq_id, score), descending score, ties by id

    @property
    def ids(self) -> list[int]:
        return [cq_id for cq_id, _ in self.ranking]


def bm25_rank(
    nld: str,
    universal: UniversalCQSet,
    k1: float = 1.2,
    b: float = 0.75,
    sample_id: str = "",
) -> RankResult:
    """Okapi BM25 ranking of the NLD query against every CQ.

    idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)); query tokens contribute
    per occurrence.  Returns the full ranking.
    """
    n = len(universal)
    if n == 0:
        raise MetricsError("universal CQ set is empty")
    query = [t.lower() for t in tokenize(nld)]
    scores = []
    for doc_id in range(n):
        tf: dict[str, int] = {}
        for term in universal.doc_tokens[doc_id]:
            tf[term] = tf.get(term, 0) + 1
        dl = universal.doc_lengths[doc_id]
        norm = k1 * (1.0 - b + b * dl / universal.avgdl) if universal.avgdl else k1
        s = 0.0
        for term in query:
            f = tf.get(term)
            if not f:
                continue
            df = universal.df[term]
            idf = log(1.0 + (n - df + 0.5) / (df + 0.5))
            s += idf * f * (k1 + 1.0) / (f + norm)
        scores.append(s)
    order = sorted(range(n), key=lambda i: (-scores[i], i))
    return RankResult(sample_id=sample_id, ranking=[(i, scores[i]) for i in order])


def recall_at_k(
    rankings: dict[str, RankResult],
    gold: dict[str, set[int]],
    ks: tuple[int, ...] = (1, 3, 5, 10),
    micro: bool = False,
) -> dict[int, float]:
    """Mean per-sample recall of gold CQ ids within the top k, as percent.

    ``micro=True`` pools gold CQs instead of averaging per sample.
    Samples with empty gold are excluded with a warning.
    """
    usable = []
    for sample_id, gold_ids in gold.items():
        if not gold_ids:
            warnings.warn(f"sample {sample_id} has no gold CQs; excluded from recall", stacklevel=2)
            continue
        if sample_id not in rankings:
            raise MetricsError(f"no ranking for sample {sample_id}")
        usable.append((sample_id, gold_ids))
    out: dict[int, float] = {}
    for k in ks:
        if micro:
            hits = sum(len(gold_ids & set(rankings[sid].ids[:k])) for sid, gold_ids in usable)
            total = sum(len(gold_ids) for _, gold_ids in usable)
            out[k] = 100.0 * hits / total if total else 0.0
        else:
            recalls = [
                len(gold_ids & set(rankings[sid].ids[:k])) / len(gold_ids)
                for sid, gold_ids in usable
            ]
            out[k] = 100.0 * sum(recalls) / len(recalls) if recalls else 0.0
    return out


# -- training-pair exporters --------------------------------------------------------


def export_ranking_pairs(
    records,
    strategy: str,
    seed: int = 13,
    universal: UniversalCQSet | None = None,
    k1: float = 1.2,
    b: float = 0.75,
) -> list[dict]:
    """(nld, cq, label) pairs: gold CQs as positives plus sampled negatives.

    Negatives per sample = round(mean positives per sample), minimum 1,
    drawn uniformly (seeded) or as the top-scoring non-gold BM25 CQs.
    Only samples with at least one gold CQ are exported.
    """
    if strategy not in ("random", "bm25"):
        raise ValueError(f"unknown negative-sampling strategy {strategy!r}")
    if universal is None:
        universal = build_universal_cq_set(records)
    if strategy == "bm25" and len(universal) == 0:
        raise MetricsError("universal CQ set is empty")
    with_cqas = [r for r in records if r.cqas]
    if not with_cqas:
        return []
    mean_pos = sum(len(r.cqas) for r in with_cqas) / len(with_cqas)
    n_neg = max(1, int(mean_pos + 0.5))
    id_by_question = universal.id_by_question

    pairs: list[dict] = []
    for record in with_cqas:
        nld = record.sample.nld
        gold_ids = {id_by_question[c.question] for c in record.cqas if c.question in id_by_question}
        for cqa in record.cqas:
            pairs.append({"nld": nld, "cq": cqa.question, "label": 1})
        if strategy == "random":
            pool = [i for i in range(len(universal)) if i not in gold_ids]
            rng = random.Random(f"{seed}:{record.sample.id}")
            chosen = rng.sample(pool, min(n_neg, len(pool)))
        else:
            ranked = bm25_rank(nld, universal, k1=k1, b=b, sample_id=record.sample.id)
            chosen = [i for i in ranked.ids if i not in gold_ids][:n_neg]
        for cq_id in chosen:
            pairs.append({"nld": nld, "cq": universal.questions[cq_id], "label": 0})
    return pairs


def export_need_labels(records) -> list[dict]:
    """(nld, label) pairs for external clarification-need training."""
    return [{"nld": r.sample.nld, "label": 1 if r.need_label else 0} for r in records]


# -- clarification-need predictor -----------------------------------------------------


NEED = "Need"
NO_NEED = "No Need"

_DIM = 1 << 16
_EPOCHS = 150
_LEARNING_RATE = 1.0
_L2 = 1e-4


def _features(nld: str) -> list[tuple[int, float]]:
    """Hashed word-unigram + character 3-5 gram counts, L2-normalized.

    Sparse (index, value) pairs sorted by index; training stays
    single-threaded and BLAS-free so results are bit-reproducible.
    """
    counts: dict[int, float] = {}
    lowered = nld.lower()
    for token in tokenize(lowered):
        idx = _fnv1a("w:" + token) & (_DIM - 1)
        counts[idx] = counts.get(idx, 0.0) + 1.0
    for n in (3, 4, 5):
        for i in range(len(lowered) - n + 1):
            idx = _fnv1a(f"c{n}:" + lowered[i: i + n]) & (_DIM - 1)
            counts[idx] = counts.get(idx, 0.0) + 1.0
    norm = sum(v * v for v in counts.values()) ** 0.5
    if norm == 0.0:
        return []
    return sorted((i, v / norm) for i, v in counts.items())


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


@dataclass
class NeedModel:
    weights: dict[int, float]
    bias: float
    seed: int

    def _raw(self, nld: str) -> float:
        return sum(self.weights.get(i, 0.0) * v for i, v in _features(nld)) + self.bias

    def predict(self, nld: str) -> tuple[str, float]:
        prob = _sigmoid(self._raw(nld))
        return (NEED if prob >= 0.5 else NO_NEED), float(prob)

    def save(self, path: str) -> None:
        payload = {
            "dim": _DIM,
            "bias": self.bias,
            "seed": self.seed,
            "weights": {str(i): w for i, w in self.weights.items() if w != 0.0},
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, sort_keys=True)

    @classmethod
    def load(cls, path: str) -> "NeedModel":
        with open(path, "r", encoding="utf-8") as f:
            payload = json.load(f)
        weights = {int(i): float(w) for i, w in payload["weights"].items()}
        return cls(weights=weights, bias=payload["bias"], seed=payload["seed"])


def train_need_predictor(records, seed: int = 13) -> NeedModel:
    """Full-batch gradient-descent logistic regression over hashed NLD features.

    Fixed epoch count and learning rate; training is single-threaded and
    bit-reproducible for a given dataset.
    """
    if not records:
        raise MetricsError("cannot train the need predictor on an empty split")
    xs = [_features(r.sample.nld) for r in records]
    ys = [1.0 if r.need_label else 0.0 for r in records]
    w: dict[int, float] = {}
    bias = 0.0
    n = len(records)
    for _ in range(_EPOCHS):
        grad: dict[int, float] = {}
        grad_b = 0.0
        for x, y in zip(xs, ys):
            z = sum(w.get(i, 0.0) * v for i, v in x) + bias
            err = _sigmoid(z) - y
            for i, v in x:
                grad[i] = grad.get(i, 0.0) + err * v
            grad_b += err
        for i in sorted(grad):
            g = grad[i] / n + _L2 * w.get(i, 0.0)
            w[i] = w.get(i, 0.0) - _LEARNING_RATE * g
        bias -= _LEARNING_RATE * grad_b / n
    return NeedModel(weights=w, bias=bias, seed=seed)


def predict_need(model: NeedModel, nld: str) -> tuple[str, float]:
    return model.predict(nld)


def evaluate_need(model: NeedModel, records) -> dict:
    """Accuracy/precision/recall/F1 of need prediction (Need positive)."""
    tp = fp = fn = tn = 0
    for record in records:
        label, _ = model.predict(record.sample.nld)
        pred = label == NEED
        gold = record.need_label
        if pred and gold:
            tp += 1
        elif pred and not gold:
            fp += 1
        elif not pred and gold:
            fn += 1
        else:
            tn += 1
    total = tp + fp + fn + tn
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return {
        "accuracy": (tp + tn) / total if total else 0.0,
        "precision": precision,
        "recall": recall,
        "f1": f1,
    }
