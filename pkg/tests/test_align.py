"""Similarity, aligned/missing classification, calibration and its metrics."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import f1_score

from clarforge.align import (
    STATUS_ALIGNED,
    STATUS_MISSING,
    AlignmentConfig,
    CacheOnlyEncoder,
    LexicalTrigramEncoder,
    SimilarityCache,
    calibrate_threshold,
    classify_key_operation,
    evaluate_alignment,
    similarity,
)
from clarforge.codegraph import OpNode
from clarforge.docindex import DocEntry
from clarforge.errors import CalibrationError, MetricsError
from clarforge.schema import extract_schema


def make_op(fqname="pkg.mod.op"):
    return OpNode(node_id=0, fqname=fqname, kind="call", line=1, order_in_line=0)


def make_doc(summary, fqname="pkg.mod.op", package="pkg"):
    terminal = fqname.rsplit(".", 1)[-1]
    return DocEntry(fqname=fqname, display_name=f"{package}.{terminal}",
                    summary=summary, package=package)


def classify(nld, summary, t=0.41):
    config = AlignmentConfig(threshold=t)
    return classify_key_operation(
        extract_schema(nld), make_op(), make_doc(summary), extract_schema(summary), config,
    )


class TestSimilarity:
    def test_identity(self):
        assert similarity("fit the model", "fit the model") == pytest.approx(1.0, abs=1e-6)

    def test_disjoint(self):
        assert similarity("aaa", "zzz") == 0.0

    def test_fallback_matches_brute_force(self):
        # oracle: explicit trigram multisets over padded words
        def trigram_cosine(a, b):
            def grams(text):
                counts = {}
                for word in text.lower().split():
                    padded = f"#{word}#"
                    for i in range(len(padded) - 2):
                        counts[padded[i:i + 3]] = counts.get(padded[i:i + 3], 0) + 1
                return counts

            ga, gb = grams(a), grams(b)
            dot = sum(v * gb.get(k, 0) for k, v in ga.items())
            na = sum(v * v for v in ga.values()) ** 0.5
            nb = sum(v * v for v in gb.values()) ** 0.5
            return dot / (na * nb) if na and nb else 0.0

        for a, b in [("fit model", "fit the model"), ("grid search", "search grid"),
                     ("persist object", "save the object to disk")]:
            assert similarity(a, b) == pytest.approx(trigram_cosine(a, b), abs=1e-9)


class TestClassify:
    def test_identical_texts_aligned_for_any_threshold(self):
        op = classify("Fill NA values using the method.", "Fill NA values using the method.", t=1.0)
        assert op.status == STATUS_ALIGNED
        assert op.best_score == pytest.approx(1.0, abs=1e-6)

    def test_zero_threshold_aligns_everything_nonempty(self):
        op = classify("Totally unrelated words here.", "Persist an object into one file.", t=0.0)
        assert op.status == STATUS_ALIGNED  # strict inequality never satisfied

    def test_empty_schema_is_missing(self):
        config = AlignmentConfig(threshold=0.41)
        op = classify_key_operation([], make_op(), make_doc("Summary."),
                                    extract_schema("Summary text here."), config)
        assert op.status == STATUS_MISSING
        assert op.best_score == 0.0
        assert op.best_pair is None

    def test_best_pair_is_argmax(self):
        op = classify("Train a logistic regression model.",
                      "Logistic Regression (aka logit, MaxEnt) classifier.")
        i, j = op.best_pair
        best = op.best_score
        enc = LexicalTrigramEncoder()
        for a in op.nld_elements:
            for b in op.doc_elements:
                assert enc.similarity(a.surface, b.surface) <= best + 1e-12
        assert enc.similarity(op.nld_elements[i].surface,
                              op.doc_elements[j].surface) == pytest.approx(best)

    def test_worked_example_pattern(self):
        nld = "Train a logistic regression model."
        assert classify(nld, "Logistic Regression (aka logit, MaxEnt) classifier.").status == STATUS_ALIGNED
        assert classify(nld, "Exhaustive search over specified parameter values for an estimator.").status == STATUS_MISSING
        assert classify(nld, "Persist an arbitrary Python object into one file.").status == STATUS_MISSING
        assert classify(nld, "Return numbers spaced evenly on a log scale.").status == STATUS_MISSING

    @settings(max_examples=100, deadline=None)
    @given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.0, max_value=1.0))
    def test_monotonic_in_threshold(self, t1, t2):
        lo, hi = sorted((t1, t2))
        nld = "Group the passengers by class."
        summary = "Generate descriptive statistics."
        low = classify(nld, summary, t=lo)
        high = classify(nld, summary, t=hi)
        if low.status == STATUS_MISSING:
            assert high.status == STATUS_MISSING  # raising t never un-misses


class TestCalibration:
    def test_perfectly_separable_pair(self):
        assert calibrate_threshold([(0.2, "missing"), (0.8, "aligned")]) == 0.5

    def test_requires_positive_labels(self):
        with pytest.raises(CalibrationError):
            calibrate_threshold([(0.5, "aligned")])

    def test_eight_point_set_matches_enumeration(self):
        labeled = [(0.05, "missing"), (0.2, "missing"), (0.25, "aligned"), (0.3, "missing"),
                   (0.55, "aligned"), (0.6, "missing"), (0.8, "aligned"), (0.95, "aligned")]
        assert calibrate_threshold(labeled) == _enumeration_oracle(labeled)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(
        st.tuples(st.floats(min_value=0.0, max_value=1.0),
                  st.sampled_from(["aligned", "missing"])),
        min_size=1, max_size=12,
    ))
    def test_random_sets_match_enumeration(self, labeled):
        if not any(label == "missing" for _, label in labeled):
            labeled.append((0.1, "missing"))
        assert calibrate_threshold(labeled) == _enumeration_oracle(labeled)

    def test_permutation_invariance(self):
        labeled = [(0.1, "missing"), (0.4, "aligned"), (0.35, "missing"), (0.9, "aligned")]
        assert calibrate_threshold(labeled) == calibrate_threshold(list(reversed(labeled)))


def _enumeration_oracle(labeled):
    """Exhaustive candidate scan with exact rational F1 comparison."""
    from fractions import Fraction

    scores = sorted({s for s, _ in labeled})
    candidates = sorted({0.0, 1.0} | {(a + b) / 2 for a, b in zip(scores, scores[1:])})
    best_t, best_f1 = None, Fraction(-1)
    for t in candidates:
        tp = sum(1 for s, g in labeled if s < t and g == "missing")
        fp = sum(1 for s, g in labeled if s < t and g == "aligned")
        fn = sum(1 for s, g in labeled if s >= t and g == "missing")
        f1 = Fraction(2 * tp, 2 * tp + fp + fn) if tp else Fraction(0)
        if f1 > best_f1:
            best_t, best_f1 = t, f1
    return best_t


class TestEvaluateAlignment:
    def test_identity_predictions(self):
        gold = {("s1", 0): "missing", ("s1", 1): "aligned", ("s2", 0): "missing"}
        metrics = evaluate_alignment(dict(gold), gold)
        assert metrics.accuracy == metrics.precision == metrics.recall == metrics.f1 == 1.0
        assert metrics.false_positives == [] and metrics.false_negatives == []

    def test_arithmetic_by_definition(self):
        # 3 TP, 1 FP, 1 FN, 1 TN
        gold = {i: g for i, g in enumerate(
            ["missing", "missing", "missing", "aligned", "missing", "aligned"])}
        pred = {0: "missing", 1: "missing", 2: "missing", 3: "missing",
                4: "aligned", 5: "aligned"}
        metrics = evaluate_alignment(pred, gold)
        assert metrics.precision == 0.75
        assert metrics.recall == 0.75
        assert metrics.f1 == 0.75
        assert metrics.false_positives == [3]
        assert metrics.false_negatives == [4]

    def test_confusion_cross_check(self):
        gold = {i: ("missing" if i % 3 else "aligned") for i in range(12)}
        pred = {i: ("missing" if i % 2 else "aligned") for i in range(12)}
        metrics = evaluate_alignment(pred, gold)
        y_true = [1 if gold[i] == "missing" else 0 for i in range(12)]
        y_pred = [1 if pred[i] == "missing" else 0 for i in range(12)]
        assert metrics.f1 == pytest.approx(f1_score(y_true, y_pred))

    def test_key_mismatch_lists_orphans(self):
        with pytest.raises(MetricsError, match="orphan|mismatch"):
            evaluate_alignment({("a", 0): "missing"}, {("b", 0): "missing"})


class TestCache:
    def test_round_trip_and_offline_replay(self, tmp_path):
        path = str(tmp_path / "cache.jsonl")
        cache = SimilarityCache(path)
        enc = LexicalTrigramEncoder()
        config = AlignmentConfig(threshold=0.41)
        nld = extract_schema("Train a logistic regression model.")
        doc = extract_schema("Exhaustive search over specified parameter values for an estimator.")
        live = classify_key_operation(nld, make_op(), make_doc("x"), doc, config,
                                      encoder=enc, cache=cache)
        reloaded = SimilarityCache(path)
        offline = classify_key_operation(nld, make_op(), make_doc("x"), doc, config,
                                         encoder=CacheOnlyEncoder(enc.encoder_id, reloaded))
        assert offline.status == live.status
        assert offline.best_score == live.best_score

    def test_cache_never_mixes_encoders(self, tmp_path):
        cache = SimilarityCache(str(tmp_path / "c.jsonl"))
        cache.put("encoder-a", "x", "y", 0.9)
        assert cache.get("encoder-b", "x", "y") is None
        assert cache.get("encoder-a", "x", "y") == 0.9

    def test_cache_only_encoder_raises_on_miss(self):
        enc = CacheOnlyEncoder("lexical-trigram-v1", SimilarityCache())
        with pytest.raises(MetricsError):
            enc.similarity("a", "b")


def test_threshold_bounds_validated():
    with pytest.raises(ValueError):
        AlignmentConfig(threshold=1.5)
