"""Generation scoring and the end-to-end pipeline evaluation driver.

Holds the shared tokenizer (whitespace + punctuation, case preserving),
sentence-level BLEU-4 with add-one smoothing, whitespace-normalized exact
match, missing-key-operation recall (micro/macro), Pearson correlation,
prompt assembly and the need-gate -> rank -> select -> score pipeline.
"""

import re
from dataclasses import dataclass
from math import exp, log, sqrt
from typing import TYPE_CHECKING, Callable

from clarforge.codegraph import build_graph, extract_key_operations
from clarforge.docindex import DocIndex, attach_docs
from clarforge.errors import GraphParseError, MetricsError

if TYPE_CHECKING:
    from clarforge.corpus import DatasetRecord

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")

MODE_ANSWERED = "answered"
MODE_UNANSWERED = "unanswered"


def tokenize(text: str) -> list[str]:
    """Split on whitespace and punctuation; punctuation stays as 1-char tokens."""
    return _TOKEN_RE.findall(text)


# -- generation metrics --------------------------------------------------------


def _ngram_counts(tokens: list[str], n: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i: i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def bleu(candidate: str, reference: str, max_n: int = 4) -> float:
    """Sentence-level BLEU with add-one smoothed modified n-gram precisions."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_counts = _ngram_counts(cand, n)
        ref_counts = _ngram_counts(ref, n)
        matches = sum(min(c, ref_counts.get(g, 0)) for g, c in cand_counts.items())
        total = sum(cand_counts.values())
        log_sum += log((matches + 1.0) / (total + 1.0))
    score = exp(log_sum / max_n)
    if len(cand) < len(ref):
        score *= exp(1.0 - len(ref) / len(cand))
    return score


def corpus_bleu(pairs: list[tuple[str, str]]) -> float:
    """Mean of sentence scores over (candidate, reference) pairs."""
    if not pairs:
        return 0.0
    return sum(bleu(c, r) for c, r in pairs) / len(pairs)


def _normalize_for_em(text: str) -> str:
    lines = [re.sub(r"\s+", " ", line.strip()) for line in text.strip().split("\n")]
    return "\n".join(lines)


def exact_match(candidate: str, reference: str) -> bool:
    """Equality after trimming and collapsing whitespace runs per line."""
    return _normalize_for_em(candidate) == _normalize_for_em(reference)


def _recovered_terminals(code: str, index: DocIndex) -> set[str]:
    try:
        graph = build_graph(code)
    except GraphParseError:
        return set()
    attached = attach_docs(extract_key_operations(graph), index)
    return {doc.display_name.rsplit(".", 1)[-1].lower() for _, doc in attached}


def keyop_recall(
    predictions: dict[str, str],
    gold: dict[str, list[str]],
    index: DocIndex,
) -> tuple[float, float]:
    """(micro, macro) recall of gold missing operations in predicted code.

    An operation counts as recovered when its terminal name appears among
    the key operations extracted from the predicted code.  Samples without
    gold operations are ignored; unparseable predictions recover nothing.
    """
    total_gold = 0
    total_recovered = 0
    per_sample: list[float] = []
    for sample_id, gold_ops in gold.items():
        if not gold_ops:
            continue
        recovered_terms = _recovered_terminals(predictions.get(sample_id, ""), index)
        hits = sum(
            1 for name in gold_ops if name.rsplit(".", 1)[-1].lower() in recovered_terms
        )
        total_gold += len(gold_ops)
        total_recovered += hits
        per_sample.append(hits / len(gold_ops))
    if total_gold == 0:
        return 0.0, 0.0
    micro = total_recovered / total_gold
    macro = sum(per_sample) / len(per_sample)
    return micro, macro


def pearson(xs: list[float], ys: list[float]) -> float:
    """Sample Pearson correlation; raises on short input or zero variance."""
    if len(xs) != len(ys) or len(xs) < 2:
        raise MetricsError("pearson requires two equal-length series of >= 2 points")
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise MetricsError("pearson undefined for zero-variance input")
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / (sqrt(sxx) * sqrt(syy))


# -- prompts and pipeline --------------------------------------------------------


@dataclass
class PipelineConfig:
    top_n: int = 5
    k: int = 5
    answered_mode: str = MODE_ANSWERED

    def __post_init__(self):
        if not 1 <= self.k <= self.top_n:
            raise ValueError(f"k must satisfy 1 <= k <= top_n, got k={self.k}, top_n={self.top_n}")
        if self.answered_mode not in (MODE_ANSWERED, MODE_UNANSWERED):
            raise ValueError(f"unknown mode {self.answered_mode!r}")


@dataclass
class MetricsReport:
    bleu: float = 0.0
    em_percent: float = 0.0
    keyop_recall_micro: float = 0.0
    keyop_recall_macro: float = 0.0
    pearson_rho: float | None = None
    codebleu: float | None = None  # reserved; not computed
    alignment: dict | None = None
    need: dict | None = None

    def to_dict(self) -> dict:
        return {
            "bleu": self.bleu,
            "em_percent": self.em_percent,
            "keyop_recall_micro": self.keyop_recall_micro,
            "keyop_recall_macro": self.keyop_recall_macro,
            "pearson_rho": self.pearson_rho,
            "codebleu": self.codebleu,
            "alignment": self.alignment,
            "need": self.need,
        }


def assemble_prompt(nld: str, cqas: list, mode: str = MODE_ANSWERED) -> str:
    """NLD followed by one " CQ: ..." segment per CQA (answers only in
    answered mode)."""
    parts = [nld]
    for cqa in cqas:
        if mode == MODE_ANSWERED:
            parts.append(f" CQ: {cqa.question} A: {cqa.answer}")
        else:
            parts.append(f" CQ: {cqa.question}")
    return "".join(parts)


def pipeline_select(
    ranked_ids: list[int],
    gold_cqas: list,
    cq_id_by_question: dict[str, int],
    k: int,
) -> list:
    """Gold CQAs whose universal id is in the ranking's top k, record order."""
    top = set(ranked_ids[: max(k, 0)])
    selected = []
    for cqa in gold_cqas:
        cq_id = cq_id_by_question.get(cqa.question)
        if cq_id is None:
            raise MetricsError(f"gold CQ not present in the universal set: {cqa.question!r}")
        if cq_id in top:
            selected.append(cqa)
    return selected


def run_pipeline_eval(
    records: "list[DatasetRecord]",
    need_predictor: Callable[[str], tuple[str, float]],
    ranker: Callable[[str], list[int]],
    cq_id_by_question: dict[str, int],
    config: PipelineConfig,
    predictions: dict[str, str],
    index: DocIndex,
) -> tuple[MetricsReport, list[dict]]:
    """Gate each NLD, select top-k-overlapping gold CQs, emit prompts, score.

    ``predictions`` maps sample id to externally generated code; every
    record must have one.
    """
    missing = [r.sample.id for r in records if r.sample.id not in predictions]
    if missing:
        raise MetricsError(f"missing predictions for samples: {', '.join(missing)}")

    prompts: list[dict] = []
    for record in records:
        nld = record.sample.nld
        label, _prob = need_predictor(nld)
        if label == "Need" and record.cqas:
            ranked = ranker(nld)
            selected = pipeline_select(ranked, record.cqas, cq_id_by_question, config.k)
        else:
            selected = []
        prompt = assemble_prompt(nld, selected, config.answered_mode)
        prompts.append({
            "sample_id": record.sample.id,
            "prompt": prompt,
            "selected_questions": [c.question for c in selected],
        })

    pairs = [(predictions[r.sample.id], r.sample.code) for r in records]
    em_hits = sum(1 for cand, ref in pairs if exact_match(cand, ref))
    gold_ops = {
        r.sample.id: [c.target_display_name for c in r.cqas] for r in records
    }
    micro, macro = keyop_recall(predictions, gold_ops, index)
    report = MetricsReport(
        bleu=corpus_bleu(pairs),
        em_percent=100.0 * em_hits / len(pairs) if pairs else 0.0,
        keyop_recall_micro=micro,
        keyop_recall_macro=macro,
    )
    return report, prompts
