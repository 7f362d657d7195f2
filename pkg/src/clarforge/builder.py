"""End-to-end dataset construction: graphs, docs, schemas, classification,
token groups and record assembly.

Per-sample stages run through an order-stable parallel map, so outputs are
byte-identical for any worker count.
"""

import json
import warnings
from dataclasses import dataclass, field

from clarforge.align import (
    AlignmentConfig,
    KeyOperation,
    SimilarityCache,
    classify_key_operation,
    get_encoder,
)
from clarforge.codegraph import OpNode, build_graph, extract_key_operations
from clarforge.corpus import Corpus, DatasetRecord, Sample
from clarforge.cqgen import TokenGroups, assemble_record, build_token_groups
from clarforge.docindex import DocEntry, DocIndex, attach_docs
from clarforge.errors import ClarforgeError, CorpusFormatError, GraphParseError
from clarforge.schema import ParsedText, extract_schema
from clarforge.util import parallel_map


@dataclass
class BuildOptions:
    threshold: float = 0.41
    encoder_id: str = "lexical-trigram-v1"
    endpoint: str | None = None
    cache_path: str | None = None
    alias_table: dict[str, str] = field(default_factory=dict)
    keep_overflow: bool = False
    workers: int = 1
    use_parse: bool = False


def extract_sample_ops(sample: Sample, index: DocIndex) -> list[tuple[OpNode, DocEntry]]:
    """Key operations of one sample with resolved documentation.

    Samples whose code does not parse contribute no operations (warned).
    """
    context = list(sample.context_cells) if sample.context_cells else None
    try:
        graph = build_graph(sample.code, context)
    except GraphParseError as exc:
        warnings.warn(f"sample {sample.id}: unparseable code skipped ({exc})", stacklevel=2)
        return []
    return attach_docs(extract_key_operations(graph), index)


def _doc_schema_cache(encoder_parses: dict[str, ParsedText] | None):
    cache: dict[str, list] = {}

    def get(summary: str):
        if summary not in cache:
            parse = encoder_parses.get(summary) if encoder_parses else None
            cache[summary] = extract_schema(summary, parse)
        return cache[summary]

    return get


def classify_sample(
    sample: Sample,
    attached: list[tuple[OpNode, DocEntry]],
    config: AlignmentConfig,
    encoder,
    cache: SimilarityCache | None,
    nld_parse: ParsedText | None = None,
    doc_schema_for=None,
) -> list[KeyOperation]:
    nld_elements = extract_schema(sample.nld, nld_parse)
    out: list[KeyOperation] = []
    for op, doc in attached:
        doc_elements = doc_schema_for(doc.summary) if doc_schema_for else extract_schema(doc.summary)
        out.append(classify_key_operation(
            nld_elements, op, doc, doc_elements, config, encoder=encoder, cache=cache,
        ))
    return out


def _collect_parses(texts: list[str], endpoint: str | None) -> dict[str, ParsedText]:
    from clarforge.sidecar import SidecarClient

    client = SidecarClient(endpoint)
    unique = list(dict.fromkeys(texts))
    parses = client.parse(unique)
    client.close()
    return dict(zip(unique, parses))


@dataclass
class BuildResult:
    records: list[DatasetRecord]
    excluded: list[dict]
    groups: TokenGroups
    encoder_id: str


def build_dataset(corpus: Corpus, index: DocIndex, options: BuildOptions) -> BuildResult:
    """Run the full pipeline over a corpus and assemble dataset records."""
    config = AlignmentConfig(threshold=options.threshold, encoder_id=options.encoder_id,
                             cache_path=options.cache_path)
    encoder = get_encoder(options.encoder_id, endpoint=options.endpoint)
    cache = SimilarityCache(options.cache_path) if options.cache_path else None

    samples = list(corpus)
    attached = parallel_map(lambda s: extract_sample_ops(s, index), samples, options.workers)

    parses: dict[str, ParsedText] = {}
    if options.use_parse:
        texts = [s.nld for s in samples]
        texts += [doc.summary for ops in attached for _, doc in ops]
        parses = _collect_parses(texts, options.endpoint)
    doc_schema_for = _doc_schema_cache(parses if options.use_parse else None)

    def classify(pair):
        sample, ops = pair
        return classify_sample(
            sample, ops, config, encoder, cache,
            nld_parse=parses.get(sample.nld) if options.use_parse else None,
            doc_schema_for=doc_schema_for,
        )

    classified = parallel_map(classify, list(zip(samples, attached)), options.workers)

    all_ops = [op for ops in classified for op in ops]
    groups = build_token_groups(all_ops, alias_table=options.alias_table)

    records: list[DatasetRecord] = []
    excluded: list[dict] = []
    for sample, ops in zip(samples, classified):
        record = assemble_record(sample, ops, groups, keep_overflow=options.keep_overflow)
        if record is None:
            n_missing = len({o.doc.display_name for o in ops if o.status == "missing"})
            excluded.append({"sample_id": sample.id, "reason": f"{n_missing} missing operations"})
        else:
            records.append(record)
    return BuildResult(records=records, excluded=excluded, groups=groups,
                       encoder_id=encoder.encoder_id)


def load_annotations(path: str) -> list[dict]:
    """Per-operation gold labels: JSONL {sample_id, op_index, fqname, label}."""
    rows: list[dict] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: invalid JSON: {exc.msg}", line=lineno) from exc
            for fieldname in ("sample_id", "op_index", "fqname", "label"):
                if fieldname not in obj:
                    raise CorpusFormatError(f"line {lineno}: missing field {fieldname}", line=lineno)
            if obj["label"] not in ("aligned", "missing"):
                raise CorpusFormatError(f"line {lineno}: invalid label {obj['label']!r}", line=lineno)
            rows.append(obj)
    return rows


def scored_operations(corpus: Corpus, index: DocIndex, options: BuildOptions) -> dict:
    """Map (sample_id, op_index) -> classified KeyOperation for the corpus."""
    config = AlignmentConfig(threshold=options.threshold, encoder_id=options.encoder_id)
    encoder = get_encoder(options.encoder_id, endpoint=options.endpoint)
    cache = SimilarityCache(options.cache_path) if options.cache_path else None
    doc_schema_for = _doc_schema_cache(None)
    out: dict[tuple[str, int], KeyOperation] = {}
    for sample in corpus:
        attached = extract_sample_ops(sample, index)
        ops = classify_sample(sample, attached, config, encoder, cache,
                              doc_schema_for=doc_schema_for)
        for i, op in enumerate(ops):
            out[(sample.id, i)] = op
    return out


def labeled_scores(scored: dict, annotations: list[dict]) -> list[tuple[float, str]]:
    """Join classifier scores with gold labels for calibration."""
    labeled: list[tuple[float, str]] = []
    for row in annotations:
        key = (row["sample_id"], row["op_index"])
        op = scored.get(key)
        if op is None:
            raise ClarforgeError(
                f"annotation references unknown operation {key[0]}#{key[1]}"
            )
        if op.node.fqname != row["fqname"]:
            raise ClarforgeError(
                f"annotation fqname mismatch for {key[0]}#{key[1]}: "
                f"{row['fqname']} vs {op.node.fqname}"
            )
        labeled.append((op.best_score, row["label"]))
    return labeled
