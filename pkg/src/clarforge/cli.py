"""clarforge command-line interface.

Subcommands cover the full workflow: build-graph, build-docindex, schema,
classify, calibrate, build-dataset, stats, rank, need, export-pairs,
pipeline-eval and score.  Every file output gets a sibling
``<name>.manifest.json`` with input/output digests so runs are
reproducible.  Exit codes: 0 success, 1 operational error, 2 usage error.
"""

import argparse
import json
import logging
import sys

from clarforge import __version__
from clarforge.errors import ClarforgeError
from clarforge.util import sha256_file

log = logging.getLogger("clarforge")


def _read_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _write_manifest(output_path: str, command: str, config: dict, inputs: list[str],
                    encoder_id: str | None = None) -> None:
    # execution details (worker count, log level, output formatting) do not
    # determine the output, so they stay out of the manifest
    excluded = {"func", "parallel", "verbose", "json"}
    safe_config = {
        k: v for k, v in sorted(config.items())
        if isinstance(v, (str, int, float, bool, type(None), list, dict)) and k not in excluded
    }
    manifest = {
        "artifact": f"clarforge {__version__}",
        "command": command,
        "config": safe_config,
        "inputs": {p: sha256_file(p) for p in sorted(set(inputs))},
        "output": {output_path: sha256_file(output_path)},
    }
    if encoder_id is not None:
        manifest["encoder_id"] = encoder_id
    with open(output_path + ".manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def _emit(payload, as_json: bool, text_renderer=None) -> None:
    if as_json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    elif text_renderer is not None:
        text_renderer(payload)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))


def _load_alias(path: str | None) -> dict:
    return _read_json(path) if path else {}


# -- subcommand implementations -------------------------------------------------


def _cmd_build_graph(args) -> int:
    from clarforge.codegraph import build_graph, extract_key_operations, graph_to_dot, graph_to_json

    with open(args.code, "r", encoding="utf-8") as f:
        code = f.read()
    context = []
    for path in args.context or []:
        with open(path, "r", encoding="utf-8") as f:
            context.append(f.read())
    graph = build_graph(code, context or None)
    key_ops = extract_key_operations(graph)
    if args.emit == "dot":
        print(graph_to_dot(graph, key_ops))
    else:
        print(json.dumps(graph_to_json(graph, key_ops), indent=2))
    return 0


def _cmd_build_docindex(args) -> int:
    from clarforge.docindex import build_doc_index_file

    count = build_doc_index_file(args.raw, args.out)
    _write_manifest(args.out, "build-docindex", vars(args), [args.raw])
    log.info("wrote %d doc entries to %s", count, args.out)
    return 0


def _cmd_schema(args) -> int:
    from clarforge.schema import extract_schema

    elements = [e.to_dict() for e in extract_schema(args.text)]

    def render(payload):
        for el in payload:
            if el["kind"] == "triplet":
                print(f"({el['verb']}, {el['keyphrase']}, {el['relation']})")
            else:
                print(f"({el['keyphrase']})")

    _emit(elements, args.json, render)
    return 0


def _cmd_classify(args) -> int:
    from clarforge.builder import BuildOptions, scored_operations
    from clarforge.corpus import load_corpus
    from clarforge.docindex import load_doc_index

    corpus = load_corpus(args.corpus)
    index = load_doc_index(args.docindex)
    options = BuildOptions(threshold=args.t, encoder_id=args.encoder,
                           endpoint=args.endpoint, cache_path=args.cache)
    scored = scored_operations(corpus, index, options)
    rows = [
        {
            "sample_id": sample_id,
            "op_index": op_index,
            "fqname": op.node.fqname,
            "display_name": op.doc.display_name,
            "best_score": op.best_score,
            "status": op.status,
        }
        for (sample_id, op_index), op in scored.items()
    ]
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row, ensure_ascii=False) + "\n")
        _write_manifest(args.out, "classify", vars(args), [args.corpus, args.docindex],
                        encoder_id=args.encoder)
    else:
        for row in rows:
            print(json.dumps(row, ensure_ascii=False))
    return 0


def _cmd_calibrate(args) -> int:
    from clarforge.align import STATUS_MISSING, calibrate_threshold, evaluate_alignment
    from clarforge.builder import BuildOptions, labeled_scores, load_annotations, scored_operations
    from clarforge.corpus import load_corpus
    from clarforge.docindex import load_doc_index

    corpus = load_corpus(args.corpus)
    index = load_doc_index(args.docindex)
    options = BuildOptions(encoder_id=args.encoder, endpoint=args.endpoint,
                           cache_path=args.cache)
    scored = scored_operations(corpus, index, options)
    annotations = load_annotations(args.annotations)
    labeled = labeled_scores(scored, annotations)
    t_star = calibrate_threshold(labeled)
    predictions = {}
    gold = {}
    for row in annotations:
        key = (row["sample_id"], row["op_index"])
        op = scored[key]
        predictions[key] = STATUS_MISSING if op.best_score < t_star else "aligned"
        gold[key] = row["label"]
    metrics = evaluate_alignment(predictions, gold)
    payload = {"threshold": t_star, "encoder_id": args.encoder, **metrics.to_dict()}

    def render(p):
        print(f"t* = {p['threshold']:.6f} (encoder {p['encoder_id']})")
        print(f"accuracy={p['accuracy']:.4f} precision={p['precision']:.4f} "
              f"recall={p['recall']:.4f} f1={p['f1']:.4f}")

    _emit(payload, args.json, render)
    return 0


def _cmd_build_dataset(args) -> int:
    from clarforge.builder import BuildOptions, build_dataset
    from clarforge.corpus import load_corpus, write_dataset
    from clarforge.docindex import load_doc_index

    corpus = load_corpus(args.corpus)
    index = load_doc_index(args.docindex)
    options = BuildOptions(
        threshold=args.t,
        encoder_id=args.encoder,
        endpoint=args.endpoint,
        cache_path=args.cache,
        alias_table=_load_alias(args.alias),
        keep_overflow=args.keep_overflow,
        workers=args.parallel,
        use_parse=args.use_parse,
    )
    result = build_dataset(corpus, index, options)
    write_dataset(result.records, args.out)
    inputs = [args.corpus, args.docindex] + ([args.alias] if args.alias else [])
    _write_manifest(args.out, "build-dataset", vars(args), inputs,
                    encoder_id=result.encoder_id)
    log.info("wrote %d records (%d excluded) to %s",
             len(result.records), len(result.excluded), args.out)
    for row in result.excluded:
        log.info("excluded %s: %s", row["sample_id"], row["reason"])
    return 0


def _cmd_stats(args) -> int:
    from clarforge.corpus import compute_stats, read_dataset

    dataset = read_dataset(args.dataset)
    stats = compute_stats(dataset)
    payload = stats.to_dict()

    def render(p):
        columns = ["total"] + (list(p["per_split"]) if args.per_split else [])
        rows = list(p["total"].keys())
        header = ["stat"] + columns
        widths = [max(len(h), 18) for h in header]
        print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        for row in rows:
            cells = [row]
            for col in columns:
                source = p["total"] if col == "total" else p["per_split"][col]
                value = source[row]
                cells.append(f"{value:.2f}" if isinstance(value, float) else str(value))
            print("  ".join(c.ljust(w) for c, w in zip(cells, widths)))

    _emit(payload, args.json, render)
    return 0


def _cmd_rank(args) -> int:
    from clarforge.baselines import bm25_rank, build_universal_cq_set, recall_at_k
    from clarforge.corpus import read_dataset

    dataset = read_dataset(args.dataset)
    universal = build_universal_cq_set(dataset)
    id_by_question = universal.id_by_question
    split_records = [r for r in dataset if r.sample.split == args.split]
    rankings = {}
    gold = {}
    for record in split_records:
        if not record.cqas:
            continue
        rankings[record.sample.id] = bm25_rank(record.sample.nld, universal,
                                               k1=args.k1, b=args.b,
                                               sample_id=record.sample.id)
        gold[record.sample.id] = {id_by_question[c.question] for c in record.cqas}
    ks = tuple(int(k) for k in args.ks.split(","))
    recalls = recall_at_k(rankings, gold, ks=ks, micro=args.micro)
    payload = {"split": args.split, "universal_size": len(universal),
               "recall_at": {str(k): v for k, v in recalls.items()}}

    def render(p):
        print(f"BM25 ranking on split {p['split']} (universal set: {p['universal_size']} CQs)")
        for k, v in p["recall_at"].items():
            print(f"R@{k} = {v:.2f}")

    _emit(payload, args.json, render)
    return 0


def _cmd_need(args) -> int:
    from clarforge.baselines import NeedModel, evaluate_need, export_need_labels, train_need_predictor
    from clarforge.corpus import read_dataset

    dataset = read_dataset(args.dataset)
    split_records = [r for r in dataset if r.sample.split == args.split]
    if args.action == "train":
        model = train_need_predictor(split_records, seed=args.seed)
        model.save(args.out)
        _write_manifest(args.out, "need train", vars(args), [args.dataset])
        log.info("trained need predictor on %d records", len(split_records))
        return 0
    if args.action == "eval":
        model = NeedModel.load(args.model)
        metrics = evaluate_need(model, split_records)

        def render(p):
            print(f"accuracy={p['accuracy']:.4f} precision={p['precision']:.4f} "
                  f"recall={p['recall']:.4f} f1={p['f1']:.4f}")

        _emit(metrics, args.json, render)
        return 0
    rows = export_need_labels(split_records)
    with open(args.out, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    _write_manifest(args.out, "need export", vars(args), [args.dataset])
    return 0


def _cmd_export_pairs(args) -> int:
    from clarforge.baselines import export_ranking_pairs
    from clarforge.corpus import read_dataset

    dataset = read_dataset(args.dataset)
    split_records = [r for r in dataset if r.sample.split == args.split]
    pairs = export_ranking_pairs(split_records, strategy=args.strategy, seed=args.seed)
    with open(args.out, "w", encoding="utf-8") as f:
        for pair in pairs:
            f.write(json.dumps(pair, ensure_ascii=False) + "\n")
    _write_manifest(args.out, "export-pairs", vars(args), [args.dataset])
    log.info("exported %d pairs", len(pairs))
    return 0


def _load_predictions(path: str) -> dict[str, str]:
    predictions = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if line.strip():
                obj = json.loads(line)
                predictions[obj["sample_id"]] = obj["code"]
    return predictions


def _cmd_pipeline_eval(args) -> int:
    from clarforge.baselines import NeedModel, bm25_rank, build_universal_cq_set, train_need_predictor
    from clarforge.corpus import read_dataset
    from clarforge.docindex import load_doc_index
    from clarforge.evalkit import PipelineConfig, run_pipeline_eval

    dataset = read_dataset(args.dataset)
    index = load_doc_index(args.docindex)
    universal = build_universal_cq_set(dataset)
    id_by_question = universal.id_by_question
    split_records = [r for r in dataset if r.sample.split == args.split]
    predictions = _load_predictions(args.predictions)

    if args.need_model:
        model = NeedModel.load(args.need_model)
    else:
        train_records = [r for r in dataset if r.sample.split == "train"]
        model = train_need_predictor(train_records or dataset, seed=args.seed)

    config = PipelineConfig(top_n=args.top_n, k=args.k, answered_mode=args.mode)
    report, prompts = run_pipeline_eval(
        split_records,
        need_predictor=model.predict,
        ranker=lambda nld: bm25_rank(nld, universal).ids,
        cq_id_by_question=id_by_question,
        config=config,
        predictions=predictions,
        index=index,
    )
    if args.emit_prompts:
        with open(args.emit_prompts, "w", encoding="utf-8") as f:
            for row in prompts:
                f.write(json.dumps(row, ensure_ascii=False) + "\n")
        # stamp the concatenation convention so prompt files are self-describing
        prompt_format = "<nld>{ CQ: <question>}" + ("{ A: <answer>}" if args.mode == "answered" else "")
        _write_manifest(args.emit_prompts, "pipeline-eval",
                        dict(vars(args), prompt_format=prompt_format),
                        [args.dataset, args.docindex, args.predictions])
    payload = report.to_dict()

    def render(p):
        print(f"BLEU = {p['bleu']:.4f}")
        print(f"EM = {p['em_percent']:.2f}%")
        print(f"keyop recall micro = {p['keyop_recall_micro']:.4f} "
              f"macro = {p['keyop_recall_macro']:.4f}")

    _emit(payload, args.json, render)
    return 0


def _cmd_score(args) -> int:
    from clarforge.corpus import read_dataset
    from clarforge.evalkit import corpus_bleu, exact_match, keyop_recall

    dataset = read_dataset(args.dataset)
    split_records = [r for r in dataset if r.sample.split == args.split] if args.split else dataset
    predictions = _load_predictions(args.predictions)
    missing = [r.sample.id for r in split_records if r.sample.id not in predictions]
    if missing:
        raise ClarforgeError(f"missing predictions for samples: {', '.join(missing)}")

    if args.metric == "bleu":
        value = corpus_bleu([(predictions[r.sample.id], r.sample.code) for r in split_records])
        payload = {"metric": "bleu", "value": value}
    elif args.metric == "em":
        hits = sum(1 for r in split_records if exact_match(predictions[r.sample.id], r.sample.code))
        payload = {"metric": "em", "value": 100.0 * hits / len(split_records) if split_records else 0.0}
    else:
        if not args.docindex:
            raise ClarforgeError("--docindex is required for keyop-recall")
        from clarforge.docindex import load_doc_index

        index = load_doc_index(args.docindex)
        gold = {r.sample.id: [c.target_display_name for c in r.cqas] for r in split_records}
        micro, macro = keyop_recall(predictions, gold, index)
        payload = {"metric": "keyop-recall", "micro": micro, "macro": macro}

    _emit(payload, args.json, lambda p: print(json.dumps(p)))
    return 0


# -- parser ------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clarforge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"clarforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--json", action="store_true", help="machine-readable stdout")
        p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("build-graph", help="debug: emit the operation graph of a snippet")
    common(p)
    p.add_argument("--code", required=True)
    p.add_argument("--context", action="append")
    p.add_argument("--emit", choices=["dot", "json"], default="json")
    p.set_defaults(func=_cmd_build_graph)

    p = sub.add_parser("build-docindex", help="convert raw docs into an index file")
    common(p)
    p.add_argument("--in", dest="raw", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_docindex)

    p = sub.add_parser("schema", help="debug: print schema elements of a text")
    common(p)
    p.add_argument("--text", required=True)
    p.set_defaults(func=_cmd_schema)

    p = sub.add_parser("classify", help="classify key operations of a corpus")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--docindex", required=True)
    p.add_argument("--t", type=float, default=0.41)
    p.add_argument("--encoder", default="lexical-trigram-v1")
    p.add_argument("--endpoint")
    p.add_argument("--cache")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("calibrate", help="grid-search the alignment threshold")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--docindex", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--encoder", default="lexical-trigram-v1")
    p.add_argument("--endpoint")
    p.add_argument("--cache")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("build-dataset", help="build the CQA dataset from a corpus")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--docindex", required=True)
    p.add_argument("--t", type=float, default=0.41)
    p.add_argument("--encoder", default="lexical-trigram-v1")
    p.add_argument("--endpoint")
    p.add_argument("--cache")
    p.add_argument("--alias")
    p.add_argument("--keep-overflow", action="store_true")
    p.add_argument("--use-parse", action="store_true",
                   help="request dependency parses from the sidecar")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_dataset)

    p = sub.add_parser("stats", help="dataset statistics")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--per-split", action="store_true")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("rank", help="BM25 CQ ranking with R@k")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--ks", default="1,3,5,10")
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.add_argument("--micro", action="store_true")
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("need", help="clarification-need predictor")
    common(p)
    p.add_argument("action", choices=["train", "eval", "export"])
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default="train")
    p.add_argument("--model")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=13)
    p.set_defaults(func=_cmd_need)

    p = sub.add_parser("export-pairs", help="export (nld, cq, label) training pairs")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default="train")
    p.add_argument("--strategy", choices=["random", "bm25"], required=True)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_pairs)

    p = sub.add_parser("pipeline-eval", help="end-to-end pipeline evaluation")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--docindex", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--top-n", type=int, default=5)
    p.add_argument("--mode", choices=["answered", "unanswered"], default="answered")
    p.add_argument("--predictions", required=True)
    p.add_argument("--need-model")
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--emit-prompts")
    p.set_defaults(func=_cmd_pipeline_eval)

    p = sub.add_parser("score", help="score generations against references")
    common(p)
    p.add_argument("--metric", choices=["bleu", "em", "keyop-recall"], required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--docindex")
    p.add_argument("--split")
    p.set_defaults(func=_cmd_score)

    return parser


def _apply_config(args: argparse.Namespace, argv: list[str]) -> None:
    """Overlay config-file values onto flags the user did not pass."""
    if not getattr(args, "config", None):
        return
    cfg = _read_json(args.config)
    passed = {token.split("=")[0].lstrip("-").replace("-", "_") for token in argv if token.startswith("--")}
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and attr not in passed:
            setattr(args, attr, value)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    _apply_config(args, argv)
    try:
        return args.func(args)
    except ClarforgeError as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
