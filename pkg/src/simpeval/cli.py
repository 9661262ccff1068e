"""Command-line entry points for the whole pipeline.

Subcommands: ingest, split, ct compute / prepare-train / optimize, evaluate,
curve, select, and the humeval group (sample, assign, serve, stats, export).
Run ``simpeval <command> --help`` for per-command options.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

from . import control_tokens as ct
from . import corpus, ct_search, human_eval, reporting
from .service import RatingStore, serve_annotation

#: Published sentence-pair counts of the public PLABA corpus after removing
#: 1-to-0 pairs; used only to flag dataset-version drift, never enforced.
PLABA_PUBLISHED_SPLIT = (5757, 814, 814)
PLABA_PUBLISHED_TOTAL = sum(PLABA_PUBLISHED_SPLIT)


def _write_json(data, path: str | None) -> None:
    text = json.dumps(data, indent=2, ensure_ascii=False)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def cmd_ingest(args) -> int:
    pairs = corpus.load_corpus(args.pairs)
    summary = {
        "n_pairs": len(pairs),
        "n_docs": len({p.doc_id for p in pairs}),
        "n_empty_ref": sum(1 for p in pairs if not p.refs),
        "n_multi_ref": sum(1 for p in pairs if p.is_multi_ref()),
    }
    if args.out:
        corpus.save_corpus(pairs, args.out)
    _write_json(summary, None)
    return 0


def cmd_split(args) -> int:
    pairs = corpus.load_corpus(args.pairs)
    ratios = tuple(float(x) for x in args.ratios.split(","))
    if len(ratios) != 3:
        raise SystemExit("--ratios must be three comma-separated numbers")
    splits = corpus.make_splits(pairs, ratios, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus.save_corpus(splits.train, str(out_dir / "train.jsonl"))
    corpus.save_corpus(splits.validation, str(out_dir / "validation.jsonl"))
    corpus.save_corpus(splits.test, str(out_dir / "test.jsonl"))
    filtered_total = sum(splits.sizes())
    report = {
        "sizes": {"train": len(splits.train), "validation": len(splits.validation), "test": len(splits.test)},
        "seed": splits.seed,
        "ratios": list(splits.ratios),
        "filtered_total": filtered_total,
        "published_plaba_total": PLABA_PUBLISHED_TOTAL,
        "matches_published_total": filtered_total == PLABA_PUBLISHED_TOTAL,
    }
    _write_json(report, str(out_dir / "split_report.json"))
    _write_json(report, None)
    if filtered_total != PLABA_PUBLISHED_TOTAL:
        print(
            f"note: filtered total {filtered_total} differs from the published PLABA "
            f"total {PLABA_PUBLISHED_TOTAL}; expected for non-PLABA or drifted data",
            file=sys.stderr,
        )
    return 0


def _load_sidecars(args):
    parses = corpus.load_conllu(args.parses)
    table = corpus.load_frequency_list(args.freq)
    return parses, table


def cmd_ct_compute(args) -> int:
    pairs = corpus.load_corpus(args.pairs)
    parses, table = _load_sidecars(args)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for pair in pairs:
            for j in range(len(pair.refs)):
                raw = ct.compute_ct(pair, j, parses, table)
                quantized = ct.quantize_vector(raw)
                record = {"id": pair.id, "ref_index": j}
                for name in ("dtd", "wr", "lv", "lr"):
                    record[name] = {
                        "raw": getattr(raw, name),
                        "quantized": getattr(quantized, name),
                    }
                record["annotated_src"] = ct.annotate(pair.src, quantized)
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return 0


def cmd_ct_prepare_train(args) -> int:
    pairs = corpus.load_corpus(args.pairs)
    parses, table = _load_sidecars(args)
    examples = ct.prepare_training_set(pairs, parses, table)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for annotated_src, ref in examples:
            fh.write(json.dumps({"annotated_src": annotated_src, "ref": ref}, ensure_ascii=False) + "\n")
    print(f"wrote {len(examples)} training examples to {args.out}")
    return 0


def _make_generator(spec: str) -> ct_search.Generator:
    if spec == "mock":
        return ct_search.MockGenerator(ct.strip_annotation)
    if spec.startswith("cmd:"):
        return ct_search.CommandGenerator(shlex.split(spec[len("cmd:"):]))
    if spec.startswith("http"):
        return ct_search.HttpGenerator(spec)
    raise SystemExit(f"unknown generator spec {spec!r}; use mock, cmd:..., or http://...")


def _parse_grid(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(","))


def cmd_ct_optimize(args) -> int:
    val_pairs = corpus.load_corpus(args.pairs)
    parses, table = _load_sidecars(args)
    gen = _make_generator(args.generator)
    grid = ct_search.CtGrid(
        dtd=_parse_grid(args.grid_dtd), wr=_parse_grid(args.grid_wr), lv=_parse_grid(args.grid_lv)
    )
    if args.lr.startswith("const:"):
        policy = ct_search.constant_lr_policy(float(args.lr[len("const:"):]))
    elif args.lr.startswith("predict:"):
        train_pairs = corpus.load_corpus(args.lr[len("predict:"):])
        predictor = ct_search.fit_lr_predictor(train_pairs, parses, table, ridge=args.ridge)
        policy = ct_search.predictor_lr_policy(predictor, parses, table)
    else:
        raise SystemExit("--lr must be const:<value> or predict:<training pairs path>")
    result = ct_search.grid_search(gen, val_pairs, grid, policy)
    _write_json(result.to_dict(), args.report)
    print(
        f"selected dtd={result.best.dtd:g} wr={result.best.wr:g} lv={result.best.lv:g} "
        f"with SARI {result.best_sari:.2f}"
    )
    return 0


def _eval_config(args) -> reporting.EvalConfig:
    return reporting.EvalConfig(
        hyp_embeddings_path=getattr(args, "hyp_embeddings", None),
        ref_embeddings_path=getattr(args, "ref_embeddings", None),
    )


def cmd_evaluate(args) -> int:
    split = corpus.load_corpus(args.pairs)
    report = reporting.evaluate_run(args.predictions, split, _eval_config(args), args.system)
    if args.out:
        _write_json(report.to_dict(), args.out)
    print(reporting.render_metric_table([report]))
    return 0


def cmd_curve(args) -> int:
    split = corpus.load_corpus(args.pairs)
    manifest = json.loads(Path(args.runs).read_text(encoding="utf-8"))
    config = _eval_config(args)
    records = [
        reporting.RunRecord(
            system_name=entry["system"],
            epoch=int(entry["epoch"]),
            predictions_path=entry["predictions"],
            report=reporting.evaluate_run(entry["predictions"], split, config, entry["system"]),
        )
        for entry in manifest
    ]
    curves = reporting.learning_curve(records)
    _write_json(reporting.curve_to_dict(curves, split_name=args.pairs), args.out)
    if args.plot:
        reporting.plot_curves(curves, args.plot)
    return 0


def cmd_select(args) -> int:
    reports = [
        reporting.MetricReport.from_dict(json.loads(Path(p).read_text(encoding="utf-8")))
        for p in args.reports
    ]
    selected = reporting.select_models(reports)
    _write_json({"selected": sorted(selected)}, None)
    return 0


def _load_outputs(specs: list[str]) -> dict[str, dict[str, str]]:
    outputs = {}
    for spec in specs:
        name, _, path = spec.partition("=")
        if not path:
            raise SystemExit(f"--outputs entries must look like NAME=path, got {spec!r}")
        outputs[name] = reporting.load_predictions(path)
    return outputs


def cmd_humeval_sample(args) -> int:
    test_pairs = corpus.load_corpus(args.pairs)
    items = human_eval.sample_items(test_pairs, _load_outputs(args.outputs), args.n, args.seed)
    human_eval.save_items(items, args.out)
    print(f"wrote {len(items)} blinded items to {args.out}")
    return 0


def _parse_schedule(text: str) -> list[tuple[str, str]]:
    schedule = []
    for chunk in text.split(","):
        a, sep, b = chunk.partition("-")
        if not sep:
            raise SystemExit(f"schedule entries must look like A-B, got {chunk!r}")
        schedule.append((a, b))
    return schedule


def cmd_humeval_assign(args) -> int:
    items = human_eval.load_items(args.items)
    plan = human_eval.assign(
        items, args.annotators.split(","), _parse_schedule(args.schedule), args.seed
    )
    _write_json(plan.to_dict(), args.out)
    loads = {a: plan.load(a) for a in plan.annotators()}
    print(f"assigned {len(items)} items; per-annotator loads: {loads}")
    return 0


def cmd_humeval_serve(args) -> int:
    items = human_eval.load_items(args.items)
    plan = human_eval.AssignmentPlan.from_dict(json.loads(Path(args.plan).read_text(encoding="utf-8")))
    serve_annotation(items, plan, args.store, args.bind)
    return 0


def cmd_humeval_stats(args) -> int:
    items = human_eval.load_items(args.items)
    plan = human_eval.AssignmentPlan.from_dict(json.loads(Path(args.plan).read_text(encoding="utf-8")))
    records = RatingStore(args.store).records()
    systems = sorted({s for item in items for s in item.blinding.values()})
    stats = {
        "canonical_system_order": systems,
        "means": human_eval.summarize(records, human_eval.blinding_from_items(items)),
        "agreements": human_eval.agreement_report(items, plan, records),
    }
    _write_json(stats, args.out)
    print(human_eval.render_summary_table(stats["means"]))
    return 0


def cmd_humeval_export(args) -> int:
    items = human_eval.load_items(args.items)
    by_id = {item.item_id: item for item in items}
    records = RatingStore(args.store).records()
    lines = []
    for record in records:
        unblinded = record.to_dict()
        unblinded["system"] = by_id[record.item_id].blinding[record.slot]
        lines.append(json.dumps(unblinded, ensure_ascii=False))
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simpeval", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a pairs file and report corpus counts")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", help="write a canonical normalized copy")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("split", help="produce train/validation/test splits")
    p.add_argument("--pairs", required=True)
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_split)

    ct_parser = sub.add_parser("ct", help="control-token preparation and optimization")
    ct_sub = ct_parser.add_subparsers(dest="ct_command", required=True)

    p = ct_sub.add_parser("compute", help="compute raw+quantized vectors per (source, reference)")
    p.add_argument("--pairs", required=True)
    p.add_argument("--parses", required=True)
    p.add_argument("--freq", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ct_compute)

    p = ct_sub.add_parser("prepare-train", help="emit annotated (source, reference) training examples")
    p.add_argument("--pairs", required=True)
    p.add_argument("--parses", required=True)
    p.add_argument("--freq", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ct_prepare_train)

    p = ct_sub.add_parser("optimize", help="grid-search static dtd/wr/lv values")
    p.add_argument("--generator", required=True, help="mock | cmd:<command> | http://host:port")
    p.add_argument("--pairs", required=True, help="validation pairs (all multi-reference)")
    p.add_argument("--parses", required=True)
    p.add_argument("--freq", required=True)
    p.add_argument("--grid-dtd", default="0.6,0.8,1.0")
    p.add_argument("--grid-wr", default="0.6,0.8,1.0")
    p.add_argument("--grid-lv", default="0.6,0.8,1.0")
    p.add_argument("--lr", default="const:1.0", help="const:<value> or predict:<training pairs>")
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--report", help="write the full per-point score table")
    p.set_defaults(fn=cmd_ct_optimize)

    p = sub.add_parser("evaluate", help="score a predictions file against a split")
    p.add_argument("--predictions", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--system", default="system")
    p.add_argument("--hyp-embeddings")
    p.add_argument("--ref-embeddings")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("curve", help="learning curves from a manifest of per-epoch predictions")
    p.add_argument("--runs", required=True, help='JSON list of {"system", "epoch", "predictions"}')
    p.add_argument("--pairs", required=True)
    p.add_argument("--hyp-embeddings")
    p.add_argument("--ref-embeddings")
    p.add_argument("--out")
    p.add_argument("--plot", help="also write a PNG line chart")
    p.set_defaults(fn=cmd_curve)

    p = sub.add_parser("select", help="pick the best systems by SARI and embedding F")
    p.add_argument("--reports", nargs="+", required=True)
    p.set_defaults(fn=cmd_select)

    he = sub.add_parser("humeval", help="blinded human-evaluation protocol")
    he_sub = he.add_subparsers(dest="humeval_command", required=True)

    p = he_sub.add_parser("sample", help="sample and blind evaluation items")
    p.add_argument("--pairs", required=True, help="test split")
    p.add_argument("--outputs", nargs=2, required=True, metavar="NAME=PATH",
                   help="exactly two system prediction files")
    p.add_argument("--n", type=int, default=80)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_humeval_sample)

    p = he_sub.add_parser("assign", help="deal items to annotator pairs")
    p.add_argument("--items", required=True)
    p.add_argument("--annotators", required=True, help="comma-separated ids, e.g. 0,1,2,3")
    p.add_argument("--schedule", required=True, help="comma-separated pairs, e.g. 0-1,0-2,1-3,2-3")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_humeval_assign)

    p = he_sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--items", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.set_defaults(fn=cmd_humeval_serve)

    p = he_sub.add_parser("stats", help="means and inter-rater agreement")
    p.add_argument("--items", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_humeval_stats)

    p = he_sub.add_parser("export", help="unblinded rating records as JSON Lines")
    p.add_argument("--items", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_humeval_export)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
