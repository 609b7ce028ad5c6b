"""Command-line interface.

Subcommands:
  run      execute a (parser × dataset) benchmark matrix from a run spec
  parse    run one parser over one dataset, writing the parsed CSV
  metrics  score a parsed CSV against a ground-truth CSV
  groups   dump annotation groups for a dataset
  serve    start the annotation HTTP service
  synth    generate a synthetic demo dataset with ground truth

``logbench run`` exits 0 only when every requested cell completed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import LogbenchError
from .ingest import (
    ingest_corpus,
    load_ground_truth,
    load_manifest,
    load_parsed_csv,
    write_parsed_csv,
)
from .metrics import evaluate
from .parsers import ParserConfig, available_parsers, create_parser
from .runner import (
    STATUS_COMPLETED,
    aggregate,
    emit_reports,
    load_run_spec,
    run_matrix,
)
from .stratify import (
    frequency_strata,
    param_strata,
    subset_metrics,
    write_stratified_csv,
)

log = logging.getLogger("logbench")


def _parse_kv(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise SystemExit(f"--param expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def cmd_run(args) -> int:
    spec = load_run_spec(args.spec)
    records = run_matrix(spec)
    paths = emit_reports(records, spec.output_dir)
    completed = sum(1 for r in records if r.status == STATUS_COMPLETED)
    for agg in aggregate(records):
        line = f"{agg.parser} x {agg.dataset}: {agg.status}"
        if agg.median_metrics:
            line += (
                f"  GA={agg.median_metrics['ga']:.4f}"
                f" PA={agg.median_metrics['pa']:.4f}"
                f" FGA={agg.median_metrics['fga']:.4f}"
                f" FTA={agg.median_metrics['fta']:.4f}"
            )
        print(line)
    print(f"reports written under {spec.output_dir}")
    if completed != len(records):
        print(f"{len(records) - completed} of {len(records)} cells did not complete")
        return 1
    return 0


def cmd_parse(args) -> int:
    manifest = load_manifest(args.dataset)
    config = ParserConfig(args.parser, _parse_kv(args.param))
    corpus = ingest_corpus(manifest)
    parser = create_parser(config)
    result = parser.parse(corpus.records)
    texts: dict[int, str] = {}
    for rep_id, tid in result.assignment.items():
        text = result.templates[tid].text
        for line_id in corpus.merged_lines.get(rep_id, (rep_id,)):
            texts[line_id] = text
    write_parsed_csv(texts, args.out)
    print(
        f"{manifest.name}: {len(texts)} lines, "
        f"{len(result.templates)} templates -> {args.out}"
    )
    return 0


def _stratify_arg(value: str) -> list[int]:
    value = value.removeprefix("k=")
    return [int(part) for part in value.split(",") if part]


def cmd_metrics(args) -> int:
    truth = load_ground_truth(args.truth)
    parse = load_parsed_csv(args.parsed)
    report = evaluate(parse, truth, fta_strict=args.fta_strict)
    payload = report.to_json_dict()

    dataset_label = Path(args.truth).stem
    parser_label = Path(args.parsed).stem
    strata_rows = []
    for k in _stratify_arg(args.stratify) if args.stratify else []:
        top, bottom = frequency_strata(truth, k)
        for stratum in (top, bottom):
            strata_rows.append(
                (dataset_label, parser_label, stratum,
                 subset_metrics(parse, truth, stratum, fta_strict=args.fta_strict))
            )
    if args.param_buckets:
        for stratum in param_strata(truth):
            if stratum.template_ids:
                strata_rows.append(
                    (dataset_label, parser_label, stratum,
                     subset_metrics(parse, truth, stratum,
                                    fta_strict=args.fta_strict))
                )
    if strata_rows:
        payload["strata"] = [
            {
                "kind": stratum.kind,
                "k_percent": stratum.k_percent,
                "bucket": stratum.bucket,
                "metrics": rep.to_json_dict(),
            }
            for _, _, stratum, rep in strata_rows
        ]
        if args.strata_csv:
            write_stratified_csv(strata_rows, args.strata_csv)

    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_groups(args) -> int:
    from .grouping import coarse_group, dump_groups

    manifest = load_manifest(args.dataset)
    corpus = ingest_corpus(manifest)
    grouped = coarse_group(corpus, manifest)
    index = dump_groups(grouped, corpus, args.out)
    print(f"{len(index)} groups -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import SessionStore, create_app

    store = SessionStore(state_dir=args.state_dir)
    for manifest_path in args.manifest or []:
        session = store.open(manifest_path)
        print(f"opened session {session.session_id!r}")
    app = create_app(store)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_synth(args) -> int:
    from .synth import generate_dataset, write_dataset

    ds = generate_dataset(
        n_templates=args.templates,
        n_lines=args.lines,
        seed=args.seed,
        name=args.name,
    )
    manifest = write_dataset(ds, args.out)
    print(
        f"wrote {args.lines} lines / {args.templates} templates under "
        f"{args.out} (manifest: {manifest.name}.yaml)"
    )
    return 0


def build_arg_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="logbench",
        description="Log-parsing benchmark harness and annotation service.",
    )
    top.add_argument("--version", action="version", version=f"logbench {__version__}")
    top.add_argument("-v", "--verbose", action="store_true")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a benchmark matrix")
    p.add_argument("--spec", required=True, help="run spec YAML")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("parse", help="parse one dataset with one parser")
    p.add_argument("--parser", required=True, choices=sorted(available_parsers()))
    p.add_argument("--dataset", required=True, help="dataset manifest YAML")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument(
        "--param", action="append", default=[],
        help="parser parameter as key=value (repeatable)",
    )
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("metrics", help="score a parsed CSV against ground truth")
    p.add_argument("--parsed", required=True, help="parsed CSV (LineId,EventTemplate)")
    p.add_argument("--truth", required=True, help="ground-truth structured CSV")
    p.add_argument("--stratify", help="frequency strata, e.g. k=5,10,20")
    p.add_argument("--param-buckets", action="store_true",
                   help="also report parameter-count buckets")
    p.add_argument("--fta-strict", action="store_true",
                   help="FTA condition 1 as full set equality")
    p.add_argument("--out", help="also write the JSON report here")
    p.add_argument("--strata-csv", help="write stratified rows as CSV here")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("groups", help="dump annotation groups")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_groups)

    p = sub.add_parser("serve", help="start the annotation service")
    p.add_argument("--manifest", action="append",
                   help="open a session for this manifest (repeatable)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--state-dir", help="persist session event logs here")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth", help="generate a synthetic demo dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--templates", type=int, default=20)
    p.add_argument("--lines", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default="synthetic")
    p.set_defaults(func=cmd_synth)

    return top


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except LogbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
