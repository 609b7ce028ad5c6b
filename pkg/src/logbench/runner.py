"""Benchmark orchestration: (parser × dataset) matrices with timeouts.

Every cell runs in its own child process so a hung or runaway parser can be
cancelled without touching the rest of the matrix.  Wall clock covers
loading the log data through completion of parsing; output serialization
and metric computation happen outside the timer.  A timed-out cell is
terminated within a small grace period and carries no metrics.
Nondeterministic parsers run several times and aggregate rows report the
per-metric median over completed runs.
"""

from __future__ import annotations

import json
import multiprocessing as mp
import os
import statistics
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from .errors import ConfigurationError, LogbenchError
from .ingest import (
    Corpus,
    DatasetManifest,
    ingest_corpus,
    load_ground_truth,
    load_parsed_csv,
    manifest_from_mapping,
    write_parsed_csv,
)
from .metrics import METRIC_NAMES, MetricReport, evaluate
from .model import GroundTruth
from .parsers import ParserConfig, create_parser
from .stratify import (
    Stratum,
    frequency_strata,
    param_strata,
    subset_metrics,
)

STATUS_COMPLETED = "completed"
STATUS_TIMED_OUT = "timed_out"
STATUS_FAILED = "failed"

#: Extra seconds allowed for a timed-out worker to die after terminate().
CANCELLATION_GRACE_SECONDS = 5.0

DEFAULT_TIMEOUT_SECONDS = 43_200
DEFAULT_NONDETERMINISTIC_RUNS = 5


@dataclass(frozen=True)
class StrataRequest:
    frequency_k: tuple[int, ...] = ()
    param_buckets: bool = False

    def __bool__(self) -> bool:
        return bool(self.frequency_k) or self.param_buckets


@dataclass(frozen=True)
class RunSpec:
    datasets: tuple[DatasetManifest, ...]
    parsers: tuple[ParserConfig, ...]
    output_dir: Path
    timeout_seconds: float = DEFAULT_TIMEOUT_SECONDS
    runs: int | None = None
    strata: StrataRequest = field(default_factory=StrataRequest)
    workers: int = 1
    fta_strict: bool = False

    def __post_init__(self) -> None:
        if self.timeout_seconds <= 0:
            raise ConfigurationError("timeout_seconds must be positive")
        if self.runs is not None and self.runs < 1:
            raise ConfigurationError("runs must be >= 1")
        if not self.datasets:
            raise ConfigurationError("run spec lists no datasets")
        if not self.parsers:
            raise ConfigurationError("run spec lists no parsers")

    def runs_for(self, config: ParserConfig) -> int:
        if self.runs is not None:
            return self.runs
        return DEFAULT_NONDETERMINISTIC_RUNS if config.nondeterministic else 1


def load_run_spec(path: str | Path) -> RunSpec:
    """Run spec document: datasets (inline or manifest paths), parsers, knobs."""
    path = Path(path)
    doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    if not isinstance(doc, Mapping):
        raise ConfigurationError(f"run spec {path} is not a mapping")
    known = {
        "datasets", "parsers", "output_dir", "timeout_seconds", "runs",
        "strata", "workers", "fta_strict",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigurationError(f"unknown run spec field(s): {sorted(unknown)}")

    datasets = []
    for entry in doc.get("datasets") or ():
        if isinstance(entry, str):
            from .ingest import load_manifests

            manifest_path = Path(entry)
            if not manifest_path.is_absolute():
                manifest_path = path.parent / manifest_path
            datasets.extend(load_manifests(manifest_path))
        elif isinstance(entry, Mapping):
            datasets.append(manifest_from_mapping(entry, base_dir=path.parent))
        else:
            raise ConfigurationError(f"bad dataset entry {entry!r}")

    parsers = []
    for entry in doc.get("parsers") or ():
        if isinstance(entry, str):
            parsers.append(ParserConfig(entry))
        elif isinstance(entry, Mapping):
            extra = set(entry) - {"name", "parameters", "seed", "nondeterministic"}
            if extra:
                raise ConfigurationError(
                    f"unknown parser config field(s): {sorted(extra)}"
                )
            parsers.append(
                ParserConfig(
                    name=entry["name"],
                    parameters=dict(entry.get("parameters") or {}),
                    seed=entry.get("seed"),
                    nondeterministic=bool(entry.get("nondeterministic", False)),
                )
            )
        else:
            raise ConfigurationError(f"bad parser entry {entry!r}")

    strata_doc = doc.get("strata") or {}
    strata = StrataRequest(
        frequency_k=tuple(strata_doc.get("frequency_k") or ()),
        param_buckets=bool(strata_doc.get("param_buckets", False)),
    )
    output_dir = Path(doc.get("output_dir") or "logbench-out")
    if not output_dir.is_absolute():
        output_dir = path.parent / output_dir
    return RunSpec(
        datasets=tuple(datasets),
        parsers=tuple(parsers),
        output_dir=output_dir,
        timeout_seconds=float(doc.get("timeout_seconds", DEFAULT_TIMEOUT_SECONDS)),
        runs=doc.get("runs"),
        strata=strata,
        workers=int(doc.get("workers", 1)),
        fta_strict=bool(doc.get("fta_strict", False)),
    )


@dataclass(frozen=True)
class RunRecord:
    parser: str
    dataset: str
    run_index: int
    status: str
    wall_clock_seconds: float
    report: MetricReport | None = None
    strata: tuple[tuple[Stratum, MetricReport], ...] = ()
    error: str | None = None
    notes: tuple[str, ...] = ()
    parsed_csv: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "parser": self.parser,
            "dataset": self.dataset,
            "run_index": self.run_index,
            "status": self.status,
            "wall_clock_seconds": self.wall_clock_seconds,
            "report": self.report.to_json_dict() if self.report else None,
            "strata": [
                {
                    "kind": stratum.kind,
                    "k_percent": stratum.k_percent,
                    "bucket": stratum.bucket,
                    "report": report.to_json_dict(),
                }
                for stratum, report in self.strata
            ],
            "error": self.error,
            "notes": list(self.notes),
            "parsed_csv": self.parsed_csv,
        }


def _cell_worker(
    manifest: DatasetManifest,
    config: ParserConfig,
    out_csv: str,
    timeout_seconds: float,
    conn,
) -> None:
    try:
        if config.name == "external":
            adapter = create_parser(config)
            start = time.perf_counter()
            result = adapter.run(
                manifest.raw_log_path, out_csv, timeout_seconds=timeout_seconds
            )
            elapsed = time.perf_counter() - start
            if result.timed_out:
                conn.send({"status": STATUS_TIMED_OUT, "elapsed": elapsed})
            elif result.returncode != 0:
                conn.send({
                    "status": STATUS_FAILED,
                    "elapsed": elapsed,
                    "error": f"exit code {result.returncode}: {result.stderr_tail}",
                })
            else:
                conn.send({"status": STATUS_COMPLETED, "elapsed": elapsed})
            return

        start = time.perf_counter()
        corpus = ingest_corpus(manifest)
        parser = create_parser(config)
        parse = parser.parse(corpus.records)
        elapsed = time.perf_counter() - start

        texts: dict[int, str] = {}
        for rep_id, tid in parse.assignment.items():
            text = parse.templates[tid].text
            for line_id in corpus.merged_lines.get(rep_id, (rep_id,)):
                texts[line_id] = text
        write_parsed_csv(texts, out_csv)
        conn.send({"status": STATUS_COMPLETED, "elapsed": elapsed})
    except Exception:
        conn.send({"status": STATUS_FAILED, "error": traceback.format_exc()})
    finally:
        conn.close()


@dataclass
class _Cell:
    manifest: DatasetManifest
    config: ParserConfig
    run_index: int
    out_csv: Path


@dataclass
class _Active:
    cell: _Cell
    process: mp.Process
    conn: object
    started: float
    deadline: float


class _DatasetCache:
    """Parent-side ingest/ground-truth cache shared by metric computation."""

    def __init__(self):
        self._corpora: dict[str, Corpus] = {}
        self._truths: dict[str, GroundTruth | None] = {}

    def corpus(self, manifest: DatasetManifest) -> Corpus:
        if manifest.name not in self._corpora:
            self._corpora[manifest.name] = ingest_corpus(manifest)
        return self._corpora[manifest.name]

    def ground_truth(self, manifest: DatasetManifest) -> GroundTruth | None:
        if manifest.name not in self._truths:
            if manifest.ground_truth_path is None:
                self._truths[manifest.name] = None
            else:
                self._truths[manifest.name] = load_ground_truth(manifest)
        return self._truths[manifest.name]


def _line_contents(corpus: Corpus) -> dict[int, str]:
    contents: dict[int, str] = {}
    for record in corpus.records:
        for line_id in corpus.merged_lines.get(record.line_id, (record.line_id,)):
            contents[line_id] = record.content
    return contents


def _measure_cell(
    spec: RunSpec, cache: _DatasetCache, cell: _Cell, status: str,
    elapsed: float, error: str | None,
) -> RunRecord:
    base = dict(
        parser=cell.config.label,
        dataset=cell.manifest.name,
        run_index=cell.run_index,
        status=status,
        wall_clock_seconds=elapsed,
        error=error,
        parsed_csv=str(cell.out_csv) if status == STATUS_COMPLETED else None,
    )
    if status != STATUS_COMPLETED:
        return RunRecord(**base)

    truth = cache.ground_truth(cell.manifest)
    if truth is None:
        return RunRecord(**base, notes=("no ground truth; metrics skipped",))

    try:
        corpus = cache.corpus(cell.manifest)
        contents = _line_contents(corpus)
        parse = load_parsed_csv(
            cell.out_csv, expected_line_ids=contents, contents=contents
        )
        report = evaluate(parse, truth, fta_strict=spec.fta_strict)
    except LogbenchError:
        base["status"] = STATUS_FAILED
        base["error"] = traceback.format_exc(limit=3)
        base["parsed_csv"] = str(cell.out_csv)
        return RunRecord(**base)

    strata_reports: list[tuple[Stratum, MetricReport]] = []
    notes: list[str] = []
    for k in spec.strata.frequency_k:
        try:
            top, bottom = frequency_strata(truth, k)
        except ConfigurationError as exc:
            notes.append(f"frequency strata k={k} skipped: {exc}")
            continue
        for stratum in (top, bottom):
            strata_reports.append(
                (stratum, subset_metrics(parse, truth, stratum,
                                         fta_strict=spec.fta_strict))
            )
    if spec.strata.param_buckets:
        for stratum in param_strata(truth):
            if not stratum.template_ids:
                notes.append(f"param bucket {stratum.bucket} empty")
                continue
            strata_reports.append(
                (stratum, subset_metrics(parse, truth, stratum,
                                         fta_strict=spec.fta_strict))
            )
    return RunRecord(
        **base, report=report, strata=tuple(strata_reports), notes=tuple(notes)
    )


def run_matrix(spec: RunSpec) -> list[RunRecord]:
    """Execute every (parser, dataset, run) cell; never aborts the matrix.

    Cells run concurrently up to the worker limit (LOGBENCH_WORKERS
    overrides ``spec.workers``); each cell owns one child process.
    """
    workers = int(os.environ.get("LOGBENCH_WORKERS", spec.workers) or 1)
    out_dir = Path(spec.output_dir)
    (out_dir / "parsed").mkdir(parents=True, exist_ok=True)

    pending: list[_Cell] = []
    for manifest in spec.datasets:
        for config in spec.parsers:
            for run_index in range(spec.runs_for(config)):
                out_csv = (
                    out_dir / "parsed"
                    / f"{config.label}__{manifest.name}__run{run_index}.csv"
                )
                pending.append(_Cell(manifest, config, run_index, out_csv))
    pending.reverse()  # pop() consumes in declaration order

    cache = _DatasetCache()
    records: list[RunRecord] = []
    active: list[_Active] = []
    ctx = mp.get_context()

    def finish(entry: _Active, payload: dict | None) -> None:
        elapsed = time.monotonic() - entry.started
        if payload is None:
            if entry.process.exitcode not in (0, None):
                records.append(
                    _measure_cell(
                        spec, cache, entry.cell, STATUS_FAILED, elapsed,
                        f"worker died with exit code {entry.process.exitcode}",
                    )
                )
                return
            payload = {"status": STATUS_FAILED, "error": "worker sent no result"}
        records.append(
            _measure_cell(
                spec, cache, entry.cell,
                payload["status"],
                payload.get("elapsed", elapsed),
                payload.get("error"),
            )
        )

    while pending or active:
        while pending and len(active) < workers:
            cell = pending.pop()
            parent_conn, child_conn = ctx.Pipe(duplex=False)
            process = ctx.Process(
                target=_cell_worker,
                args=(
                    cell.manifest, cell.config, str(cell.out_csv),
                    spec.timeout_seconds, child_conn,
                ),
                daemon=True,
            )
            started = time.monotonic()
            process.start()
            child_conn.close()
            active.append(
                _Active(
                    cell=cell,
                    process=process,
                    conn=parent_conn,
                    started=started,
                    deadline=started + spec.timeout_seconds,
                )
            )

        still_active: list[_Active] = []
        for entry in active:
            payload = None
            if entry.conn.poll():
                try:
                    payload = entry.conn.recv()
                except EOFError:
                    payload = None
            if payload is not None:
                entry.process.join()
                finish(entry, payload)
            elif not entry.process.is_alive():
                entry.process.join()
                finish(entry, None)
            elif time.monotonic() >= entry.deadline:
                entry.process.terminate()
                entry.process.join(CANCELLATION_GRACE_SECONDS)
                if entry.process.is_alive():
                    entry.process.kill()
                    entry.process.join()
                records.append(
                    _measure_cell(
                        spec, cache, entry.cell, STATUS_TIMED_OUT,
                        time.monotonic() - entry.started, None,
                    )
                )
            else:
                still_active.append(entry)
                continue
            entry.conn.close()
        active = still_active
        if active:
            time.sleep(0.02)

    records.sort(key=lambda r: (r.dataset, r.parser, r.run_index))
    return records


@dataclass(frozen=True)
class AggregateRecord:
    """Per (parser, dataset): medians over completed runs."""

    parser: str
    dataset: str
    status: str
    runs_total: int
    runs_completed: int
    median_wall_clock: float | None
    median_metrics: Mapping[str, float] | None
    median_strata: tuple[tuple[str, Mapping[str, float]], ...] = ()


def aggregate(records: Sequence[RunRecord]) -> list[AggregateRecord]:
    cells: dict[tuple[str, str], list[RunRecord]] = {}
    for record in records:
        cells.setdefault((record.dataset, record.parser), []).append(record)

    out: list[AggregateRecord] = []
    for (dataset, parser), runs in sorted(cells.items()):
        completed = [r for r in runs if r.status == STATUS_COMPLETED]
        if all(r.status == STATUS_COMPLETED for r in runs):
            status = STATUS_COMPLETED
        elif any(r.status == STATUS_TIMED_OUT for r in runs):
            status = STATUS_TIMED_OUT
        else:
            status = STATUS_FAILED
        with_report = [r for r in completed if r.report is not None]
        metrics = None
        if with_report:
            metrics = {
                name: statistics.median(
                    getattr(r.report, name) for r in with_report
                )
                for name in METRIC_NAMES
            }
        strata_acc: dict[str, dict[str, list[float]]] = {}
        strata_meta: dict[str, Stratum] = {}
        for r in with_report:
            for stratum, report in r.strata:
                label = stratum.label
                strata_meta[label] = stratum
                bucket = strata_acc.setdefault(label, {})
                for name in METRIC_NAMES:
                    bucket.setdefault(name, []).append(getattr(report, name))
        median_strata = tuple(
            (label, {name: statistics.median(vals)
                     for name, vals in sorted(strata_acc[label].items())})
            for label in sorted(strata_acc)
        )
        out.append(
            AggregateRecord(
                parser=parser,
                dataset=dataset,
                status=status,
                runs_total=len(runs),
                runs_completed=len(completed),
                median_wall_clock=(
                    statistics.median(r.wall_clock_seconds for r in completed)
                    if completed
                    else None
                ),
                median_metrics=metrics,
                median_strata=median_strata,
            )
        )
    return out


def emit_reports(records: Sequence[RunRecord], out_dir: str | Path) -> dict[str, Path]:
    """Write per-run JSON, the aggregate CSV, the long-format CSV, and the
    stratified CSV.  Re-running on identical records yields identical bytes.
    """
    if not records:
        raise ConfigurationError("no records to emit")
    out_dir = Path(out_dir)
    runs_dir = out_dir / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)

    for record in records:
        name = f"{record.parser}__{record.dataset}__run{record.run_index}.json"
        (runs_dir / name).write_text(
            json.dumps(record.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    aggregates = aggregate(records)

    aggregate_path = out_dir / "aggregate.csv"
    lines = [
        ",".join(
            ("parser", "dataset", "status", "runs_completed",
             "wall_clock_seconds") + METRIC_NAMES
        )
    ]
    for agg in aggregates:
        metric_cells = [
            repr(agg.median_metrics[name]) if agg.median_metrics else ""
            for name in METRIC_NAMES
        ]
        lines.append(
            ",".join(
                [
                    agg.parser,
                    agg.dataset,
                    agg.status,
                    str(agg.runs_completed),
                    repr(agg.median_wall_clock) if agg.median_wall_clock is not None else "",
                ]
                + metric_cells
            )
        )
    aggregate_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    long_path = out_dir / "long_metrics.csv"
    lines = ["parser,dataset,metric,value"]
    for agg in aggregates:
        if not agg.median_metrics:
            continue
        for name in METRIC_NAMES:
            lines.append(
                f"{agg.parser},{agg.dataset},{name},{agg.median_metrics[name]!r}"
            )
    long_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    strata_path = out_dir / "strata.csv"
    lines = ["dataset,parser,stratum_kind,stratum_param," + ",".join(METRIC_NAMES)]
    for agg in aggregates:
        for label, values in agg.median_strata:
            kind, param = _split_stratum_label(label)
            lines.append(
                ",".join(
                    [agg.dataset, agg.parser, kind, param]
                    + [repr(values[name]) for name in METRIC_NAMES]
                )
            )
    strata_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    return {
        "runs": runs_dir,
        "aggregate": aggregate_path,
        "long": long_path,
        "strata": strata_path,
    }


def _split_stratum_label(label: str) -> tuple[str, str]:
    if label.startswith("frequency-"):
        kind, _, param = label.rpartition("-")
        return kind, param
    if label.startswith("param-"):
        return "param-bucket", label[len("param-"):]
    return label, ""
