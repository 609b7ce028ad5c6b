"""Dataset loading: manifests, raw logs, cleaning, dedup, ground truth.

Raw logs follow the Loghub conventions: UTF-8 text, one message per line,
with a per-dataset ``log_format`` such as ``"<Level> <Component>: <Content>"``
describing how header fields are laid out.  Ground truth is the structured
CSV convention (``LineId, Content, EventId, EventTemplate``).

Pipeline order is fixed: header extraction and content masking first, then
cleaning, then deduplication.  Dedup therefore keys on content *after* the
manifest's masking patterns have been applied.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

import yaml

from .errors import ConfigurationError, FormatError, IngestionError, IntegrityError
from .model import (
    PLACEHOLDER,
    GroundTruth,
    LogRecord,
    ParseResult,
    Template,
    normalize_template,
)

_ALPHA = re.compile(r"[A-Za-z]")

GROUND_TRUTH_COLUMNS = ("LineId", "Content", "EventId", "EventTemplate")
PARSED_COLUMNS = ("LineId", "EventTemplate")


@dataclass(frozen=True)
class DatasetManifest:
    """Per-dataset configuration (one YAML document per dataset)."""

    name: str
    raw_log_path: Path
    log_format: str
    ground_truth_path: Path | None = None
    preprocess_patterns: tuple[str, ...] = ()
    grouping_k: int = 1
    stop_words_extra: tuple[str, ...] = ()
    delimiters: str | None = None

    def __post_init__(self) -> None:
        if "<Content>" not in self.log_format:
            raise ConfigurationError(
                f"manifest {self.name!r}: log_format must include <Content>"
            )
        if self.grouping_k not in (1, 2, 3):
            raise ConfigurationError(
                f"manifest {self.name!r}: grouping_k must be 1, 2 or 3, "
                f"got {self.grouping_k}"
            )
        for pattern in self.preprocess_patterns:
            try:
                re.compile(pattern)
            except re.error as exc:
                raise ConfigurationError(
                    f"manifest {self.name!r}: bad preprocess pattern "
                    f"{pattern!r}: {exc}"
                ) from exc


def manifest_from_mapping(doc: Mapping, base_dir: Path | None = None) -> DatasetManifest:
    known = {
        "name", "raw_log_path", "log_format", "ground_truth_path",
        "preprocess_patterns", "grouping_k", "stop_words_extra", "delimiters",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigurationError(f"unknown manifest field(s): {sorted(unknown)}")
    for required in ("name", "raw_log_path", "log_format"):
        if required not in doc:
            raise ConfigurationError(f"manifest is missing field {required!r}")

    def _path(value: str) -> Path:
        p = Path(value)
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        return p

    gt = doc.get("ground_truth_path")
    return DatasetManifest(
        name=str(doc["name"]),
        raw_log_path=_path(str(doc["raw_log_path"])),
        log_format=str(doc["log_format"]),
        ground_truth_path=_path(str(gt)) if gt else None,
        preprocess_patterns=tuple(doc.get("preprocess_patterns") or ()),
        grouping_k=int(doc.get("grouping_k", 1)),
        stop_words_extra=tuple(doc.get("stop_words_extra") or ()),
        delimiters=doc.get("delimiters"),
    )


def load_manifests(path: str | Path) -> list[DatasetManifest]:
    """All dataset manifests in a YAML file (multi-document or single)."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read manifest file {path}: {exc}") from exc
    docs = [d for d in yaml.safe_load_all(raw) if d is not None]
    if not docs:
        raise ConfigurationError(f"manifest file {path} contains no documents")
    manifests = []
    for doc in docs:
        if not isinstance(doc, Mapping):
            raise ConfigurationError(f"manifest document in {path} is not a mapping")
        manifests.append(manifest_from_mapping(doc, base_dir=path.parent))
    return manifests


def load_manifest(path: str | Path) -> DatasetManifest:
    manifests = load_manifests(path)
    if len(manifests) != 1:
        raise ConfigurationError(
            f"{path} holds {len(manifests)} manifests; expected exactly one"
        )
    return manifests[0]


@dataclass(frozen=True)
class Corpus:
    """Records surviving ingestion, plus the bookkeeping to undo it.

    ``dedup_map`` keys content to its representative line id;
    ``merged_lines`` lists, per representative, every original line id it
    stands for (itself included).  Records plus ``dropped_line_ids``
    partition the raw file's lines.
    """

    records: tuple[LogRecord, ...]
    raw_line_count: int
    dropped_line_ids: tuple[int, ...] = ()
    dedup_map: Mapping[str, int] = field(default_factory=dict)
    merged_lines: Mapping[int, tuple[int, ...]] = field(default_factory=dict)

    def record_by_line(self) -> dict[int, LogRecord]:
        return {r.line_id: r for r in self.records}

    def total_multiplicity(self) -> int:
        return sum(r.multiplicity for r in self.records)

    def expanded_line_ids(self) -> frozenset[int]:
        """Line ids of every raw line the current records stand for."""
        if not self.merged_lines:
            return frozenset(r.line_id for r in self.records)
        ids: set[int] = set()
        for r in self.records:
            ids.update(self.merged_lines.get(r.line_id, (r.line_id,)))
        return frozenset(ids)


_FIELD_RE = re.compile(r"(<[^<>]+>)")


def compile_log_format(log_format: str) -> tuple[list[str], re.Pattern[str]]:
    """Loghub ``<Field>`` pattern → (field names, anchored header regex).

    Literal parts are treated as regex fragments (the convention allows
    escapes like ``\\[``); runs of spaces match any whitespace run.
    """
    headers: list[str] = []
    parts: list[str] = []
    for k, chunk in enumerate(_FIELD_RE.split(log_format)):
        if k % 2 == 0:
            parts.append(re.sub(" +", r"\\s+", chunk))
        else:
            name = chunk[1:-1]
            headers.append(name)
            parts.append(f"(?P<{name}>.*?)")
    if "Content" not in headers:
        raise ConfigurationError("log_format must include <Content>")
    try:
        pattern = re.compile("^" + "".join(parts) + "$")
    except re.error as exc:
        raise ConfigurationError(f"bad log_format {log_format!r}: {exc}") from exc
    return headers, pattern


def _timestamp_from(groups: Mapping[str, str]) -> str | None:
    if groups.get("Timestamp"):
        return groups["Timestamp"]
    pieces = [groups[k] for k in ("Date", "Time") if groups.get(k)]
    return " ".join(pieces) if pieces else None


def load_raw(manifest: DatasetManifest) -> Corpus:
    """Read the raw log, bind header fields, and mask content.

    Lines whose header pattern fails become records whose whole line is the
    content (metrics need totality over lines).  Each preprocess pattern's
    matches are replaced with the placeholder, the usual masking convention
    for known variable shapes such as IPs.
    """
    headers, pattern = compile_log_format(manifest.log_format)
    masks = [re.compile(p) for p in manifest.preprocess_patterns]
    try:
        text = manifest.raw_log_path.read_text(encoding="utf-8", errors="replace")
    except OSError as exc:
        raise IngestionError(
            f"cannot read raw log {manifest.raw_log_path}: {exc}"
        ) from exc

    records: list[LogRecord] = []
    dropped: list[int] = []
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for i, line in enumerate(lines):
        line_id = i + 1
        line = line.rstrip("\r")
        m = pattern.match(line.strip())
        if m:
            groups = m.groupdict()
            content = groups.get("Content") or ""
            level = groups.get("Level") or None
            component = groups.get("Component") or groups.get("Node") or None
            timestamp = _timestamp_from(groups)
        else:
            content = line.strip()
            level = component = timestamp = None
        for mask in masks:
            content = mask.sub(PLACEHOLDER, content)
        if not content:
            dropped.append(line_id)
            continue
        records.append(
            LogRecord(
                line_id=line_id,
                content=content,
                timestamp=timestamp,
                level=level,
                component=component,
            )
        )
    return Corpus(
        records=tuple(records),
        raw_line_count=len(lines),
        dropped_line_ids=tuple(dropped),
    )


def clean(corpus: Corpus) -> Corpus:
    """Drop records whose content has no alphabetic character."""
    kept: list[LogRecord] = []
    dropped = list(corpus.dropped_line_ids)
    for record in corpus.records:
        if _ALPHA.search(record.content):
            kept.append(record)
        else:
            dropped.append(record.line_id)
    return replace(
        corpus, records=tuple(kept), dropped_line_ids=tuple(sorted(dropped))
    )


def dedup(corpus: Corpus) -> Corpus:
    """Merge records with identical content into one representative each.

    The representative keeps the earliest line id; its multiplicity is the
    total of the merged records'.  ``expand_dedup`` restores the per-line
    view for metric computation.
    """
    reps: dict[str, LogRecord] = {}
    counts: dict[int, int] = {}
    merged: dict[int, list[int]] = {}
    for record in corpus.records:
        prior = corpus.merged_lines.get(record.line_id, (record.line_id,))
        rep = reps.get(record.content)
        if rep is None:
            reps[record.content] = record
            counts[record.line_id] = record.multiplicity
            merged[record.line_id] = list(prior)
        else:
            counts[rep.line_id] += record.multiplicity
            merged[rep.line_id].extend(prior)
    records = tuple(
        r if counts[r.line_id] == r.multiplicity
        else replace(r, multiplicity=counts[r.line_id])
        for r in reps.values()
    )
    return replace(
        corpus,
        records=records,
        dedup_map={r.content: r.line_id for r in records},
        merged_lines={lid: tuple(ids) for lid, ids in merged.items()},
    )


def expand_dedup(corpus: Corpus) -> Corpus:
    """Per-line view: one multiplicity-1 record per original line."""
    if not corpus.merged_lines:
        return corpus
    expanded: list[LogRecord] = []
    for record in corpus.records:
        for line_id in corpus.merged_lines.get(record.line_id, (record.line_id,)):
            expanded.append(replace(record, line_id=line_id, multiplicity=1))
    expanded.sort(key=lambda r: r.line_id)
    return replace(corpus, records=tuple(expanded), dedup_map={}, merged_lines={})


def expand_assignment(
    corpus: Corpus, assignment: Mapping[int, str]
) -> dict[int, str]:
    """Spread a representative-keyed assignment over all merged line ids."""
    if not corpus.merged_lines:
        return dict(assignment)
    out: dict[int, str] = {}
    for rep_id, tid in assignment.items():
        for line_id in corpus.merged_lines.get(rep_id, (rep_id,)):
            out[line_id] = tid
    return out


def ingest_corpus(manifest: DatasetManifest) -> Corpus:
    """The full ingestion pipeline: load, clean, dedup."""
    return dedup(clean(load_raw(manifest)))


def _require_columns(path: Path, fieldnames: Iterable[str] | None, wanted: Iterable[str]) -> None:
    have = set(fieldnames or ())
    missing = [c for c in wanted if c not in have]
    if missing:
        raise FormatError(f"{path}: missing column(s) {missing}")


def load_ground_truth(source: DatasetManifest | str | Path) -> GroundTruth:
    """Load annotations from a structured CSV.

    Template texts are normalized; EventIds whose normalized texts collide
    are merged into the first id seen (duplicate templates are eliminated,
    the same rule annotation applies).
    """
    if isinstance(source, DatasetManifest):
        if source.ground_truth_path is None:
            raise ConfigurationError(
                f"manifest {source.name!r} has no ground_truth_path"
            )
        path = source.ground_truth_path
    else:
        path = Path(source)

    templates: dict[str, Template] = {}
    canonical_by_text: dict[str, str] = {}
    alias: dict[str, str] = {}
    assignment: dict[int, str] = {}
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        _require_columns(path, reader.fieldnames, GROUND_TRUTH_COLUMNS)
        for row in reader:
            try:
                line_id = int(row["LineId"])
            except (TypeError, ValueError) as exc:
                raise FormatError(
                    f"{path}: bad LineId {row.get('LineId')!r}"
                ) from exc
            event_id = row["EventId"]
            if event_id is None or event_id == "":
                raise FormatError(f"{path}: empty EventId on line {line_id}")
            tid = alias.get(event_id)
            if tid is None:
                text = normalize_template(row["EventTemplate"] or "")
                if not text:
                    raise FormatError(
                        f"{path}: empty EventTemplate on line {line_id}"
                    )
                tid = canonical_by_text.get(text)
                if tid is None:
                    tid = event_id
                    canonical_by_text[text] = tid
                    templates[tid] = Template(tid, text)
                alias[event_id] = tid
            if line_id in assignment:
                raise IntegrityError(f"{path}: duplicate LineId {line_id}")
            assignment[line_id] = tid
    return GroundTruth(templates=templates, assignment=assignment)


def write_ground_truth(
    gt: GroundTruth,
    path: str | Path,
    contents: Mapping[int, str] | None = None,
) -> None:
    """Write annotations in the structured-CSV convention (RFC-4180)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(GROUND_TRUTH_COLUMNS)
        for line_id in sorted(gt.assignment):
            template = gt.template_of(line_id)
            content = "" if contents is None else contents.get(line_id, "")
            writer.writerow([line_id, content, template.template_id, template.text])


def load_parsed_csv(
    path: str | Path,
    expected_line_ids: Iterable[int] | None = None,
    contents: Mapping[int, str] | None = None,
) -> ParseResult:
    """Load a parser's output CSV (``LineId, EventTemplate``).

    When ``expected_line_ids`` is given, lines the parser skipped are filled
    with a singleton template equal to their own content (totality rule);
    ``contents`` supplies those texts.
    """
    path = Path(path)
    texts: dict[int, str] = {}
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        _require_columns(path, reader.fieldnames, PARSED_COLUMNS)
        for row in reader:
            try:
                line_id = int(row["LineId"])
            except (TypeError, ValueError) as exc:
                raise FormatError(f"{path}: bad LineId {row.get('LineId')!r}") from exc
            texts[line_id] = row["EventTemplate"] or ""
    if expected_line_ids is not None:
        for line_id in expected_line_ids:
            if line_id not in texts:
                if contents is None or line_id not in contents:
                    raise FormatError(
                        f"{path}: line {line_id} missing and no content to "
                        "fall back on"
                    )
                texts[line_id] = contents[line_id]
    empty = [lid for lid, text in texts.items() if not text.strip()]
    if empty:
        raise FormatError(f"{path}: empty EventTemplate for line(s) {empty[:5]}")
    return ParseResult.from_template_texts(texts)


def write_parsed_csv(assignment_texts: Mapping[int, str], path: str | Path) -> None:
    """Write per-line template texts in the adapter CSV format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(PARSED_COLUMNS)
        for line_id in sorted(assignment_texts):
            writer.writerow([line_id, assignment_texts[line_id]])
