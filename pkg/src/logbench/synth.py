"""Synthetic log corpora with known ground truth.

Used by the test suite as its generator oracle and by the CLI to produce
demo datasets.  Templates are built so that the grouping precondition holds
by construction: every template has at least three constant tokens drawn
from a vocabulary unique to that template, and parameter values are
globally unique, so constants are always strictly more frequent than any
parameter token.  Parameter values carry digits while constants do not,
which keeps tree-style parsers routing parameters into wildcards.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import yaml

from .ingest import DatasetManifest, write_ground_truth
from .model import PLACEHOLDER, GroundTruth, LogRecord, Template

LEVELS = ("INFO", "WARN", "ERROR")
LOG_FORMAT = "<Level> <Component>: <Content>"

_VERBS = (
    "started", "stopped", "received", "sent", "opened", "closed", "created",
    "deleted", "updated", "verified", "scheduled", "finished", "rejected",
    "accepted", "loaded", "stored", "flushed", "resolved", "queued", "spawned",
)
_NOUNS = (
    "block", "session", "packet", "request", "handle", "shard", "worker",
    "channel", "bucket", "lease", "token", "replica", "segment", "batch",
    "probe", "cursor", "stream", "mount", "quota", "socket",
)
_LINKS = ("for", "at", "on", "with", "from", "into")


def _letters(i: int) -> str:
    """Deterministic letters-only tag: 0 → 'a', 25 → 'z', 26 → 'ba', ..."""
    out = []
    while True:
        out.append(chr(97 + i % 26))
        i //= 26
        if not i:
            break
    return "".join(reversed(out))


@dataclass(frozen=True)
class TemplateSpec:
    text: str
    level: str
    component: str


def _template_specs(n_templates: int, max_params: int, rng: random.Random) -> list[TemplateSpec]:
    specs = []
    for i in range(n_templates):
        tag = _letters(i)
        n_params = i % (max_params + 1)
        tokens = [
            f"svc{tag}",
            rng.choice(_VERBS) + tag,
            rng.choice(_NOUNS) + tag,
        ]
        for p in range(n_params):
            tokens.append(rng.choice(_LINKS) + tag + _letters(p))
            tokens.append(PLACEHOLDER)
        specs.append(
            TemplateSpec(
                text=" ".join(tokens),
                level=LEVELS[i % len(LEVELS)],
                component=f"comp{_letters(i % 5)}",
            )
        )
    return specs


class _ParamValues:
    """Globally unique, digit-bearing parameter values in varied shapes."""

    def __init__(self, rng: random.Random):
        self._rng = rng
        self._counter = 0

    def next(self) -> str:
        self._counter += 1
        n = self._counter
        kind = self._rng.randrange(3)
        if kind == 0:
            return str(10**6 + n)
        if kind == 1:
            return (
                f"10.{(n >> 16) & 255}.{(n >> 8) & 255}.{n & 255}"
                if n < (1 << 24)
                else f"fd00::{n:x}"
            )
        return f"0x{n:08x}"


def _choices(n_templates: int, n_lines: int, zipf_s: float,
             min_per_template: int, rng: random.Random) -> list[int]:
    weights = [1.0 / (i + 1) ** zipf_s for i in range(n_templates)]
    base = list(range(n_templates)) * min_per_template
    base += rng.choices(range(n_templates), weights=weights, k=n_lines - len(base))
    rng.shuffle(base)
    return base


@dataclass(frozen=True)
class SyntheticDataset:
    """Generated corpus: records, the truth behind them, and the manifest."""

    name: str
    records: tuple[LogRecord, ...]
    ground_truth: GroundTruth
    log_format: str = LOG_FORMAT

    @property
    def template_texts(self) -> list[str]:
        return [t.text for t in self.ground_truth.templates.values()]

    def raw_lines(self) -> Iterator[str]:
        for r in self.records:
            yield f"{r.level} {r.component}: {r.content}"


def generate_dataset(
    n_templates: int = 20,
    n_lines: int = 1000,
    seed: int = 0,
    name: str = "synthetic",
    max_params: int = 6,
    zipf_s: float = 1.2,
    min_per_template: int = 2,
) -> SyntheticDataset:
    """A corpus of ``n_lines`` messages drawn from ``n_templates`` templates.

    Template frequencies follow a zipf-like profile (so frequency strata
    are meaningful) with every template used at least ``min_per_template``
    times; parameter counts cover 0 through ``max_params``.
    """
    if n_templates < 1 or n_lines < n_templates * min_per_template:
        raise ValueError(
            f"need at least {n_templates * min_per_template} lines "
            f"for {n_templates} templates"
        )
    rng = random.Random(seed)
    specs = _template_specs(n_templates, max_params, rng)
    values = _ParamValues(rng)

    templates = {
        f"E{i + 1}": Template(f"E{i + 1}", spec.text)
        for i, spec in enumerate(specs)
    }
    records: list[LogRecord] = []
    assignment: dict[int, str] = {}
    for line_no, index in enumerate(
        _choices(n_templates, n_lines, zipf_s, min_per_template, rng), start=1
    ):
        spec = specs[index]
        parts = spec.text.split(PLACEHOLDER)
        content = parts[0]
        for part in parts[1:]:
            content += values.next() + part
        records.append(
            LogRecord(
                line_id=line_no,
                content=content,
                level=spec.level,
                component=spec.component,
            )
        )
        assignment[line_no] = f"E{index + 1}"

    gt = GroundTruth(templates=templates, assignment=assignment)
    return SyntheticDataset(name=name, records=tuple(records), ground_truth=gt)


def write_dataset(dataset: SyntheticDataset, out_dir: str | Path,
                  grouping_k: int = 2) -> DatasetManifest:
    """Write <name>.log, <name>_truth.csv and <name>.yaml under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / f"{dataset.name}.log"
    truth_path = out_dir / f"{dataset.name}_truth.csv"

    with log_path.open("w", encoding="utf-8") as handle:
        for line in dataset.raw_lines():
            handle.write(line)
            handle.write("\n")
    write_ground_truth(
        dataset.ground_truth,
        truth_path,
        contents={r.line_id: r.content for r in dataset.records},
    )
    return write_manifest(
        DatasetManifest(
            name=dataset.name,
            raw_log_path=log_path,
            ground_truth_path=truth_path,
            log_format=dataset.log_format,
            grouping_k=grouping_k,
        ),
        out_dir / f"{dataset.name}.yaml",
    )


def write_manifest(manifest: DatasetManifest, path: str | Path) -> DatasetManifest:
    doc = {
        "name": manifest.name,
        "raw_log_path": str(manifest.raw_log_path),
        "log_format": manifest.log_format,
        "grouping_k": manifest.grouping_k,
    }
    if manifest.ground_truth_path is not None:
        doc["ground_truth_path"] = str(manifest.ground_truth_path)
    if manifest.preprocess_patterns:
        doc["preprocess_patterns"] = list(manifest.preprocess_patterns)
    if manifest.stop_words_extra:
        doc["stop_words_extra"] = list(manifest.stop_words_extra)
    if manifest.delimiters:
        doc["delimiters"] = manifest.delimiters
    with Path(path).open("w", encoding="utf-8") as handle:
        yaml.safe_dump(doc, handle, sort_keys=True)
    return manifest


def stream_raw_log(
    path: str | Path,
    n_templates: int = 50,
    n_lines: int = 1_000_000,
    seed: int = 0,
    max_params: int = 6,
    zipf_s: float = 1.2,
) -> DatasetManifest:
    """Write a large raw log straight to disk, without materializing records.

    For throughput and timeout exercises where no ground truth is needed.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    specs = _template_specs(n_templates, max_params, rng)
    values = _ParamValues(rng)
    weights = [1.0 / (i + 1) ** zipf_s for i in range(n_templates)]

    with path.open("w", encoding="utf-8") as handle:
        batch = 10_000
        written = 0
        while written < n_lines:
            take = min(batch, n_lines - written)
            picks = rng.choices(range(n_templates), weights=weights, k=take)
            lines = []
            for index in picks:
                spec = specs[index]
                parts = spec.text.split(PLACEHOLDER)
                content = parts[0]
                for part in parts[1:]:
                    content += values.next() + part
                lines.append(f"{spec.level} {spec.component}: {content}\n")
            handle.write("".join(lines))
            written += take
    return DatasetManifest(
        name=path.stem,
        raw_log_path=path,
        log_format=LOG_FORMAT,
        grouping_k=2,
    )
