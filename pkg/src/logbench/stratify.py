"""Stratified evaluation: frequency strata and parameter-count buckets.

A stratum is a subset of ground-truth templates (and all their messages)
chosen by frequency rank (top/bottom k%) or by parameter count (0, 1-4,
>= 5 placeholders).  Metrics for a stratum are always computed from a parse
of the *entire* dataset: restricting the input logs would change parser
behavior, so only the evaluation is restricted.

Conventions the numbers depend on (stratum-level counter definitions are
not uniquely determined by the protocol; reports flag them):

* stratum size = ceil(k% * N_g), at least one template;
* a stratum's N_p counts parsed templates touching >= 1 stratum line;
* set correctness (N_c, N̂_c) is judged against full-dataset line sets.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ConfigurationError, EvaluationError
from .metrics import MetricReport, _harmonic, _ratio, _weight_of
from .model import GroundTruth, ParseResult

FREQUENCY_TOP = "frequency-top"
FREQUENCY_BOTTOM = "frequency-bottom"
PARAM_BUCKET = "param-bucket"
WHOLE_DATASET = "all"

ALLOWED_K_PERCENT = (5, 10, 20)
PARAM_BUCKET_LABELS = ("0", "1-4", ">=5")


@dataclass(frozen=True)
class Stratum:
    kind: str
    template_ids: frozenset[str]
    line_ids: frozenset[int]
    k_percent: int | None = None
    bucket: str | None = None

    @property
    def label(self) -> str:
        if self.kind in (FREQUENCY_TOP, FREQUENCY_BOTTOM):
            return f"{self.kind}-{self.k_percent}"
        if self.kind == PARAM_BUCKET:
            return f"param-{self.bucket}"
        return self.kind


def _stratum_from_templates(
    gt: GroundTruth, kind: str, template_ids: Iterable[str], **extra
) -> Stratum:
    tids = frozenset(template_ids)
    lines: set[int] = set()
    for tid in tids:
        lines.update(gt.groups[tid])
    return Stratum(
        kind=kind, template_ids=tids, line_ids=frozenset(lines), **extra
    )


def whole_dataset_stratum(gt: GroundTruth) -> Stratum:
    """The identity stratum; its metrics equal the unrestricted report."""
    return _stratum_from_templates(gt, WHOLE_DATASET, gt.templates)


def frequency_strata(
    gt: GroundTruth,
    k_percent: int,
    weights: Mapping[int, int] | None = None,
) -> tuple[Stratum, Stratum]:
    """(top, bottom) strata of the k% most/least frequent templates.

    Frequency is the (weighted) message count of the template; ranking ties
    break by template id.  Raises when the catalog is too small for the two
    strata to be disjoint (a single-template catalog always is).
    """
    if k_percent not in ALLOWED_K_PERCENT:
        raise ConfigurationError(
            f"k_percent must be one of {ALLOWED_K_PERCENT}, got {k_percent}"
        )
    if not gt.templates:
        raise ConfigurationError("cannot stratify an empty catalog")
    w = _weight_of(weights)
    counts = {
        tid: sum(w(lid) for lid in lines) for tid, lines in gt.groups.items()
    }
    ranked = sorted(gt.templates, key=lambda tid: (-counts[tid], tid))
    size = max(1, math.ceil(k_percent / 100 * len(ranked)))
    if 2 * size > len(ranked):
        raise ConfigurationError(
            f"catalog of {len(ranked)} template(s) cannot support disjoint "
            f"top/bottom {k_percent}% strata"
        )
    top = _stratum_from_templates(
        gt, FREQUENCY_TOP, ranked[:size], k_percent=k_percent
    )
    bottom = _stratum_from_templates(
        gt, FREQUENCY_BOTTOM, ranked[-size:], k_percent=k_percent
    )
    return top, bottom


def param_strata(gt: GroundTruth) -> list[Stratum]:
    """The three parameter-count buckets; empty buckets stay empty."""
    buckets: dict[str, list[str]] = {label: [] for label in PARAM_BUCKET_LABELS}
    for tid, template in gt.templates.items():
        if template.param_count == 0:
            buckets["0"].append(tid)
        elif template.param_count <= 4:
            buckets["1-4"].append(tid)
        else:
            buckets[">=5"].append(tid)
    return [
        _stratum_from_templates(gt, PARAM_BUCKET, buckets[label], bucket=label)
        for label in PARAM_BUCKET_LABELS
    ]


def subset_metrics(
    parse: ParseResult,
    gt: GroundTruth,
    stratum: Stratum,
    weights: Mapping[int, int] | None = None,
    fta_strict: bool = False,
) -> MetricReport:
    """Metric suite restricted to one stratum of a full-dataset parse.

    Message-level metrics sum over the stratum's lines only, but a message's
    group correctness still compares full-dataset line sets.  Template-level
    counters: N_g is the stratum's template count; N_p counts parsed
    templates intersecting the stratum; correctness uses full sets.
    """
    if not stratum.line_ids <= parse.line_ids:
        missing = sorted(stratum.line_ids - parse.line_ids)[:10]
        raise EvaluationError(f"parse does not cover stratum lines {missing}")
    if not stratum.line_ids <= gt.line_ids:
        missing = sorted(stratum.line_ids - gt.line_ids)[:10]
        raise EvaluationError(f"ground truth does not cover stratum lines {missing}")

    w = _weight_of(weights)
    gt_groups = gt.groups
    gt_sets = {lines: tid for tid, lines in gt_groups.items()}

    total = 0
    ga_correct = 0
    pa_correct = 0
    n_p = 0
    n_c = 0
    n_c_hat = 0
    for tid, lines in parse.groups.items():
        in_stratum = lines & stratum.line_ids
        if not in_stratum:
            continue
        n_p += 1
        text = parse.templates[tid].text
        group_weight = 0
        for lid in in_stratum:
            weight = w(lid)
            group_weight += weight
            if gt.template_of(lid).text == text:
                pa_correct += weight
        total += group_weight
        if lines in gt_sets:
            ga_correct += group_weight
            n_c += 1
        gt_tids = {gt.assignment[lid] for lid in lines}
        if len(gt_tids) == 1:
            gt_tid = next(iter(gt_tids))
            if (not fta_strict or gt_groups[gt_tid] == lines) and (
                gt.templates[gt_tid].text == text
            ):
                n_c_hat += 1

    n_g = len(stratum.template_ids)
    pga = _ratio(n_c, n_p)
    rga = _ratio(n_c, n_g)
    pta = _ratio(n_c_hat, n_p)
    rta = _ratio(n_c_hat, n_g)
    flags = ["stratum:" + stratum.label]
    if n_p == 0 or n_g == 0:
        flags.append("zero_denominator")
    return MetricReport(
        ga=_ratio(ga_correct, total),
        pa=_ratio(pa_correct, total),
        pga=pga,
        rga=rga,
        fga=_harmonic(pga, rga),
        pta=pta,
        rta=rta,
        fta=_harmonic(pta, rta),
        n_p=n_p,
        n_c=n_c,
        n_c_hat=n_c_hat,
        n_g=n_g,
        message_count=total,
        flags=tuple(flags),
    )


STRATA_CSV_HEADER = (
    "dataset", "parser", "stratum_kind", "stratum_param",
) + MetricReport.CSV_FIELDS


def write_stratified_csv(
    rows: Sequence[tuple[str, str, Stratum, MetricReport]], path: str | Path
) -> None:
    """The stratified report file: one row per (dataset, parser, stratum)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(STRATA_CSV_HEADER)
        for dataset, parser, stratum, report in rows:
            param = (
                str(stratum.k_percent)
                if stratum.k_percent is not None
                else (stratum.bucket or "")
            )
            writer.writerow(
                [dataset, parser, stratum.kind, param, *report.to_csv_row()]
            )
