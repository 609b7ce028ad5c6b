"""The four-metric evaluation suite.

Message-level metrics weight every log message equally and are therefore
dominated by high-frequency templates:

* GA — fraction of messages whose parsed group equals, as a set of line
  ids, their ground-truth group.
* PA — fraction of messages whose produced template text equals the
  ground-truth template text (normalized-text equality).

Template-level metrics weight every template equally:

* FGA — harmonic mean of PGA = N_c/N_p and RGA = N_c/N_g, where N_c counts
  parsed templates whose line-id set exactly equals some ground-truth
  template's set.
* FTA — harmonic mean of PTA = N̂_c/N_p and RTA = N̂_c/N_g, where N̂_c counts
  parsed templates whose messages all carry one ground-truth template
  (condition 1) and whose text equals that template's text (condition 2).

By default condition 1 of FTA is the literal homogeneity requirement; pass
``fta_strict=True`` to demand full set equality instead (which makes
N̂_c ≤ N_c and hence FTA ≤ FGA).  Ratios with zero denominators are defined
as 0 and flagged.

Metrics are always computed over the full (multiplicity-weighted) message
set; pass the dedup multiplicities as ``weights`` when evaluating on a
deduplicated corpus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from typing import Mapping

from .errors import EvaluationError
from .model import GroundTruth, ParseResult

METRIC_NAMES = ("ga", "pa", "pga", "rga", "fga", "pta", "rta", "fta")
COUNTER_NAMES = ("n_p", "n_c", "n_c_hat", "n_g")


@dataclass(frozen=True)
class MetricReport:
    """All eight metric values plus the template counters behind them."""

    ga: float
    pa: float
    pga: float
    rga: float
    fga: float
    pta: float
    rta: float
    fta: float
    n_p: int
    n_c: int
    n_c_hat: int
    n_g: int
    message_count: int
    flags: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["flags"] = list(self.flags)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    CSV_FIELDS = METRIC_NAMES + COUNTER_NAMES + ("message_count",)

    def to_csv_row(self) -> list[str]:
        return [repr(getattr(self, name)) for name in self.CSV_FIELDS]


def _check_domain(parse: ParseResult, gt: GroundTruth) -> None:
    if parse.line_ids != gt.line_ids:
        missing_in_parse = sorted(gt.line_ids - parse.line_ids)[:10]
        missing_in_gt = sorted(parse.line_ids - gt.line_ids)[:10]
        raise EvaluationError(
            "parse and ground truth cover different line ids; "
            f"missing from parse: {missing_in_parse}, "
            f"missing from ground truth: {missing_in_gt}"
        )


def _weight_of(weights: Mapping[int, int] | None):
    if weights is None:
        return lambda line_id: 1
    return lambda line_id: weights[line_id]


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def _harmonic(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def group_accuracy(
    parse: ParseResult,
    gt: GroundTruth,
    weights: Mapping[int, int] | None = None,
) -> float:
    """Proportion of (weighted) messages whose parsed group equals their
    ground-truth group as a set of line ids."""
    _check_domain(parse, gt)
    w = _weight_of(weights)
    correct = 0
    total = 0
    gt_groups = gt.groups
    for tid, lines in parse.groups.items():
        group_weight = sum(w(lid) for lid in lines)
        total += group_weight
        any_line = next(iter(lines))
        if gt_groups[gt.assignment[any_line]] == lines:
            correct += group_weight
    return _ratio(correct, total)


def parsing_accuracy(
    parse: ParseResult,
    gt: GroundTruth,
    weights: Mapping[int, int] | None = None,
) -> float:
    """Proportion of (weighted) messages whose produced template text equals
    the ground-truth template text."""
    _check_domain(parse, gt)
    w = _weight_of(weights)
    correct = 0
    total = 0
    for line_id, tid in parse.assignment.items():
        weight = w(line_id)
        total += weight
        if parse.templates[tid].text == gt.template_of(line_id).text:
            correct += weight
    return _ratio(correct, total)


def _grouping_counters(parse: ParseResult, gt: GroundTruth) -> tuple[int, int, int]:
    """(N_p, N_c, N_g) from full set comparison."""
    gt_sets = {lines: tid for tid, lines in gt.groups.items()}
    n_c = sum(1 for lines in parse.groups.values() if lines in gt_sets)
    return len(parse.templates), n_c, len(gt.templates)


def fga(parse: ParseResult, gt: GroundTruth) -> tuple[float, float, float]:
    """(PGA, RGA, FGA) — the template-level version of GA."""
    _check_domain(parse, gt)
    n_p, n_c, n_g = _grouping_counters(parse, gt)
    pga = _ratio(n_c, n_p)
    rga = _ratio(n_c, n_g)
    return pga, rga, _harmonic(pga, rga)


def _template_counters(
    parse: ParseResult, gt: GroundTruth, strict: bool
) -> int:
    """N̂_c: parsed templates correct at the template level."""
    n_c_hat = 0
    for tid, lines in parse.groups.items():
        gt_tids = {gt.assignment[lid] for lid in lines}
        if len(gt_tids) != 1:
            continue
        gt_tid = next(iter(gt_tids))
        if strict and gt.groups[gt_tid] != lines:
            continue
        if parse.templates[tid].text == gt.templates[gt_tid].text:
            n_c_hat += 1
    return n_c_hat


def fta(
    parse: ParseResult, gt: GroundTruth, strict: bool = False
) -> tuple[float, float, float]:
    """(PTA, RTA, FTA).

    ``strict`` switches condition 1 from homogeneity (the literal wording)
    to full set equality.
    """
    _check_domain(parse, gt)
    n_c_hat = _template_counters(parse, gt, strict)
    pta = _ratio(n_c_hat, len(parse.templates))
    rta = _ratio(n_c_hat, len(gt.templates))
    return pta, rta, _harmonic(pta, rta)


def evaluate(
    parse: ParseResult,
    gt: GroundTruth,
    weights: Mapping[int, int] | None = None,
    fta_strict: bool = False,
) -> MetricReport:
    """Compute the full metric suite in one pass over the groups."""
    _check_domain(parse, gt)
    w = _weight_of(weights)
    gt_groups = gt.groups
    gt_sets = {lines: tid for tid, lines in gt_groups.items()}

    total = 0
    ga_correct = 0
    pa_correct = 0
    n_c = 0
    n_c_hat = 0
    for tid, lines in parse.groups.items():
        text = parse.templates[tid].text
        group_weight = 0
        gt_tids = set()
        for lid in lines:
            weight = w(lid)
            group_weight += weight
            gt_tid = gt.assignment[lid]
            gt_tids.add(gt_tid)
            if gt.templates[gt_tid].text == text:
                pa_correct += weight
        total += group_weight
        if lines in gt_sets:
            ga_correct += group_weight
            n_c += 1
        if len(gt_tids) == 1:
            gt_tid = next(iter(gt_tids))
            if (not fta_strict or gt_groups[gt_tid] == lines) and (
                gt.templates[gt_tid].text == text
            ):
                n_c_hat += 1

    n_p = len(parse.templates)
    n_g = len(gt.templates)
    pga = _ratio(n_c, n_p)
    rga = _ratio(n_c, n_g)
    pta = _ratio(n_c_hat, n_p)
    rta = _ratio(n_c_hat, n_g)
    flags = []
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
