"""Shared domain types and string primitives.

Everything downstream (grouping, matching, parsers, metrics) works in terms
of the types defined here: :class:`LogRecord`, :class:`Template`,
:class:`GroundTruth` and :class:`ParseResult`.  All of them are immutable
after construction and safe to share across worker processes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

from .errors import IntegrityError, ValidationError

#: The only wildcard syntax recognized anywhere in the toolkit.
PLACEHOLDER = "<*>"

#: Default tokenization delimiters: whitespace plus common log punctuation.
#: Datasets can override the set through their manifest.
DEFAULT_DELIMITERS = frozenset(" \t=:,;()[]")


def tokenize(content: str, delimiters: frozenset[str] | str = DEFAULT_DELIMITERS) -> list[str]:
    """Split ``content`` on any of the delimiter characters, dropping empties.

    Joining the tokens back together reproduces the non-delimiter characters
    of ``content`` in order.
    """
    delims = frozenset(delimiters)
    tokens: list[str] = []
    current: list[str] = []
    for ch in content:
        if ch in delims:
            if current:
                tokens.append("".join(current))
                current = []
        else:
            current.append(ch)
    if current:
        tokens.append("".join(current))
    return tokens


def param_count(text: str) -> int:
    """Number of non-overlapping ``<*>`` placeholders in a template string."""
    return text.count(PLACEHOLDER)


def normalize_template(text: str) -> str:
    """Canonical template form: runs of whitespace collapse to one space,
    leading/trailing whitespace is stripped.

    Idempotent.  Adjacent placeholders separated by a space (``<*> <*>``)
    stay separate placeholders; nothing is merged.
    """
    return " ".join(text.split())


def template_id_for_text(text: str, length: int = 8) -> str:
    """Deterministic template identifier derived from the template text."""
    return hashlib.md5(text.encode("utf-8")).hexdigest()[:length]


@dataclass(frozen=True, slots=True)
class LogRecord:
    """One preprocessed log line.

    ``multiplicity`` counts how many identical raw lines this record stands
    for after deduplication (1 before dedup).
    """

    line_id: int
    content: str
    timestamp: str | None = None
    level: str | None = None
    component: str | None = None
    multiplicity: int = 1

    def __post_init__(self) -> None:
        if self.line_id < 1:
            raise IntegrityError(f"line_id must be positive, got {self.line_id}")
        if not self.content:
            raise IntegrityError(f"record {self.line_id} has empty content")
        if self.multiplicity < 1:
            raise IntegrityError(
                f"record {self.line_id} has multiplicity {self.multiplicity}"
            )


@dataclass(frozen=True, slots=True)
class Template:
    """A template string of literal text and ``<*>`` placeholders."""

    template_id: str
    text: str
    param_count: int = field(init=False)

    def __post_init__(self) -> None:
        if not self.text:
            raise ValidationError("template text is empty")
        if normalize_template(self.text) != self.text:
            raise ValidationError(
                f"template {self.text!r} is not in normalized form"
            )
        object.__setattr__(self, "param_count", param_count(self.text))

    @property
    def static_length(self) -> int:
        """Count of non-placeholder characters in the template text."""
        return len(self.text) - len(PLACEHOLDER) * self.param_count


def make_template(text: str) -> Template:
    """Template with the canonical text-derived identifier."""
    return Template(template_id_for_text(text), text)


def _check_catalog(templates: Mapping[str, Template]) -> None:
    seen_texts: dict[str, str] = {}
    for tid, template in templates.items():
        if template.template_id != tid:
            raise IntegrityError(
                f"catalog key {tid!r} disagrees with template id "
                f"{template.template_id!r}"
            )
        other = seen_texts.setdefault(template.text, tid)
        if other != tid:
            raise IntegrityError(
                f"templates {other!r} and {tid!r} share text {template.text!r}"
            )


@dataclass(frozen=True)
class TemplateAssignment:
    """A template catalog plus a total line→template assignment.

    Base for :class:`GroundTruth` and :class:`ParseResult`; the two are kept
    as distinct types because metrics treat their counters differently.
    """

    templates: Mapping[str, Template]
    assignment: Mapping[int, str]

    def __post_init__(self) -> None:
        _check_catalog(self.templates)
        assigned: set[str] = set()
        for line_id, tid in self.assignment.items():
            if tid not in self.templates:
                raise IntegrityError(
                    f"line {line_id} assigned to unknown template {tid!r}"
                )
            assigned.add(tid)
        orphans = set(self.templates) - assigned
        if orphans:
            sample = sorted(orphans)[:5]
            raise IntegrityError(
                f"{len(orphans)} template(s) assigned to no line, e.g. {sample}"
            )

    @cached_property
    def groups(self) -> dict[str, frozenset[int]]:
        """template_id → set of line_ids carrying that template."""
        acc: dict[str, set[int]] = {tid: set() for tid in self.templates}
        for line_id, tid in self.assignment.items():
            acc[tid].add(line_id)
        return {tid: frozenset(lines) for tid, lines in acc.items()}

    @cached_property
    def line_ids(self) -> frozenset[int]:
        return frozenset(self.assignment)

    def template_of(self, line_id: int) -> Template:
        return self.templates[self.assignment[line_id]]

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return (
            dict(self.templates) == dict(other.templates)
            and dict(self.assignment) == dict(other.assignment)
        )

    def __hash__(self) -> int:  # pragma: no cover - not used as dict key
        return hash((frozenset(self.templates), frozenset(self.assignment.items())))


@dataclass(frozen=True, eq=False)
class GroundTruth(TemplateAssignment):
    """The authoritative line→template assignment for a dataset."""


@dataclass(frozen=True, eq=False)
class ParseResult(TemplateAssignment):
    """A parser's output: produced templates plus line→template assignment."""

    @classmethod
    def from_template_texts(cls, texts: Mapping[int, str]) -> "ParseResult":
        """Build a result from per-line template texts.

        Texts are normalized; identical texts collapse into one produced
        template with a deterministic text-derived identifier.
        """
        return cls(*catalog_from_texts(texts))


def catalog_from_texts(
    texts: Mapping[int, str],
) -> tuple[dict[str, Template], dict[int, str]]:
    """(catalog, assignment) from per-line template texts, deduplicated."""
    by_text: dict[str, Template] = {}
    assignment: dict[int, str] = {}
    for line_id, raw in texts.items():
        text = normalize_template(raw)
        template = by_text.get(text)
        if template is None:
            template = _fresh_template(text, by_text)
            by_text[text] = template
        assignment[line_id] = template.template_id
    catalog = {t.template_id: t for t in by_text.values()}
    return catalog, assignment


def _fresh_template(text: str, by_text: Mapping[str, Template]) -> Template:
    # md5[:8] collisions across distinct texts are rare; widen until unique.
    taken = {t.template_id for t in by_text.values()}
    for length in (8, 16, 32):
        tid = template_id_for_text(text, length)
        if tid not in taken:
            return Template(tid, text)
    raise IntegrityError(f"cannot derive a unique id for template {text!r}")


def multiplicity_weights(records: Iterable[LogRecord]) -> dict[int, int]:
    """line_id → multiplicity map, the weighting metrics use after dedup."""
    return {r.line_id: r.multiplicity for r in records}
