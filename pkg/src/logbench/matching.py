"""Template→regex conversion and priority matching of records to templates.

Each template compiles to an anchored regular expression where every
placeholder becomes a greedy ``(.*)`` group (a wildcard may match the empty
string).  When several templates match one message, the one with the longer
static part wins; ties prefer fewer wildcards, then lexicographic text, so
the order is total and runs are reproducible.

Matching against a large catalog is kept sub-linear by bucketing templates
on their first literal token: a record only tries templates whose literal
prefix can possibly match, which preserves the try-all-in-priority-order
semantics exactly.
"""

from __future__ import annotations

import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import IntegrityError
from .model import PLACEHOLDER, LogRecord, Template

_WILDCARD = "(.*)"


@dataclass(frozen=True)
class CompiledTemplate:
    """A template with its anchored pattern and priority keys."""

    template_id: str
    text: str
    pattern: re.Pattern[str]
    static_length: int
    wildcard_count: int

    def priority_key(self) -> tuple[int, int, str]:
        return (-self.static_length, self.wildcard_count, self.text)


def template_to_regex(template: Template) -> CompiledTemplate:
    """Compile a template: static text escaped, ``<*>`` → ``(.*)``, anchored."""
    parts = template.text.split(PLACEHOLDER)
    pattern = re.compile(_WILDCARD.join(re.escape(p) for p in parts))
    return CompiledTemplate(
        template_id=template.template_id,
        text=template.text,
        pattern=pattern,
        static_length=template.static_length,
        wildcard_count=template.param_count,
    )


def priority_order(compiled: Iterable[CompiledTemplate]) -> list[CompiledTemplate]:
    """Longest static part first; ties: fewer wildcards, then text."""
    return sorted(compiled, key=CompiledTemplate.priority_key)


@dataclass(frozen=True)
class MatchOutcome:
    """Assignment for matched lines plus the ids that matched nothing."""

    assignment: Mapping[int, str]
    unmatched: tuple[int, ...]


class TemplateIndex:
    """Priority-ordered catalog with first-literal-token candidate buckets."""

    def __init__(self, templates: Iterable[Template]):
        compiled = priority_order(template_to_regex(t) for t in templates)
        self.ordered = compiled
        catch_all: list[tuple[int, CompiledTemplate]] = []
        by_first: dict[str, list[tuple[int, CompiledTemplate]]] = {}
        for rank, ct in enumerate(compiled):
            first = ct.text.split(" ", 1)[0]
            if PLACEHOLDER in first:
                catch_all.append((rank, ct))
            else:
                by_first.setdefault(first, []).append((rank, ct))
        # Merge each bucket with the catch-alls once, preserving rank order.
        self._candidates: dict[str, tuple[CompiledTemplate, ...]] = {
            token: tuple(ct for _, ct in sorted(ranked + catch_all))
            for token, ranked in by_first.items()
        }
        self._catch_all: tuple[CompiledTemplate, ...] = tuple(
            ct for _, ct in catch_all
        )
        self._by_id = {ct.template_id: ct for ct in compiled}

    def __len__(self) -> int:
        return len(self.ordered)

    def get(self, template_id: str) -> CompiledTemplate:
        return self._by_id[template_id]

    def candidates_for(self, content: str) -> Sequence[CompiledTemplate]:
        first = content.split(" ", 1)[0]
        return self._candidates.get(first, self._catch_all)

    def match(self, content: str) -> CompiledTemplate | None:
        """First template in priority order whose pattern matches fully."""
        for ct in self.candidates_for(content):
            if ct.pattern.fullmatch(content):
                return ct
        return None


def _match_chunk(
    contents: list[tuple[int, str]], templates: list[Template]
) -> tuple[dict[int, str], list[int]]:
    index = TemplateIndex(templates)
    assignment: dict[int, str] = {}
    unmatched: list[int] = []
    for line_id, content in contents:
        ct = index.match(content)
        if ct is None:
            unmatched.append(line_id)
        else:
            assignment[line_id] = ct.template_id
    return assignment, unmatched


def match_all(
    records: Iterable[LogRecord],
    templates: Iterable[Template] | TemplateIndex,
    workers: int = 1,
) -> MatchOutcome:
    """Assign every record the highest-priority template that matches it.

    Records matching no template land in ``unmatched`` (a result, not an
    error).  ``workers`` > 1 splits the records across processes; the
    catalog is immutable during a pass, so results merge in line order.
    """
    if isinstance(templates, TemplateIndex):
        index = templates
    else:
        index = TemplateIndex(templates)

    if workers > 1:
        originals = [Template(ct.template_id, ct.text) for ct in index.ordered]
        pairs = [(r.line_id, r.content) for r in records]
        if not pairs:
            return MatchOutcome(assignment={}, unmatched=())
        size = (len(pairs) + workers - 1) // workers
        chunks = [pairs[i:i + size] for i in range(0, len(pairs), size)]
        assignment: dict[int, str] = {}
        unmatched: list[int] = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part_assign, part_unmatched in pool.map(
                _match_chunk, chunks, [originals] * len(chunks)
            ):
                assignment.update(part_assign)
                unmatched.extend(part_unmatched)
        unmatched.sort()
        return MatchOutcome(assignment=assignment, unmatched=tuple(unmatched))

    assignment = {}
    unmatched = []
    for record in records:
        ct = index.match(record.content)
        if ct is None:
            unmatched.append(record.line_id)
        else:
            assignment[record.line_id] = ct.template_id
    return MatchOutcome(assignment=assignment, unmatched=tuple(unmatched))


def splice(template_text: str, parameters: Sequence[str]) -> str:
    """Substitute parameters back into the template's placeholders."""
    parts = template_text.split(PLACEHOLDER)
    if len(parameters) != len(parts) - 1:
        raise IntegrityError(
            f"template expects {len(parts) - 1} parameter(s), "
            f"got {len(parameters)}"
        )
    out: list[str] = [parts[0]]
    for value, part in zip(parameters, parts[1:]):
        out.append(value)
        out.append(part)
    return "".join(out)


def extract_parameters(
    record: LogRecord, compiled: CompiledTemplate
) -> tuple[str, ...]:
    """One captured string per placeholder, in order.

    Splitting across multiple wildcards follows greedy semantics; splicing
    the captures back always reproduces the content exactly, which is
    verified here (failure means the record never matched this template).
    """
    m = compiled.pattern.fullmatch(record.content)
    if m is None:
        raise IntegrityError(
            f"line {record.line_id} does not match template "
            f"{compiled.template_id} ({compiled.text!r})"
        )
    params = tuple(m.groups())
    if splice(compiled.text, params) != record.content:
        raise IntegrityError(
            f"splice mismatch for line {record.line_id} against "
            f"template {compiled.template_id}"
        )
    return params


def write_unmatched_report(
    outcome: MatchOutcome,
    records: Iterable[LogRecord],
    path: str | Path,
) -> int:
    """Write unmatched contents, one per line; returns the count written."""
    content_of = {r.line_id: r.content for r in records}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for line_id in outcome.unmatched:
            handle.write(content_of[line_id])
            handle.write("\n")
    return len(outcome.unmatched)
