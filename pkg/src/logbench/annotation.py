"""Human-in-the-loop annotation: sessions, the rematch loop, consolidation.

A session wraps one dataset's grouped corpus.  Annotators independently
submit template texts; after every submission the engine rematches that
annotator's catalog against the corpus and reports what is still unmatched.
The session converges when every annotator's unmatched set is empty.
Consolidation then aligns templates across annotators by the message sets
they match, scores agreement, and classifies disagreements so a human can
resolve them; nothing is resolved automatically.

All mutations append to an event log that can be replayed to rebuild the
session, which is what the HTTP service persists.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import IntegrityError, StateError, ValidationError
from .grouping import GroupedCorpus, GroupKey, coarse_group, group_file_name
from .ingest import (
    Corpus,
    DatasetManifest,
    clean,
    dedup,
    expand_assignment,
    load_raw,
    write_ground_truth,
)
from .matching import MatchOutcome, TemplateIndex, match_all
from .model import (
    GroundTruth,
    Template,
    catalog_from_texts,
    normalize_template,
    template_id_for_text,
)

STATUS_IN_PROGRESS = "in-progress"
STATUS_CONVERGED = "converged"

CONFLICT_OVER_SPECIFIC = "over-specific"
CONFLICT_FORMAT_VARIANT = "format-variant"
CONFLICT_OTHER = "other"


@dataclass(frozen=True)
class Conflict:
    """One aligned slot the annotators disagree on."""

    index: int
    kind: str
    line_ids: tuple[int, ...]
    variants: Mapping[str, str | None]  # annotator -> text (None: no template)
    suggestion: str | None
    note: str


@dataclass(frozen=True)
class ConsolidationReport:
    consistency: float
    agreed_templates: tuple[Template, ...]
    conflicts: tuple[Conflict, ...]
    slot_count: int
    agreed_count: int


@dataclass
class AnnotationSession:
    session_id: str
    manifest: DatasetManifest
    corpus: Corpus  # cleaned + deduplicated
    grouped: GroupedCorpus
    catalogs: dict[str, dict[str, Template]] = field(default_factory=dict)
    outcomes: dict[str, MatchOutcome] = field(default_factory=dict)
    consolidation: ConsolidationReport | None = None
    resolutions: dict[int, str | None] = field(default_factory=dict)
    revision: int = 0
    events: list[dict] = field(default_factory=list)
    lock: threading.RLock = field(default_factory=threading.RLock, repr=False)

    @property
    def annotators(self) -> list[str]:
        return sorted(self.catalogs)

    @property
    def status(self) -> str:
        if not self.catalogs:
            return STATUS_IN_PROGRESS
        if all(not outcome.unmatched for outcome in self.outcomes.values()):
            return STATUS_CONVERGED
        return STATUS_IN_PROGRESS

    @property
    def group_ids(self) -> dict[str, GroupKey]:
        return {group_file_name(key): key for key in self.grouped.groups}

    def bump(self, event: dict) -> None:
        self.revision += 1
        event = dict(event, revision=self.revision)
        self.events.append(event)


def open_session(
    manifest: DatasetManifest, session_id: str | None = None
) -> AnnotationSession:
    """Ingest, group, and wrap a dataset for annotation.

    The session works on the deduplicated corpus (one representative per
    distinct content); the final export re-expands to every raw line.
    """
    corpus = dedup(clean(load_raw(manifest)))
    if not corpus.records:
        raise StateError(
            f"dataset {manifest.name!r} has no annotatable records"
        )
    grouped = coarse_group(corpus, manifest)
    return AnnotationSession(
        session_id=session_id or manifest.name,
        manifest=manifest,
        corpus=corpus,
        grouped=grouped,
    )


def _validate_texts(texts: Iterable[str]) -> list[str]:
    validated = []
    for text in texts:
        if not isinstance(text, str) or not text.strip():
            raise ValidationError(f"empty template text {text!r}")
        if normalize_template(text) != text:
            raise ValidationError(
                f"template {text!r} is not normalized "
                f"(expected {normalize_template(text)!r})"
            )
        validated.append(text)
    return validated


def submit_templates(
    session: AnnotationSession, annotator_id: str, texts: Iterable[str]
) -> MatchOutcome:
    """Merge templates into one annotator's catalog and rematch.

    Texts must already be in normalized form (the UI previews the
    normalization before submitting).  Duplicates of already-recorded
    templates are dropped silently.  The unmatched set never grows.
    """
    validated = _validate_texts(texts)
    with session.lock:
        catalog = session.catalogs.setdefault(annotator_id, {})
        known = {t.text for t in catalog.values()}
        for text in validated:
            if text in known:
                continue
            tid = template_id_for_text(text)
            catalog[tid] = Template(tid, text)
            known.add(text)
        outcome = _rematch_annotator(session, annotator_id)
        session.consolidation = None
        session.resolutions = {}
        session.bump(
            {"kind": "submit", "annotator": annotator_id, "templates": validated}
        )
        return outcome


def _rematch_annotator(session: AnnotationSession, annotator_id: str) -> MatchOutcome:
    catalog = session.catalogs.get(annotator_id, {})
    outcome = match_all(session.corpus.records, catalog.values())
    session.outcomes[annotator_id] = outcome
    return outcome


def rematch(
    session: AnnotationSession, annotator_id: str | None = None
) -> dict[str, MatchOutcome]:
    """Re-run matching for one annotator (or all of them)."""
    with session.lock:
        targets = [annotator_id] if annotator_id else session.annotators
        for aid in targets:
            if aid not in session.catalogs:
                raise StateError(f"unknown annotator {aid!r}")
            _rematch_annotator(session, aid)
        session.bump({"kind": "rematch", "annotator": annotator_id})
        return {aid: session.outcomes[aid] for aid in targets}


def unmatched_contents(session: AnnotationSession, annotator_id: str) -> list[str]:
    outcome = session.outcomes.get(annotator_id)
    if outcome is None:
        return [r.content for r in session.corpus.records]
    content_of = {r.line_id: r.content for r in session.corpus.records}
    return [content_of[lid] for lid in outcome.unmatched]


def _sets_by_annotator(
    session: AnnotationSession,
) -> dict[str, dict[frozenset[int], str]]:
    out: dict[str, dict[frozenset[int], str]] = {}
    for aid, outcome in session.outcomes.items():
        groups: dict[str, set[int]] = {}
        for line_id, tid in outcome.assignment.items():
            groups.setdefault(tid, set()).add(line_id)
        out[aid] = {
            frozenset(lines): session.catalogs[aid][tid].text
            for tid, lines in groups.items()
        }
    return out


def _static_length(text: str) -> int:
    return Template(template_id_for_text(text), text).static_length


def _classify_slot(
    slot: frozenset[int],
    variants: dict[str, str | None],
    annotator_sets: dict[str, dict[frozenset[int], str]],
) -> tuple[str, str | None, str]:
    """(kind, suggestion, note) for one disagreeing slot."""
    missing = [aid for aid, text in variants.items() if text is None]
    present = {aid: text for aid, text in variants.items() if text is not None}

    if missing:
        for aid in missing:
            own = annotator_sets[aid]
            refining = [s for s in own if s < slot]
            if refining and set().union(*refining) == set(slot):
                texts = sorted(present.values())
                suggestion = texts[0] if texts else None
                return (
                    CONFLICT_OVER_SPECIFIC,
                    suggestion,
                    f"{aid} splits these messages across {len(refining)} "
                    "templates; treat the distinguishing tokens as parameters",
                )
            cover = next((s for s in own if slot < s), None)
            if cover is not None:
                return (
                    CONFLICT_OVER_SPECIFIC,
                    None,
                    f"slot refines {aid}'s broader template "
                    f"{own[cover]!r}; usually dropped in its favor",
                )
        return (CONFLICT_OTHER, None, "message sets do not align")

    # Everyone has a template for exactly these messages, texts differ:
    # prefer the variant keeping the most literal text (original format).
    ranked = sorted(
        set(present.values()), key=lambda t: (-_static_length(t), t)
    )
    return (
        CONFLICT_FORMAT_VARIANT,
        ranked[0],
        "same messages, different formats; suggestion retains the original format",
    )


def consolidate(session: AnnotationSession) -> ConsolidationReport:
    """Align templates across annotators and score their agreement.

    Alignment keys on matched message sets (annotator-independent ground).
    A slot counts as agreed when every annotator has a template matching
    exactly that set with identical text; consistency is the agreed share
    of all union-aligned slots.
    """
    with session.lock:
        if not session.catalogs:
            raise StateError("no annotators have submitted templates")
        if session.status != STATUS_CONVERGED:
            pending = {
                aid: len(outcome.unmatched)
                for aid, outcome in session.outcomes.items()
                if outcome.unmatched
            }
            raise StateError(
                f"session not converged; unmatched counts: {pending}"
            )

        annotator_sets = _sets_by_annotator(session)
        all_slots: set[frozenset[int]] = set()
        for sets in annotator_sets.values():
            all_slots.update(sets)
        slots = sorted(all_slots, key=lambda s: (min(s), len(s), sorted(s)))

        agreed: list[Template] = []
        conflicts: list[Conflict] = []
        for slot in slots:
            variants = {
                aid: annotator_sets[aid].get(slot) for aid in session.annotators
            }
            texts = set(variants.values())
            if None not in texts and len(texts) == 1:
                text = texts.pop()
                agreed.append(Template(template_id_for_text(text), text))
                continue
            kind, suggestion, note = _classify_slot(
                slot, variants, annotator_sets
            )
            conflicts.append(
                Conflict(
                    index=len(conflicts),
                    kind=kind,
                    line_ids=tuple(sorted(slot)),
                    variants=variants,
                    suggestion=suggestion,
                    note=note,
                )
            )

        report = ConsolidationReport(
            consistency=len(agreed) / len(slots) if slots else 1.0,
            agreed_templates=tuple(agreed),
            conflicts=tuple(conflicts),
            slot_count=len(slots),
            agreed_count=len(agreed),
        )
        session.consolidation = report
        session.resolutions = {}
        session.bump({"kind": "consolidate"})
        return report


def resolve_conflict(
    session: AnnotationSession,
    index: int,
    chosen_text: str | None = None,
    drop: bool = False,
) -> None:
    """Record a human decision for one conflict: keep a text, or drop the
    slot in favor of a broader template."""
    with session.lock:
        if session.consolidation is None:
            raise StateError("consolidate before resolving conflicts")
        if not 0 <= index < len(session.consolidation.conflicts):
            raise StateError(f"no conflict with index {index}")
        if drop:
            session.resolutions[index] = None
        else:
            if chosen_text is None:
                raise ValidationError("resolution needs chosen_text or drop")
            (validated,) = _validate_texts([chosen_text])
            session.resolutions[index] = validated
        session.bump(
            {"kind": "resolve", "index": index,
             "text": session.resolutions[index],
             "drop": drop}
        )


def final_template_texts(session: AnnotationSession) -> list[str]:
    """Agreed texts plus resolved conflict texts; all conflicts must be
    resolved first."""
    report = session.consolidation
    if report is None:
        if len(session.catalogs) == 1:
            report = consolidate(session)
        else:
            raise StateError("consolidate before exporting")
    unresolved = [
        c.index for c in report.conflicts if c.index not in session.resolutions
    ]
    if unresolved:
        raise StateError(f"unresolved conflicts: {unresolved}")
    texts = {t.text for t in report.agreed_templates}
    for index, text in session.resolutions.items():
        if text is not None:
            texts.add(text)
    return sorted(texts)


def build_ground_truth(
    session: AnnotationSession,
) -> tuple[GroundTruth, dict[int, str]]:
    """Match the consolidated catalog and expand to the per-line truth."""
    texts = final_template_texts(session)
    templates = [
        Template(template_id_for_text(t), t) for t in texts
    ]
    outcome = match_all(session.corpus.records, TemplateIndex(templates))
    if outcome.unmatched:
        raise IntegrityError(
            f"{len(outcome.unmatched)} message(s) unmatched by the "
            "consolidated catalog; resolve or add templates"
        )
    per_line = expand_assignment(session.corpus, outcome.assignment)
    text_by_tid = {t.template_id: t.text for t in templates}
    catalog, assignment = catalog_from_texts(
        {lid: text_by_tid[tid] for lid, tid in per_line.items()}
    )
    contents: dict[int, str] = {}
    for record in session.corpus.records:
        for line_id in session.corpus.merged_lines.get(
            record.line_id, (record.line_id,)
        ):
            contents[line_id] = record.content
    return GroundTruth(templates=catalog, assignment=assignment), contents


def export_ground_truth(session: AnnotationSession, path: str | Path) -> GroundTruth:
    """Write the consolidated per-line annotation in the structured format."""
    truth, contents = build_ground_truth(session)
    write_ground_truth(truth, path, contents=contents)
    return truth


def replay_session(
    manifest: DatasetManifest,
    events: Sequence[Mapping],
    session_id: str | None = None,
) -> AnnotationSession:
    """Rebuild a session from its append-only event log."""
    session = open_session(manifest, session_id=session_id)
    for event in events:
        kind = event.get("kind")
        if kind == "submit":
            submit_templates(session, event["annotator"], event["templates"])
        elif kind == "rematch":
            rematch(session, event.get("annotator"))
        elif kind == "consolidate":
            consolidate(session)
        elif kind == "resolve":
            resolve_conflict(
                session,
                event["index"],
                chosen_text=event.get("text"),
                drop=bool(event.get("drop")),
            )
        else:
            raise IntegrityError(f"unknown event kind {kind!r}")
    return session
