"""HTTP/JSON API over annotation sessions, consumed by the browser UI.

Every response carries the session's current ``revision`` so clients can
detect stale views.  Mutations are serialized per session; reads return
consistent snapshots taken under the same lock.  When a state directory is
configured, each session's event log is appended to disk as JSON lines and
replayed when a session with the same id is opened again.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import HTMLResponse
from pydantic import BaseModel

from .annotation import (
    AnnotationSession,
    consolidate,
    export_ground_truth,
    open_session,
    rematch,
    replay_session,
    resolve_conflict,
    submit_templates,
    unmatched_contents,
)
from .errors import LogbenchError, StateError, ValidationError
from .ingest import load_manifest
from .matching import TemplateIndex, extract_parameters

MAX_PAGE_SIZE = 1000


class SessionStore:
    """Sessions by id, with optional event-log persistence."""

    def __init__(self, state_dir: str | Path | None = None):
        self.sessions: dict[str, AnnotationSession] = {}
        self.state_dir = Path(state_dir) if state_dir else None
        if self.state_dir:
            self.state_dir.mkdir(parents=True, exist_ok=True)

    def _events_path(self, session_id: str) -> Path | None:
        if self.state_dir is None:
            return None
        return self.state_dir / f"{session_id}.events.jsonl"

    def open(self, manifest_path: str | Path, session_id: str | None = None) -> AnnotationSession:
        manifest = load_manifest(manifest_path)
        sid = session_id or manifest.name
        if sid in self.sessions:
            raise StateError(f"session {sid!r} already open")
        events_path = self._events_path(sid)
        if events_path and events_path.exists():
            events = [
                json.loads(line)
                for line in events_path.read_text(encoding="utf-8").splitlines()
                if line.strip()
            ]
            session = replay_session(manifest, events, session_id=sid)
        else:
            session = open_session(manifest, session_id=sid)
        self.sessions[sid] = session
        return session

    def get(self, session_id: str) -> AnnotationSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id!r}")
        return session

    def persist_tail(self, session: AnnotationSession, known_events: int) -> None:
        events_path = self._events_path(session.session_id)
        if events_path is None:
            return
        with events_path.open("a", encoding="utf-8") as handle:
            for event in session.events[known_events:]:
                handle.write(json.dumps(event, sort_keys=True))
                handle.write("\n")


class TemplateSubmission(BaseModel):
    templates: list[str]


class SessionCreate(BaseModel):
    manifest_path: str
    session_id: str | None = None


class Resolution(BaseModel):
    index: int
    chosen_text: str | None = None
    drop: bool = False


class ExportRequest(BaseModel):
    path: str


def _page(items, page: int, page_size: int):
    start = page * page_size
    return items[start:start + page_size]


def _record_index(session: AnnotationSession):
    # Cached per session; the record tuple never changes after open.
    index = getattr(session, "_record_index_cache", None)
    if index is None:
        index = {r.line_id: r for r in session.corpus.records}
        session._record_index_cache = index
    return index


def create_app(store: SessionStore | None = None) -> FastAPI:
    store = store or SessionStore()
    app = FastAPI(title="logbench annotation service")
    app.state.store = store

    def run(session: AnnotationSession, fn, *args, **kwargs):
        """Apply a mutation under the session lock and persist new events."""
        before = len(session.events)
        try:
            result = fn(session, *args, **kwargs)
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except StateError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except LogbenchError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        store.persist_tail(session, before)
        return result

    @app.get("/health")
    def health():
        return {"status": "ok", "sessions": sorted(store.sessions)}

    @app.post("/sessions")
    def create_session(body: SessionCreate):
        try:
            session = store.open(body.manifest_path, body.session_id)
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except LogbenchError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {
            "session_id": session.session_id,
            "revision": session.revision,
            "groups": len(session.grouped.groups),
            "records": len(session.corpus.records),
        }

    @app.get("/sessions")
    def list_sessions():
        return {
            "sessions": [
                {
                    "session_id": sid,
                    "dataset": s.manifest.name,
                    "status": s.status,
                    "revision": s.revision,
                    "annotators": s.annotators,
                }
                for sid, s in sorted(store.sessions.items())
            ]
        }

    @app.get("/session/{sid}")
    def session_info(sid: str):
        session = store.get(sid)
        with session.lock:
            return {
                "session_id": sid,
                "dataset": session.manifest.name,
                "status": session.status,
                "revision": session.revision,
                "annotators": session.annotators,
                "groups": len(session.grouped.groups),
                "records": len(session.corpus.records),
                "unmatched": {
                    aid: len(outcome.unmatched)
                    for aid, outcome in session.outcomes.items()
                },
            }

    @app.get("/session/{sid}/groups")
    def list_groups(
        sid: str,
        page: int = Query(0, ge=0),
        page_size: int = Query(100, ge=1, le=MAX_PAGE_SIZE),
        annotator_id: str | None = None,
    ):
        session = store.get(sid)
        with session.lock:
            outcome = session.outcomes.get(annotator_id) if annotator_id else None
            unmatched = set(outcome.unmatched) if outcome else None
            groups = []
            for gid, key in session.group_ids.items():
                line_ids = session.grouped.groups[key]
                if annotator_id is None:
                    unmatched_count = None
                elif outcome is None:
                    unmatched_count = len(line_ids)
                else:
                    unmatched_count = sum(
                        1 for lid in line_ids if lid in unmatched
                    )
                groups.append(
                    {
                        "group_id": gid,
                        "level": key.level,
                        "component": key.component,
                        "top_tokens": list(key.top_tokens),
                        "size": len(line_ids),
                        "unmatched_count": unmatched_count,
                    }
                )
            groups.sort(key=lambda g: g["group_id"])
            return {
                "revision": session.revision,
                "total": len(groups),
                "page": page,
                "groups": _page(groups, page, page_size),
            }

    @app.get("/session/{sid}/groups/{gid}/logs")
    def group_logs(
        sid: str,
        gid: str,
        page: int = Query(0, ge=0),
        page_size: int = Query(200, ge=1, le=MAX_PAGE_SIZE),
        annotator_id: str | None = None,
    ):
        session = store.get(sid)
        with session.lock:
            key = session.group_ids.get(gid)
            if key is None:
                raise HTTPException(status_code=404, detail=f"no group {gid!r}")
            line_ids = session.grouped.groups[key]
            record_of = _record_index(session)
            outcome = session.outcomes.get(annotator_id) if annotator_id else None
            index = (
                TemplateIndex(session.catalogs[annotator_id].values())
                if annotator_id and annotator_id in session.catalogs
                else None
            )
            rows = []
            for lid in _page(line_ids, page, page_size):
                record = record_of[lid]
                row = {
                    "line_id": lid,
                    "content": record.content,
                    "multiplicity": record.multiplicity,
                    "template_id": None,
                    "template_text": None,
                    "parameters": None,
                }
                if outcome is not None:
                    tid = outcome.assignment.get(lid)
                    if tid is not None and index is not None:
                        compiled = index.get(tid)
                        row["template_id"] = tid
                        row["template_text"] = compiled.text
                        row["parameters"] = list(
                            extract_parameters(record, compiled)
                        )
                rows.append(row)
            return {
                "revision": session.revision,
                "group_id": gid,
                "total": len(line_ids),
                "page": page,
                "logs": rows,
            }

    @app.post("/session/{sid}/annotators/{aid}/templates")
    def submit(sid: str, aid: str, body: TemplateSubmission):
        session = store.get(sid)
        outcome = run(session, submit_templates, aid, body.templates)
        return {
            "revision": session.revision,
            "annotator": aid,
            "templates": len(session.catalogs[aid]),
            "matched": len(outcome.assignment),
            "unmatched": len(outcome.unmatched),
            "status": session.status,
        }

    @app.get("/session/{sid}/annotators/{aid}/unmatched")
    def unmatched(
        sid: str,
        aid: str,
        page: int = Query(0, ge=0),
        page_size: int = Query(200, ge=1, le=MAX_PAGE_SIZE),
    ):
        session = store.get(sid)
        with session.lock:
            contents = unmatched_contents(session, aid)
            return {
                "revision": session.revision,
                "annotator": aid,
                "total": len(contents),
                "page": page,
                "unmatched": _page(contents, page, page_size),
            }

    @app.post("/session/{sid}/rematch")
    def rematch_endpoint(sid: str, annotator_id: str | None = None):
        session = store.get(sid)
        outcomes = run(session, rematch, annotator_id)
        return {
            "revision": session.revision,
            "status": session.status,
            "unmatched": {
                aid: len(outcome.unmatched) for aid, outcome in outcomes.items()
            },
        }

    @app.get("/session/{sid}/consistency")
    def consistency(sid: str):
        session = store.get(sid)
        with session.lock:
            report = session.consolidation
            if report is None:
                raise HTTPException(
                    status_code=409,
                    detail="no consolidation yet; POST /consolidate first",
                )
            return {
                "revision": session.revision,
                "consistency": report.consistency,
                "slots": report.slot_count,
                "agreed": report.agreed_count,
                "conflicts": len(report.conflicts),
            }

    @app.post("/session/{sid}/consolidate")
    def consolidate_endpoint(sid: str):
        session = store.get(sid)
        report = run(session, consolidate)
        return {
            "revision": session.revision,
            "consistency": report.consistency,
            "slots": report.slot_count,
            "agreed": report.agreed_count,
            "conflicts": [
                {
                    "index": c.index,
                    "kind": c.kind,
                    "line_ids": list(c.line_ids),
                    "variants": dict(c.variants),
                    "suggestion": c.suggestion,
                    "note": c.note,
                    "resolved": c.index in session.resolutions,
                }
                for c in report.conflicts
            ],
        }

    @app.post("/session/{sid}/conflicts/resolve")
    def resolve(sid: str, body: Resolution):
        session = store.get(sid)
        run(session, resolve_conflict, body.index,
            chosen_text=body.chosen_text, drop=body.drop)
        report = session.consolidation
        return {
            "revision": session.revision,
            "resolved": sorted(session.resolutions),
            "remaining": [
                c.index for c in report.conflicts
                if c.index not in session.resolutions
            ],
        }

    @app.post("/session/{sid}/export")
    def export(sid: str, body: ExportRequest):
        session = store.get(sid)
        truth = run(session, export_ground_truth, body.path)
        return {
            "revision": session.revision,
            "path": body.path,
            "templates": len(truth.templates),
            "lines": len(truth.assignment),
        }

    @app.get("/", response_class=HTMLResponse)
    def index():
        ui = Path(__file__).parent / "ui" / "index.html"
        if ui.exists():
            return ui.read_text(encoding="utf-8")
        return HTMLResponse(
            "<h1>logbench annotation service</h1>"
            "<p>No bundled UI found; the API is under /session/...</p>"
        )

    return app
