"""HTTP annotation service: serve sessions, collect gap labels, export.

Labels are persisted to an append-only line-delimited record log that is
replayed at startup; a record is fsynced before the submit call is
acknowledged, so an acknowledged label survives a crash.  A truncated
trailing line (crash mid-append) is skipped on replay.  Annotators
authenticate with static tokens from the service config.
"""

from __future__ import annotations

import json
import os
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles

from sessionseg.corpus import (
    AnnotatedSession,
    Catalog,
    Session,
    read_catalog,
    read_session_log,
)

LABEL_BUCKETS = ("0", "1", "2", "3+")
LONG_SESSION_MIN_ITEMS = 5


class StoreError(ValueError):
    """Raised for invalid submissions or an empty-store export."""


class ConflictError(StoreError):
    """Duplicate (session, annotator) submission."""


@dataclass(frozen=True)
class ServiceConfig:
    sessions_path: str
    catalog_path: str
    store_path: str
    annotators: dict[str, str]  # annotator id -> token
    seed: int = 0
    reservation_timeout: float = 300.0
    ui_dir: str | None = None


@dataclass
class _Reservation:
    session_id: str
    expires_at: float


class AnnotationStore:
    """Append-only record log with startup replay and a single writer."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.records: list[dict[str, Any]] = []
        self.by_key: dict[tuple[str, str], dict[str, Any]] = {}
        self._lock = threading.Lock()
        self._replay()

    def _replay(self) -> None:
        if not self.path.exists():
            return
        valid_bytes = 0
        with open(self.path, "rb") as fh:
            for raw in fh:
                line = raw.decode("utf-8", errors="replace").strip()
                if not line:
                    valid_bytes += len(raw)
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    # crash mid-append: the unacknowledged tail is dropped
                    break
                valid_bytes += len(raw)
                key = (rec["session_id"], rec["annotator_id"])
                if key in self.by_key:
                    continue
                self.records.append(rec)
                self.by_key[key] = rec
        if valid_bytes < self.path.stat().st_size:
            # truncate the torn tail so future appends start on a clean line
            with open(self.path, "r+b") as fh:
                fh.truncate(valid_bytes)

    def append(
        self, session_id: str, annotator_id: str, gap_labels: list[int], n_gaps: int
    ) -> int:
        if len(gap_labels) != n_gaps:
            raise StoreError(
                f"expected {n_gaps} gap labels for session {session_id}, "
                f"got {len(gap_labels)}"
            )
        if any(lbl not in (0, 1) for lbl in gap_labels):
            raise StoreError("gap labels must be 0 or 1")
        with self._lock:
            key = (session_id, annotator_id)
            if key in self.by_key:
                raise ConflictError(
                    f"annotator {annotator_id} already labeled session {session_id}"
                )
            rec = {
                "record_id": len(self.records),
                "session_id": session_id,
                "annotator_id": annotator_id,
                "gap_labels": list(gap_labels),
                "ts": time.time(),
            }
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self.records.append(rec)
            self.by_key[key] = rec
            return rec["record_id"]

    def labeled_by(self, annotator_id: str) -> set[str]:
        return {sid for (sid, aid) in self.by_key if aid == annotator_id}


def export_annotations(
    store: AnnotationStore,
    sessions: dict[str, Session],
    policy: str = "first",
) -> list[AnnotatedSession]:
    """Collapse the record log to one labeling per session.

    ``first`` keeps each session's earliest record; ``majority`` votes
    per gap across all of a session's records, ties resolving to 0.
    """
    if not store.records:
        raise StoreError("annotation store is empty, nothing to export")
    if policy not in ("first", "majority"):
        raise StoreError(f"unknown export policy {policy!r}")
    per_session: dict[str, list[dict]] = {}
    for rec in store.records:
        per_session.setdefault(rec["session_id"], []).append(rec)
    exported = []
    for sid, recs in per_session.items():
        session = sessions[sid]
        if policy == "first":
            rec = recs[0]
            labels = tuple(rec["gap_labels"])
            annotator = rec["annotator_id"]
        else:
            votes = [rec["gap_labels"] for rec in recs]
            labels = tuple(
                int(sum(col) * 2 > len(col)) for col in zip(*votes)
            ) if session.n_gaps else ()
            annotator = "consensus"
        exported.append(
            AnnotatedSession(session=session, gap_labels=labels, annotator_id=annotator)
        )
    return exported


def _bucket(n_points: int) -> str:
    return str(n_points) if n_points < 3 else "3+"


def progress_report(
    store: AnnotationStore, sessions: dict[str, Session]
) -> dict[str, Any]:
    """Per-annotator label distributions plus the short/long breakdown."""
    annotators: dict[str, dict[str, float]] = {}
    per_annotator: dict[str, list[int]] = {}
    length_types = {
        "short": {b: 0 for b in LABEL_BUCKETS},
        "long": {b: 0 for b in LABEL_BUCKETS},
    }
    for rec in store.records:
        n_points = int(sum(rec["gap_labels"]))
        per_annotator.setdefault(rec["annotator_id"], []).append(n_points)
        session = sessions.get(rec["session_id"])
        if session is not None:
            kind = "long" if len(session.items) >= LONG_SESSION_MIN_ITEMS else "short"
            length_types[kind][_bucket(n_points)] += 1
    for aid, counts in sorted(per_annotator.items()):
        total = len(counts)
        dist = {b: 0 for b in LABEL_BUCKETS}
        for c in counts:
            dist[_bucket(c)] += 1
        annotators[aid] = {b: dist[b] / total for b in LABEL_BUCKETS}
        annotators[aid]["sessions"] = total
    return {
        "annotators": annotators,
        "length_types": length_types,
        "total_records": len(store.records),
    }


@dataclass
class AnnotationService:
    config: ServiceConfig
    sessions: dict[str, Session]
    catalog: Catalog
    store: AnnotationStore
    reservations: dict[str, _Reservation] = field(default_factory=dict)
    _orders: dict[str, list[str]] = field(default_factory=dict)

    def _order_for(self, annotator_id: str) -> list[str]:
        order = self._orders.get(annotator_id)
        if order is None:
            order = list(self.sessions)
            random.Random(f"{self.config.seed}:{annotator_id}").shuffle(order)
            self._orders[annotator_id] = order
        return order

    def authenticate(self, annotator_id: str | None, token: str | None) -> str:
        if not annotator_id or annotator_id not in self.config.annotators:
            raise PermissionError(f"unknown annotator {annotator_id!r}")
        if self.config.annotators[annotator_id] != (token or ""):
            raise PermissionError("bad token")
        return annotator_id

    def next_session(self, annotator_id: str) -> Session | None:
        """A session this annotator has not labeled, in seeded random order.

        The pick is reserved so repeated calls return the same session
        until it is submitted or the reservation times out.  Other
        annotators may receive the same session.
        """
        now = time.monotonic()
        labeled = self.store.labeled_by(annotator_id)
        held = self.reservations.get(annotator_id)
        if held and held.expires_at > now and held.session_id not in labeled:
            return self.sessions[held.session_id]
        for sid in self._order_for(annotator_id):
            if sid not in labeled:
                self.reservations[annotator_id] = _Reservation(
                    sid, now + self.config.reservation_timeout
                )
                return self.sessions[sid]
        return None

    def payload(self, session: Session) -> dict[str, Any]:
        items = []
        for item_id in session.items:
            item = self.catalog.get(item_id)
            items.append(
                {
                    "id": item_id,
                    "title": item.title if item else "(unknown item)",
                    "brand": item.brand if item else "",
                    "price": item.price if item else None,
                }
            )
        return {
            "session_id": session.session_id,
            "items": items,
            "gap_count": session.n_gaps,
        }

    def submit(
        self, session_id: str, annotator_id: str, gap_labels: list[int]
    ) -> int:
        session = self.sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        record_id = self.store.append(
            session_id, annotator_id, gap_labels, session.n_gaps
        )
        held = self.reservations.get(annotator_id)
        if held and held.session_id == session_id:
            del self.reservations[annotator_id]
        return record_id


def load_service(config: ServiceConfig) -> AnnotationService:
    sessions = {s.session_id: s for s in read_session_log(config.sessions_path)}
    catalog = read_catalog(config.catalog_path)
    store = AnnotationStore(config.store_path)
    return AnnotationService(
        config=config, sessions=sessions, catalog=catalog, store=store
    )


def create_app(service: AnnotationService) -> FastAPI:
    app = FastAPI(title="sessionseg annotation service")

    def _auth(request: Request) -> str:
        annotator = request.query_params.get("annotator")
        token = request.headers.get("x-annot-token") or request.query_params.get(
            "token"
        )
        try:
            return service.authenticate(annotator, token)
        except PermissionError as exc:
            raise HTTPException(status_code=401, detail=str(exc)) from exc

    @app.get("/api/session/next")
    def next_session(request: Request) -> dict:
        annotator = _auth(request)
        session = service.next_session(annotator)
        if session is None:
            raise HTTPException(status_code=404, detail="no unlabeled sessions left")
        return service.payload(session)

    @app.post("/api/session/{session_id}/labels")
    async def submit_labels(session_id: str, request: Request) -> dict:
        annotator = _auth(request)
        try:
            body = await request.json()
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise HTTPException(status_code=400, detail="invalid JSON body") from exc
        labels = body.get("gap_labels")
        if not isinstance(labels, list):
            raise HTTPException(status_code=400, detail="gap_labels must be a list")
        try:
            record_id = service.submit(session_id, annotator, labels)
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except StoreError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except KeyError as exc:
            raise HTTPException(
                status_code=404, detail=f"unknown session {session_id}"
            ) from exc
        return {"record_id": record_id, "session_id": session_id}

    @app.get("/api/progress")
    def progress() -> dict:
        return progress_report(service.store, service.sessions)

    @app.get("/api/export")
    def export(policy: str = "first") -> PlainTextResponse:
        try:
            annotated = export_annotations(service.store, service.sessions, policy)
        except StoreError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        lines = [
            json.dumps(
                {
                    "session_id": a.session.session_id,
                    "annotator_id": a.annotator_id,
                    "gap_labels": list(a.gap_labels),
                },
                sort_keys=True,
            )
            for a in annotated
        ]
        return PlainTextResponse(
            "\n".join(lines) + "\n", media_type="application/x-ndjson"
        )

    if service.config.ui_dir and Path(service.config.ui_dir).is_dir():
        app.mount(
            "/ui", StaticFiles(directory=service.config.ui_dir, html=True), name="ui"
        )

    return app
