"""Behavior-log ingestion: sessions, catalogs, statistics, and splits.

A behavior-log row carries the items a user viewed (``prev_items``) plus
the item finally acted on (``next_item``); both are merged into one
ordered session.  Catalog rows attach title/brand/price attributes to
item ids.  Splits are made at whole-session granularity so no session
ever contributes gaps to both sides.
"""

from __future__ import annotations

import csv
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from sessionseg.fileio import FileFormatError, read_jsonl, write_jsonl


class CorpusError(ValueError):
    """Raised for malformed log/catalog rows or invalid corpus operations."""


@dataclass(frozen=True)
class Item:
    """One catalog entry; ``price`` is None when absent or unparsable."""

    id: str
    title: str
    brand: str = ""
    price: float | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("item id must be non-empty")
        if self.price is not None and self.price < 0:
            raise CorpusError(f"item {self.id}: price must be >= 0, got {self.price}")


@dataclass(frozen=True)
class Session:
    """An ordered list of item ids viewed in one sitting."""

    session_id: str
    items: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.session_id:
            raise CorpusError("session_id must be non-empty")
        if len(self.items) < 1:
            raise CorpusError(f"session {self.session_id}: needs at least 1 item")

    @property
    def n_gaps(self) -> int:
        return len(self.items) - 1


@dataclass(frozen=True)
class AnnotatedSession:
    """A session plus one {0,1} label per inter-item gap (1 = boundary)."""

    session: Session
    gap_labels: tuple[int, ...]
    annotator_id: str = ""

    def __post_init__(self) -> None:
        if len(self.gap_labels) != self.session.n_gaps:
            raise CorpusError(
                f"session {self.session.session_id}: expected "
                f"{self.session.n_gaps} gap labels, got {len(self.gap_labels)}"
            )
        if any(lbl not in (0, 1) for lbl in self.gap_labels):
            raise CorpusError(
                f"session {self.session.session_id}: gap labels must be 0 or 1"
            )


@dataclass
class Catalog:
    """Unique-keyed item-id -> Item map plus a load report for bad fields."""

    items: dict[str, Item] = field(default_factory=dict)
    missing_price_ids: list[str] = field(default_factory=list)

    def get(self, item_id: str) -> Item | None:
        return self.items.get(item_id)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.items

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class CorpusStats:
    total_sessions: int
    total_items: int
    mean_length: float
    std_length: float
    min_length: int
    median_length: int
    max_length: int


_LIST_SPLIT = re.compile(r"[,\s]+")


def _parse_item_list(raw: Any, row_index: int) -> list[str]:
    """Decode a prev_items cell: a real list or a JSON-style list string.

    Tolerates the public dataset's quirks: single quotes and
    space-separated entries inside brackets.
    """
    if isinstance(raw, (list, tuple)):
        items = list(raw)
    elif raw is None or raw == "":
        items = []
    elif isinstance(raw, str):
        text = raw.strip()
        if not (text.startswith("[") and text.endswith("]")):
            raise CorpusError(f"row {row_index}: prev_items is not a list: {raw!r}")
        try:
            items = json.loads(text)
        except json.JSONDecodeError:
            inner = text[1:-1].strip()
            if not inner:
                items = []
            else:
                items = [
                    tok.strip("'\"")
                    for tok in _LIST_SPLIT.split(inner)
                    if tok.strip("'\"")
                ]
    else:
        raise CorpusError(f"row {row_index}: prev_items has type {type(raw).__name__}")
    for it in items:
        if not isinstance(it, str) or not it:
            raise CorpusError(f"row {row_index}: bad item id {it!r} in prev_items")
    return items


def parse_session_log(rows: Iterable[Mapping[str, Any]]) -> list[Session]:
    """Build sessions from log rows, preserving row and item order.

    Each row needs a (possibly empty) ``prev_items`` list and one
    ``next_item``; the session is their concatenation.  A missing
    ``session_id`` defaults to the 0-based row index.  Repeated items are
    preserved as-is.
    """
    sessions: list[Session] = []
    seen_ids: set[str] = set()
    for i, row in enumerate(rows):
        if "next_item" not in row or row["next_item"] in (None, ""):
            raise CorpusError(f"row {i}: missing next_item")
        next_item = row["next_item"]
        if not isinstance(next_item, str):
            raise CorpusError(f"row {i}: next_item must be a string")
        prev_items = _parse_item_list(row.get("prev_items"), i)
        session_id = str(row.get("session_id", "") or i)
        if session_id in seen_ids:
            raise CorpusError(f"row {i}: duplicate session_id {session_id!r}")
        seen_ids.add(session_id)
        sessions.append(Session(session_id, tuple(prev_items + [next_item])))
    return sessions


def read_session_log(path: str | Path) -> list[Session]:
    """Read a session log file: JSONL records or CSV with list-string cells."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    else:
        rows = read_jsonl(path)
    return parse_session_log(rows)


def _parse_price(raw: Any, item_id: str, report: list[str]) -> float | None:
    if raw is None or raw == "":
        report.append(item_id)
        return None
    try:
        price = float(raw)
    except (TypeError, ValueError):
        report.append(item_id)
        return None
    if price < 0:
        raise CorpusError(f"item {item_id}: negative price {price}")
    return price


def load_catalog(rows: Iterable[Mapping[str, Any]]) -> Catalog:
    """Build a catalog from rows carrying id/title/brand/price fields.

    Blank brands become empty text; blank or unparsable prices become
    absent and the item id is recorded in ``missing_price_ids``.
    """
    catalog = Catalog()
    for i, row in enumerate(rows):
        item_id = row.get("id")
        if not item_id:
            raise CorpusError(f"catalog row {i}: missing id")
        item_id = str(item_id)
        if item_id in catalog.items:
            raise CorpusError(f"catalog row {i}: duplicate id {item_id!r}")
        price = _parse_price(row.get("price"), item_id, catalog.missing_price_ids)
        catalog.items[item_id] = Item(
            id=item_id,
            title=str(row.get("title", "") or ""),
            brand=str(row.get("brand", "") or ""),
            price=price,
        )
    return catalog


def read_catalog(path: str | Path) -> Catalog:
    return load_catalog(read_jsonl(path))


def write_catalog(path: str | Path, catalog: Catalog) -> None:
    write_jsonl(
        path,
        [
            {
                "id": it.id,
                "title": it.title,
                "brand": it.brand,
                "price": "" if it.price is None else it.price,
            }
            for it in catalog.items.values()
        ],
    )


def write_session_log(path: str | Path, sessions: Sequence[Session]) -> None:
    write_jsonl(
        path,
        [
            {
                "session_id": s.session_id,
                "prev_items": list(s.items[:-1]),
                "next_item": s.items[-1],
            }
            for s in sessions
        ],
    )


def unknown_items(sessions: Iterable[Session], catalog: Catalog) -> set[str]:
    """Item ids referenced by sessions but absent from the catalog."""
    missing: set[str] = set()
    for s in sessions:
        for it in s.items:
            if it not in catalog:
                missing.add(it)
    return missing


def corpus_stats(sessions: Sequence[Session]) -> CorpusStats:
    """Length statistics over sessions.

    Median uses the lower middle for even counts; std is the population
    standard deviation (ddof=0) so a singleton corpus reports 0.
    """
    if not sessions:
        raise CorpusError("corpus_stats requires at least one session")
    lengths = sorted(len(s.items) for s in sessions)
    n = len(lengths)
    mean = sum(lengths) / n
    var = sum((x - mean) ** 2 for x in lengths) / n
    return CorpusStats(
        total_sessions=n,
        total_items=len({it for s in sessions for it in s.items}),
        mean_length=mean,
        std_length=var**0.5,
        min_length=lengths[0],
        median_length=lengths[(n - 1) // 2],
        max_length=lengths[-1],
    )


def split_annotated(
    annotated: Sequence[AnnotatedSession],
    ratio: tuple[int, int] = (4, 1),
    seed: int = 0,
) -> tuple[list[AnnotatedSession], list[AnnotatedSession]]:
    """Whole-session train/test split; deterministic given the seed."""
    if ratio[0] <= 0 or ratio[1] <= 0:
        raise CorpusError(f"split ratio parts must be positive, got {ratio}")
    if len(annotated) < 2:
        raise CorpusError("need at least 2 annotated sessions to split")
    order = list(range(len(annotated)))
    random.Random(seed).shuffle(order)
    n_train = round(len(annotated) * ratio[0] / (ratio[0] + ratio[1]))
    n_train = min(max(n_train, 1), len(annotated) - 1)
    train_idx = set(order[:n_train])
    train = [a for i, a in enumerate(annotated) if i in train_idx]
    test = [a for i, a in enumerate(annotated) if i not in train_idx]
    return train, test


def write_split_manifest(
    path: str | Path,
    train: Sequence[AnnotatedSession],
    test: Sequence[AnnotatedSession],
) -> None:
    manifest = {
        "train": [a.session.session_id for a in train],
        "test": [a.session.session_id for a in test],
    }
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def read_split_manifest(path: str | Path) -> tuple[list[str], list[str]]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or "train" not in doc or "test" not in doc:
        raise FileFormatError(f"{path}: not a split manifest")
    return list(doc["train"]), list(doc["test"])


def read_annotations(
    path: str | Path, sessions: Mapping[str, Session]
) -> list[AnnotatedSession]:
    """Load annotation records and bind them to their sessions.

    Records are JSONL objects with session_id, annotator_id and
    gap_labels; label-length mismatches and unknown sessions are errors.
    """
    annotated = []
    for rec in read_jsonl(path):
        sid = rec.get("session_id")
        if sid not in sessions:
            raise CorpusError(f"annotation references unknown session {sid!r}")
        annotated.append(
            AnnotatedSession(
                session=sessions[sid],
                gap_labels=tuple(int(x) for x in rec.get("gap_labels", [])),
                annotator_id=str(rec.get("annotator_id", "")),
            )
        )
    return annotated


def write_annotations(path: str | Path, annotated: Sequence[AnnotatedSession]) -> None:
    write_jsonl(
        path,
        [
            {
                "session_id": a.session.session_id,
                "annotator_id": a.annotator_id,
                "gap_labels": list(a.gap_labels),
            }
            for a in annotated
        ],
    )
