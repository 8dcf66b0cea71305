"""Similarity feature vectors around candidate segmentation points.

For a gap between two items, a window of radius ``w`` takes the ``w``
items on each side (repeating the nearest in-session item when the
window runs past a session edge).  Every unordered pair among the 2w
window slots yields four similarity scores, producing a feature vector
of length 4 * C(2w, 2).

Canonical layout (fixed so feature indices are reproducible across
training, serialization, and importance labeling):

* window positions ``[L_w ... L_1, R_1 ... R_w]``, indexed 0 .. 2w-1;
* pairs in lexicographic order by position index;
* per pair, similarities in the order behavior, brand, title, price.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from sessionseg.behavior import EmbeddingTable
from sessionseg.corpus import AnnotatedSession, Catalog, Session
from sessionseg.fileio import format_float, read_header, write_header
from sessionseg.textembed import TextEmbeddingProvider

LAYOUT_VERSION = 1
SIMILARITY_KINDS = ("behavior", "brand", "title", "price")


class FeatureError(ValueError):
    """Raised for invalid gaps, unresolvable items, or dim mismatches."""


@dataclass(frozen=True)
class FeatureConfig:
    """Window radius plus the price-denominator interpretation.

    ``price_mode`` selects the denominator of the price score:
    ``"smooth"`` uses min(p_i, p_j) + 1 (default); ``"next_item"`` uses
    the prices of the items following each pair member in the session,
    kept only for comparison.
    """

    w: int = 2
    price_mode: str = "smooth"

    def __post_init__(self) -> None:
        if self.w < 1:
            raise FeatureError(f"window radius must be >= 1, got {self.w}")
        if self.price_mode not in ("smooth", "next_item"):
            raise FeatureError(f"unknown price_mode {self.price_mode!r}")


def pair_index(w: int) -> list[tuple[int, int]]:
    """All C(2w, 2) position pairs (a, b), a < b, in lexicographic order."""
    size = 2 * w
    return [(a, b) for a in range(size) for b in range(a + 1, size)]


def n_features(w: int) -> int:
    return 4 * math.comb(2 * w, 2)


def position_label(pos: int, w: int) -> str:
    """Window slot index -> L_i / R_j label; L_1/R_1 are gap-adjacent."""
    if pos < w:
        return f"L_{w - pos}"
    return f"R_{pos - w + 1}"


def feature_label(index: int, w: int) -> str:
    """Canonical '(L_i,R_j):<kind>' name for one feature index."""
    pairs = pair_index(w)
    if not 0 <= index < 4 * len(pairs):
        raise FeatureError(f"feature index {index} out of range for w={w}")
    a, b = pairs[index // 4]
    kind = SIMILARITY_KINDS[index % 4]
    return f"({position_label(a, w)},{position_label(b, w)}):{kind}"


def feature_labels(w: int) -> list[str]:
    return [feature_label(i, w) for i in range(n_features(w))]


def window_positions(n_items: int, gap_index: int, w: int) -> list[int]:
    """Session indices for the 2w window slots, clamped at the edges."""
    if n_items < 2:
        raise FeatureError("sessions with fewer than 2 items have no gaps")
    if not 0 <= gap_index <= n_items - 2:
        raise FeatureError(
            f"gap_index {gap_index} out of range for session of {n_items} items"
        )
    left = [max(gap_index - k, 0) for k in range(w - 1, -1, -1)]
    right = [min(gap_index + 1 + k, n_items - 1) for k in range(w)]
    return left + right


def window_items(session: Session, gap_index: int, w: int) -> list[str]:
    """The 2w item ids around a gap, order [L_w ... L_1, R_1 ... R_w]."""
    positions = window_positions(len(session.items), gap_index, w)
    return [session.items[p] for p in positions]


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity clamped to [-1, 1]; zero-norm inputs give 0."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise FeatureError(f"cosine dim mismatch: {u.shape} vs {v.shape}")
    uu = float(u @ u)
    vv = float(v @ v)
    if uu == 0.0 or vv == 0.0:
        return 0.0
    # sqrt of the product (not product of sqrts) keeps colinear pairs at
    # exactly +-1 in floating point
    return float(min(1.0, max(-1.0, float(u @ v) / math.sqrt(uu * vv))))


def price_similarity(p_i: float, p_j: float) -> float:
    """exp(-|p_i - p_j| / (min(p_i, p_j) + 1)): 1 at equality, -> 0 apart."""
    if p_i < 0 or p_j < 0:
        raise FeatureError(f"prices must be >= 0, got ({p_i}, {p_j})")
    return math.exp(-abs(p_i - p_j) / (min(p_i, p_j) + 1.0))


def price_similarity_next_item(p_i: float, p_j: float, pn_i: float, pn_j: float) -> float:
    """Alternative reading: denominator is the next items' price minimum.

    The limit convention covers the zero denominator: equal prices give
    1, unequal give 0.
    """
    if p_i < 0 or p_j < 0 or pn_i < 0 or pn_j < 0:
        raise FeatureError("prices must be >= 0")
    denom = min(pn_i, pn_j)
    if denom == 0.0:
        return 1.0 if p_i == p_j else 0.0
    return math.exp(-abs(p_i - p_j) / denom)


def _resolve_window(
    session: Session, positions: Sequence[int], catalog: Catalog
) -> list:
    items = []
    for p in positions:
        item_id = session.items[p]
        item = catalog.get(item_id)
        if item is None:
            raise FeatureError(
                f"session {session.session_id}: item {item_id!r} not in catalog"
            )
        items.append(item)
    return items


def build_feature_vector(
    session: Session,
    gap_index: int,
    cfg: FeatureConfig,
    behavior_table: EmbeddingTable,
    title_provider: TextEmbeddingProvider,
    brand_provider: TextEmbeddingProvider,
    catalog: Catalog,
) -> np.ndarray:
    """The 4d similarity vector for one candidate gap.

    Missing behavior embeddings and absent prices contribute 0 in their
    slot; padded duplicate pairs are computed normally, so self-pairs
    yield behavior/price similarity 1.
    """
    w = cfg.w
    positions = window_positions(len(session.items), gap_index, w)
    items = _resolve_window(session, positions, catalog)
    behavior = [behavior_table.lookup(it.id) for it in items]
    titles = [title_provider.embed_field(it, "title") for it in items]
    brands = [brand_provider.embed_field(it, "brand") for it in items]

    n = len(session.items)
    values = np.empty(n_features(w), dtype=np.float64)
    out = 0
    for a, b in pair_index(w):
        va, vb = behavior[a], behavior[b]
        values[out] = 0.0 if va is None or vb is None else cosine(va, vb)
        values[out + 1] = cosine(brands[a], brands[b])
        values[out + 2] = cosine(titles[a], titles[b])
        pa, pb = items[a].price, items[b].price
        if pa is None or pb is None:
            values[out + 3] = 0.0
        elif cfg.price_mode == "smooth":
            values[out + 3] = price_similarity(pa, pb)
        else:
            next_a = catalog.get(session.items[min(positions[a] + 1, n - 1)])
            next_b = catalog.get(session.items[min(positions[b] + 1, n - 1)])
            if next_a is None or next_b is None or next_a.price is None or next_b.price is None:
                values[out + 3] = 0.0
            else:
                values[out + 3] = price_similarity_next_item(
                    pa, pb, next_a.price, next_b.price
                )
        out += 4
    return values


def build_dataset(
    annotated: Sequence[AnnotatedSession],
    cfg: FeatureConfig,
    behavior_table: EmbeddingTable,
    title_provider: TextEmbeddingProvider,
    brand_provider: TextEmbeddingProvider,
    catalog: Catalog,
) -> tuple[np.ndarray, np.ndarray, list[str], list[tuple[str, int]]]:
    """One feature row per gap over all annotated sessions.

    Returns (X, y, groups, keys) with rows in session order then gap
    order; ``groups`` holds the session id of each row for grouped CV
    and ``keys`` the (session_id, gap_index) pairs.  Sessions without
    gaps are skipped.
    """
    rows: list[np.ndarray] = []
    labels: list[int] = []
    groups: list[str] = []
    keys: list[tuple[str, int]] = []
    for ann in annotated:
        session = ann.session
        if session.n_gaps == 0:
            continue
        for g in range(session.n_gaps):
            try:
                vec = build_feature_vector(
                    session, g, cfg, behavior_table, title_provider,
                    brand_provider, catalog,
                )
            except FeatureError as exc:
                raise FeatureError(
                    f"session {session.session_id} gap {g}: {exc}"
                ) from exc
            rows.append(vec)
            labels.append(ann.gap_labels[g])
            groups.append(session.session_id)
            keys.append((session.session_id, g))
    if not rows:
        raise FeatureError("no gaps found in the annotated sessions")
    return (
        np.vstack(rows),
        np.array(labels, dtype=np.int64),
        groups,
        keys,
    )


def save_dataset(
    path: str | Path,
    X: np.ndarray,
    y: np.ndarray,
    keys: Sequence[tuple[str, int]],
    w: int,
) -> None:
    d = math.comb(2 * w, 2)
    if X.shape[1] != 4 * d:
        raise FeatureError(f"X has {X.shape[1]} columns, expected {4 * d} for w={w}")
    with open(path, "w", encoding="utf-8") as fh:
        write_header(
            fh,
            "features",
            1,
            {"w": w, "d": d, "layout": LAYOUT_VERSION, "rows": int(X.shape[0])},
        )
        for i in range(X.shape[0]):
            sid, gap = keys[i]
            floats = "\t".join(format_float(v) for v in X[i])
            fh.write(f"{sid}\t{gap}\t{int(y[i])}\t{floats}\n")


def load_dataset(
    path: str | Path,
) -> tuple[np.ndarray, np.ndarray, list[str], list[tuple[str, int]], dict]:
    with open(path, encoding="utf-8") as fh:
        meta = read_header(fh, "features", 1)
        w = int(meta["w"])
        width = n_features(w)
        X_rows, labels, groups, keys = [], [], [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3 + width:
                raise FeatureError(
                    f"{path}:{lineno}: expected {3 + width} fields, got {len(parts)}"
                )
            sid, gap, label = parts[0], int(parts[1]), int(parts[2])
            X_rows.append([float(tok) for tok in parts[3:]])
            labels.append(label)
            groups.append(sid)
            keys.append((sid, gap))
    if len(X_rows) != int(meta.get("rows", len(X_rows))):
        raise FeatureError(f"{path}: truncated dataset file")
    return (
        np.array(X_rows, dtype=np.float64),
        np.array(labels, dtype=np.int64),
        groups,
        keys,
        meta,
    )
