"""Synthetic behavior-log generator with planted topic boundaries.

Sessions are concatenations of latent-topic segments: each topic owns a
title vocabulary, a brand pool, and a price band, and items co-occur
within their topic.  Gap labels mark exactly the segment junctions, so
the generated annotations are ground truth by construction.  Two noise
sources make the task non-trivial for a pure adjacent-similarity rule:
"impulse" items from a foreign topic dropped inside a segment (not
boundaries), and rare item variants that appear only in annotated
sessions (out-of-vocabulary for behavior embeddings).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from sessionseg.corpus import AnnotatedSession, Catalog, Item, Session


class SynthError(ValueError):
    """Raised for inconsistent generator parameters."""


@dataclass(frozen=True)
class SynthConfig:
    n_annotated: int = 2000
    n_unlabeled: int = 6000
    n_topics: int = 12
    items_per_topic: int = 60
    rare_items_per_topic: int = 25
    title_words_per_topic: int = 40
    shared_title_words: int = 12
    brands_per_topic: int = 6
    brand_missing_rate: float = 0.10
    price_missing_rate: float = 0.07
    multi_segment_rate: float = 0.40
    three_segment_rate: float = 0.07
    min_segment_len: int = 2
    max_segment_len: int = 5
    impulse_rate: float = 0.05
    rare_rate: float = 0.06
    n_annotators: int = 8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_annotated < 2 or self.n_unlabeled < 1:
            raise SynthError("need at least 2 annotated and 1 unlabeled session")
        if self.n_topics < 2:
            raise SynthError("need at least 2 topics to plant boundaries")
        if not 0 <= self.three_segment_rate <= self.multi_segment_rate <= 1:
            raise SynthError("segment rates must satisfy 0 <= three <= multi <= 1")
        if self.min_segment_len < 1 or self.max_segment_len < self.min_segment_len:
            raise SynthError("segment length bounds are inconsistent")


@dataclass
class SynthResult:
    sessions: list[Session]
    catalog: Catalog
    annotated: list[AnnotatedSession]
    report: dict = field(default_factory=dict)


class _Topic:
    def __init__(self, index: int, cfg: SynthConfig, rng: random.Random,
                 shared_words: list[str]) -> None:
        self.index = index
        self.words = [f"t{index}word{k}" for k in range(cfg.title_words_per_topic)]
        self.shared_words = shared_words
        self.brands = [f"brand-{index}-{b}" for b in range(cfg.brands_per_topic)]
        self.price_median = rng.uniform(3.0, 10.0) ** 2 * rng.uniform(30.0, 200.0)
        self.item_ids: list[str] = []
        self.rare_ids: list[str] = []
        # popularity skew so co-occurrence has structure to learn
        self.weights = [
            (rank + 1) ** -0.8 for rank in range(cfg.items_per_topic)
        ]

    def make_title(self, rng: random.Random) -> str:
        n_words = rng.randint(3, 6)
        words = []
        for _ in range(n_words):
            if self.shared_words and rng.random() < 0.15:
                words.append(rng.choice(self.shared_words))
            else:
                words.append(rng.choice(self.words))
        return " ".join(words)

    def make_item(self, item_id: str, cfg: SynthConfig, rng: random.Random) -> Item:
        brand = "" if rng.random() < cfg.brand_missing_rate else rng.choice(self.brands)
        if rng.random() < cfg.price_missing_rate:
            price = None
        else:
            price = round(self.price_median * rng.lognormvariate(0.0, 0.35), 2)
        return Item(id=item_id, title=self.make_title(rng), brand=brand, price=price)

    def sample_item(self, rng: random.Random) -> str:
        return rng.choices(self.item_ids, weights=self.weights, k=1)[0]

    def sample_rare(self, rng: random.Random) -> str:
        return rng.choice(self.rare_ids)


def generate(cfg: SynthConfig) -> SynthResult:
    """Build the corpus, catalog, and ground-truth annotations."""
    rng = random.Random(cfg.seed)
    shared_words = [f"common{k}" for k in range(cfg.shared_title_words)]
    topics = [_Topic(t, cfg, rng, shared_words) for t in range(cfg.n_topics)]

    catalog = Catalog()
    for topic in topics:
        for k in range(cfg.items_per_topic):
            item_id = f"I{topic.index:02d}-{k:04d}"
            topic.item_ids.append(item_id)
            catalog.items[item_id] = topic.make_item(item_id, cfg, rng)
        for k in range(cfg.rare_items_per_topic):
            item_id = f"R{topic.index:02d}-{k:04d}"
            topic.rare_ids.append(item_id)
            catalog.items[item_id] = topic.make_item(item_id, cfg, rng)

    def pick_segment_count() -> int:
        u = rng.random()
        if u < cfg.three_segment_rate:
            return 3
        if u < cfg.multi_segment_rate:
            return 2
        return 1

    def build_session(session_id: str, allow_rare: bool) -> tuple[Session, list[int]]:
        n_segments = pick_segment_count()
        topic_seq: list[_Topic] = []
        for _ in range(n_segments):
            choices = [t for t in topics if not topic_seq or t is not topic_seq[-1]]
            topic_seq.append(rng.choice(choices))
        items: list[str] = []
        segment_of: list[int] = []
        for seg_idx, topic in enumerate(topic_seq):
            seg_len = rng.randint(cfg.min_segment_len, cfg.max_segment_len)
            for pos in range(seg_len):
                if allow_rare and rng.random() < cfg.rare_rate:
                    items.append(topic.sample_rare(rng))
                else:
                    items.append(topic.sample_item(rng))
                segment_of.append(seg_idx)
                # impulse view from a foreign topic, strictly inside a segment
                if 0 < pos < seg_len - 1 and rng.random() < cfg.impulse_rate:
                    foreign = rng.choice([t for t in topics if t is not topic])
                    items.append(foreign.sample_item(rng))
                    segment_of.append(seg_idx)
        labels = [
            int(segment_of[g] != segment_of[g + 1]) for g in range(len(items) - 1)
        ]
        return Session(session_id, tuple(items)), labels

    sessions: list[Session] = []
    annotated: list[AnnotatedSession] = []
    for i in range(cfg.n_unlabeled):
        session, _ = build_session(f"log-{i:06d}", allow_rare=False)
        sessions.append(session)
    for i in range(cfg.n_annotated):
        session, labels = build_session(f"ann-{i:06d}", allow_rare=True)
        sessions.append(session)
        annotated.append(
            AnnotatedSession(
                session=session,
                gap_labels=tuple(labels),
                annotator_id=f"annotator-{1 + i % cfg.n_annotators}",
            )
        )

    n_gaps = sum(a.session.n_gaps for a in annotated)
    n_positive = sum(sum(a.gap_labels) for a in annotated)
    report = {
        "sessions_total": len(sessions),
        "sessions_annotated": len(annotated),
        "catalog_items": len(catalog),
        "annotated_gaps": n_gaps,
        "annotated_positives": n_positive,
        "positive_rate": n_positive / n_gaps if n_gaps else 0.0,
        "sessions_with_boundary": sum(
            1 for a in annotated if any(a.gap_labels)
        ),
    }
    return SynthResult(
        sessions=sessions, catalog=catalog, annotated=annotated, report=report
    )
