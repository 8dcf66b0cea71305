"""Session segmentation toolkit for e-commerce behavior logs.

Detects boundaries in item-browsing sessions by computing similarity
features (behavior embeddings, title/brand text embeddings, price) in a
window around each candidate gap and classifying the gap with supervised
models.  Ships the full workflow: corpus ingestion, embedding training,
feature extraction, model tuning/evaluation, an unsupervised cosine
baseline, SHAP-style explanations, a synthetic benchmark generator, and
an HTTP annotation service.
"""

__version__ = "0.1.0"

from sessionseg.corpus import (
    AnnotatedSession,
    Catalog,
    CorpusStats,
    Item,
    Session,
    corpus_stats,
    load_catalog,
    parse_session_log,
    split_annotated,
)

__all__ = [
    "AnnotatedSession",
    "Catalog",
    "CorpusStats",
    "Item",
    "Session",
    "corpus_stats",
    "load_catalog",
    "parse_session_log",
    "split_annotated",
    "__version__",
]
