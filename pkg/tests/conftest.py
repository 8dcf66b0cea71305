import numpy as np
import pytest

from sessionseg.behavior import EmbeddingTable
from sessionseg.corpus import AnnotatedSession, Catalog, Item, Session
from sessionseg.textembed import HashedNgramProvider


@pytest.fixture
def tiny_catalog() -> Catalog:
    catalog = Catalog()
    prices = {"u1": 100.0, "u2": 200.0, "u3": 150.0, "u4": None, "u5": 80.0}
    for i, (item_id, price) in enumerate(prices.items()):
        catalog.items[item_id] = Item(
            id=item_id,
            title=f"thing number {i} deluxe",
            brand="" if item_id == "u3" else f"maker{i % 2}",
            price=price,
        )
    return catalog


@pytest.fixture
def tiny_table() -> EmbeddingTable:
    rng = np.random.default_rng(7)
    vectors = {f"u{i}": rng.normal(size=8) for i in range(1, 5)}
    # u5 deliberately missing: out-of-vocabulary
    return EmbeddingTable(dim=8, vectors=vectors)


@pytest.fixture
def title_provider() -> HashedNgramProvider:
    return HashedNgramProvider(dim=32, seed=0)


@pytest.fixture
def brand_provider() -> HashedNgramProvider:
    return HashedNgramProvider(dim=32, seed=1)


@pytest.fixture
def annotated_pair() -> list[AnnotatedSession]:
    return [
        AnnotatedSession(
            session=Session("s1", ("u1", "u2", "u3", "u4")),
            gap_labels=(0, 1, 0),
            annotator_id="a1",
        ),
        AnnotatedSession(
            session=Session("s2", ("u2", "u5", "u1")),
            gap_labels=(1, 0),
            annotator_id="a2",
        ),
    ]
