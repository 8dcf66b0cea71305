import math

import numpy as np
import pytest

from sessionseg.corpus import Session
from sessionseg.features import (
    FeatureConfig,
    FeatureError,
    build_dataset,
    build_feature_vector,
    cosine,
    feature_label,
    feature_labels,
    load_dataset,
    n_features,
    pair_index,
    price_similarity,
    save_dataset,
    window_items,
)


class TestWindow:
    def test_left_edge_padding(self):
        session = Session("s", ("u1", "u2", "u3", "u4"))
        assert window_items(session, 0, 2) == ["u1", "u1", "u2", "u3"]

    def test_no_padding_needed(self):
        assert window_items(Session("s", ("u1", "u2")), 0, 1) == ["u1", "u2"]

    def test_both_sides_padded(self):
        session = Session("s", ("u1", "u2"))
        assert window_items(session, 0, 3) == ["u1"] * 3 + ["u2"] * 3

    def test_right_edge_padding(self):
        session = Session("s", ("u1", "u2", "u3"))
        assert window_items(session, 1, 2) == ["u1", "u2", "u3", "u3"]

    def test_single_item_session_rejected(self):
        with pytest.raises(FeatureError, match="no gaps"):
            window_items(Session("s", ("u1",)), 0, 1)

    def test_gap_out_of_range(self):
        with pytest.raises(FeatureError, match="out of range"):
            window_items(Session("s", ("u1", "u2")), 1, 1)


class TestCosine:
    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_colinear_exactly_one(self):
        assert cosine(np.array([1.0, 2.0]), np.array([2.0, 4.0])) == 1.0

    def test_antipodal_exactly_minus_one(self):
        assert cosine(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == -1.0

    def test_zero_norm_gives_zero(self):
        assert cosine(np.zeros(4), np.ones(4)) == 0.0

    def test_dim_mismatch(self):
        with pytest.raises(FeatureError):
            cosine(np.ones(3), np.ones(4))

    def test_always_in_unit_interval(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            u = rng.normal(size=5) * 10.0 ** float(rng.integers(-3, 4))
            v = rng.normal(size=5) * 10.0 ** float(rng.integers(-3, 4))
            assert -1.0 <= cosine(u, v) <= 1.0

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            u, v = rng.normal(size=(2, 6))
            assert cosine(u, v) == cosine(v, u)


class TestPriceSimilarity:
    def test_equal_prices(self):
        assert price_similarity(500.0, 500.0) == 1.0

    def test_zero_zero(self):
        assert price_similarity(0.0, 0.0) == 1.0

    def test_hundred_two_hundred(self):
        assert price_similarity(100.0, 200.0) == pytest.approx(
            math.exp(-100.0 / 101.0), abs=1e-12
        )

    def test_negative_rejected(self):
        with pytest.raises(FeatureError):
            price_similarity(-1.0, 5.0)

    def test_identity_for_all_prices(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            p = float(rng.uniform(0.0, 1e5))
            assert price_similarity(p, p) == 1.0

    def test_strictly_decreasing_in_gap_for_fixed_min(self):
        base = 50.0
        values = [price_similarity(base, base + delta) for delta in (0, 1, 5, 20, 100)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_symmetric(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a, b = rng.uniform(0, 1000, size=2)
            assert price_similarity(a, b) == price_similarity(b, a)

    def test_bounded(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            a, b = rng.uniform(0, 1e6, size=2)
            assert 0.0 < price_similarity(a, b) <= 1.0


class TestPairIndex:
    def test_counts(self):
        for w in (1, 2, 3, 4):
            assert len(pair_index(w)) == math.comb(2 * w, 2)

    def test_lexicographic(self):
        pairs = pair_index(2)
        assert pairs == sorted(pairs)
        assert pairs[0] == (0, 1)


class TestFeatureVector:
    def _build(self, session, gap, w, tiny_table, tiny_catalog,
               title_provider, brand_provider, price_mode="smooth"):
        return build_feature_vector(
            session, gap, FeatureConfig(w=w, price_mode=price_mode),
            tiny_table, title_provider, brand_provider, tiny_catalog,
        )

    def test_lengths_for_all_w(
        self, tiny_table, tiny_catalog, title_provider, brand_provider
    ):
        session = Session("s", ("u1", "u2", "u3", "u4"))
        expected = {1: 4, 2: 24, 3: 60, 4: 112}
        for w, length in expected.items():
            vec = self._build(
                session, 0, w, tiny_table, tiny_catalog, title_provider, brand_provider
            )
            assert vec.shape == (length,)
            assert n_features(w) == length

    def test_fully_padded_edge_gap_has_full_length(
        self, tiny_table, tiny_catalog, title_provider, brand_provider
    ):
        session = Session("s", ("u1", "u2"))
        vec = self._build(
            session, 0, 4, tiny_table, tiny_catalog, title_provider, brand_provider
        )
        assert vec.shape == (112,)
        assert np.all(np.isfinite(vec))

    def test_oov_behavior_slot_is_zero_others_computed(
        self, tiny_table, tiny_catalog, title_provider, brand_provider
    ):
        # u5 has no behavior embedding but full catalog attributes
        session = Session("s", ("u1", "u5"))
        vec = self._build(
            session, 0, 1, tiny_table, tiny_catalog, title_provider, brand_provider
        )
        assert vec[0] == 0.0  # behavior
        assert vec[2] != 0.0  # title
        assert vec[3] == pytest.approx(price_similarity(100.0, 80.0))

    def test_absent_price_slot_is_zero(
        self, tiny_table, tiny_catalog, title_provider, brand_provider
    ):
        session = Session("s", ("u1", "u4"))  # u4 has no price
        vec = self._build(
            session, 0, 1, tiny_table, tiny_catalog, title_provider, brand_provider
        )
        assert vec[3] == 0.0

    def test_padded_self_pairs_score_one(
        self, tiny_table, tiny_catalog, title_provider, brand_provider
    ):
        # gap 0 with w=2 duplicates u1: pair (L_2, L_1) is (u1, u1)
        session = Session("s", ("u1", "u2", "u3", "u4"))
        vec = self._build(
            session, 0, 2, tiny_table, tiny_catalog, title_provider, brand_provider
        )
        assert vec[0] == 1.0  # behavior cosine of identical vectors
        assert vec[3] == 1.0  # price similarity of equal prices

    def test_unresolvable_item_names_id(
        self, tiny_table, tiny_catalog, title_provider, brand_provider
    ):
        session = Session("s", ("u1", "ghost"))
        with pytest.raises(FeatureError, match="ghost"):
            self._build(
                session, 0, 1, tiny_table, tiny_catalog, title_provider, brand_provider
            )

    def test_pure_function(
        self, tiny_table, tiny_catalog, title_provider, brand_provider
    ):
        session = Session("s", ("u1", "u2", "u3", "u4"))
        a = self._build(
            session, 1, 2, tiny_table, tiny_catalog, title_provider, brand_provider
        )
        b = self._build(
            session, 1, 2, tiny_table, tiny_catalog, title_provider, brand_provider
        )
        np.testing.assert_array_equal(a, b)

    def test_next_item_price_mode_differs(
        self, tiny_table, tiny_catalog, title_provider, brand_provider
    ):
        session = Session("s", ("u1", "u2", "u3"))
        smooth = self._build(
            session, 0, 1, tiny_table, tiny_catalog, title_provider, brand_provider
        )
        alt = self._build(
            session, 0, 1, tiny_table, tiny_catalog, title_provider, brand_provider,
            price_mode="next_item",
        )
        assert smooth[3] != alt[3]


class TestLabels:
    def test_first_feature_label_w4(self):
        assert feature_label(0, 4) == "(L_4,L_3):behavior"

    def test_adjacent_title_label_exists(self):
        assert "(L_1,R_1):title" in feature_labels(4)

    def test_labels_bijective(self):
        for w in (1, 2, 3, 4):
            labels = feature_labels(w)
            assert len(labels) == n_features(w)
            assert len(set(labels)) == len(labels)

    def test_w1_labels(self):
        assert feature_labels(1) == [
            "(L_1,R_1):behavior",
            "(L_1,R_1):brand",
            "(L_1,R_1):title",
            "(L_1,R_1):price",
        ]


class TestDataset:
    def test_row_counts_and_labels(
        self, annotated_pair, tiny_table, tiny_catalog, title_provider, brand_provider
    ):
        X, y, groups, keys = build_dataset(
            annotated_pair, FeatureConfig(w=2), tiny_table,
            title_provider, brand_provider, tiny_catalog,
        )
        assert X.shape == (5, 24)
        assert y.tolist() == [0, 1, 0, 1, 0]
        assert groups == ["s1", "s1", "s1", "s2", "s2"]
        assert keys[0] == ("s1", 0)

    def test_deterministic_row_order(
        self, annotated_pair, tiny_table, tiny_catalog, title_provider, brand_provider
    ):
        args = (
            annotated_pair, FeatureConfig(w=2), tiny_table,
            title_provider, brand_provider, tiny_catalog,
        )
        X1, _, _, keys1 = build_dataset(*args)
        X2, _, _, keys2 = build_dataset(*args)
        np.testing.assert_array_equal(X1, X2)
        assert keys1 == keys2

    def test_error_carries_session_and_gap(
        self, tiny_table, tiny_catalog, title_provider, brand_provider
    ):
        from sessionseg.corpus import AnnotatedSession

        bad = AnnotatedSession(
            session=Session("sX", ("u1", "ghost")), gap_labels=(0,)
        )
        with pytest.raises(FeatureError, match="session sX gap 0"):
            build_dataset(
                [bad], FeatureConfig(w=1), tiny_table,
                title_provider, brand_provider, tiny_catalog,
            )

    def test_file_roundtrip(
        self, tmp_path, annotated_pair, tiny_table, tiny_catalog,
        title_provider, brand_provider,
    ):
        X, y, groups, keys = build_dataset(
            annotated_pair, FeatureConfig(w=2), tiny_table,
            title_provider, brand_provider, tiny_catalog,
        )
        path = tmp_path / "features.tsv"
        save_dataset(path, X, y, keys, w=2)
        X2, y2, groups2, keys2, meta = load_dataset(path)
        np.testing.assert_array_equal(X, X2)
        np.testing.assert_array_equal(y, y2)
        assert groups2 == groups and keys2 == keys
        assert meta["w"] == 2 and meta["d"] == 6

    def test_truncated_file_rejected(
        self, tmp_path, annotated_pair, tiny_table, tiny_catalog,
        title_provider, brand_provider,
    ):
        X, y, _, keys = build_dataset(
            annotated_pair, FeatureConfig(w=1), tiny_table,
            title_provider, brand_provider, tiny_catalog,
        )
        path = tmp_path / "features.tsv"
        save_dataset(path, X, y, keys, w=1)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(FeatureError, match="truncated"):
            load_dataset(path)
