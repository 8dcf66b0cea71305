import random

import pytest

from sessionseg.corpus import (
    AnnotatedSession,
    CorpusError,
    Item,
    Session,
    corpus_stats,
    load_catalog,
    parse_session_log,
    read_annotations,
    read_session_log,
    read_split_manifest,
    split_annotated,
    write_annotations,
    write_session_log,
    write_split_manifest,
)


class TestParseSessionLog:
    def test_merges_prev_items_and_next_item(self):
        sessions = parse_session_log([{"prev_items": ["A", "B"], "next_item": "C"}])
        assert sessions[0].items == ("A", "B", "C")

    def test_empty_prefix(self):
        sessions = parse_session_log([{"prev_items": [], "next_item": "C"}])
        assert sessions[0].items == ("C",)

    def test_repeats_preserved(self):
        sessions = parse_session_log(
            [{"prev_items": ["A", "A", "B"], "next_item": "A"}]
        )
        assert sessions[0].items == ("A", "A", "B", "A")

    def test_row_order_preserved(self):
        rows = [{"prev_items": [], "next_item": f"i{k}"} for k in range(5)]
        sessions = parse_session_log(rows)
        assert [s.items[0] for s in sessions] == [f"i{k}" for k in range(5)]

    def test_duplicate_session_id_rejected(self):
        rows = [
            {"session_id": "x", "prev_items": [], "next_item": "A"},
            {"session_id": "x", "prev_items": [], "next_item": "B"},
        ]
        with pytest.raises(CorpusError, match="duplicate session_id"):
            parse_session_log(rows)

    def test_malformed_list_reports_row_index(self):
        rows = [
            {"prev_items": [], "next_item": "A"},
            {"prev_items": "not a list", "next_item": "B"},
        ]
        with pytest.raises(CorpusError, match="row 1"):
            parse_session_log(rows)

    def test_missing_next_item(self):
        with pytest.raises(CorpusError, match="next_item"):
            parse_session_log([{"prev_items": ["A"]}])

    def test_list_string_variants(self):
        # the public dataset ships lists as strings, sometimes single-quoted
        # or space-separated inside brackets
        for raw in ('["A", "B"]', "['A', 'B']", "['A' 'B']"):
            sessions = parse_session_log([{"prev_items": raw, "next_item": "C"}])
            assert sessions[0].items == ("A", "B", "C")

    def test_roundtrip_preserves_item_order(self, tmp_path):
        rows = [
            {"session_id": "s1", "prev_items": ["B", "A", "B"], "next_item": "Z"},
            {"session_id": "s2", "prev_items": [], "next_item": "Q"},
        ]
        sessions = parse_session_log(rows)
        path = tmp_path / "log.jsonl"
        write_session_log(path, sessions)
        assert read_session_log(path) == sessions


class TestLoadCatalog:
    def test_basic_row(self):
        catalog = load_catalog(
            [{"id": "A", "title": "pen", "brand": "X", "price": "120"}]
        )
        assert catalog.get("A").price == 120.0

    def test_blank_fields(self):
        catalog = load_catalog([{"id": "B", "title": "ink", "brand": "", "price": ""}])
        item = catalog.get("B")
        assert item.brand == "" and item.price is None
        assert catalog.missing_price_ids == ["B"]

    def test_duplicate_id(self):
        rows = [{"id": "A", "title": "x"}, {"id": "A", "title": "y"}]
        with pytest.raises(CorpusError, match="duplicate id"):
            load_catalog(rows)

    def test_missing_id(self):
        with pytest.raises(CorpusError, match="missing id"):
            load_catalog([{"title": "x"}])

    def test_negative_price(self):
        with pytest.raises(CorpusError, match="negative price"):
            load_catalog([{"id": "A", "title": "x", "price": "-3"}])

    def test_unparsable_price_goes_to_report(self):
        catalog = load_catalog([{"id": "A", "title": "x", "price": "n/a"}])
        assert catalog.get("A").price is None
        assert catalog.missing_price_ids == ["A"]


class TestCorpusStats:
    def test_small_example(self):
        sessions = [
            Session("a", tuple("xyz")),
            Session("b", tuple("pqr")),
            Session("c", tuple("wxyz")),
        ]
        stats = corpus_stats(sessions)
        assert stats.mean_length == pytest.approx(10 / 3)
        assert (stats.min_length, stats.median_length, stats.max_length) == (3, 3, 4)

    def test_singleton(self):
        stats = corpus_stats([Session("a", ("x", "y", "z", "w", "v"))])
        assert stats.mean_length == stats.min_length == stats.max_length == 5
        assert stats.std_length == 0.0

    def test_max_tracks_long_tail(self):
        sessions = [
            Session("a", tuple(f"i{k}" for k in range(3))),
            Session("b", tuple(f"j{k}" for k in range(475))),
        ]
        assert corpus_stats(sessions).max_length == 475

    def test_median_is_lower_middle_for_even_counts(self):
        sessions = [
            Session(str(i), tuple(f"x{i}-{j}" for j in range(n)))
            for i, n in enumerate([2, 3, 5, 9])
        ]
        assert corpus_stats(sessions).median_length == 3

    def test_empty_errors(self):
        with pytest.raises(CorpusError):
            corpus_stats([])

    def test_min_median_max_ordered(self):
        rng = random.Random(3)
        for _ in range(30):
            sessions = [
                Session(str(i), tuple(f"q{i}-{j}" for j in range(rng.randint(1, 12))))
                for i in range(rng.randint(1, 15))
            ]
            stats = corpus_stats(sessions)
            assert stats.min_length <= stats.median_length <= stats.max_length


def _annotated(n: int) -> list[AnnotatedSession]:
    return [
        AnnotatedSession(
            session=Session(f"s{i}", (f"a{i}", f"b{i}")), gap_labels=(i % 2,)
        )
        for i in range(n)
    ]


class TestSplitAnnotated:
    def test_counts_4_to_1(self):
        train, test = split_annotated(_annotated(10), (4, 1), seed=5)
        assert (len(train), len(test)) == (8, 2)
        assert not {a.session.session_id for a in train} & {
            a.session.session_id for a in test
        }

    def test_deterministic(self):
        first = split_annotated(_annotated(30), (4, 1), seed=9)
        second = split_annotated(_annotated(30), (4, 1), seed=9)
        assert [a.session.session_id for a in first[0]] == [
            a.session.session_id for a in second[0]
        ]

    def test_large_corpus_counts(self):
        train, test = split_annotated(_annotated(2400), (4, 1), seed=0)
        assert (len(train), len(test)) == (1920, 480)

    def test_union_and_disjointness_over_seeds(self):
        data = _annotated(23)
        all_ids = {a.session.session_id for a in data}
        for seed in range(20):
            train, test = split_annotated(data, (4, 1), seed=seed)
            train_ids = {a.session.session_id for a in train}
            test_ids = {a.session.session_id for a in test}
            assert train_ids | test_ids == all_ids
            assert not train_ids & test_ids

    def test_too_few_sessions(self):
        with pytest.raises(CorpusError):
            split_annotated(_annotated(1), (4, 1), seed=0)

    def test_bad_ratio(self):
        with pytest.raises(CorpusError):
            split_annotated(_annotated(4), (0, 1), seed=0)

    def test_manifest_roundtrip(self, tmp_path):
        train, test = split_annotated(_annotated(10), (4, 1), seed=1)
        path = tmp_path / "split.json"
        write_split_manifest(path, train, test)
        train_ids, test_ids = read_split_manifest(path)
        assert train_ids == [a.session.session_id for a in train]
        assert test_ids == [a.session.session_id for a in test]


class TestAnnotatedSession:
    def test_label_length_enforced(self):
        with pytest.raises(CorpusError, match="gap labels"):
            AnnotatedSession(
                session=Session("s", ("a", "b", "c")), gap_labels=(0,)
            )

    def test_label_values_enforced(self):
        with pytest.raises(CorpusError, match="0 or 1"):
            AnnotatedSession(session=Session("s", ("a", "b")), gap_labels=(2,))

    def test_annotations_roundtrip(self, tmp_path):
        data = _annotated(4)
        path = tmp_path / "ann.jsonl"
        write_annotations(path, data)
        sessions = {a.session.session_id: a.session for a in data}
        loaded = read_annotations(path, sessions)
        assert [a.gap_labels for a in loaded] == [a.gap_labels for a in data]

    def test_annotation_for_unknown_session(self, tmp_path):
        path = tmp_path / "ann.jsonl"
        write_annotations(path, _annotated(2))
        with pytest.raises(CorpusError, match="unknown session"):
            read_annotations(path, {})


class TestItem:
    def test_empty_id_rejected(self):
        with pytest.raises(CorpusError):
            Item(id="", title="x")

    def test_negative_price_rejected(self):
        with pytest.raises(CorpusError):
            Item(id="a", title="x", price=-1.0)


def test_unknown_items_flagged_against_catalog():
    from sessionseg.corpus import unknown_items

    catalog = load_catalog([{"id": "A", "title": "x"}, {"id": "B", "title": "y"}])
    sessions = [Session("s1", ("A", "B")), Session("s2", ("B", "ghost", "wraith"))]
    assert unknown_items(sessions, catalog) == {"ghost", "wraith"}
