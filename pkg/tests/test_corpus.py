import random

import pytest
from hypothesis import given, strategies as st

from wsi.corpus import (
    Judgment,
    LoadError,
    MonthKey,
    group_by_month,
    load_survey,
    load_surveys,
    load_wages,
    month_range,
    write_survey,
    write_wages,
    yoy,
    WageSeries,
)

from conftest import make_record


months = st.builds(MonthKey, st.integers(1900, 2100), st.integers(1, 12))


class TestMonthKey:
    def test_parse_compact_and_dashed(self):
        assert MonthKey.parse("200001") == MonthKey(2000, 1)
        assert MonthKey.parse("2000-01") == MonthKey(2000, 1)
        assert MonthKey.parse(" 2024-12 ") == MonthKey(2024, 12)

    @pytest.mark.parametrize("bad", ["2000-13", "200013", "2000", "abc", "2000-0", ""])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValueError):
            MonthKey.parse(bad)

    def test_ordering_is_lexicographic(self):
        assert MonthKey(2019, 12) < MonthKey(2020, 1) < MonthKey(2020, 2)

    def test_minus_crosses_year_boundary(self):
        assert MonthKey(2020, 1).minus(1) == MonthKey(2019, 12)
        assert MonthKey(2020, 3).minus(12) == MonthKey(2019, 3)
        assert MonthKey(2020, 1).minus(25) == MonthKey(2017, 12)

    @given(months, st.integers(0, 500))
    def test_plus_minus_roundtrip(self, month, k):
        assert month.plus(k).minus(k) == month

    @given(months, st.integers(1, 500))
    def test_minus_moves_strictly_back(self, month, k):
        assert month.minus(k) < month

    def test_str_is_canonical(self):
        assert str(MonthKey(2020, 3)) == "202003"

    def test_month_range(self):
        span = month_range(MonthKey(2019, 11), MonthKey(2020, 2))
        assert [str(m) for m in span] == ["201911", "201912", "202001", "202002"]


def _write_csv(path, rows, header="yyyymm,region,industry,judgment,comment"):
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")


class TestLoadSurvey:
    def test_three_well_formed_rows(self, tmp_path):
        path = tmp_path / "a.csv"
        _write_csv(path, [
            "202002,Kanto,retail,Good,sales rose",
            "202001,Tokai,food service,Bad,bonus was cut",
            "202001,Kansai,transport,Unchanged,no change in pay",
        ])
        load = load_survey(path)
        assert len(load.records) == 3
        assert not load.errors and load.skipped_empty == 0
        assert [str(r.month) for r in load.records] == ["202001", "202001", "202002"]
        # input order preserved within the month
        assert load.records[0].region == "Tokai"

    def test_invalid_month_rejects_row_only(self, tmp_path):
        path = tmp_path / "a.csv"
        _write_csv(path, [
            "202001,Kanto,retail,Good,fine",
            "2000-13,Kanto,retail,Good,bad month",
            "202002,Kanto,retail,Good,also fine",
        ])
        load = load_survey(path)
        assert len(load.records) == 2
        assert len(load.errors) == 1
        assert load.errors[0].reason == "invalid month"
        assert load.errors[0].line == 3

    def test_unknown_judgment_rejects_row(self, tmp_path):
        path = tmp_path / "a.csv"
        _write_csv(path, ["202001,Kanto,retail,Stellar,fine"])
        load = load_survey(path)
        assert not load.records
        assert load.errors[0].reason == "unknown judgment"

    def test_judgment_label_variants(self, tmp_path):
        path = tmp_path / "a.csv"
        _write_csv(path, [
            "202001,Kanto,retail,slightly_bad,a",
            "202001,Kanto,retail,SLIGHTLY BAD,b",
            "202001,Kanto,retail,yaya warui,c",
        ])
        load = load_survey(path)
        assert [r.judgment for r in load.records] == [Judgment.SLIGHTLY_BAD] * 3

    def test_empty_comment_skipped_with_count(self, tmp_path):
        path = tmp_path / "a.csv"
        _write_csv(path, [
            "202001,Kanto,retail,Good,   ",
            "202001,Kanto,retail,Good,real comment",
        ])
        load = load_survey(path)
        assert len(load.records) == 1
        assert load.skipped_empty == 1

    def test_missing_file_is_hard_error(self, tmp_path):
        with pytest.raises(LoadError):
            load_survey(tmp_path / "nope.csv")

    def test_missing_column_is_hard_error(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("yyyymm,region\n202001,Kanto\n")
        with pytest.raises(LoadError):
            load_survey(path)

    def test_concatenated_files_match_line_count_oracle(self, tmp_path):
        rng = random.Random(42)
        paths = []
        expected = 0
        for i in range(25):
            rows = []
            for j in range(rng.randint(1, 40)):
                rows.append(f"20{10 + i // 12:02d}{i % 12 + 1:02d},R{j % 3},ind,Good,comment {i} {j}")
            path = tmp_path / f"f{i:03d}.csv"
            _write_csv(path, rows)
            # oracle: raw line count minus the header line
            expected += len(path.read_text().strip().splitlines()) - 1
            paths.append(path)
        load = load_surveys(paths)
        assert len(load.records) == expected

    def test_round_trip(self, tmp_path):
        records = [
            make_record(MonthKey(2020, 1), "pay went up, happily", translated="PAY WENT UP"),
            make_record(MonthKey(2020, 2), 'she said "bonus"', judgment=Judgment.GOOD),
        ]
        path = tmp_path / "out.csv"
        write_survey(records, path)
        reloaded = load_survey(path)
        assert reloaded.records == records


class TestWages:
    def test_yoy_trivials(self, tmp_path):
        rows = ["yyyymm,level"]
        start = MonthKey(2019, 1)
        for i in range(13):
            level = 100.0 if i < 12 else 102.0
            rows.append(f"{start.plus(i)},{level}")
        path = tmp_path / "w.csv"
        path.write_text("\n".join(rows) + "\n")
        series = load_wages(path)
        assert series.yoy(MonthKey(2020, 1)) == pytest.approx(2.0)
        assert series.yoy(MonthKey(2019, 12)) is None
        assert yoy(series, MonthKey(2020, 1)) == pytest.approx(2.0)

    def test_flat_series_has_zero_growth(self):
        levels = {MonthKey(2019, 1).plus(i): 100.0 for i in range(13)}
        assert WageSeries(levels).yoy(MonthKey(2020, 1)) == 0.0

    def test_short_series_has_empty_yoy(self):
        levels = {MonthKey(2020, 1).plus(i): 100.0 + i for i in range(12)}
        assert WageSeries(levels).yoy_map == {}

    def test_gap_is_hard_error_naming_month(self):
        levels = {MonthKey(2020, 1): 100.0, MonthKey(2020, 3): 101.0}
        with pytest.raises(LoadError, match="202002"):
            WageSeries(levels)

    def test_non_positive_level_is_hard_error(self):
        with pytest.raises(LoadError, match="non-positive"):
            WageSeries({MonthKey(2020, 1): 0.0})

    def test_duplicate_month_rejected(self, tmp_path):
        path = tmp_path / "w.csv"
        path.write_text("yyyymm,level\n202001,100\n202001,101\n")
        with pytest.raises(LoadError, match="duplicate"):
            load_wages(path)

    def test_yoy_matches_brute_force_recompute(self):
        rng = random.Random(7)
        start = MonthKey(2000, 1)
        levels = {start.plus(i): 80.0 + 40.0 * rng.random() for i in range(60)}
        series = WageSeries(levels)
        # independent spreadsheet-style recomputation
        for i in range(12, 60):
            t = start.plus(i)
            expected = (levels[t] / levels[t.minus(12)] - 1.0) * 100.0
            assert series.yoy(t) == pytest.approx(expected, abs=1e-12)
        assert len(series.yoy_map) == 48

    @given(st.floats(0.01, 1000.0))
    def test_yoy_invariant_under_uniform_scaling(self, c):
        rng = random.Random(3)
        start = MonthKey(2000, 1)
        levels = {start.plus(i): 90.0 + 20.0 * rng.random() for i in range(26)}
        base = WageSeries(levels)
        scaled = WageSeries({m: v * c for m, v in levels.items()})
        for m, g in base.yoy_map.items():
            assert scaled.yoy(m) == pytest.approx(g, abs=1e-12)

    def test_write_wages_round_trip(self, tmp_path):
        levels = {MonthKey(2020, 1).plus(i): 100.0 + 0.37 * i for i in range(15)}
        path = tmp_path / "w.csv"
        write_wages(levels, path)
        assert load_wages(path).levels == pytest.approx(levels)


class TestGroupByMonth:
    def test_empty(self):
        assert group_by_month([]) == {}

    def test_two_months_partition(self):
        records = [
            make_record(MonthKey(2020, 1), "a"),
            make_record(MonthKey(2020, 2), "b"),
            make_record(MonthKey(2020, 1), "c"),
        ]
        groups = group_by_month(records)
        assert [str(m) for m in groups] == ["202001", "202002"]
        assert sum(len(v) for v in groups.values()) == len(records)
        assert [r.comment for r in groups[MonthKey(2020, 1)]] == ["a", "c"]

    def test_shuffled_input_same_group_membership(self):
        rng = random.Random(5)
        records = [
            make_record(MonthKey(2020, 1 + i % 4), f"comment {i}") for i in range(40)
        ]
        shuffled = records[:]
        rng.shuffle(shuffled)
        a = group_by_month(records)
        b = group_by_month(shuffled)
        assert set(a) == set(b)
        for month in a:
            assert sorted(r.comment for r in a[month]) == sorted(r.comment for r in b[month])
