import math

import pytest

from fedprior.data import (DatasetSplit, HeadlineRecord, apply_edit, dump_json, load_json,
                           parse_csv, split_stats)
from fedprior.errors import DomainError, ParseError

from conftest import FIXTURE_DIR, write_csv


def test_edit_substitution_example(tmp_path):
    path = write_csv(tmp_path / "train.csv", [
        '1,"Royal wedding: Meghan\'s <dress/> in detail",elbow,01333,2.0',
    ])
    rec = parse_csv(path).records[0]
    assert rec.edited_text == "Royal wedding: Meghan's elbow in detail"
    assert rec.grades == (0, 1, 3, 3, 3)
    assert rec.mean_grade == 2.0


def test_all_zero_grades(tmp_path):
    path = write_csv(tmp_path / "train.csv", ["7,A <b/> c,d,00000,0.0"])
    assert parse_csv(path).records[0].mean_grade == 0.0


def test_quoted_commas(tmp_path):
    path = write_csv(tmp_path / "train.csv", ['3,"Trump, Putin <meet/> again",dance,12,1.5'])
    assert parse_csv(path).records[0].edited_text == "Trump, Putin dance again"


def test_unlabeled_file_gives_empty_grades(tmp_path):
    path = write_csv(tmp_path / "test.csv", ["9,x <y/> z,w"], header="id,original,edit")
    rec = parse_csv(path).records[0]
    assert rec.grades == () and not rec.labeled


@pytest.mark.parametrize("row,fragment", [
    ("1,no marker here,x,000,0.0", "marker"),
    ("1,two <a/> <b/>,x,000,0.0", "marker"),
    ("1,a <b/> c,x,01a33,1.0", "digit"),
    ("1,a <b/> c,x,04,2.0", "0..3"),
    ("1,a <b/> c,x,,3.5", "outside"),
])
def test_malformed_rows_name_the_row(tmp_path, row, fragment):
    path = write_csv(tmp_path / "train.csv", ["5,fine <a/> row,b,111,1.0", row])
    with pytest.raises(ParseError, match=fragment) as info:
        parse_csv(path)
    assert info.value.row == 3


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        parse_csv(tmp_path / "nope.csv")


def test_duplicate_ids(tmp_path):
    path = write_csv(tmp_path / "train.csv", ["1,a <b/> c,d,0,0.0", "1,e <f/> g,h,1,1.0"])
    with pytest.raises(ParseError, match="duplicate"):
        parse_csv(path)


def test_apply_edit_rejects_multiple_markers():
    with pytest.raises(ValueError):
        apply_edit("<a/> and <b/>", "x")


def test_split_stats_two_points():
    recs = tuple(HeadlineRecord(str(i), "<a/>", "x", "x", (), g) for i, g in enumerate([1.0, 3.0]))
    stats = split_stats(DatasetSplit("train", recs))
    assert stats == {"count": 2, "mean_rating": 2.0, "min_rating": 1.0, "max_rating": 3.0}


def test_split_stats_empty():
    with pytest.raises(DomainError):
        split_stats(DatasetSplit("train", ()))


def test_record_invariants(mini_splits):
    for split in mini_splits.values():
        for rec in split.records:
            assert rec.edit_word in rec.edited_text
            assert "<" not in rec.edited_text and "/>" not in rec.edited_text
            assert all(g in (0, 1, 2, 3) for g in rec.grades)
            assert abs(rec.mean_grade - sum(rec.grades) / len(rec.grades)) <= 1e-9
        ids = [r.id for r in split.records]
        assert len(ids) == len(set(ids))


def test_parse_is_deterministic():
    assert parse_csv(FIXTURE_DIR / "train.csv") == parse_csv(FIXTURE_DIR / "train.csv")


def test_json_round_trip(tmp_path, mini_splits):
    for split in mini_splits.values():
        dump_json(split, tmp_path / "cache.json")
        assert load_json(tmp_path / "cache.json") == split


def test_json_round_trip_unlabeled(tmp_path):
    split = DatasetSplit("test", (HeadlineRecord("1", "a <b/>", "c", "a c"),))
    dump_json(split, tmp_path / "c.json")
    back = load_json(tmp_path / "c.json")
    assert back.records[0].id == "1" and math.isnan(back.records[0].mean_grade)
