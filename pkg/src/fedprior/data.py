"""Loading the edited-headline funniness dataset (SemEval-2020 Task 7, sub-task 1).

Each CSV row holds an ``original`` headline with one ``<word/>`` marker, the
replacement ``edit`` word, the raw annotator grades as a digit string and
their mean.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import DomainError, ParseError

SPLIT_NAMES = ("train", "validation", "test")
REQUIRED_COLUMNS = ("id", "original", "edit")

_MARKER = re.compile(r"<([^<>]*)/>")


@dataclass(frozen=True)
class HeadlineRecord:
    id: str
    original: str
    edit_word: str
    edited_text: str
    grades: tuple[int, ...] = ()
    mean_grade: float = float("nan")

    @property
    def labeled(self) -> bool:
        return not math.isnan(self.mean_grade)


@dataclass(frozen=True)
class DatasetSplit:
    name: str
    records: tuple[HeadlineRecord, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def texts(self) -> list[str]:
        return [r.edited_text for r in self.records]

    @property
    def mean_grades(self) -> list[float]:
        return [r.mean_grade for r in self.records]

    def subset(self, indices) -> DatasetSplit:
        return DatasetSplit(self.name, tuple(self.records[i] for i in indices))


def apply_edit(original: str, edit: str) -> str:
    """Replace the single ``<word/>`` span in ``original`` with ``edit``."""
    spans = _MARKER.findall(original)
    if len(spans) != 1:
        raise ValueError(f"expected exactly one <…/> marker, found {len(spans)}")
    return _MARKER.sub(lambda _m: edit, original)


def parse_grades(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text.isdigit() or not text.isascii():
        raise ValueError(f"grades must be a digit string, got {text!r}")
    grades = tuple(int(c) for c in text)
    if any(g > 3 for g in grades):
        raise ValueError(f"grade outside 0..3 in {text!r}")
    return grades


def _parse_row(row: dict, rownum: int) -> HeadlineRecord:
    try:
        edited = apply_edit(row["original"], row["edit"])
    except ValueError as exc:
        raise ParseError(rownum, str(exc)) from None
    if "<" in edited or "/>" in edited:
        raise ParseError(rownum, "edit word contains marker characters")

    grades: tuple[int, ...] = ()
    raw_grades = (row.get("grades") or "").strip()
    if raw_grades:
        try:
            grades = parse_grades(raw_grades)
        except ValueError as exc:
            raise ParseError(rownum, str(exc)) from None

    raw_mean = (row.get("meanGrade") or "").strip()
    if raw_mean:
        try:
            mean = float(raw_mean)
        except ValueError:
            raise ParseError(rownum, f"meanGrade not a number: {raw_mean!r}") from None
        if not 0.0 <= mean <= 3.0:
            raise ParseError(rownum, f"meanGrade {mean} outside [0, 3]")
    elif grades:
        mean = sum(grades) / len(grades)
    else:
        mean = float("nan")

    # The published meanGrade is rounded to one decimal; recompute from grades.
    if grades:
        exact = math.fsum(grades) / len(grades)
        if abs(exact - mean) > 0.05 + 1e-9:
            raise ParseError(rownum, f"meanGrade {mean} disagrees with grades {raw_grades}")
        mean = exact

    return HeadlineRecord(
        id=row["id"].strip(),
        original=row["original"],
        edit_word=row["edit"],
        edited_text=edited,
        grades=grades,
        mean_grade=mean,
    )


def parse_csv(path: str | Path, name: str | None = None) -> DatasetSplit:
    """Parse one split file. ``name`` defaults to a guess from the file name."""
    path = Path(path)
    if name is None:
        name = guess_split_name(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in REQUIRED_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise ParseError(1, f"missing columns {missing}")
        records = []
        seen = set()
        # row 1 is the header
        for rownum, row in enumerate(reader, start=2):
            rec = _parse_row(row, rownum)
            if rec.id in seen:
                raise ParseError(rownum, f"duplicate id {rec.id!r}")
            seen.add(rec.id)
            records.append(rec)
    return DatasetSplit(name, tuple(records))


def guess_split_name(path: Path) -> str:
    stem = path.stem.lower()
    if "dev" in stem or "val" in stem:
        return "validation"
    if "test" in stem:
        return "test"
    return "train"


def split_stats(split: DatasetSplit) -> dict:
    if not split.records:
        raise DomainError(f"split {split.name!r} is empty")
    grades = [r.mean_grade for r in split.records]
    return {
        "count": len(grades),
        "mean_rating": math.fsum(grades) / len(grades),
        "min_rating": min(grades),
        "max_rating": max(grades),
    }


def dump_json(split: DatasetSplit, path: str | Path) -> None:
    """Write the canonical JSON cache: an object with the split name and record list."""
    payload = {
        "name": split.name,
        "records": [
            {**asdict(r), "grades": list(r.grades),
             "mean_grade": None if math.isnan(r.mean_grade) else r.mean_grade}
            for r in split.records
        ],
    }
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=1), encoding="utf-8")


def load_json(path: str | Path) -> DatasetSplit:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    records = tuple(
        HeadlineRecord(
            id=r["id"],
            original=r["original"],
            edit_word=r["edit_word"],
            edited_text=r["edited_text"],
            grades=tuple(r["grades"]),
            mean_grade=float("nan") if r["mean_grade"] is None else r["mean_grade"],
        )
        for r in payload["records"]
    )
    return DatasetSplit(payload["name"], records)


_FILE_CANDIDATES = {
    "train": ("train.csv",),
    "validation": ("dev.csv", "validation.csv", "val.csv"),
    "test": ("test.csv", "test_with_labels.csv"),
}


def load_splits(data_dir: str | Path) -> dict[str, DatasetSplit]:
    """Load train/validation/test from a directory holding the three CSV files."""
    data_dir = Path(data_dir)
    splits = {}
    for name, candidates in _FILE_CANDIDATES.items():
        for fname in candidates:
            if (data_dir / fname).exists():
                splits[name] = parse_csv(data_dir / fname, name)
                break
        else:
            raise FileNotFoundError(f"no {name} file in {data_dir} (tried {', '.join(candidates)})")
    return splits
