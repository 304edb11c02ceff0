"""Deterministic synthetic stand-in for the edited-headline dataset.

Headlines are strings of pseudo-words with one marked span replaced by an
"edit" word. Each edit word carries a latent funniness; five simulated
annotators grade the headline around that value on the 0..3 scale. The output
uses the same CSV schema as the public release so every loader path is shared.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .data import DatasetSplit, parse_csv

OFFICIAL_SIZES = {"train": 9652, "validation": 2419, "test": 3024}
FILE_NAMES = {"train": "train.csv", "validation": "dev.csv", "test": "test.csv"}

_ONSETS = ["b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t",
           "v", "w", "z", "br", "ch", "cl", "dr", "fl", "gr", "pl", "sh", "st", "tr"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ee", "oo", "ou"]
_CODAS = ["", "n", "r", "t", "s", "l", "m", "ck", "nd", "st"]


def _words(rng: np.random.Generator, n: int, prefix: str = "") -> list[str]:
    out, seen = [], set()
    while len(out) < n:
        syll = rng.integers(1, 4)
        w = prefix + "".join(
            _ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))]
            + _CODAS[rng.integers(len(_CODAS))] for _ in range(syll))
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


def generate_rows(sizes: dict[str, int], seed: int = 0, n_context: int = 3000,
                  n_edit: int = 400, noise: float = 0.75) -> dict[str, list[dict]]:
    rng = np.random.default_rng(seed)
    context = _words(rng, n_context)
    edits = _words(rng, n_edit, prefix="x")
    # Zipf-ish context frequencies, skewed latent funniness for edit words.
    ctx_p = 1.0 / np.arange(1, n_context + 1) ** 0.9
    ctx_p /= ctx_p.sum()
    funniness = np.clip(rng.gamma(2.2, 0.40, size=n_edit), 0.0, 3.0)

    rows: dict[str, list[dict]] = {}
    next_id = 1
    for split, n in sizes.items():
        rows[split] = []
        for _ in range(n):
            length = int(rng.integers(6, 13))
            toks = [context[i] for i in rng.choice(n_context, size=length, p=ctx_p)]
            pos = int(rng.integers(length))
            e = int(rng.integers(n_edit))
            latent = funniness[e]
            grades = np.clip(np.rint(latent + rng.normal(0.0, noise, size=5)), 0, 3).astype(int)
            marked = list(toks)
            marked[pos] = f"<{toks[pos]}/>"
            rows[split].append({
                "id": str(next_id),
                "original": " ".join(marked).capitalize(),
                "edit": edits[e],
                "grades": "".join(str(g) for g in grades),
                "meanGrade": f"{grades.mean():.1f}",
            })
            next_id += 1
    return rows


def write_dataset(out_dir: str | Path, sizes: dict[str, int] | None = None,
                  seed: int = 0) -> dict[str, Path]:
    """Write train/dev/test CSVs in the public schema; returns the file paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sizes = sizes or OFFICIAL_SIZES
    paths = {}
    for split, rows in generate_rows(sizes, seed).items():
        path = out_dir / FILE_NAMES[split]
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=["id", "original", "edit", "grades", "meanGrade"],
                               lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        paths[split] = path
    return paths


def synthetic_splits(out_dir: str | Path, sizes: dict[str, int] | None = None,
                     seed: int = 0) -> dict[str, DatasetSplit]:
    paths = write_dataset(out_dir, sizes, seed)
    return {name: parse_csv(p, name) for name, p in paths.items()}
