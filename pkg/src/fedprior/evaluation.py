"""Per-client inference with prior rescaling, and macro-averaged metrics."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError
from .labeling import ClientProfile
from .model import ModelParams, predict


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> ConfusionMatrix:
        """The same matrix with the positive class relabeled as negative."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)


def _frac(num: int, den: int) -> float:
    # Zero denominators contribute 0 to the average.
    return num / den if den else 0.0


def confusion(pred, truth) -> ConfusionMatrix:
    pred = np.asarray(pred).astype(bool)
    truth = np.asarray(truth).astype(bool)
    if pred.shape != truth.shape:
        raise DomainError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise DomainError("nothing to compare")
    return ConfusionMatrix(
        tp=int(np.sum(pred & truth)),
        fp=int(np.sum(pred & ~truth)),
        fn=int(np.sum(~pred & truth)),
        tn=int(np.sum(~pred & ~truth)),
    )


def macro_metrics(c: ConfusionMatrix) -> tuple[float, float, float]:
    """Macro precision, recall and F1 over the two classes."""
    tp, fp, fn, tn = c.tp, c.fp, c.fn, c.tn
    p = 0.5 * (_frac(tp, tp + fp) + _frac(tn, tn + fn))
    r = 0.5 * (_frac(tp, tp + fn) + _frac(tn, tn + fp))
    f1 = _frac(tp, 2 * tp + fn + fp) + _frac(tn, 2 * tn + fn + fp)
    return p, r, f1


@dataclass(frozen=True)
class ClientResult:
    client_id: int
    alpha: float
    beta: float
    confusion: ConfusionMatrix
    macro_p: float
    macro_r: float
    macro_f1: float


@dataclass(frozen=True)
class EvalReport:
    per_client: dict[int, ClientResult] = field(default_factory=dict)

    @property
    def overall_p(self) -> float:
        return _mean(r.macro_p for r in self.per_client.values())

    @property
    def overall_r(self) -> float:
        return _mean(r.macro_r for r in self.per_client.values())

    @property
    def overall_f1(self) -> float:
        return _mean(r.macro_f1 for r in self.per_client.values())

    def to_dict(self) -> dict:
        return {
            "per_client": [
                {**asdict(r), "confusion": asdict(r.confusion)}
                for _, r in sorted(self.per_client.items())
            ],
            "overall_p": self.overall_p,
            "overall_r": self.overall_r,
            "overall_f1": self.overall_f1,
        }

    @classmethod
    def from_dict(cls, d: dict) -> EvalReport:
        rows = {}
        for r in d["per_client"]:
            r = dict(r)
            r["confusion"] = ConfusionMatrix(**r["confusion"])
            rows[r["client_id"]] = ClientResult(**r)
        return cls(rows)

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    def save_csv(self, path: str | Path) -> None:
        cols = ["client_id", "alpha", "beta", "tp", "fp", "fn", "tn",
                "macro_p", "macro_r", "macro_f1"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for cid, r in sorted(self.per_client.items()):
                c = r.confusion
                w.writerow([cid, f"{r.alpha:g}", f"{r.beta:g}", c.tp, c.fp, c.fn, c.tn,
                            _pct(r.macro_p), _pct(r.macro_r), _pct(r.macro_f1)])
            w.writerow(["overall", "", "", "", "", "", "",
                        _pct(self.overall_p), _pct(self.overall_r), _pct(self.overall_f1)])


def _mean(values) -> float:
    values = list(values)
    if not values:
        raise DomainError("empty report")
    return float(np.mean(values))


def _pct(x: float) -> str:
    return f"{100 * x:.2f}"


def predict_client(global_params: ModelParams, profile: ClientProfile, x: np.ndarray,
                   rescale: bool = True) -> np.ndarray:
    """Labels for ``x`` as seen by one client (rescaled with its own priors)."""
    if len(x) == 0:
        raise DomainError("empty test set")
    if rescale:
        return predict(global_params, x, profile.priors, profile.beta)
    return predict(global_params, x)


def evaluate_client(params: ModelParams, profile: ClientProfile, x: np.ndarray,
                    truth: np.ndarray, rescale: bool = True) -> ClientResult:
    c = confusion(predict_client(params, profile, x, rescale), truth)
    p, r, f1 = macro_metrics(c)
    return ClientResult(profile.client_id, profile.alpha, profile.beta, c, p, r, f1)


def evaluate_population(params, population: list[ClientProfile], x: np.ndarray,
                        truths: dict[int, np.ndarray], rescale: bool = True) -> EvalReport:
    """Evaluate every client against its own labels of the same test texts.

    ``params`` is either one shared :class:`ModelParams` or a mapping from
    client id to that client's own model.
    """
    if not population:
        raise DomainError("empty population")
    results = {}
    for prof in population:
        p = params[prof.client_id] if isinstance(params, dict) else params
        results[prof.client_id] = evaluate_client(p, prof, x, truths[prof.client_id], rescale)
    return EvalReport(results)
