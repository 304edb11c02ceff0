"""The three experiment drivers: alpha/beta sweep, AGG/INDV/FED comparison, baseline."""

from __future__ import annotations

import csv
import json
import logging
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import synth
from .data import DatasetSplit, load_splits
from .errors import DomainError
from .evaluation import EvalReport, evaluate_population
from .features import featurize_all
from .federation import (Client, FederationConfig, init_params, rng_for, run_federation,
                         sgd_epochs)
from .labeling import ClientProfile, group_spec, make_population, relabel
from .model import ModelParams, loss_and_grad

log = logging.getLogger(__name__)

_SUBSAMPLE, _AGG_SHUFFLE = 10, 11

GROUP_TITLES = {"group1": "Group 1", "group2": "Group 2"}


@dataclass
class ExperimentSpec:
    kind: str = "strategies"
    data_dir: str | None = None
    synthetic: bool = False
    synthetic_seed: int = 0
    out_dir: str = "results"
    subsample_fraction: float = 1.0
    hash_seed: int = 0
    groups: dict[str, list] = field(default_factory=lambda: {
        "group1": group_spec("group1"), "group2": group_spec("group2")})
    strategies: list[str] = field(default_factory=lambda: ["AGG", "INDV", "FED"])
    alphas: list[float] = field(
        default_factory=lambda: [round(0.2 + 0.1 * i, 1) for i in range(19)])
    betas: list[float] = field(default_factory=lambda: [round(0.1 * i, 1) for i in range(21)])
    baseline_alpha: float = 1.0
    baseline_group: str = "group2"
    federation: FederationConfig = field(default_factory=FederationConfig)

    def __post_init__(self):
        if self.kind not in ("sweep", "strategies", "baseline", "eval"):
            raise DomainError(f"unknown experiment kind {self.kind!r}")
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise DomainError("subsample_fraction must lie in (0, 1]")
        if isinstance(self.federation, dict):
            self.federation = FederationConfig(**self.federation)
        if self.kind == "sweep" and (not self.alphas or not self.betas):
            raise DomainError("sweep needs non-empty alpha and beta grids")
        if self.kind == "strategies" and not self.groups:
            raise DomainError("strategies needs at least one group")

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> ExperimentSpec:
        raw = json.loads(Path(path).read_text())
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**raw)

    def to_dict(self) -> dict:
        return {**asdict(self), "federation": asdict(self.federation)}


@dataclass
class Corpus:
    """Dataset splits and their feature matrices, computed once per run."""

    splits: dict[str, DatasetSplit]
    features: dict[str, np.ndarray]


def load_corpus(spec: ExperimentSpec) -> Corpus:
    if spec.synthetic:
        with tempfile.TemporaryDirectory() as tmp:
            splits = synth.synthetic_splits(tmp, seed=spec.synthetic_seed)
    elif spec.data_dir:
        splits = load_splits(spec.data_dir)
    else:
        raise DomainError("no dataset: set data_dir or synthetic")
    for name, split in splits.items():
        if any(not r.labeled for r in split.records):
            raise DomainError(f"split {name!r} has records without grades")
    splits = subsample(splits, spec.subsample_fraction, spec.hash_seed)
    dim = spec.federation.feature_dim
    features = {name: featurize_all(s.texts, spec.hash_seed, dim) for name, s in splits.items()}
    return Corpus(splits, features)


def subsample(splits: dict[str, DatasetSplit], fraction: float,
              seed: int) -> dict[str, DatasetSplit]:
    """Seeded subset of each split, file order preserved."""
    if fraction >= 1.0:
        return splits
    out = {}
    for i, (name, split) in enumerate(sorted(splits.items())):
        n = max(1, int(round(fraction * len(split))))
        keep = np.sort(rng_for(seed, _SUBSAMPLE, i).choice(len(split), size=n, replace=False))
        out[name] = split.subset(keep)
    return out


class Population:
    """Profiles plus each client's labels on the held-out splits, keyed by client id."""

    def __init__(self, profiles: list[ClientProfile], labels: dict[str, dict[int, np.ndarray]]):
        self.profiles = profiles
        self.labels = labels

    @classmethod
    def build(cls, spec_entries, corpus: Corpus, clamp: bool = True) -> Population:
        profiles = make_population(spec_entries, corpus.splits["train"], clamp)
        labels = {
            name: {p.client_id: relabel(p, corpus.splits[name]).labels for p in profiles}
            for name in ("validation", "test")
        }
        return cls(profiles, labels)

    def only(self, client_id: int, new_id: int | None = None) -> Population:
        """Single-client population, optionally renumbered."""
        prof = next(p for p in self.profiles if p.client_id == client_id)
        cid = client_id if new_id is None else new_id
        return Population(
            [replace(prof, client_id=cid)],
            {k: {cid: v[client_id]} for k, v in self.labels.items()})

    def evaluate(self, params, corpus: Corpus, split: str, rescale: bool = True) -> EvalReport:
        return evaluate_population(params, self.profiles, corpus.features[split],
                                   self.labels[split], rescale)


@dataclass
class TrainResult:
    params: ModelParams
    best_round: int
    val_f1: float
    round_val_f1: list[float]


def select_best(candidates: list[ModelParams], pop: Population, corpus: Corpus,
                rescale: bool = True) -> TrainResult:
    """Earliest round with the highest overall validation macro F1."""
    scores = [pop.evaluate(p, corpus, "validation", rescale).overall_f1 for p in candidates]
    best = int(np.argmax(scores))
    return TrainResult(candidates[best], best, scores[best], scores)


def train_fed(pop: Population, corpus: Corpus, cfg: FederationConfig,
              out_dir: Path | None = None, tag: str = "fed",
              select_on: Population | None = None) -> TrainResult:
    """FedAvg with scaled local losses; best round by rescaled validation F1.

    ``select_on`` picks the population whose validation score drives round
    selection (defaults to the training population).
    """
    clients = [Client(p, corpus.features["train"]) for p in pop.profiles]
    log_path = out_dir / f"{tag}_rounds.jsonl" if out_dir else None
    _, logs = run_federation(clients, cfg, log_path=log_path)
    return select_best([entry.params for entry in logs], select_on or pop, corpus)


def train_agg(pop: Population, corpus: Corpus, cfg: FederationConfig) -> TrainResult:
    """Central training on every client's labels pooled, no prior scaling.

    The pooled corpus repeats each training text once per client; rows are
    indexed rather than copied. A "round" is ``local_epochs`` passes over it.
    """
    x_train = corpus.features["train"]
    rows = np.tile(np.arange(len(x_train)), len(pop.profiles))
    y = np.concatenate([p.labels.labels for p in pop.profiles]).astype(np.intp)

    def loss_fn(params, xb, yb):
        return loss_and_grad(params, xb, yb)

    params = init_params(cfg)
    candidates = []
    for t in range(cfg.rounds):
        rng = rng_for(cfg.seed, _AGG_SHUFFLE, t)
        params, _ = sgd_epochs(params, x_train, y, loss_fn, cfg.local_epochs,
                               cfg.batch_size, cfg.learning_rate, rng, rows=rows)
        candidates.append(params)
    return select_best(candidates, pop, corpus, rescale=False)


def train_indv(pop: Population, corpus: Corpus, cfg: FederationConfig) -> dict[int, TrainResult]:
    """One model per client, scaled loss, trained alone."""
    solo_cfg = cfg.with_(clients_per_round=1)
    return {p.client_id: train_fed(pop.only(p.client_id, new_id=0), corpus, solo_cfg)
            for p in pop.profiles}


def run_strategies(spec: ExperimentSpec, corpus: Corpus | None = None) -> list[dict]:
    """AGG / INDV / FED on every configured group; writes table2.csv and results.json."""
    corpus = corpus or load_corpus(spec)
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = spec.federation
    rows, bundle = [], {"spec": spec.to_dict(), "groups": {}}
    for gname, entries in spec.groups.items():
        pop = Population.build(entries, corpus, cfg.clamp_degenerate_priors)
        title = GROUP_TITLES.get(gname, gname)
        bundle["groups"][gname] = {}
        for strategy in spec.strategies:
            log.info("%s: %s", title, strategy)
            if strategy == "AGG":
                res = train_agg(pop, corpus, cfg)
                report = pop.evaluate(res.params, corpus, "test", rescale=False)
                selection = {"best_round": res.best_round, "val_f1": res.val_f1}
            elif strategy == "INDV":
                per = train_indv(pop, corpus, cfg)
                report = pop.evaluate({c: r.params for c, r in per.items()}, corpus, "test")
                selection = {str(c): {"best_round": r.best_round, "val_f1": r.val_f1}
                             for c, r in per.items()}
            elif strategy == "FED":
                res = train_fed(pop, corpus, cfg, out_dir, tag=f"{gname}_fed")
                report = pop.evaluate(res.params, corpus, "test")
                selection = {"best_round": res.best_round, "val_f1": res.val_f1}
            else:
                raise DomainError(f"unknown strategy {strategy!r}")
            rows.append({"group": title, "strategy": strategy, "precision": report.overall_p,
                         "recall": report.overall_r, "f1": report.overall_f1})
            bundle["groups"][gname][strategy] = {"report": report.to_dict(),
                                                 "selection": selection}
    write_table(out_dir / "table2.csv", ["group", "strategy"], rows)
    write_json(out_dir / "results.json", bundle)
    return rows


def run_baseline(spec: ExperimentSpec, corpus: Corpus | None = None) -> list[dict]:
    """Centralised unscaled classifier vs. federated training, both scored at one alpha."""
    corpus = corpus or load_corpus(spec)
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = spec.federation
    alpha = spec.baseline_alpha

    single = Population.build([alpha], corpus, cfg.clamp_degenerate_priors)
    central = train_agg(single, corpus, cfg)
    central_report = single.evaluate(central.params, corpus, "test", rescale=False)

    entries = spec.groups.get(spec.baseline_group) or group_spec(spec.baseline_group)
    fed_pop = Population.build(entries, corpus, cfg.clamp_degenerate_priors)
    target = next((p.client_id for p in fed_pop.profiles if abs(p.alpha - alpha) < 1e-9), None)
    if target is None:
        raise DomainError(f"group {spec.baseline_group!r} has no client with alpha {alpha}")
    # The federation member at this alpha does the rescaling and scoring.
    evaluator = fed_pop.only(target)
    fed = train_fed(fed_pop, corpus, cfg, out_dir, tag="baseline_fed", select_on=evaluator)
    fed_report = evaluator.evaluate(fed.params, corpus, "test")

    rows = [
        {"model": "Centralized", "precision": central_report.overall_p,
         "recall": central_report.overall_r, "f1": central_report.overall_f1},
        {"model": "Federated", "precision": fed_report.overall_p,
         "recall": fed_report.overall_r, "f1": fed_report.overall_f1},
    ]
    write_table(out_dir / "table3.csv", ["model"], rows)
    write_json(out_dir / "baseline.json", {
        "spec": spec.to_dict(), "alpha": alpha,
        "test_positive_fraction": float(np.mean(evaluator.labels["test"][target])),
        "centralized": central_report.to_dict(), "federated": fed_report.to_dict(),
    })
    return rows


@dataclass
class SweepCell:
    alpha: float
    beta: float
    n_pos: int | None = None
    val_f1: float | None = None
    test_f1: float | None = None
    error: str | None = None


def _sweep_cell(alpha: float, beta: float, corpus: Corpus, cfg: FederationConfig) -> SweepCell:
    cell = SweepCell(alpha, beta)
    try:
        pop = Population.build([{"alpha": alpha, "beta": beta}], corpus,
                               cfg.clamp_degenerate_priors)
        cell.n_pos = pop.profiles[0].labels.n_pos
        res = train_fed(pop, corpus, cfg)
        cell.val_f1 = res.val_f1
        cell.test_f1 = pop.evaluate(res.params, corpus, "test").overall_f1
    except Exception as exc:  # recorded per cell; the sweep carries on
        log.error("sweep cell alpha=%s beta=%s failed: %s", alpha, beta, exc)
        cell.error = f"{type(exc).__name__}: {exc}"
    return cell


def run_sweep(spec: ExperimentSpec, corpus: Corpus | None = None,
              threads: int = 1) -> list[SweepCell]:
    """Single-client scaled training over the alpha x beta grid; writes sweep.csv."""
    corpus = corpus or load_corpus(spec)
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = spec.federation.with_(clients_per_round=1, threads=1)
    grid = [(a, b) for a in spec.alphas for b in spec.betas]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            cells = list(pool.map(lambda ab: _sweep_cell(*ab, corpus, cfg), grid))
    else:
        cells = [_sweep_cell(a, b, corpus, cfg) for a, b in grid]

    with open(out_dir / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "beta", "n_pos", "val_f1", "test_f1", "status"])
        for c in cells:
            ok = c.error is None
            w.writerow([f"{c.alpha:g}", f"{c.beta:g}", "" if c.n_pos is None else c.n_pos,
                        _pct(c.val_f1) if ok else "", _pct(c.test_f1) if ok else "",
                        "ok" if ok else "error"])
    write_json(out_dir / "sweep.json", {"spec": spec.to_dict(),
                                         "cells": [asdict(c) for c in cells]})
    return cells


def run_eval(spec: ExperimentSpec, params: ModelParams, population_entries,
             corpus: Corpus | None = None, rescale: bool = True) -> EvalReport:
    """Score a saved global model for a population; writes eval.json and eval.csv."""
    corpus = corpus or load_corpus(spec)
    if params.dim != spec.federation.feature_dim:
        raise DomainError(f"checkpoint dim {params.dim} != feature_dim "
                          f"{spec.federation.feature_dim}")
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pop = Population.build(population_entries, corpus, spec.federation.clamp_degenerate_priors)
    report = pop.evaluate(params, corpus, "test", rescale)
    report.save_json(out_dir / "eval.json")
    report.save_csv(out_dir / "eval.csv")
    return report


def _pct(x: float) -> str:
    return f"{100 * x:.2f}"


def write_table(path: Path, key_cols: list[str], rows: list[dict]) -> None:
    """CSV of percentage metrics rounded to two decimals."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(key_cols + ["precision", "recall", "f1"])
        for r in rows:
            w.writerow([r[k] for k in key_cols]
                       + [_pct(r["precision"]), _pct(r["recall"]), _pct(r["f1"])])


def write_json(path: Path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True))
