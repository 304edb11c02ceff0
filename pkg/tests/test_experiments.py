import csv
import json

import numpy as np
import pytest

from fedprior.errors import DomainError
from fedprior.experiments import (ExperimentSpec, Population, load_corpus, run_baseline,
                                  run_strategies, run_sweep, subsample, train_agg, train_fed,
                                  train_indv)
from fedprior.federation import FederationConfig

from conftest import FIXTURE_DIR

SMALL = dict(rounds=3, feature_dim=128, learning_rate=5.0, batch_size=16, seed=3)


def spec_for(tmp_path, **kw):
    fed = FederationConfig(**{**SMALL, **kw.pop("federation", {})})
    return ExperimentSpec(data_dir=str(FIXTURE_DIR), out_dir=str(tmp_path), federation=fed, **kw)


@pytest.fixture(scope="module")
def corpus():
    return load_corpus(ExperimentSpec(data_dir=str(FIXTURE_DIR),
                                      federation=FederationConfig(**SMALL)))


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_spec_validation():
    with pytest.raises(DomainError):
        ExperimentSpec(kind="nope")
    with pytest.raises(DomainError):
        ExperimentSpec(subsample_fraction=0.0)
    with pytest.raises(DomainError):
        ExperimentSpec(kind="sweep", alphas=[])


def test_spec_from_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"kind": "sweep", "alphas": [1.0], "betas": [0.0],
                                "federation": {"rounds": 2, "learning_rate": 0.5}}))
    spec = ExperimentSpec.from_file(path, out_dir="x")
    assert spec.federation.rounds == 2 and spec.out_dir == "x" and spec.alphas == [1.0]


def test_subsample_keeps_order(mini_splits):
    sub = subsample(mini_splits, 0.25, 0)
    assert len(sub["train"]) == round(0.25 * 130)
    ids = [int(r.id) for r in sub["train"].records]
    assert ids == sorted(ids)
    assert subsample(mini_splits, 0.25, 0) == sub


def test_singleton_sweep(tmp_path, corpus):
    spec = spec_for(tmp_path, kind="sweep", alphas=[1.0], betas=[0.0])
    cells = run_sweep(spec, corpus)
    assert len(cells) == 1 and cells[0].error is None
    rows = read_csv(tmp_path / "sweep.csv")
    assert len(rows) == 1 and rows[0]["status"] == "ok"
    assert 0 <= float(rows[0]["test_f1"]) <= 100


def test_sweep_failures_are_recorded(tmp_path, corpus):
    spec = spec_for(tmp_path, kind="sweep", alphas=[1.0, 2.99], betas=[1.0],
                    federation={"clamp_degenerate_priors": False})
    cells = run_sweep(spec, corpus)
    assert [c.error is None for c in cells] == [True, False]
    assert [r["status"] for r in read_csv(tmp_path / "sweep.csv")] == ["ok", "error"]


def test_sweep_positive_counts_non_increasing(tmp_path, corpus):
    spec = spec_for(tmp_path, kind="sweep", alphas=[0.2, 0.6, 1.0, 1.4, 1.8], betas=[0.5],
                    federation={"rounds": 1})
    counts = [c.n_pos for c in run_sweep(spec, corpus)]
    assert counts == sorted(counts, reverse=True)


def test_sweep_deterministic_and_thread_safe(tmp_path, corpus):
    a, b = tmp_path / "a", tmp_path / "b"
    run_sweep(spec_for(a, kind="sweep", alphas=[0.5, 1.5], betas=[0.0, 1.0]), corpus)
    run_sweep(spec_for(b, kind="sweep", alphas=[0.5, 1.5], betas=[0.0, 1.0]), corpus, threads=3)
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()


def test_paper_grid_size():
    spec = ExperimentSpec(kind="sweep")
    assert len(spec.alphas) == 19 and len(spec.betas) == 21
    assert spec.alphas[0] == 0.2 and spec.alphas[-1] == 2.0 and spec.betas[-1] == 2.0


def test_strategies_table(tmp_path, corpus):
    spec = spec_for(tmp_path, groups={"group1": [0.3, 0.9, 1.8]})
    rows = run_strategies(spec, corpus)
    table = read_csv(tmp_path / "table2.csv")
    assert [(r["group"], r["strategy"]) for r in table] == [
        ("Group 1", "AGG"), ("Group 1", "INDV"), ("Group 1", "FED")]
    for r in table:
        for k in ("precision", "recall", "f1"):
            assert 0 <= float(r[k]) <= 100
            assert r[k] == f"{float(r[k]):.2f}"
    bundle = json.loads((tmp_path / "results.json").read_text())
    fed = bundle["groups"]["group1"]["FED"]["report"]
    assert fed["overall_f1"] == rows[2]["f1"]
    assert (tmp_path / "group1_fed_rounds.jsonl").exists()


def test_single_client_indv_equals_fed(corpus):
    cfg = FederationConfig(**SMALL)
    pop = Population.build([0.9], corpus)
    indv = train_indv(pop, corpus, cfg)[0]
    fed = train_fed(pop, corpus, cfg)
    a = pop.evaluate(indv.params, corpus, "test")
    b = pop.evaluate(fed.params, corpus, "test")
    assert abs(a.overall_f1 - b.overall_f1) <= 1e-9
    assert abs(a.overall_p - b.overall_p) <= 1e-9


def test_agg_with_duplicate_clients_matches_single(corpus):
    cfg = FederationConfig(**{**SMALL, "batch_size": 10_000})  # full batch
    single = Population.build([1.1], corpus)
    triple = Population.build([1.1, 1.1, 1.1], corpus)
    a, b = train_agg(single, corpus, cfg), train_agg(triple, corpus, cfg)
    assert np.max(np.abs(a.params.flat() - b.params.flat())) <= 1e-12
    assert a.best_round == b.best_round
    ra = single.evaluate(a.params, corpus, "test", rescale=False)
    rb = triple.evaluate(b.params, corpus, "test", rescale=False)
    assert ra.per_client[0] == rb.per_client[0]


def test_baseline(tmp_path, corpus):
    spec = spec_for(tmp_path, kind="baseline", groups={"group2": [0.5, 1.0, 1.5]})
    rows = run_baseline(spec, corpus)
    assert [r["model"] for r in rows] == ["Centralized", "Federated"]
    for r in read_csv(tmp_path / "table3.csv"):
        assert all(0 <= float(r[k]) <= 100 for k in ("precision", "recall", "f1"))
    info = json.loads((tmp_path / "baseline.json").read_text())
    assert 0 < info["test_positive_fraction"] < 1


def test_baseline_needs_alpha_in_group(tmp_path, corpus):
    spec = spec_for(tmp_path, kind="baseline", groups={"group2": [0.5, 1.5]})
    with pytest.raises(DomainError):
        run_baseline(spec, corpus)


def test_strategies_rerun_byte_identical(tmp_path, corpus):
    outs = []
    for name in ("a", "b"):
        spec = spec_for(tmp_path / name, groups={"group1": [0.3, 0.9, 1.8]})
        run_strategies(spec, corpus)
        outs.append((tmp_path / name / "table2.csv").read_bytes())
    assert outs[0] == outs[1]


def test_unlabeled_split_rejected(tmp_path):
    for name, body in [("train.csv", "1,a <b/> c,d,123,2.0"), ("dev.csv", "2,a <b/> c,d,1,1.0"),
                       ("test.csv", "3,a <b/> c,d")]:
        (tmp_path / name).write_text("id,original,edit,grades,meanGrade\n" + body + "\n")
    with pytest.raises(DomainError, match="without grades"):
        load_corpus(ExperimentSpec(data_dir=str(tmp_path)))
