import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fedprior.data import DatasetSplit, HeadlineRecord
from fedprior.errors import DegeneratePriorError, DomainError
from fedprior.labeling import (GROUPS, LabeledView, default_beta, empirical_priors,
                               generate_labels, load_population_spec, make_population,
                               threshold_labels)


def split_of(grades):
    return DatasetSplit("train", tuple(
        HeadlineRecord(str(i), "<a/>", "x", "x", (), g) for i, g in enumerate(grades)))


def test_threshold_examples():
    view = generate_labels(split_of([2.0, 0.0, 1.0, 0.99]), 1.0)
    assert view.labels.tolist() == [1, 0, 1, 0]  # tie at alpha counts as funny


@pytest.mark.parametrize("alpha", [0.0, 3.0, -0.1, 3.5])
def test_alpha_domain(alpha):
    with pytest.raises(DomainError):
        generate_labels(split_of([1.0]), alpha)


def test_empty_split():
    with pytest.raises(DomainError):
        generate_labels(split_of([]), 1.0)


def test_fixture_positives_decrease(mini_splits):
    train = mini_splits["train"]
    assert generate_labels(train, 0.2).n_pos > generate_labels(train, 1.9).n_pos


@given(st.lists(st.floats(0, 3), min_size=1, max_size=50),
       st.floats(0.01, 2.99), st.floats(0.01, 2.99))
def test_pointwise_monotone(grades, a1, a2):
    lo, hi = sorted((a1, a2))
    l_lo, l_hi = threshold_labels(grades, lo), threshold_labels(grades, hi)
    assert (l_lo >= l_hi).all()


@pytest.mark.parametrize("labels,expected", [([1, 1, 1, 0], (0.75, 0.25)), ([0, 1], (0.5, 0.5))])
def test_empirical_priors(labels, expected):
    assert empirical_priors(LabeledView(0, np.array(labels, dtype=np.int8))) == expected


def test_degenerate_priors_raise_with_counts():
    with pytest.raises(DegeneratePriorError) as info:
        empirical_priors(LabeledView(4, np.zeros(8, dtype=np.int8)))
    assert (info.value.n_pos, info.value.n_neg, info.value.client_id) == (0, 8, 4)


def test_degenerate_priors_clamped():
    pos, neg = empirical_priors(LabeledView(0, np.ones(8, dtype=np.int8)), clamp=True)
    assert pos == pytest.approx(1 - 1 / 10) and pos + neg == 1.0
    pos, _ = empirical_priors(LabeledView(0, np.zeros(8, dtype=np.int8)), clamp=True)
    assert pos == pytest.approx(1 / 10)


def test_alpha_above_max_is_degenerate():
    split = split_of([0.2, 0.4, 1.0])
    with pytest.raises(DegeneratePriorError):
        make_population([2.0], split, clamp=False)
    prof = make_population([2.0], split, clamp=True)[0]
    assert 0 < prof.prior_pos < 1


@pytest.mark.parametrize("alpha,beta", [(0.3, 0.1), (0.9, 1.0), (1.8, 0.1),
                                        (0.5, 1.0), (1.5, 1.0), (0.49, 0.1), (1.51, 0.1)])
def test_default_beta(alpha, beta):
    assert default_beta(alpha) == beta


def test_group_populations(mini_splits):
    train = mini_splits["train"]
    g1 = make_population(GROUPS["group1"], train)
    assert [p.alpha for p in g1] == [0.3, 0.9, 1.8]
    assert [p.client_id for p in g1] == [0, 1, 2]
    assert [p.beta for p in g1] == [0.1, 1.0, 0.1]
    g2 = make_population(GROUPS["group2"], train)
    assert len(g2) == 18 and g2[0].alpha == 0.2 and g2[-1].alpha == 1.9
    assert make_population([], train) == []


def test_profile_priors(mini_splits):
    for prof in make_population(GROUPS["group2"], mini_splits["train"]):
        assert 0 < prof.prior_pos < 1
        assert prof.prior_pos + prof.prior_neg == 1.0
        assert prof.priors == (prof.prior_neg, prof.prior_pos)
        assert len(prof.labels) == len(mini_splits["train"])


def test_population_spec_file(tmp_path, mini_splits):
    path = tmp_path / "pop.json"
    path.write_text(json.dumps([{"alpha": 0.9}, {"alpha": 1.2, "beta": 0.3}]))
    pop = make_population(load_population_spec(path), mini_splits["train"])
    assert [(p.alpha, p.beta) for p in pop] == [(0.9, 1.0), (1.2, 0.3)]


def test_population_spec_rejects_bad_entries(tmp_path):
    path = tmp_path / "pop.json"
    path.write_text(json.dumps([{"beta": 1.0}]))
    with pytest.raises(DomainError):
        load_population_spec(path)
