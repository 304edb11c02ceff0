"""Simulated clients: threshold-derived binary labels, empirical priors and beta policy."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import DatasetSplit
from .errors import DegeneratePriorError, DomainError

log = logging.getLogger(__name__)

# Paper-recommended alpha band for the strong (beta = 1) scaling regime.
BETA_BAND = (0.5, 1.5)
GROUPS = {
    "group1": (0.3, 0.9, 1.8),
    "group2": tuple(round(0.2 + 0.1 * i, 1) for i in range(18)),
}


@dataclass(frozen=True)
class LabeledView:
    client_id: int
    labels: np.ndarray  # int8, aligned with the split's records

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_pos(self) -> int:
        return int(self.labels.sum())


@dataclass(frozen=True)
class ClientProfile:
    client_id: int
    alpha: float
    beta: float
    prior_pos: float
    labels: LabeledView | None = None

    @property
    def prior_neg(self) -> float:
        return 1.0 - self.prior_pos

    @property
    def priors(self) -> tuple[float, float]:
        """Class priors indexed by label: (P(y=0), P(y=1))."""
        return (self.prior_neg, self.prior_pos)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 3.0:
        raise DomainError(f"alpha must lie in (0, 3), got {alpha}")


def threshold_labels(mean_grades, alpha: float) -> np.ndarray:
    """1 where the funniness rating reaches ``alpha`` (ties count as funny)."""
    _check_alpha(alpha)
    return (np.asarray(mean_grades, dtype=float) >= alpha).astype(np.int8)


def generate_labels(split: DatasetSplit, alpha: float, client_id: int = 0) -> LabeledView:
    if not split.records:
        raise DomainError(f"split {split.name!r} is empty")
    grades = split.mean_grades
    if any(g != g for g in grades):
        raise DomainError(f"split {split.name!r} has unlabeled records")
    return LabeledView(client_id, threshold_labels(grades, alpha))


def empirical_priors(view: LabeledView, clamp: bool = False) -> tuple[float, float]:
    """Return ``(prior_pos, prior_neg)`` of the view's labels.

    Single-class views raise :class:`DegeneratePriorError` unless ``clamp`` is
    set, in which case the positive prior is clamped to
    ``[1/(n+2), 1 - 1/(n+2)]``.
    """
    n = len(view)
    n_pos = view.n_pos
    if n == 0:
        raise DomainError("empty label view")
    prior_pos = n_pos / n
    if n_pos == 0 or n_pos == n:
        if not clamp:
            raise DegeneratePriorError(n_pos, n - n_pos, view.client_id)
        eps = 1.0 / (n + 2)
        prior_pos = min(max(prior_pos, eps), 1.0 - eps)
        log.warning("client %d has single-class labels; prior clamped to %.4g",
                    view.client_id, prior_pos)
    return prior_pos, 1.0 - prior_pos


def default_beta(alpha: float) -> float:
    _check_alpha(alpha)
    lo, hi = BETA_BAND
    return 1.0 if lo <= alpha <= hi else 0.1


def make_profile(client_id: int, alpha: float, split: DatasetSplit,
                 beta: float | None = None, clamp: bool = True) -> ClientProfile:
    view = generate_labels(split, alpha, client_id)
    prior_pos, _ = empirical_priors(view, clamp=clamp)
    if beta is None:
        beta = default_beta(alpha)
    if beta < 0:
        raise DomainError(f"beta must be >= 0, got {beta}")
    return ClientProfile(client_id, float(alpha), float(beta), prior_pos, view)


def make_population(spec, split: DatasetSplit, clamp: bool = True) -> list[ClientProfile]:
    """One profile per entry of ``spec``.

    Entries are either bare alphas or ``{"alpha": ..., "beta": ...}`` mappings
    (beta optional). Client ids follow spec order.
    """
    population = []
    for cid, entry in enumerate(spec):
        if isinstance(entry, dict):
            alpha, beta = entry["alpha"], entry.get("beta")
        else:
            alpha, beta = entry, None
        population.append(make_profile(cid, alpha, split, beta, clamp))
    return population


def relabel(profile: ClientProfile, split: DatasetSplit) -> LabeledView:
    """Labels of another split under the same client's alpha."""
    return generate_labels(split, profile.alpha, profile.client_id)


def load_population_spec(path: str | Path) -> list:
    spec = json.loads(Path(path).read_text())
    if not isinstance(spec, list):
        raise DomainError("population spec must be a JSON array")
    for i, entry in enumerate(spec):
        if not isinstance(entry, dict) or "alpha" not in entry:
            raise DomainError(f"population entry {i} needs an 'alpha' field")
    return spec


def group_spec(name: str) -> list[float]:
    try:
        return list(GROUPS[name])
    except KeyError:
        raise DomainError(f"unknown group {name!r}; known: {sorted(GROUPS)}") from None
