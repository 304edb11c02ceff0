"""In-process FedAvg with prior-scaled local training.

The server loop only ever sees :class:`ModelParams`. Labels stay inside each
:class:`Client`, which exposes a single ``update`` method.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ClientUpdateError, DegeneratePriorError, DomainError
from .labeling import ClientProfile
from .model import ModelParams, loss_and_grad, sgd_step

log = logging.getLogger(__name__)

# Stream tags keep sampling, shuffling and init draws on disjoint RNG streams.
_INIT, _SAMPLE, _SHUFFLE = 0, 1, 2


@dataclass(frozen=True)
class FederationConfig:
    rounds: int = 30
    clients_per_round: int | None = None  # None: every client, every round
    local_epochs: int = 2
    batch_size: int = 32
    learning_rate: float = 5.0
    seed: int = 0
    feature_dim: int = 4096
    clamp_degenerate_priors: bool = True
    literal_eq3: bool = False
    init_std: float = 0.01
    threads: int = 1

    def __post_init__(self):
        if self.rounds < 1:
            raise DomainError("rounds must be >= 1")
        if self.clients_per_round is not None and self.clients_per_round < 1:
            raise DomainError("clients_per_round must be >= 1")
        if self.local_epochs < 1 or self.batch_size < 1:
            raise DomainError("local_epochs and batch_size must be >= 1")
        if self.learning_rate < 0:
            raise DomainError("learning_rate must be >= 0")

    def with_(self, **changes) -> FederationConfig:
        return FederationConfig(**{**asdict(self), **changes})


@dataclass
class RoundLog:
    round_index: int
    selected_clients: list[int]
    mean_client_loss: float
    global_params_checkpoint: str | None = None
    params: ModelParams | None = field(default=None, repr=False, compare=False)

    def to_json(self) -> str:
        return json.dumps({
            "round_index": self.round_index,
            "selected_clients": self.selected_clients,
            "mean_client_loss": self.mean_client_loss,
            "global_params_checkpoint": self.global_params_checkpoint,
        })


def rng_for(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng([seed, *keys])


def shuffle_rng(seed: int, round_index: int, client_id: int) -> np.random.Generator:
    """Per-client batch shuffling stream; independent of execution order."""
    return rng_for(seed, _SHUFFLE, round_index, client_id)


def init_params(cfg: FederationConfig) -> ModelParams:
    return ModelParams.gaussian(cfg.feature_dim, rng_for(cfg.seed, _INIT), cfg.init_std)


def sgd_epochs(params: ModelParams, x: np.ndarray, y: np.ndarray, loss_fn: Callable,
               epochs: int, batch_size: int, eta: float, rng: np.random.Generator,
               rows: np.ndarray | None = None) -> tuple[ModelParams, float]:
    """Mini-batch SGD; a fresh permutation per epoch.

    ``rows`` optionally maps sample positions to rows of ``x`` so duplicated
    samples need not be materialised. Returns the final parameters and the
    mean loss over the batches of the last epoch.
    """
    n = len(y)
    last_losses: list[float] = []
    for _ in range(epochs):
        order = rng.permutation(n)
        last_losses = []
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            xb = x[idx] if rows is None else x[rows[idx]]
            loss, grad = loss_fn(params, xb, y[idx])
            params = sgd_step(params, grad, eta)
            last_losses.append(loss)
    return params, float(np.mean(last_losses))


class Client:
    """A simulated device: a profile plus its private training labels."""

    def __init__(self, profile: ClientProfile, features: np.ndarray):
        if profile.labels is None:
            raise DomainError(f"client {profile.client_id} has no labels")
        if len(profile.labels) != len(features):
            raise DomainError("labels and features are not aligned")
        self.profile = profile
        self._x = features
        self._y = profile.labels.labels.astype(np.intp)

    @property
    def client_id(self) -> int:
        return self.profile.client_id

    def update(self, global_params: ModelParams, cfg: FederationConfig,
               round_index: int = 0) -> tuple[ModelParams, float]:
        return client_update(global_params, self.profile, self._x, self._y, cfg, round_index)


def client_update(global_params: ModelParams, profile: ClientProfile, x: np.ndarray,
                  y: np.ndarray, cfg: FederationConfig,
                  round_index: int = 0) -> tuple[ModelParams, float]:
    """Local epochs of prior-scaled SGD starting from the global parameters."""
    if len(y) == 0:
        raise DomainError(f"client {profile.client_id} has no training data")
    n_pos = int(np.sum(y))
    if not cfg.clamp_degenerate_priors and n_pos in (0, len(y)):
        raise DegeneratePriorError(n_pos, len(y) - n_pos, profile.client_id)
    priors, beta, literal = profile.priors, profile.beta, cfg.literal_eq3

    def loss_fn(params, xb, yb):
        return loss_and_grad(params, xb, yb, priors, beta, literal)

    rng = shuffle_rng(cfg.seed, round_index, profile.client_id)
    return sgd_epochs(global_params, x, np.asarray(y, dtype=np.intp), loss_fn,
                      cfg.local_epochs, cfg.batch_size, cfg.learning_rate, rng)


def aggregate(local_params: list[ModelParams]) -> ModelParams:
    """Uniform elementwise mean of the clients' parameters."""
    if not local_params:
        raise DomainError("nothing to aggregate")
    for p in local_params:
        if not isinstance(p, ModelParams):
            raise DomainError(f"aggregate takes ModelParams only, got {type(p).__name__}")
    shape = local_params[0].shape
    if any(p.shape != shape for p in local_params):
        raise DomainError("parameter shapes differ across clients")
    if len(local_params) == 1:
        only = local_params[0]
        return ModelParams(only.weights.copy(), only.bias.copy())
    # np.sum uses pairwise summation along the stacked axis.
    weights = np.sum(np.stack([p.weights for p in local_params]), axis=0) / len(local_params)
    bias = np.sum(np.stack([p.bias for p in local_params]), axis=0) / len(local_params)
    return ModelParams(weights, bias)


def sample_clients(population_size: int, k: int, round_index: int, seed: int) -> list[int]:
    if not 1 <= k <= population_size:
        raise DomainError(f"cannot sample {k} of {population_size} clients")
    if k == population_size:
        return list(range(population_size))
    picks = rng_for(seed, _SAMPLE, round_index).choice(population_size, size=k, replace=False)
    return sorted(int(i) for i in picks)


def run_federation(clients: list[Client], cfg: FederationConfig,
                   init: ModelParams | None = None,
                   checkpoint_dir: str | Path | None = None,
                   log_path: str | Path | None = None) -> tuple[ModelParams, list[RoundLog]]:
    """Run ``cfg.rounds`` rounds of sample / local update / average.

    Every round's global parameters are kept on its :class:`RoundLog` and,
    when ``checkpoint_dir`` is given, also written as ``round_XXXX.bin``.
    """
    if not clients:
        raise DomainError("empty population")
    ids = [c.client_id for c in clients]
    if ids != list(range(len(clients))):
        raise DomainError("client ids must be 0..n-1 in population order")
    k = cfg.clients_per_round or len(clients)
    if k > len(clients):
        raise DomainError(f"clients_per_round {k} exceeds population {len(clients)}")

    global_params = init if init is not None else init_params(cfg)
    if global_params.dim != cfg.feature_dim:
        raise DomainError(f"params have dim {global_params.dim}, config says {cfg.feature_dim}")
    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)
    log_fh = open(log_path, "w") if log_path is not None else None

    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    logs: list[RoundLog] = []
    try:
        for t in range(cfg.rounds):
            selected = sample_clients(len(clients), k, t, cfg.seed)

            def work(cid, params=global_params, t=t):
                try:
                    return clients[cid].update(params, cfg, t)
                except Exception as exc:
                    raise ClientUpdateError(t, cid, exc) from exc

            results = list(pool.map(work, selected)) if pool else [work(c) for c in selected]
            global_params = aggregate([r[0] for r in results])
            entry = RoundLog(t, selected, float(np.mean([r[1] for r in results])),
                             params=global_params)
            if checkpoint_dir is not None:
                path = checkpoint_dir / f"round_{t:04d}.bin"
                global_params.save(path)
                entry.global_params_checkpoint = str(path)
            if log_fh is not None:
                log_fh.write(entry.to_json() + "\n")
            log.debug("round %d: clients %s, loss %.5f", t, selected, entry.mean_client_loss)
            logs.append(entry)
    finally:
        if pool is not None:
            pool.shutdown()
        if log_fh is not None:
            log_fh.close()
    return global_params, logs
