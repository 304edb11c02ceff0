"""Two-class linear softmax classifier with prior-scaled probabilities.

Training divides each predicted class probability by ``prior**beta`` and
re-normalises with a softmax; inference multiplies instead. The loss is the
negative log-likelihood of the true label under the training-time scaled
distribution.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, NumericError

N_CLASSES = 2
MAGIC = b"FPMP"
_HEADER = struct.Struct("<4sII")


@dataclass(frozen=True, eq=False)
class ModelParams:
    weights: np.ndarray  # (N_CLASSES, dim)
    bias: np.ndarray  # (N_CLASSES,)

    def __post_init__(self):
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise DomainError(f"bad shapes {self.weights.shape}, {self.bias.shape}")

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    @classmethod
    def zeros(cls, dim: int) -> ModelParams:
        return cls(np.zeros((N_CLASSES, dim)), np.zeros(N_CLASSES))

    @classmethod
    def gaussian(cls, dim: int, rng: np.random.Generator, std: float = 0.01) -> ModelParams:
        return cls(rng.normal(0.0, std, size=(N_CLASSES, dim)), np.zeros(N_CLASSES))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.weights.ravel(), self.bias])

    @classmethod
    def from_flat(cls, flat: np.ndarray, dim: int) -> ModelParams:
        k = N_CLASSES * dim
        return cls(flat[:k].reshape(N_CLASSES, dim).copy(), flat[k:].copy())

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.weights).all() and np.isfinite(self.bias).all())

    def to_bytes(self) -> bytes:
        n_classes, dim = self.weights.shape
        return (_HEADER.pack(MAGIC, dim, n_classes)
                + self.weights.astype("<f8").tobytes()
                + self.bias.astype("<f8").tobytes())

    @classmethod
    def from_bytes(cls, blob: bytes) -> ModelParams:
        magic, dim, n_classes = _HEADER.unpack_from(blob)
        if magic != MAGIC:
            raise DomainError(f"not a parameter file (magic {magic!r})")
        body = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
        if body.size != n_classes * dim + n_classes:
            raise DomainError(f"expected {n_classes * (dim + 1)} doubles, got {body.size}")
        body = body.astype(np.float64)
        return cls(body[:n_classes * dim].reshape(n_classes, dim).copy(),
                   body[n_classes * dim:].copy())

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> ModelParams:
        return cls.from_bytes(Path(path).read_bytes())


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def logits(params: ModelParams, x: np.ndarray) -> np.ndarray:
    z = x @ params.weights.T + params.bias
    if not np.isfinite(z).all():
        raise NumericError("non-finite logits")
    return z


def forward(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Class probabilities for one feature vector or a ``(n, dim)`` batch."""
    return softmax(logits(params, x))


def _prior_factor(priors, beta: float) -> np.ndarray:
    priors = np.asarray(priors, dtype=float)
    if priors.shape != (N_CLASSES,) or not ((priors > 0) & (priors < 1)).all():
        raise DomainError(f"priors must lie strictly inside (0, 1), got {priors}")
    if beta < 0:
        raise DomainError(f"beta must be >= 0, got {beta}")
    return priors ** beta


def scale_train(prob, priors, beta: float) -> np.ndarray:
    """softmax(prob[y] / prior[y]**beta)."""
    return softmax(np.asarray(prob, dtype=float) / _prior_factor(priors, beta))


def scale_infer(prob, priors, beta: float) -> np.ndarray:
    """softmax(prob[y] * prior[y]**beta)."""
    return softmax(np.asarray(prob, dtype=float) * _prior_factor(priors, beta))


def _onehot(y: np.ndarray) -> np.ndarray:
    out = np.zeros((len(y), N_CLASSES))
    out[np.arange(len(y)), y] = 1.0
    return out


def loss_and_grad(params: ModelParams, x: np.ndarray, y: np.ndarray,
                  priors=None, beta: float = 0.0, literal: bool = False):
    """Mean loss over the batch and its gradient as a :class:`ModelParams`.

    With ``priors=None`` this is plain softmax cross-entropy. Otherwise the
    class probabilities pass through :func:`scale_train` first. ``literal``
    sums ``-log`` of the scaled probability over both classes instead of
    taking only the true class.
    """
    x = np.atleast_2d(x)
    y = np.asarray(y, dtype=np.intp)
    n = len(y)
    if n == 0:
        raise DomainError("empty batch")
    p = forward(params, x)

    if priors is None:
        if literal:
            raise DomainError("the literal objective needs priors")
        loss = -np.log(p[np.arange(n), y]).mean()
        dz = p - _onehot(y)
    else:
        c = 1.0 / _prior_factor(priors, beta)
        q = softmax(p * c)
        if literal:
            loss = -np.log(q).sum(axis=1).mean()
            dq = N_CLASSES * q - 1.0
        else:
            loss = -np.log(q[np.arange(n), y]).mean()
            dq = q - _onehot(y)
        g = dq * c
        # Back through the softmax Jacobian diag(p) - p p^T.
        dz = p * (g - (p * g).sum(axis=1, keepdims=True))

    if not np.isfinite(loss):
        raise NumericError("non-finite loss")
    dz /= n
    grad = ModelParams(dz.T @ x, dz.sum(axis=0))
    return float(loss), grad


def sgd_step(params: ModelParams, grad: ModelParams, eta: float) -> ModelParams:
    if eta < 0:
        raise DomainError(f"learning rate must be >= 0, got {eta}")
    return ModelParams(params.weights - eta * grad.weights, params.bias - eta * grad.bias)


def predict(params: ModelParams, x: np.ndarray, priors=None, beta: float = 0.0) -> np.ndarray:
    """Argmax labels, optionally after inference-time prior rescaling."""
    p = forward(params, np.atleast_2d(x))
    if priors is not None:
        # softmax is monotone, so the argmax of its arguments suffices
        p = p * _prior_factor(priors, beta)
    return p.argmax(axis=1).astype(np.int8)
