"""Linear readout training and evaluation metrics."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg

__all__ = [
    "ReadoutWeights",
    "TrainSpec",
    "SingularSystemError",
    "UndefinedMetricError",
    "train_readout",
    "predict",
    "mse",
    "nrmse",
    "delay_capacity",
    "split",
    "fit_evaluate",
    "memory_capacity",
    "MemoryCapacity",
]


class SingularSystemError(np.linalg.LinAlgError):
    pass


class UndefinedMetricError(ValueError):
    pass


@dataclass
class ReadoutWeights:
    """Output weights; the last entry multiplies the constant bias input."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)

    @property
    def n_features(self) -> int:
        return len(self.weights) - 1

    def save(self, path) -> None:
        Path(path).write_text("".join(f"{x!r}\n" for x in self.weights.tolist()))

    @classmethod
    def load(cls, path) -> "ReadoutWeights":
        vals = [float(s) for s in Path(path).read_text().split()]
        return cls(np.array(vals))


@dataclass(frozen=True)
class TrainSpec:
    ridge_coefficient: float = 1e-8
    washout: int = 100
    train_fraction: float = 0.7

    def __post_init__(self):
        if self.ridge_coefficient < 0:
            raise ValueError("ridge_coefficient must be >= 0")
        if self.washout < 0:
            raise ValueError("washout must be >= 0")
        if not 0 < self.train_fraction <= 1:
            raise ValueError("train_fraction must lie in (0, 1]")


def _design(states):
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    return np.hstack([states, np.ones((len(states), 1))])


def train_readout(states, target, spec: TrainSpec = TrainSpec()) -> ReadoutWeights:
    """Ridge regression of ``target`` on ``[states, 1]`` after dropping the washout.

    Solves ``(X^T X + ridge I) w = X^T y``; the bias is regularised too.
    """
    X = _design(states)
    y = np.asarray(target, dtype=float).reshape(-1)
    if len(X) != len(y):
        raise ValueError("states and target differ in length")
    if spec.washout >= len(y):
        raise ValueError("washout must be shorter than the series")
    X, y = X[spec.washout :], y[spec.washout :]
    if len(y) <= X.shape[1]:
        raise ValueError(f"need more than {X.shape[1]} post-washout samples, got {len(y)}")
    w = np.zeros(X.shape[1])
    if spec.ridge_coefficient == 0:
        # identically-zero features carry no information and get zero weight;
        # any other rank deficiency is an error
        keep = np.any(X != 0, axis=0)
        X = X[:, keep]
        if np.linalg.matrix_rank(X) < X.shape[1]:
            raise SingularSystemError("rank-deficient design; use a nonzero ridge_coefficient")
    else:
        keep = np.ones(X.shape[1], dtype=bool)
    A = X.T @ X
    A[np.diag_indices_from(A)] += spec.ridge_coefficient
    try:
        w[keep] = scipy.linalg.solve(A, X.T @ y, assume_a="pos")
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"{exc}; use a nonzero ridge_coefficient") from exc
    return ReadoutWeights(w)


def predict(weights: ReadoutWeights, states) -> np.ndarray:
    X = _design(states)
    if X.shape[1] != len(weights.weights):
        raise ValueError(f"weights expect {weights.n_features} features, states have {X.shape[1] - 1}")
    return X @ weights.weights


def _pair(y, y_hat):
    y = np.asarray(y, dtype=float).reshape(-1)
    y_hat = np.asarray(y_hat, dtype=float).reshape(-1)
    if len(y) != len(y_hat) or len(y) == 0:
        raise ValueError("series must be non-empty and of equal length")
    return y, y_hat


def mse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.mean((y - y_hat) ** 2))


def nrmse(y, y_hat) -> float:
    """RMS error normalised by the RMS of the target ``y_hat`` (not its variance)."""
    y, y_hat = _pair(y, y_hat)
    power = np.mean(y_hat**2)
    if power == 0:
        raise UndefinedMetricError("NRMSE undefined for an all-zero target")
    return float(np.sqrt(np.mean((y - y_hat) ** 2) / power))


def delay_capacity(y, y_hat) -> float:
    """Squared correlation coefficient between output and target."""
    y, y_hat = _pair(y, y_hat)
    dy, dt = y - y.mean(), y_hat - y_hat.mean()
    vy, vt = np.mean(dy**2), np.mean(dt**2)
    if vy == 0 or vt == 0:
        raise UndefinedMetricError("capacity undefined for a constant series")
    c = np.mean(dy * dt) ** 2 / (vy * vt)
    return float(min(c, 1.0))


def split(n: int, spec: TrainSpec) -> tuple[slice, slice]:
    """Contiguous train/test index ranges after the washout."""
    if spec.washout >= n:
        raise ValueError("washout must be shorter than the series")
    n_train = int(round((n - spec.washout) * spec.train_fraction))
    return slice(spec.washout, spec.washout + n_train), slice(spec.washout + n_train, n)


def fit_evaluate(states, target, spec: TrainSpec = TrainSpec(),
                 metric: Callable = mse) -> tuple[float, ReadoutWeights]:
    """Train on the training range, score ``metric(prediction, target)`` on the test range.

    With ``train_fraction == 1`` the score is computed on the training range.
    """
    states = np.asarray(states, dtype=float)
    target = np.asarray(target, dtype=float)
    tr, te = split(len(target), spec)
    w = train_readout(states[tr], target[tr], TrainSpec(spec.ridge_coefficient, 0))
    if te.start >= te.stop:
        te = tr
    return metric(predict(w, states[te]), target[te]), w


class MemoryCapacity(NamedTuple):
    total: float
    per_delay: np.ndarray


def memory_capacity(states, u, spec: TrainSpec = TrainSpec(), max_delay: int = 10) -> MemoryCapacity:
    """Sum over delays 1..max_delay of the held-out capacity for recalling ``u[t - d]``.

    ``states`` is a T x N state matrix or a callable mapping the input array to one.
    """
    u = np.asarray(getattr(u, "samples", u), dtype=float)
    if callable(states):
        states = states(u)
    states = np.asarray(states, dtype=float)
    if spec.washout < max_delay:
        raise ValueError("washout must cover the longest delay")
    caps = np.zeros(max_delay)
    for d in range(1, max_delay + 1):
        target = np.concatenate([np.zeros(d), u[:-d]])
        caps[d - 1], _ = fit_evaluate(states, target, spec, delay_capacity)
    return MemoryCapacity(float(caps.sum()), caps)
