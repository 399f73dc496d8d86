"""
Regression algorithms on tagged data.

Every algorithm maps a TaggedDataset to a FittedModel. Least squares ignores
the tags; weighted least squares reads them as weights; linear drift and the
autoregressive fit read them as time indices. The three linear fits are linear
smoothers and can report their predictions as affine functions of a single
response, which the conformal methods use to avoid refitting per candidate.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import DomainError
from .models import TaggedDataset

logger = logging.getLogger(__name__)

# Singular values below RCOND * largest are treated as zero.
RCOND = 1e-10


def _rows(X: np.ndarray, dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        if dim == 0 or X.size % dim:
            X = X.reshape(1, -1)
        else:
            X = X.reshape(-1, dim)
    if X.shape[1] != dim:
        raise DomainError(f"expected {dim} features, got {X.shape[1]}")
    return X


class FittedModel(ABC):
    @abstractmethod
    def predict_many(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict(self, x: np.ndarray) -> float:
        row = np.asarray(x, dtype=float).reshape(1, -1)
        return float(self.predict_many(row)[0])


@dataclass(frozen=True)
class LinearModel(FittedModel):
    """mu(x) = x'coef + drift * prediction_tag."""

    coef: np.ndarray
    drift: float = 0.0
    prediction_tag: float = 0.0
    rank_deficient: bool = False

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        return _rows(X, self.coef.shape[0]) @ self.coef + self.drift * self.prediction_tag


@dataclass(frozen=True)
class AutoregressiveModel(FittedModel):
    """mu(x) = x'coef + (y_n, ..., y_{n-k+1})'lag_coef with responses held at fit time."""

    coef: np.ndarray
    lag_coef: np.ndarray
    trailing: np.ndarray

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        return _rows(X, self.coef.shape[0]) @ self.coef + float(self.trailing @ self.lag_coef)


@dataclass(frozen=True)
class ConstantModel(FittedModel):
    value: float = 0.0

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.full(X.shape[0] if X.ndim > 1 else 1, self.value, dtype=float)


def _solve(design: np.ndarray, response: np.ndarray) -> Tuple[np.ndarray, int]:
    coef, _, rank, _ = np.linalg.lstsq(design, response, rcond=RCOND)
    return coef, int(rank)


class TaggedAlgorithm(ABC):
    """A fitting procedure over tagged points; ``symmetric`` iff tags are ignored."""

    name: str = "algorithm"
    symmetric: bool = False

    @abstractmethod
    def fit(self, data: TaggedDataset) -> FittedModel:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class LinearSmoother(TaggedAlgorithm):
    """Weighted linear fit whose predictions are linear in the responses."""

    @abstractmethod
    def design(self, data: TaggedDataset) -> Tuple[np.ndarray, np.ndarray]:
        """Design matrix and per-row square-root weights."""

    @abstractmethod
    def query_design(self, X: np.ndarray, data: TaggedDataset) -> np.ndarray:
        """Rows that turn coefficients into predictions at ``X``."""

    def _model(self, coef: np.ndarray, data: TaggedDataset, deficient: bool) -> FittedModel:
        return LinearModel(coef=coef, rank_deficient=deficient)

    def fit(self, data: TaggedDataset) -> FittedModel:
        if len(data) == 0:
            raise DomainError("cannot fit an empty dataset")
        D, sw = self.design(data)
        coef, rank = _solve(D * sw[:, None], data.y * sw)
        return self._model(coef, data, rank < D.shape[1])

    def affine_predictions(
        self, data: TaggedDataset, free: int, X_query: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Predictions at ``X_query`` as a + b * v, where v is the response at
        0-based position ``free`` of ``data`` (its stored value is ignored).
        """
        D, sw = self.design(data)
        P = np.linalg.pinv(D * sw[:, None], rcond=RCOND)
        base = np.array(data.y, dtype=float)
        base[free] = 0.0
        beta0 = P @ (sw * base)
        beta1 = P[:, free] * sw[free]
        Q = self.query_design(np.asarray(X_query, dtype=float), data)
        return Q @ beta0, Q @ beta1


class LeastSquares(LinearSmoother):
    name = "LS"
    symmetric = True

    def design(self, data: TaggedDataset) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(data.X), np.ones(len(data))

    def query_design(self, X: np.ndarray, data: TaggedDataset) -> np.ndarray:
        return X.reshape(-1, data.dim)


class WeightedLeastSquares(LinearSmoother):
    name = "WLS"

    def design(self, data: TaggedDataset) -> Tuple[np.ndarray, np.ndarray]:
        tags = np.asarray(data.tags)
        if (tags < 0).any():
            raise DomainError("weighted least squares needs nonnegative tags")
        if not (tags > 0).any():
            raise DomainError("weighted least squares needs at least one positive tag")
        return np.asarray(data.X), np.sqrt(tags)

    def query_design(self, X: np.ndarray, data: TaggedDataset) -> np.ndarray:
        return X.reshape(-1, data.dim)


class LinearDrift(LinearSmoother):
    """
    Least squares with a drift term gamma * tag; predicts at ``prediction_tag``
    (default: the dataset's target tag, i.e. max training tag + 1 unless set).
    """

    name = "drift"

    def __init__(self, prediction_tag: Optional[float] = None) -> None:
        self.prediction_tag = prediction_tag

    def _tag(self, data: TaggedDataset) -> float:
        if self.prediction_tag is not None:
            return float(self.prediction_tag)
        return data.resolved_target_tag()

    def design(self, data: TaggedDataset) -> Tuple[np.ndarray, np.ndarray]:
        return np.column_stack([data.X, data.tags]), np.ones(len(data))

    def query_design(self, X: np.ndarray, data: TaggedDataset) -> np.ndarray:
        X = X.reshape(-1, data.dim)
        return np.column_stack([X, np.full(X.shape[0], self._tag(data))])

    def _model(self, coef: np.ndarray, data: TaggedDataset, deficient: bool) -> FittedModel:
        if deficient:
            logger.warning("drift design is rank deficient; using the minimal-norm solution")
        return LinearModel(
            coef=coef[:-1],
            drift=float(coef[-1]),
            prediction_tag=self._tag(data),
            rank_deficient=deficient,
        )


class Autoregressive(TaggedAlgorithm):
    """Least squares on features plus the previous ``k`` responses (points ordered by tag)."""

    name = "AR"

    def __init__(self, k: int) -> None:
        if k < 0:
            raise DomainError("lag count must be nonnegative")
        self.k = int(k)

    def fit(self, data: TaggedDataset) -> FittedModel:
        n, k = len(data), self.k
        if n <= k:
            raise DomainError(f"autoregressive fit with k={k} needs more than {k} points")
        order = np.argsort(data.tags, kind="stable")
        X, y = np.asarray(data.X)[order], np.asarray(data.y)[order]
        lags = np.column_stack([y[k - j - 1 : n - j - 1] for j in range(k)]) if k else np.zeros((n, 0))
        design = np.column_stack([X[k:], lags])
        coef, _ = _solve(design, y[k:])
        return AutoregressiveModel(
            coef=coef[: data.dim],
            lag_coef=coef[data.dim :],
            trailing=y[::-1][:k].copy(),
        )


class ConstantAlgorithm(TaggedAlgorithm):
    """Ignores the data and always predicts ``value``."""

    name = "constant"
    symmetric = True

    def __init__(self, value: float = 0.0) -> None:
        self.value = float(value)

    def fit(self, data: TaggedDataset) -> FittedModel:
        return ConstantModel(self.value)


def fit_least_squares(data: TaggedDataset) -> FittedModel:
    return LeastSquares().fit(data)


def fit_weighted_least_squares(data: TaggedDataset) -> FittedModel:
    return WeightedLeastSquares().fit(data)


def fit_linear_drift(data: TaggedDataset, prediction_tag: Optional[float] = None) -> FittedModel:
    return LinearDrift(prediction_tag).fit(data)


def fit_autoregressive(data: TaggedDataset, k: int) -> FittedModel:
    return Autoregressive(k).fit(data)


def swap_points(data: TaggedDataset, k: int) -> TaggedDataset:
    """
    Z^k: exchange the (x, y) pairs at 1-based positions k and n+1 of a
    dataset holding n+1 points; tags stay with their positions.
    """
    size = len(data)
    if not 1 <= k <= size:
        raise DomainError(f"swap index {k} outside [1, {size}]")
    if k == size:
        return data
    order = np.arange(size)
    order[k - 1], order[size - 1] = size - 1, k - 1
    return TaggedDataset(
        X=np.asarray(data.X)[order],
        y=np.asarray(data.y)[order],
        tags=data.tags,
        target_tag=data.target_tag,
    )
