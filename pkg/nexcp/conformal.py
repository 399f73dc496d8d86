"""
Non-exchangeable split conformal, full conformal and jackknife+.

All three methods take weights through a WeightProfile; unit weights give the
classic exchangeable methods, which are also implemented separately from order
statistics (``classic_*``) and serve as reference implementations.

Full conformal and jackknife+ draw one swap index K per call and fit on the
dataset with the test point and point K exchanged (tags stay in place).
"""

from __future__ import annotations

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError
from .models import PredictionRegion, ResidualVector, TaggedDataset, TaggedPoint
from .regression import LinearSmoother, TaggedAlgorithm, swap_points
from .weights import MASS_TOL, SwapDraw, WeightProfile, draw_swap_index, quantile_of

logger = logging.getLogger(__name__)

ScoreFunction = Callable[[np.ndarray, float], float]
ScoreAlgorithm = Callable[[TaggedDataset], ScoreFunction]

DEFAULT_GRID_SIZE = 1000
DEFAULT_GRID_PADDING = 0.5


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")


def _check_profile(profile: WeightProfile, n: int) -> None:
    if profile.n != n:
        raise DomainError(f"weight profile has {profile.n} weights for {n} points")


def default_grid(
    y: np.ndarray, size: int = DEFAULT_GRID_SIZE, padding: float = DEFAULT_GRID_PADDING
) -> np.ndarray:
    """Equally spaced candidates over [min y - padding*range, max y + padding*range]."""
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise DomainError("cannot build a grid from an empty response vector")
    if size < 1:
        raise DomainError("grid size must be positive")
    lo, hi = float(y.min()), float(y.max())
    span = hi - lo if hi > lo else 1.0
    return np.linspace(lo - padding * span, hi + padding * span, size)


def _augment(train: TaggedDataset, test_x: np.ndarray, y: float) -> TaggedDataset:
    """Training data followed by the test point (test_x, y) carrying tag t_{n+1}."""
    target = train.resolved_target_tag()
    data = train.append(TaggedPoint(test_x, y, target)) if len(train) else TaggedDataset.from_points(
        [TaggedPoint(test_x, y, target)]
    )
    return data.with_tags(data.tags, target_tag=target)


# ---------------------------------------------------------------------------
# Split conformal
# ---------------------------------------------------------------------------


def split_conformal(
    residuals: Sequence[float],
    point_prediction: float,
    profile: WeightProfile,
    alpha: float,
) -> PredictionRegion:
    _check_alpha(alpha)
    r = np.asarray(residuals, dtype=float).reshape(-1)
    _check_profile(profile, r.size)
    if (r < 0).any() or np.isnan(r).any():
        raise DomainError("residuals must be nonnegative")
    q = quantile_of(np.append(r, np.inf), profile.normalized, 1.0 - alpha)
    return PredictionRegion.interval(point_prediction - q, point_prediction + q)


def split_conformal_scores(
    scores: Sequence[float],
    score_at: Callable[[float], float],
    profile: WeightProfile,
    alpha: float,
    grid: np.ndarray,
) -> PredictionRegion:
    _check_alpha(alpha)
    s = np.asarray(scores, dtype=float).reshape(-1)
    _check_profile(profile, s.size)
    q = quantile_of(np.append(s, np.inf), profile.normalized, 1.0 - alpha)

    def membership(y: float) -> bool:
        return score_at(y) <= q

    grid = np.asarray(grid, dtype=float)
    mask = np.array([membership(float(y)) for y in grid], dtype=bool)
    return PredictionRegion.from_grid(grid, mask, membership)


# ---------------------------------------------------------------------------
# Full conformal
# ---------------------------------------------------------------------------


def residual_score(alg: TaggedAlgorithm) -> ScoreAlgorithm:
    """Absolute-residual score |y - mu(x)| of the model ``alg`` fits."""

    def score_alg(data: TaggedDataset) -> ScoreFunction:
        model = alg.fit(data)
        return lambda x, y: abs(y - model.predict(x))

    return score_alg


def full_scores(
    train: TaggedDataset,
    test_x: np.ndarray,
    y: float,
    score_alg: ScoreAlgorithm,
    k: int,
) -> np.ndarray:
    """Scores S^{y,k}_1..S^{y,k}_{n+1} of the original points under the model fit on Z^{y,k}."""
    data = _augment(train, test_x, y)
    score = score_alg(swap_points(data, k))
    return np.array([score(data.X[i], float(data.y[i])) for i in range(len(data))])


def full_residuals(
    train: TaggedDataset, test_x: np.ndarray, y: float, alg: TaggedAlgorithm, k: int
) -> ResidualVector:
    values = full_scores(train, test_x, y, residual_score(alg), k)
    return ResidualVector(values, provenance=f"full conformal {alg.name}, K={k}")


def _self_inclusive_accept(scores: np.ndarray, weights: np.ndarray, alpha: float) -> bool:
    return bool(scores[-1] <= quantile_of(scores, weights, 1.0 - alpha))


class AffineResiduals:
    """
    Residuals |c_i - d_i y| of the n+1 original points as functions of the
    hypothesized response y, for a linear smoother fit on Z^{y,K}.
    """

    def __init__(self, alg: LinearSmoother, train: TaggedDataset, test_x: np.ndarray, k: int):
        n = len(train)
        data = _augment(train, test_x, 0.0)
        swapped = swap_points(data, k)
        a, b = alg.affine_predictions(swapped, k - 1, data.X)
        self.n = n
        self.c = np.append(np.asarray(train.y) - a[:n], a[n])
        self.d = np.append(b[:n], 1.0 - b[n])

    def residuals(self, y: float) -> np.ndarray:
        return np.abs(self.c - self.d * y)

    def accepts(self, y: float, weights: np.ndarray, alpha: float) -> bool:
        return _self_inclusive_accept(self.residuals(y), weights, alpha)

    def accepts_grid(self, grid: np.ndarray, weights: np.ndarray, alpha: float) -> np.ndarray:
        R = np.abs(self.c[:, None] - self.d[:, None] * grid[None, :])
        below = R[: self.n] < R[self.n][None, :]
        mass = weights[: self.n] @ below
        return mass < (1.0 - alpha) - MASS_TOL

    def accepted_intervals(self, weights: np.ndarray, alpha: float) -> List[Tuple[float, float]]:
        """
        Exact accepted set as a union of intervals.

        Point i counts against y when R_i(y) < R_{n+1}(y), i.e. when
        L1_i(y) * L2_i(y) < 0 with L1 = (c_i - c_t) - (d_i - d_t) y and
        L2 = (c_i + c_t) - (d_i + d_t) y; each root of L1 or L2 toggles it.
        """
        n = self.n
        c, d = self.c[:n], self.d[:n]
        ct, dt = self.c[n], self.d[n]
        w = weights[:n]
        p1, s1 = c - ct, d - dt
        p2, s2 = c + ct, d + dt
        dead = ((s1 == 0) & (p1 == 0)) | ((s2 == 0) & (p2 == 0))
        sign1 = np.where(s1 != 0, np.sign(s1), np.sign(p1))
        sign2 = np.where(s2 != 0, np.sign(s2), np.sign(p2))
        initial = (sign1 * sign2 < 0) & ~dead

        has1 = (s1 != 0) & ~dead
        has2 = (s2 != 0) & ~dead
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = np.where(has1, p1 / np.where(s1 != 0, s1, 1.0), np.inf)
            r2 = np.where(has2, p2 / np.where(s2 != 0, s2, 1.0), np.inf)
        first = np.minimum(r1, r2)
        second = np.maximum(r1, r2)
        step = np.where(initial, -w, w)

        locs = np.concatenate([first[has1 | has2], second[has1 & has2]])
        deltas = np.concatenate([step[has1 | has2], -step[has1 & has2]])
        base = float(w[initial].sum())
        threshold = (1.0 - alpha) - MASS_TOL

        if locs.size == 0:
            return [(-math.inf, math.inf)] if base < threshold else []

        order = np.argsort(locs, kind="stable")
        locs, deltas = locs[order], deltas[order]
        running = base + np.cumsum(deltas)
        uniq, starts = np.unique(locs, return_index=True)
        ends = np.append(starts[1:], locs.size) - 1
        after = running[ends]

        bounds = np.concatenate([[-math.inf], uniq, [math.inf]])
        levels = np.concatenate([[base], after])
        accepted = levels < threshold

        intervals: List[Tuple[float, float]] = []
        for j in np.flatnonzero(accepted):
            lo, hi = float(bounds[j]), float(bounds[j + 1])
            if intervals and intervals[-1][1] == lo:
                intervals[-1] = (intervals[-1][0], hi)
            else:
                intervals.append((lo, hi))
        return intervals


def full_conformal_scores(
    train: TaggedDataset,
    test_x: np.ndarray,
    score_alg: ScoreAlgorithm,
    profile: WeightProfile,
    alpha: float,
    grid: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
    *,
    swap: Optional[SwapDraw] = None,
) -> PredictionRegion:
    _check_alpha(alpha)
    _check_profile(profile, len(train))
    draw = swap if swap is not None else draw_swap_index(profile, _require_rng(rng))
    weights = profile.normalized
    if grid is None:
        grid = default_grid(train.y)
    grid = np.asarray(grid, dtype=float)

    def membership(y: float) -> bool:
        scores = full_scores(train, test_x, y, score_alg, draw.index)
        return _self_inclusive_accept(scores, weights, alpha)

    mask = np.array([membership(float(y)) for y in grid], dtype=bool)
    return PredictionRegion.from_grid(grid, mask, membership)


def full_conformal(
    train: TaggedDataset,
    test_x: np.ndarray,
    alg: TaggedAlgorithm,
    profile: WeightProfile,
    alpha: float,
    grid: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
    *,
    fast: bool = False,
    swap: Optional[SwapDraw] = None,
) -> PredictionRegion:
    """
    Weighted full conformal set {y : R^{y,K}_{n+1} <= Q_{1-alpha}(sum_i w~_i delta_{R^{y,K}_i})}.

    ``contains`` on the result runs the membership test exactly at any y.
    Linear smoothers are evaluated through their affine residuals; with
    ``fast`` the set is returned as exact intervals instead of grid cells.
    """
    _check_alpha(alpha)
    _check_profile(profile, len(train))
    draw = swap if swap is not None else draw_swap_index(profile, _require_rng(rng))
    weights = profile.normalized

    if not isinstance(alg, LinearSmoother):
        if fast:
            logger.warning("fast path needs a linear smoother; %s falls back to the grid", alg.name)
        return full_conformal_scores(
            train, test_x, residual_score(alg), profile, alpha, grid, swap=draw
        )

    affine = AffineResiduals(alg, train, test_x, draw.index)

    def membership(y: float) -> bool:
        return affine.accepts(y, weights, alpha)

    if fast:
        return PredictionRegion.from_intervals(affine.accepted_intervals(weights, alpha), membership)
    if grid is None:
        grid = default_grid(train.y)
    grid = np.asarray(grid, dtype=float)
    return PredictionRegion.from_grid(grid, affine.accepts_grid(grid, weights, alpha), membership)


# ---------------------------------------------------------------------------
# Jackknife+
# ---------------------------------------------------------------------------


def loo_predictions(
    train: TaggedDataset, test_x: np.ndarray, alg: TaggedAlgorithm, k: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Leave-one-out test predictions mu^k_{-i}(x) and residuals R^{k,LOO}_i.

    Model i is fit on Z^k without the positions holding point i and the test
    point, so point k (if k <= n) carries tag t_{n+1}. An empty fitting set
    (n = 1) yields an infinite residual.
    """
    n = len(train)
    data = _augment(train, test_x, math.nan)
    swapped = swap_points(data, k)
    owner = np.arange(n + 1)
    owner[k - 1], owner[n] = n, k - 1
    mu = np.empty(n)
    loo = np.empty(n)
    for i in range(n):
        keep = np.flatnonzero((owner != i) & (owner != n))
        if keep.size == 0:
            mu[i], loo[i] = 0.0, math.inf
            continue
        model = alg.fit(swapped.take(keep))
        mu[i] = model.predict(test_x)
        loo[i] = abs(train.y[i] - model.predict(train.X[i]))
    return mu, loo


def jackknife_plus(
    train: TaggedDataset,
    test_x: np.ndarray,
    alg: TaggedAlgorithm,
    profile: WeightProfile,
    alpha: float,
    rng: Optional[np.random.Generator] = None,
    *,
    swap: Optional[SwapDraw] = None,
) -> PredictionRegion:
    _check_alpha(alpha)
    n = len(train)
    if n == 0:
        raise DomainError("jackknife+ needs at least one training point")
    _check_profile(profile, n)
    draw = swap if swap is not None else draw_swap_index(profile, _require_rng(rng))
    mu, loo = loo_predictions(train, test_x, alg, draw.index)
    weights = profile.normalized
    lower = quantile_of(np.append(mu - loo, -np.inf), weights, alpha)
    upper = quantile_of(np.append(mu + loo, np.inf), weights, 1.0 - alpha)
    if lower > upper:
        return PredictionRegion.from_intervals([])
    return PredictionRegion.interval(lower, upper)


# ---------------------------------------------------------------------------
# Classic methods from order statistics
# ---------------------------------------------------------------------------


def _rank(level: float, n: int) -> int:
    # ceil with slack for products such as 0.9 * 10 landing just above 9.
    return int(math.ceil(level * (n + 1) - 1e-9))


def classic_split_conformal(
    residuals: Sequence[float], point_prediction: float, alpha: float
) -> PredictionRegion:
    _check_alpha(alpha)
    r = np.sort(np.asarray(residuals, dtype=float))
    k = _rank(1.0 - alpha, r.size)
    q = float(r[k - 1]) if k <= r.size else math.inf
    return PredictionRegion.interval(point_prediction - q, point_prediction + q)


def classic_full_conformal(
    train: TaggedDataset,
    test_x: np.ndarray,
    alg: TaggedAlgorithm,
    alpha: float,
    grid: np.ndarray,
) -> PredictionRegion:
    _check_alpha(alpha)
    n = len(train)
    k = _rank(1.0 - alpha, n)

    def membership(y: float) -> bool:
        data = _augment(train, test_x, y)
        model = alg.fit(data)
        r = np.abs(np.asarray(data.y) - model.predict_many(data.X))
        return bool(r[-1] <= np.sort(r)[k - 1])

    grid = np.asarray(grid, dtype=float)
    mask = np.array([membership(float(y)) for y in grid], dtype=bool)
    return PredictionRegion.from_grid(grid, mask, membership)


def classic_jackknife_plus(
    train: TaggedDataset, test_x: np.ndarray, alg: TaggedAlgorithm, alpha: float
) -> PredictionRegion:
    _check_alpha(alpha)
    n = len(train)
    if n == 0:
        raise DomainError("jackknife+ needs at least one training point")
    mu, loo = loo_predictions(train, test_x, alg, n + 1)
    lows, highs = np.sort(mu - loo), np.sort(mu + loo)
    m = _rank(alpha, n) - 1
    k = _rank(1.0 - alpha, n)
    lower = float(lows[m - 1]) if m >= 1 else -math.inf
    upper = float(highs[k - 1]) if k <= n else math.inf
    if lower > upper:
        return PredictionRegion.from_intervals([])
    return PredictionRegion.interval(lower, upper)


def _require_rng(rng: Optional[np.random.Generator]) -> np.random.Generator:
    if rng is None:
        raise DomainError("a random stream is needed to draw the swap index")
    return rng
