"""
Simulation settings, the sequential prediction loop and the Huber
contamination experiment.

Every random draw comes from a substream keyed by (seed, trial, ...), so a
trial's data and swap indices do not depend on how many methods run or on
the order in which trials execute.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .conformal import default_grid, full_conformal, jackknife_plus, split_conformal
from .diagnostics import huber_bound
from .errors import BoundViolation, DomainError
from .models import PredictionRegion, TaggedDataset
from .regression import (
    LeastSquares,
    LinearDrift,
    TaggedAlgorithm,
    WeightedLeastSquares,
)
from .streams import COVARIATES, NOISE, SWAP, substream
from .weights import WeightProfile, decay_weights, unit_weights

logger = logging.getLogger(__name__)

RECORD_COLUMNS = ["trial", "time", "method", "covered", "width"]


# ---------------------------------------------------------------------------
# Settings
# ---------------------------------------------------------------------------

BETA_START = np.array([2.0, 1.0, 0.0, 0.0])
BETA_MIDDLE = np.array([0.0, -2.0, -1.0, 0.0])
BETA_END = np.array([0.0, 0.0, 2.0, 1.0])
SETTING2_BREAKS = (500, 1500)


@dataclass(frozen=True)
class SimulationSetting:
    """
    Setting 1: fixed coefficients. Setting 2: two changepoints, after points
    500 and 1500 whenever N > 1500, otherwise at N/4 and 3N/4. Setting 3:
    coefficients interpolated linearly from the first to the last time point.
    """

    setting_id: int
    n: int = 2000
    noise: float = 1.0

    def __post_init__(self) -> None:
        if self.setting_id not in (1, 2, 3):
            raise DomainError("setting must be 1, 2 or 3")
        if self.n < 1:
            raise DomainError("N must be positive")

    @property
    def dim(self) -> int:
        return BETA_START.shape[0]

    @property
    def breaks(self) -> Tuple[int, int]:
        if self.n > SETTING2_BREAKS[1]:
            return SETTING2_BREAKS
        return round(self.n / 4), round(3 * self.n / 4)


def beta_schedule(setting: SimulationSetting) -> np.ndarray:
    """Row i-1 holds beta^(i) for i = 1..N."""
    n = setting.n
    if setting.setting_id == 1:
        return np.tile(BETA_START, (n, 1))
    if setting.setting_id == 2:
        first, second = setting.breaks
        times = np.arange(1, n + 1)
        out = np.tile(BETA_END, (n, 1))
        out[times <= second] = BETA_MIDDLE
        out[times <= first] = BETA_START
        return out
    frac = np.arange(n, dtype=float) / (n - 1) if n > 1 else np.zeros(1)
    return BETA_START + frac[:, None] * (BETA_END - BETA_START)


def generate_setting(
    setting: SimulationSetting,
    rng: np.random.Generator,
    noise_rng: Optional[np.random.Generator] = None,
) -> TaggedDataset:
    """N points with X_i ~ N(0, I_4) and Y_i = X_i'beta^(i) + noise, tagged 1..N."""
    X = rng.standard_normal((setting.n, setting.dim))
    eps = (noise_rng if noise_rng is not None else rng).standard_normal(setting.n)
    y = np.einsum("ij,ij->i", X, beta_schedule(setting)) + setting.noise * eps
    return TaggedDataset.from_arrays(X, y)


def trial_data(setting: SimulationSetting, seed: int, trial: int) -> TaggedDataset:
    return generate_setting(
        setting,
        substream(seed, trial, COVARIATES),
        substream(seed, trial, NOISE),
    )


# ---------------------------------------------------------------------------
# Methods
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SequentialConfig:
    alpha: float = 0.1
    rho: float = 0.99
    burn_in: int = 100
    grid_size: int = 1000
    grid_padding: float = 0.5
    fast: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie in (0, 1)")
        if not 0.0 < self.rho <= 1.0:
            raise DomainError("rho must lie in (0, 1]")
        if self.burn_in < 1:
            raise DomainError("burn-in must be at least 1")
        if self.grid_size < 2:
            raise DomainError("grid needs at least two points")


@dataclass(frozen=True)
class MethodSpec:
    """
    One configured method: the conformal wrapper (``cp`` for full conformal,
    ``jk`` for jackknife+), whether weights decay, how training points are
    tagged (``none``, ``decay`` or ``time``) and the algorithm.
    """

    name: str
    wrapper: str
    weighted: bool
    tagging: str
    algorithm: Callable[[], TaggedAlgorithm]

    def profile(self, n: int, rho: float) -> WeightProfile:
        return decay_weights(n, rho) if self.weighted else unit_weights(n)

    def tag(self, train: TaggedDataset, rho: float) -> TaggedDataset:
        n = len(train)
        if self.tagging == "decay":
            return train.with_tags(rho ** np.arange(n, 0, -1, dtype=float), target_tag=1.0)
        if self.tagging == "time":
            return train.with_tags(np.arange(1, n + 1, dtype=float), target_tag=n + 1.0)
        return train

    def predict(
        self,
        train: TaggedDataset,
        test_x: np.ndarray,
        config: SequentialConfig,
        rng: np.random.Generator,
    ) -> PredictionRegion:
        n = len(train)
        profile = self.profile(n, config.rho)
        tagged = self.tag(train, config.rho)
        alg = self.algorithm()
        if self.wrapper == "jk":
            return jackknife_plus(tagged, test_x, alg, profile, config.alpha, rng)
        grid = None if config.fast else default_grid(train.y, config.grid_size, config.grid_padding)
        return full_conformal(tagged, test_x, alg, profile, config.alpha, grid, rng, fast=config.fast)


METHODS: Dict[str, MethodSpec] = {
    spec.name: spec
    for spec in (
        MethodSpec("CP+LS", "cp", False, "none", LeastSquares),
        MethodSpec("nex-CP+LS", "cp", True, "none", LeastSquares),
        MethodSpec("nex-CP+WLS", "cp", True, "decay", WeightedLeastSquares),
        MethodSpec("nex-CP+drift", "cp", True, "time", LinearDrift),
        MethodSpec("nex-JK+LS", "jk", True, "none", LeastSquares),
        MethodSpec("nex-JK+WLS", "jk", True, "decay", WeightedLeastSquares),
    )
}

DEFAULT_METHODS = ("CP+LS", "nex-CP+LS", "nex-CP+WLS")


def resolve_methods(names: Sequence[str]) -> List[MethodSpec]:
    unknown = [name for name in names if name not in METHODS]
    if unknown:
        raise DomainError(f"unknown methods: {', '.join(unknown)}")
    if not names:
        raise DomainError("at least one method is required")
    return [METHODS[name] for name in names]


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def rolling_mean(series: Sequence[float], window: int) -> np.ndarray:
    """Trailing mean: entry j averages series[j .. j + window - 1]."""
    x = np.asarray(series, dtype=float).reshape(-1)
    if window < 1:
        raise DomainError("window must be at least 1")
    if window > x.size:
        raise DomainError(f"window {window} exceeds series length {x.size}")
    return np.lib.stride_tricks.sliding_window_view(x, window).mean(axis=1)


@dataclass(frozen=True)
class ExperimentReport:
    records: pd.DataFrame
    summary: pd.DataFrame
    rolling: pd.DataFrame
    window: int

    @classmethod
    def from_records(cls, records: pd.DataFrame, window: int) -> "ExperimentReport":
        records = records[RECORD_COLUMNS].reset_index(drop=True)
        grouped = records.groupby("method", sort=False)
        summary = pd.DataFrame(
            {
                "method": list(grouped.groups),
                "mean_coverage": grouped["covered"].mean().to_numpy(dtype=float),
                "mean_width": grouped["width"].mean().to_numpy(dtype=float),
            }
        )
        frames = []
        for method, rows in grouped:
            per_time = rows.groupby("time", sort=True)[["covered", "width"]].mean()
            times = per_time.index.to_numpy()
            frames.append(
                pd.DataFrame(
                    {
                        "time": times[window - 1 :],
                        "method": method,
                        "rolling_coverage": rolling_mean(per_time["covered"], window),
                        "rolling_width": rolling_mean(per_time["width"], window),
                    }
                )
            )
        rolling = pd.concat(frames, ignore_index=True)
        return cls(records=records, summary=summary, rolling=rolling, window=window)

    def mean_coverage(self, method: str) -> float:
        row = self.summary.loc[self.summary["method"] == method, "mean_coverage"]
        return float(row.iloc[0])

    def mean_width(self, method: str) -> float:
        row = self.summary.loc[self.summary["method"] == method, "mean_width"]
        return float(row.iloc[0])


def sequential_records(
    data: TaggedDataset,
    methods: Sequence[MethodSpec],
    config: SequentialConfig,
    seed: int,
    trial: int = 1,
) -> pd.DataFrame:
    """
    For n = burn_in..N-1: train on points 1..n, predict point n+1 with each
    method and record whether it is covered and the region's width.
    """
    total = len(data)
    if config.burn_in >= total:
        raise DomainError(f"burn-in {config.burn_in} leaves no test points among {total}")
    rows: Dict[str, list] = {name: [] for name in RECORD_COLUMNS}
    for n in range(config.burn_in, total):
        train = data.head(n)
        test = data.point(n + 1)
        for spec in methods:
            rng = substream(seed, trial, n, spec.name, SWAP)
            region = spec.predict(train, test.x, config, rng)
            rows["trial"].append(trial)
            rows["time"].append(n + 1)
            rows["method"].append(spec.name)
            rows["covered"].append(int(region.contains(test.y)))
            rows["width"].append(float(region.width))
    return pd.DataFrame(rows, columns=RECORD_COLUMNS)


def run_sequential(
    data: TaggedDataset,
    methods: Sequence[MethodSpec],
    config: SequentialConfig,
    seed: int,
    window: int,
    trial: int = 1,
) -> ExperimentReport:
    records = sequential_records(data, methods, config, seed, trial)
    return ExperimentReport.from_records(records, window)


def run_trials(
    setting: SimulationSetting,
    methods: Sequence[MethodSpec],
    config: SequentialConfig,
    seed: int,
    trials: int,
    window: int,
    threads: int = 1,
) -> ExperimentReport:
    """Run trials 1..``trials`` (concurrently when threads > 1) and merge them in trial order."""
    if trials < 1:
        raise DomainError("need at least one trial")

    def one(trial: int) -> pd.DataFrame:
        frame = sequential_records(trial_data(setting, seed, trial), methods, config, seed, trial)
        logger.info("trial %d/%d finished", trial, trials)
        return frame

    numbers = range(1, trials + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            frames = list(pool.map(one, numbers))
    else:
        frames = [one(trial) for trial in numbers]
    return ExperimentReport.from_records(pd.concat(frames, ignore_index=True), window)


# ---------------------------------------------------------------------------
# Huber contamination
# ---------------------------------------------------------------------------

Sampler = Callable[[np.random.Generator, int], Tuple[np.ndarray, np.ndarray]]


def linear_gaussian_target(beta: Sequence[float] = tuple(BETA_START), noise: float = 1.0) -> Sampler:
    coef = np.asarray(beta, dtype=float)

    def sample(rng: np.random.Generator, size: int) -> Tuple[np.ndarray, np.ndarray]:
        X = rng.standard_normal((size, coef.shape[0]))
        return X, X @ coef + noise * rng.standard_normal(size)

    return sample


def contamination_sampler(
    target: Sampler, mode: str, model: Callable[[np.ndarray], np.ndarray], shift: float = 100.0
) -> Sampler:
    """
    ``shift``: target draws with the response moved by ``shift``.
    ``collapse``: the response is set to the model's prediction (residual 0).
    """
    if mode not in ("shift", "collapse"):
        raise DomainError("contamination mode must be 'shift' or 'collapse'")

    def sample(rng: np.random.Generator, size: int) -> Tuple[np.ndarray, np.ndarray]:
        X, y = target(rng, size)
        if mode == "shift":
            return X, y + shift
        return X, model(X)

    return sample


@dataclass(frozen=True)
class HuberResult:
    miscoverage: float
    bound: float
    standard_error: float
    trials: int

    def __iter__(self):
        return iter((self.miscoverage, self.bound))


def binomial_se(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def run_huber_experiment(
    target: Sampler,
    contamination: Sampler,
    epsilon: float,
    n: int,
    alpha: float,
    profile: WeightProfile,
    trials: int,
    rng: np.random.Generator,
    *,
    model: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    method: str = "split",
    check: bool = True,
) -> HuberResult:
    """
    Draw n training points from (1 - epsilon) target + epsilon contamination
    and a test point from the target, run nex split conformal (residuals of
    the pre-fitted ``model``) or nex jackknife+ (least squares), and compare
    the empirical miscoverage with the multiplicative bound.
    """
    if not 0.0 <= epsilon < 1.0:
        raise DomainError("epsilon must lie in [0, 1)")
    if profile.n != n:
        raise DomainError("weight profile must hold n weights")
    if trials < 1:
        raise DomainError("need at least one trial")
    if method not in ("split", "jackknife"):
        raise DomainError("method must be 'split' or 'jackknife'")
    if method == "split" and model is None:
        raise DomainError("split conformal needs a pre-fitted model")

    misses = 0
    for _ in range(trials):
        X, y = target(rng, n)
        flip = rng.random(n) < epsilon
        if flip.any():
            Xc, yc = contamination(rng, int(flip.sum()))
            X[flip], y[flip] = Xc, yc
        x_test, y_test = target(rng, 1)
        if method == "split":
            residuals = np.abs(y - model(X))
            region = split_conformal(residuals, float(model(x_test)[0]), profile, alpha)
        else:
            train = TaggedDataset.from_arrays(X, y)
            region = jackknife_plus(train, x_test[0], LeastSquares(), profile, alpha, rng)
        misses += int(not region.contains(float(y_test[0])))

    factor = 1 if method == "split" else 2
    bound = huber_bound(alpha, profile, np.full(n, epsilon), factor)
    miscoverage = misses / trials
    se = binomial_se(bound, trials)
    if check and miscoverage > bound + 3 * se:
        raise BoundViolation(f"miscoverage {miscoverage!r} exceeds {bound!r} + 3 SE")
    return HuberResult(miscoverage=miscoverage, bound=bound, standard_error=se, trials=trials)
