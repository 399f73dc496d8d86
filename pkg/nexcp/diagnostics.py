"""
Exact oracles and bound calculators for small discrete instances.

Total variation and mixture distances, the swap lemma checked by full
enumeration, strangeness sets for full conformal and jackknife+, the gap
bounds for drift and changepoints, and the multiplicative Huber bound.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import reduce
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np

from .errors import BoundViolation, DomainError, EnumerationTooLarge
from .models import StrangenessSet
from .streams import FUZZ, substream
from .weights import (
    MASS_TOL,
    DiscreteDistribution,
    WeightProfile,
    decay_weights,
    normalize_weights,
    weighted_quantile,
)

logger = logging.getLogger(__name__)

MassTable = Mapping[object, float]
Marginal = Union[MassTable, DiscreteDistribution]

# Largest joint support lemma1_check enumerates.
ENUMERATION_CAP = 10**6
# Slack on asserted inequalities between floating-point sums.
BOUND_TOL = 1e-12


def _as_table(p: Marginal) -> Dict[object, float]:
    if isinstance(p, DiscreteDistribution):
        merged = p.merged()
        return {float(v): float(m) for v, m in zip(merged.values, merged.masses)}
    table = {k: float(m) for k, m in p.items()}
    if not table:
        raise DomainError("a mass table needs at least one entry")
    masses = np.fromiter(table.values(), dtype=float)
    if not np.isfinite(masses).all() or (masses < 0).any():
        raise DomainError("masses must be finite and nonnegative")
    if abs(float(masses.sum()) - 1.0) > 1e-9:
        raise DomainError("masses must sum to 1")
    return table


def _pair(p: Marginal, q: Marginal) -> Tuple[Dict[object, float], Dict[object, float]]:
    if isinstance(p, DiscreteDistribution) != isinstance(q, DiscreteDistribution):
        raise DomainError("cannot compare a distribution with a mass table")
    return _as_table(p), _as_table(q)


def tv_discrete(p: Marginal, q: Marginal) -> float:
    """Half the L1 distance between ``p`` and ``q`` over their union support."""
    tp, tq = _pair(p, q)
    support = set(tp) | set(tq)
    total = sum(abs(tp.get(x, 0.0) - tq.get(x, 0.0)) for x in support)
    return min(1.0, 0.5 * total)


def dmix_discrete(p: Marginal, q: Marginal) -> float:
    """Smallest t with p = (1 - t) q + t * (some distribution)."""
    tp, tq = _pair(p, q)
    ratio = min(tp.get(x, 0.0) / m for x, m in tq.items() if m > 0)
    return min(1.0, max(0.0, 1.0 - ratio))


@dataclass(frozen=True)
class FiniteJointDistribution:
    """Joint mass table over the product of per-coordinate supports."""

    supports: Tuple[Tuple[object, ...], ...]
    table: np.ndarray

    @classmethod
    def product(cls, marginals: Sequence[Marginal], shared: Sequence[int] = ()) -> "FiniteJointDistribution":
        """
        Product of independent marginals. Coordinates listed in ``shared``
        (0-based) are laid out over their common union support so they can
        be exchanged.
        """
        tables = [_as_table(m) for m in marginals]
        supports: List[Tuple[object, ...]] = [tuple(t) for t in tables]
        if shared:
            union = tuple(dict.fromkeys(x for j in shared for x in supports[j]))
            for j in shared:
                supports[j] = union
        size = math.prod(len(s) for s in supports)
        if size > ENUMERATION_CAP:
            raise EnumerationTooLarge(f"joint support has {size} tuples, cap is {ENUMERATION_CAP}")
        vectors = [np.array([t.get(x, 0.0) for x in s]) for t, s in zip(tables, supports)]
        table = reduce(np.multiply.outer, vectors)
        return cls(supports=tuple(supports), table=np.asarray(table, dtype=float))

    def swapped(self, a: int, b: int) -> "FiniteJointDistribution":
        """Law of the vector with coordinates ``a`` and ``b`` (0-based) exchanged."""
        if self.supports[a] != self.supports[b]:
            raise DomainError("exchanged coordinates must share a support")
        return FiniteJointDistribution(self.supports, np.swapaxes(self.table, a, b))

    def tv(self, other: "FiniteJointDistribution") -> float:
        return 0.5 * float(np.abs(self.table - other.table).sum())


def lemma1_check(marginals: Sequence[Marginal], i: int) -> Tuple[float, float]:
    """
    Exact d_TV(Z, Z^i) for independent coordinates Z_1..Z_{n+1} and the bound
    2d - d^2 with d = d_TV(Z_i, Z_{n+1}); ``i`` is 1-based in [1, n].
    """
    size = len(marginals)
    if size < 2:
        raise DomainError("need at least two coordinates")
    if not 1 <= i <= size - 1:
        raise DomainError(f"index {i} outside [1, {size - 1}]")
    a, b = i - 1, size - 1
    joint = FiniteJointDistribution.product(marginals, shared=(a, b))
    exact = joint.tv(joint.swapped(a, b))
    d = tv_discrete(marginals[a], marginals[b])
    bound = 2.0 * d - d * d
    if exact > bound + BOUND_TOL:
        raise BoundViolation(f"swap distance {exact!r} exceeds bound {bound!r}")
    return exact, bound


def strangeness_full(r: Sequence[float], profile: WeightProfile, alpha: float) -> StrangenessSet:
    """Indices (1-based) whose score exceeds Q_{1-alpha} of the weighted scores."""
    r = np.asarray(r, dtype=float).reshape(-1)
    w = profile.normalized
    if r.shape != w.shape:
        raise DomainError("need one score per normalized weight")
    q = weighted_quantile(DiscreteDistribution(r, w), 1.0 - alpha)
    strange = np.flatnonzero(r > q)
    return StrangenessSet(tuple(int(j) + 1 for j in strange), float(w[strange].sum()))


def strangeness_jackknife(r: np.ndarray, profile: WeightProfile, alpha: float) -> StrangenessSet:
    r = np.asarray(r, dtype=float)
    w = profile.normalized
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise DomainError("jackknife strangeness needs a square matrix")
    if r.shape[0] != w.shape[0]:
        raise DomainError("matrix size does not match the weight profile")
    wins = (r > r.T).astype(float) @ w
    strange = np.flatnonzero(wins >= 1.0 - alpha)
    return StrangenessSet(tuple(int(j) + 1 for j in strange), float(w[strange].sum()))


def _check_rho(rho: float) -> None:
    if not 0.0 < rho < 1.0:
        raise DomainError("rho must lie in (0, 1)")


def drift_gap_bound(epsilon: float, rho: float, n: int) -> Tuple[float, float]:
    """
    Coverage gap under drift d_TV(Z_i, Z_{n+1}) <= epsilon (n+1-i) with
    decay weights: the exact weighted sum and 2 epsilon / (1 - rho).
    """
    _check_rho(rho)
    if epsilon < 0:
        raise DomainError("epsilon must be nonnegative")
    if n < 1:
        raise DomainError("n must be at least 1")
    profile = decay_weights(n, rho)
    lags = np.arange(n, 0, -1, dtype=float)
    exact = float(profile.normalized[:n] @ (2.0 * epsilon * lags))
    closed = 2.0 * epsilon / (1.0 - rho)
    if exact > closed + BOUND_TOL:
        raise BoundViolation(f"drift sum {exact!r} exceeds {closed!r}")
    return exact, closed


def changepoint_gap_bound(rho: float, k: int, n: int) -> Tuple[float, float]:
    """Worst-case gap when the last changepoint was ``k`` steps ago: exact sum and rho^k."""
    _check_rho(rho)
    if not 0 <= k <= n:
        raise DomainError("need 0 <= k <= n")
    w = rho ** np.arange(n, 0, -1, dtype=float)
    exact = float(w[: n - k].sum() / (1.0 + w.sum()))
    closed = rho**k
    if exact > closed + BOUND_TOL:
        raise BoundViolation(f"changepoint sum {exact!r} exceeds {closed!r}")
    return exact, closed


def huber_bound(
    alpha: float, profile: WeightProfile, dmix_values: Sequence[float], factor: int = 1
) -> float:
    """
    Miscoverage bound factor * alpha / (1 - sum_i wbar_i dmix_i) with
    wbar_i = w_i / sum_j w_j; reported as 1 once the denominator reaches 0.
    """
    if factor not in (1, 2):
        raise DomainError("factor must be 1 (split/full) or 2 (jackknife+)")
    d = np.asarray(dmix_values, dtype=float).reshape(-1)
    if d.shape[0] != profile.n:
        raise DomainError("need one contamination distance per training point")
    if (d < 0).any() or (d > 1).any():
        raise DomainError("contamination distances must lie in [0, 1]")
    total = float(profile.raw.sum())
    if total <= 0:
        raise DomainError("weights must not all be zero")
    denom = 1.0 - float(profile.raw @ d) / total
    if denom <= 0:
        return 1.0
    return min(1.0, factor * alpha / denom)


def coverage_gap_bound(profile: WeightProfile, tv_values: Sequence[float]) -> float:
    d = np.asarray(tv_values, dtype=float).reshape(-1)
    if d.shape[0] != profile.n:
        raise DomainError("need one distance per training point")
    if (d < 0).any() or (d > 1).any():
        raise DomainError("distances must lie in [0, 1]")
    return float(profile.normalized[: profile.n] @ d)


def overcoverage_bound(alpha: float, profile: WeightProfile, tv_values: Sequence[float]) -> float:
    """Upper bound on coverage: 1 - alpha + w~_{n+1} + the weighted distance sum."""
    gap = coverage_gap_bound(profile, tv_values)
    return min(1.0, 1.0 - alpha + profile.test_weight + gap)


# ---------------------------------------------------------------------------
# Property suites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PropertyResult:
    name: str
    cases: int
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _scan_quantile(values: np.ndarray, masses: np.ndarray, tau: float) -> float:
    running = 0.0
    for v in np.unique(values):
        running += float(masses[values == v].sum())
        if running >= tau - MASS_TOL:
            return float(v)
    return float(np.max(values))


def _random_profile(rng: np.random.Generator, n: int) -> WeightProfile:
    return normalize_weights(rng.uniform(0.0, 1.0, size=n))


def _quantile_suite(rng: np.random.Generator, cases: int) -> int:
    bad = 0
    for _ in range(cases):
        size = int(rng.integers(1, 12))
        values = rng.integers(-3, 4, size=size).astype(float)
        values[rng.random(size) < 0.1] = np.inf
        values[rng.random(size) < 0.05] = -np.inf
        masses = rng.dirichlet(np.ones(size))
        tau = float(rng.random())
        got = weighted_quantile(DiscreteDistribution(values, masses), tau)
        if got != _scan_quantile(values, masses, tau):
            bad += 1
    return bad


def _strange_full_suite(rng: np.random.Generator, cases: int) -> int:
    bad = 0
    for _ in range(cases):
        n = int(rng.integers(1, 20))
        profile = _random_profile(rng, n)
        r = np.round(rng.exponential(size=n + 1), 1)
        alpha = float(rng.uniform(0.01, 0.99))
        if strangeness_full(r, profile, alpha).weighted_mass > alpha + BOUND_TOL:
            bad += 1
    return bad


def _strange_jackknife_suite(rng: np.random.Generator, cases: int) -> int:
    bad = 0
    for _ in range(cases):
        n = int(rng.integers(1, 12))
        profile = _random_profile(rng, n)
        r = np.round(rng.exponential(size=(n + 1, n + 1)), 1)
        alpha = float(rng.uniform(0.01, 0.99))
        if strangeness_jackknife(r, profile, alpha).weighted_mass > 2 * alpha + BOUND_TOL:
            bad += 1
    return bad


def _random_table(rng: np.random.Generator, support: Sequence[int]) -> Dict[object, float]:
    masses = rng.dirichlet(np.ones(len(support)))
    return dict(zip(support, masses))


def _lemma1_suite(rng: np.random.Generator, cases: int) -> int:
    bad = 0
    for _ in range(cases):
        size = int(rng.integers(2, 5))
        marginals = [
            _random_table(rng, list(range(int(rng.integers(1, 4)))))
            for _ in range(size)
        ]
        i = int(rng.integers(1, size))
        try:
            exact, bound = lemma1_check(marginals, i)
        except BoundViolation:
            bad += 1
            continue
        if bound > 2 * tv_discrete(marginals[i - 1], marginals[-1]) + BOUND_TOL:
            bad += 1
    return bad


def _dmix_suite(rng: np.random.Generator, cases: int) -> int:
    bad = 0
    for _ in range(cases):
        support = list(range(int(rng.integers(1, 8))))
        p = _random_table(rng, support)
        q = _random_table(rng, support)
        for table in (p, q):
            for x in support:
                if rng.random() < 0.2:
                    table[x] = 0.0
            total = sum(table.values())
            if total == 0:
                table[support[0]] = total = 1.0
            for x in support:
                table[x] /= total
        if dmix_discrete(p, q) < tv_discrete(p, q) - BOUND_TOL:
            bad += 1
    return bad


def _drift_sweep() -> Tuple[int, int]:
    cases = bad = 0
    for rho in np.linspace(0.5, 0.99, 20):
        previous = -1.0
        for eps in np.linspace(0.0, 0.05, 20):
            cases += 1
            try:
                exact, _ = drift_gap_bound(float(eps), float(rho), 100)
            except BoundViolation:
                bad += 1
                continue
            if exact < previous:
                bad += 1
            previous = exact
    return cases, bad


def _changepoint_sweep() -> Tuple[int, int]:
    cases = bad = 0
    for rho in np.linspace(0.5, 0.99, 20):
        previous = math.inf
        for k in np.linspace(0, 100, 20).astype(int):
            cases += 1
            try:
                exact, _ = changepoint_gap_bound(float(rho), int(k), 100)
            except BoundViolation:
                bad += 1
                continue
            if exact > previous:
                bad += 1
            previous = exact
    return cases, bad


def run_property_suites(fuzz: int = 10_000, seed: int = 0) -> List[PropertyResult]:
    """Run every property suite with ``fuzz`` random cases per fuzzed property."""
    if fuzz < 1:
        raise DomainError("fuzz budget must be positive")
    results: List[PropertyResult] = []

    fuzzed = [
        ("weighted_quantile matches scan", _quantile_suite, fuzz),
        ("strangeness_full mass <= alpha", _strange_full_suite, fuzz),
        ("strangeness_jackknife mass <= 2 alpha", _strange_jackknife_suite, fuzz),
        ("lemma1 exact <= 2d - d^2", _lemma1_suite, max(1, fuzz // 100)),
        ("dmix >= tv", _dmix_suite, max(1, fuzz // 10)),
    ]
    for name, suite, cases in fuzzed:
        bad = suite(substream(seed, FUZZ, name), cases)
        logger.debug("%s: %d cases, %d violations", name, cases, bad)
        results.append(PropertyResult(name, cases, bad))

    for name, sweep in (
        ("drift bound sweep", _drift_sweep),
        ("changepoint bound sweep", _changepoint_sweep),
    ):
        cases, bad = sweep()
        results.append(PropertyResult(name, cases, bad))
    return results
