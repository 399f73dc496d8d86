"""
Weight normalization, extended-real weighted quantiles and the swap-index draw.

Extended reals are plain IEEE floats: ``-inf`` and ``+inf`` are the two
infinite atoms and compare below/above every finite value. NaN is never a
valid atom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Tuple

import numpy as np

from .errors import DomainError

# Tolerance on total mass and on CDF-versus-level comparisons.
MASS_TOL = 1e-12


def _frozen(values: Iterable[float]) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class WeightProfile:
    """
    Raw weights w_1..w_n and the n+1 normalized weights built from them.

    The last normalized weight belongs to the test point and is always the
    largest one.
    """

    raw: np.ndarray
    normalized: np.ndarray

    @property
    def n(self) -> int:
        return int(self.raw.shape[0])

    @property
    def test_weight(self) -> float:
        return float(self.normalized[-1])

    @property
    def effective_sample_size(self) -> float:
        return 1.0 / self.test_weight


def normalize_weights(raw: Sequence[float]) -> WeightProfile:
    """
    Build a WeightProfile with w~_i = w_i / (w_1 + ... + w_n + 1) and
    w~_{n+1} = 1 / (w_1 + ... + w_n + 1).
    """
    w = np.asarray(raw, dtype=float).reshape(-1)
    if np.isnan(w).any() or (w < 0.0).any() or (w > 1.0).any():
        raise DomainError("every raw weight must lie in [0, 1]")
    total = float(w.sum()) + 1.0
    normalized = np.append(w, 1.0) / total
    return WeightProfile(raw=_frozen(w), normalized=_frozen(normalized))


def unit_weights(n: int) -> WeightProfile:
    return normalize_weights(np.ones(n))


def decay_weights(n: int, rho: float) -> WeightProfile:
    """Weights w_i = rho^(n+1-i) for i = 1..n."""
    if not 0.0 < rho <= 1.0:
        raise DomainError("rho must lie in (0, 1]")
    exponents = np.arange(n, 0, -1, dtype=float)
    return normalize_weights(rho**exponents)


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite atoms on the extended reals with nonnegative masses summing to one."""

    values: np.ndarray
    masses: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).reshape(-1)
        masses = np.asarray(self.masses, dtype=float).reshape(-1)
        if values.shape != masses.shape:
            raise DomainError("values and masses must have the same length")
        if values.size == 0:
            raise DomainError("a distribution needs at least one atom")
        if np.isnan(values).any():
            raise DomainError("atom values must not be NaN")
        if not np.isfinite(masses).all() or (masses < 0.0).any():
            raise DomainError("masses must be finite and nonnegative")
        total = float(masses.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise DomainError(f"masses sum to {total!r}, not 1")
        # Renormalize once inside the tolerance band.
        masses = masses / total
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "masses", _frozen(masses))

    @classmethod
    def from_atoms(cls, atoms: Iterable[Tuple[float, float]]) -> "DiscreteDistribution":
        pairs = list(atoms)
        return cls(
            values=np.array([v for v, _ in pairs], dtype=float),
            masses=np.array([m for _, m in pairs], dtype=float),
        )

    def merged(self) -> "DiscreteDistribution":
        """Equivalent distribution with duplicate values merged."""
        uniq, inverse = np.unique(self.values, return_inverse=True)
        masses = np.bincount(inverse, weights=self.masses, minlength=uniq.size)
        return DiscreteDistribution(values=uniq, masses=masses)

    def cdf(self, v: float) -> float:
        return float(self.masses[self.values <= v].sum())


def _check_tau(tau: float) -> None:
    if math.isnan(tau) or not 0.0 <= tau <= 1.0:
        raise DomainError("tau must lie in [0, 1]")


def quantile_of(values: np.ndarray, masses: np.ndarray, tau: float) -> float:
    """
    Unchecked weighted quantile inf{v : F(v) >= tau} of raw arrays.

    Callers guarantee the masses are valid; used on hot paths.
    """
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(masses[order])
    idx = int(np.searchsorted(cum, tau - MASS_TOL, side="left"))
    if idx >= cum.size:
        idx = cum.size - 1
    return float(values[order[idx]])


def weighted_quantile(dist: DiscreteDistribution, tau: float) -> float:
    """
    Left-continuous generalized inverse of the CDF of ``dist`` at ``tau``.

    Atoms at -inf sort first and atoms at +inf last; at tau = 0 the
    smallest atom value is returned.
    """
    _check_tau(tau)
    return quantile_of(dist.values, dist.masses, tau)


@dataclass(frozen=True)
class SwapDraw:
    """A draw of the swap index K in [1, n+1] (1-based, like the tags)."""

    index: int
    n: int
    uniform: float
    provenance: Tuple[object, ...] = field(default=())

    @property
    def is_identity(self) -> bool:
        return self.index == self.n + 1


def stream_provenance(rng: np.random.Generator) -> Tuple[object, ...]:
    seed_seq = getattr(rng.bit_generator, "seed_seq", None)
    if seed_seq is None:
        seed_seq = getattr(rng.bit_generator, "_seed_seq", None)
    if seed_seq is None:
        return (type(rng.bit_generator).__name__,)
    return (
        type(rng.bit_generator).__name__,
        getattr(seed_seq, "entropy", None),
        tuple(getattr(seed_seq, "spawn_key", ())),
    )


def draw_swap_index(profile: WeightProfile, rng: np.random.Generator) -> SwapDraw:
    """
    Draw K with P(K = i) = w~_i.

    Consumes exactly one double from ``rng`` per call.
    """
    u = float(rng.random())
    cum = np.cumsum(profile.normalized)
    idx = int(np.searchsorted(cum, u, side="right"))
    # u can reach the rounded total; the test index absorbs it.
    idx = min(idx, profile.n)
    return SwapDraw(
        index=idx + 1,
        n=profile.n,
        uniform=u,
        provenance=stream_provenance(rng),
    )
