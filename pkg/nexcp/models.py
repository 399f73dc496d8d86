from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TaggedPoint:
    x: np.ndarray
    y: float
    tag: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", _readonly(np.array(self.x, dtype=float).reshape(-1)))
        object.__setattr__(self, "y", float(self.y))
        if not np.isfinite(self.tag):
            raise DomainError("tags must be finite")
        object.__setattr__(self, "tag", float(self.tag))


@dataclass(frozen=True)
class TaggedDataset:
    """
    Ordered tagged data points stored column-wise.

    ``target_tag`` is the tag t_{n+1} reserved for the point being predicted;
    algorithms that extrapolate in the tag (linear drift) predict at it.
    """

    X: np.ndarray
    y: np.ndarray
    tags: np.ndarray
    target_tag: Optional[float] = None

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(0, 0)
        y = np.array(self.y, dtype=float).reshape(-1)
        tags = np.array(self.tags, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0] or tags.shape[0] != y.shape[0]:
            raise DomainError("X, y and tags must describe the same number of points")
        if not np.isfinite(tags).all():
            raise DomainError("tags must be finite")
        object.__setattr__(self, "X", _readonly(X))
        object.__setattr__(self, "y", _readonly(y))
        object.__setattr__(self, "tags", _readonly(tags))
        if self.target_tag is not None:
            object.__setattr__(self, "target_tag", float(self.target_tag))

    @classmethod
    def from_points(
        cls, points: Iterable[TaggedPoint], target_tag: Optional[float] = None
    ) -> "TaggedDataset":
        pts = list(points)
        if not pts:
            return cls(X=np.zeros((0, 0)), y=np.zeros(0), tags=np.zeros(0), target_tag=target_tag)
        dims = {p.x.shape[0] for p in pts}
        if len(dims) != 1:
            raise DomainError("all points must share the feature dimension")
        return cls(
            X=np.vstack([p.x for p in pts]),
            y=np.array([p.y for p in pts]),
            tags=np.array([p.tag for p in pts]),
            target_tag=target_tag,
        )

    @classmethod
    def from_arrays(
        cls,
        X: np.ndarray,
        y: np.ndarray,
        tags: Optional[np.ndarray] = None,
        target_tag: Optional[float] = None,
    ) -> "TaggedDataset":
        """Build a dataset; tags default to the time indices 1..n."""
        y = np.asarray(y, dtype=float).reshape(-1)
        if tags is None:
            tags = np.arange(1, y.shape[0] + 1, dtype=float)
        return cls(X=np.asarray(X, dtype=float), y=y, tags=tags, target_tag=target_tag)

    def __len__(self) -> int:
        return int(self.y.shape[0])

    @property
    def dim(self) -> int:
        return int(self.X.shape[1])

    def point(self, i: int) -> TaggedPoint:
        """The i-th point, 1-based."""
        return TaggedPoint(self.X[i - 1], self.y[i - 1], self.tags[i - 1])

    def resolved_target_tag(self) -> float:
        if self.target_tag is not None:
            return self.target_tag
        return float(self.tags.max()) + 1.0 if len(self) else 1.0

    def with_tags(self, tags: Sequence[float], target_tag: Optional[float] = None) -> "TaggedDataset":
        return replace(self, tags=np.asarray(tags, dtype=float), target_tag=target_tag)

    def take(self, positions: Sequence[int]) -> "TaggedDataset":
        """Sub-dataset at 0-based ``positions``, in the given order."""
        idx = np.asarray(positions, dtype=int)
        return replace(self, X=self.X[idx], y=self.y[idx], tags=self.tags[idx])

    def head(self, n: int) -> "TaggedDataset":
        return self.take(np.arange(n))

    def append(self, point: TaggedPoint) -> "TaggedDataset":
        if len(self) and point.x.shape[0] != self.dim:
            raise DomainError("point dimension does not match the dataset")
        X = np.vstack([self.X, point.x]) if len(self) else point.x.reshape(1, -1)
        return replace(
            self,
            X=X,
            y=np.append(self.y, point.y),
            tags=np.append(self.tags, point.tag),
        )


@dataclass(frozen=True)
class ResidualVector:
    values: np.ndarray
    provenance: str = ""

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        if not np.isfinite(values).all() or (values < 0).any():
            raise DomainError("residuals must be finite and nonnegative")
        object.__setattr__(self, "values", _readonly(values))


@dataclass(frozen=True)
class PredictionRegion:
    """
    A prediction interval, a grid-membership set, or an exact union of
    intervals.

    ``lower``/``upper`` are the hull endpoints (NaN when the set is empty);
    ``width`` is the Lebesgue measure (grid sets: accepted count times the
    grid spacing). When ``membership`` is present, ``contains`` runs the
    exact membership test instead of reading the stored representation.
    """

    kind: str
    lower: float
    upper: float
    width: float
    grid: Optional[np.ndarray] = None
    mask: Optional[np.ndarray] = None
    intervals: Tuple[Tuple[float, float], ...] = ()
    membership: Optional[Callable[[float], bool]] = field(default=None, repr=False, compare=False)

    @classmethod
    def interval(cls, lower: float, upper: float) -> "PredictionRegion":
        if lower > upper:
            raise DomainError("interval lower end exceeds upper end")
        return cls(
            kind="interval",
            lower=float(lower),
            upper=float(upper),
            width=float(upper - lower),
            intervals=((float(lower), float(upper)),),
        )

    @classmethod
    def from_grid(
        cls,
        grid: np.ndarray,
        mask: np.ndarray,
        membership: Optional[Callable[[float], bool]] = None,
    ) -> "PredictionRegion":
        grid = _readonly(np.array(grid, dtype=float))
        mask = _readonly(np.array(mask, dtype=bool))
        if grid.shape != mask.shape:
            raise DomainError("grid and mask must have the same length")
        accepted = grid[mask]
        spacing = grid_spacing(grid)
        if accepted.size:
            lower, upper = float(accepted[0]), float(accepted[-1])
        else:
            lower = upper = float("nan")
        return cls(
            kind="grid",
            lower=lower,
            upper=upper,
            width=float(accepted.size) * spacing,
            grid=grid,
            mask=mask,
            membership=membership,
        )

    @classmethod
    def from_intervals(
        cls,
        intervals: Sequence[Tuple[float, float]],
        membership: Optional[Callable[[float], bool]] = None,
    ) -> "PredictionRegion":
        pieces = tuple((float(a), float(b)) for a, b in intervals)
        if pieces:
            lower, upper = pieces[0][0], pieces[-1][1]
        else:
            lower = upper = float("nan")
        return cls(
            kind="union",
            lower=lower,
            upper=upper,
            width=float(sum(b - a for a, b in pieces)),
            intervals=pieces,
            membership=membership,
        )

    @property
    def is_empty(self) -> bool:
        return bool(np.isnan(self.lower))

    def contains(self, y: float) -> bool:
        if self.membership is not None:
            return bool(self.membership(float(y)))
        if self.kind == "grid":
            # Without an exact test, membership is read off the nearest grid point.
            assert self.grid is not None and self.mask is not None
            if self.grid.size == 0:
                return False
            idx = int(np.argmin(np.abs(self.grid - y)))
            return bool(self.mask[idx])
        return any(a <= y <= b for a, b in self.intervals)


def grid_spacing(grid: np.ndarray) -> float:
    if grid.size < 2:
        return 0.0
    return float(grid[-1] - grid[0]) / float(grid.size - 1)


@dataclass(frozen=True)
class StrangenessSet:
    indices: Tuple[int, ...]
    weighted_mass: float
