from .app import create_app
from .conformal import (
    classic_full_conformal,
    classic_jackknife_plus,
    classic_split_conformal,
    full_conformal,
    full_conformal_scores,
    jackknife_plus,
    split_conformal,
    split_conformal_scores,
)
from .models import PredictionRegion, TaggedDataset, TaggedPoint
from .weights import (
    DiscreteDistribution,
    WeightProfile,
    decay_weights,
    draw_swap_index,
    normalize_weights,
    unit_weights,
    weighted_quantile,
)

__all__ = [
    "create_app",
    "classic_full_conformal",
    "classic_jackknife_plus",
    "classic_split_conformal",
    "full_conformal",
    "full_conformal_scores",
    "jackknife_plus",
    "split_conformal",
    "split_conformal_scores",
    "PredictionRegion",
    "TaggedDataset",
    "TaggedPoint",
    "DiscreteDistribution",
    "WeightProfile",
    "decay_weights",
    "draw_swap_index",
    "normalize_weights",
    "unit_weights",
    "weighted_quantile",
]
