from __future__ import annotations

from typing import Optional

import click
import numpy as np
from flask import Flask

from .cli import ALPHA_RANGE, handles_errors
from .diagnostics import (
    changepoint_gap_bound,
    coverage_gap_bound,
    drift_gap_bound,
    huber_bound,
    overcoverage_bound,
)
from .utils import format_float
from .weights import decay_weights, unit_weights

OPEN_UNIT = click.FloatRange(0.0, 1.0, min_open=True, max_open=True)


def _echo(**values: float) -> None:
    for name, value in values.items():
        click.echo(f"{name} {format_float(value)}")


def register_bounds_commands(app: Flask) -> None:
    """
    Register the ``bounds`` group: drift, changepoint, huber and gap calculators.
    """

    @app.cli.group("bounds")
    def bounds():
        """Coverage-gap bound calculators."""

    @bounds.command("drift")
    @click.option("--eps", type=click.FloatRange(min=0.0), required=True, help="TV drift per step.")
    @click.option("--rho", type=OPEN_UNIT, required=True)
    @click.option("--n", "n", type=click.IntRange(min=1), default=100, show_default=True)
    @handles_errors
    def drift(eps: float, rho: float, n: int):
        exact, closed = drift_gap_bound(eps, rho, n)
        _echo(exact_sum=exact, closed_form=closed)

    @bounds.command("changepoint")
    @click.option("--rho", type=OPEN_UNIT, required=True)
    @click.option("--k", type=click.IntRange(min=0), required=True, help="Steps since the changepoint.")
    @click.option("--n", "n", type=click.IntRange(min=1), default=100, show_default=True)
    @handles_errors
    def changepoint(rho: float, k: int, n: int):
        exact, closed = changepoint_gap_bound(rho, k, n)
        _echo(exact_sum=exact, closed_form=closed)

    @bounds.command("huber")
    @click.option("--alpha", type=ALPHA_RANGE, default=0.05, show_default=True)
    @click.option("--eps", type=click.FloatRange(0.0, 1.0), required=True, help="Contamination distance.")
    @click.option("--n", "n", type=click.IntRange(min=1), default=100, show_default=True)
    @click.option("--rho", type=OPEN_UNIT, default=None, help="Decay weights (default: unit).")
    @click.option("--factor", type=click.Choice(["1", "2"]), default="1", show_default=True)
    @handles_errors
    def huber(alpha: float, eps: float, n: int, rho: Optional[float], factor: str):
        profile = decay_weights(n, rho) if rho is not None else unit_weights(n)
        _echo(bound=huber_bound(alpha, profile, np.full(n, eps), int(factor)))

    @bounds.command("gap")
    @click.option("--alpha", type=ALPHA_RANGE, default=0.1, show_default=True)
    @click.option("--tv", type=click.FloatRange(0.0, 1.0), required=True, help="TV distance per point.")
    @click.option("--rho", type=click.FloatRange(0.0, 1.0, min_open=True), default=0.99, show_default=True)
    @click.option("--n", "n", type=click.IntRange(min=1), default=100, show_default=True)
    @handles_errors
    def gap(alpha: float, tv: float, rho: float, n: int):
        profile = decay_weights(n, rho)
        tvs = np.full(n, tv)
        _echo(
            coverage_gap=coverage_gap_bound(profile, tvs),
            overcoverage=overcoverage_bound(alpha, profile, tvs),
        )
