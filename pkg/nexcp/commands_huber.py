from __future__ import annotations

from typing import Optional

import click
import numpy as np
from flask import Flask, current_app

from .cli import ALPHA_RANGE, SEED_RANGE, handles_errors
from .experiments import (
    BETA_START,
    contamination_sampler,
    linear_gaussian_target,
    run_huber_experiment,
)
from .streams import CONTAMINATION, substream
from .utils import format_float
from .weights import decay_weights, unit_weights


def _true_model(X: np.ndarray) -> np.ndarray:
    return np.asarray(X) @ BETA_START


def register_huber_commands(app: Flask) -> None:
    @app.cli.command("huber")
    @click.option("--epsilon", type=click.FloatRange(0.0, 1.0, max_open=True), default=0.1, show_default=True)
    @click.option("--alpha", type=ALPHA_RANGE, default=0.05, show_default=True)
    @click.option("--n", "n", type=click.IntRange(min=1), default=100, show_default=True)
    @click.option("--trials", type=click.IntRange(min=1), default=5000, show_default=True)
    @click.option("--seed", type=SEED_RANGE, default=None)
    @click.option("--mode", type=click.Choice(["shift", "collapse"]), default="shift", show_default=True)
    @click.option("--shift", type=float, default=100.0, show_default=True)
    @click.option("--method", type=click.Choice(["split", "jackknife"]), default="split", show_default=True)
    @click.option("--rho", type=click.FloatRange(0.0, 1.0, min_open=True), default=None, help="Decay weights (default: unit).")
    @handles_errors
    def huber(epsilon, alpha, n, trials, seed, mode, shift, method, rho: Optional[float]):
        """Monte Carlo miscoverage under Huber contamination against the multiplicative bound."""
        seed = current_app.config["SEED"] if seed is None else seed
        profile = decay_weights(n, rho) if rho is not None else unit_weights(n)
        target = linear_gaussian_target()
        result = run_huber_experiment(
            target,
            contamination_sampler(target, mode, _true_model, shift),
            epsilon,
            n,
            alpha,
            profile,
            trials,
            substream(seed, CONTAMINATION),
            model=_true_model,
            method=method,
            check=False,
        )
        click.echo(f"miscoverage {format_float(result.miscoverage)}")
        click.echo(f"bound {format_float(result.bound)}")
        click.echo(f"standard_error {format_float(result.standard_error)}")
        if result.miscoverage > result.bound + 3 * result.standard_error:
            raise click.ClickException("empirical miscoverage exceeds the bound by more than 3 SE")
