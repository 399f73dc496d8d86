"""
Shared plumbing for the command groups: the validated run configuration,
common click options and the translation of library errors into exit codes.
"""

from __future__ import annotations

import contextlib
import functools
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Optional, Tuple

import click
from flask import current_app

from .errors import NexcpError
from .experiments import DEFAULT_METHODS, METHODS, SequentialConfig

SEED_RANGE = click.IntRange(0, 2**64 - 1)
ALPHA_RANGE = click.FloatRange(0.0, 1.0, min_open=True, max_open=True)
RHO_RANGE = click.FloatRange(0.0, 1.0, min_open=True)


@dataclass(frozen=True)
class RunConfig:
    command: str
    alpha: float
    rho: float
    trials: int
    seed: int
    n: int
    grid_size: int
    grid_padding: float
    burn_in: int
    window: int
    methods: Tuple[str, ...]
    out: str
    threads: int = 1
    fast: bool = False
    permute: bool = False
    data_path: Optional[str] = None

    def __post_init__(self) -> None:
        errors = []
        if not 0.0 < self.alpha < 1.0:
            errors.append("alpha must lie in (0, 1)")
        if not 0.0 < self.rho <= 1.0:
            errors.append("rho must lie in (0, 1]")
        if self.trials < 1:
            errors.append("trials must be at least 1")
        if not 0 <= self.seed < 2**64:
            errors.append("seed must be a 64-bit unsigned value")
        if self.threads < 1:
            errors.append("threads must be at least 1")
        if self.window < 1:
            errors.append("window must be at least 1")
        if self.burn_in < 1:
            errors.append("burn-in must be at least 1")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            errors.append(f"unknown methods: {', '.join(unknown)}")
        if not self.methods:
            errors.append("at least one method is required")
        if errors:
            raise click.UsageError("; ".join(errors))

    def sequential(self) -> SequentialConfig:
        return SequentialConfig(
            alpha=self.alpha,
            rho=self.rho,
            burn_in=self.burn_in,
            grid_size=self.grid_size,
            grid_padding=self.grid_padding,
            fast=self.fast,
        )


def _split_methods(ctx: click.Context, param: click.Parameter, value: Optional[str]):
    if value is None:
        return None
    names = tuple(name.strip() for name in value.split(",") if name.strip())
    unknown = [name for name in names if name not in METHODS]
    if unknown or not names:
        raise click.BadParameter(
            f"choose from {', '.join(METHODS)}", ctx=ctx, param=param
        )
    return names


def experiment_options(func: Callable) -> Callable:
    """Options shared by the experiment commands; unset values fall back to app.config."""
    options = [
        click.option("--alpha", type=ALPHA_RANGE, default=None, help="Miscoverage level."),
        click.option("--rho", type=RHO_RANGE, default=None, help="Weight decay per step."),
        click.option("--seed", type=SEED_RANGE, default=None, help="Base seed."),
        click.option("--burn-in", type=click.IntRange(min=1), default=None),
        click.option("--window", type=click.IntRange(min=1), default=None, help="Rolling window."),
        click.option("--grid-size", type=click.IntRange(min=2), default=None),
        click.option("--grid-padding", type=click.FloatRange(min=0.0), default=None),
        click.option("--methods", callback=_split_methods, default=None, help="Comma separated."),
        click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory."),
        click.option("--fast-linear-path", "fast", is_flag=True, help="Exact interval sweep for linear fits."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_config(command: str, window_key: str, **flags: Any) -> RunConfig:
    cfg = current_app.config

    def pick(name: str, key: str) -> Any:
        value = flags.get(name)
        return cfg[key] if value is None else value

    return RunConfig(
        command=command,
        alpha=float(pick("alpha", "ALPHA")),
        rho=float(pick("rho", "RHO")),
        trials=int(pick("trials", "TRIALS")),
        seed=int(pick("seed", "SEED")),
        n=int(pick("n", "N")),
        grid_size=int(pick("grid_size", "GRID_SIZE")),
        grid_padding=float(pick("grid_padding", "GRID_PADDING")),
        burn_in=int(pick("burn_in", "BURN_IN")),
        window=int(pick("window", window_key)),
        methods=tuple(flags.get("methods") or DEFAULT_METHODS),
        out=str(pick("out", "OUT_DIR")),
        threads=int(pick("threads", "THREADS")),
        fast=bool(flags.get("fast", False)),
        permute=bool(flags.get("permute", False)),
        data_path=flags.get("data_path"),
    )


@contextlib.contextmanager
def translate_errors() -> Iterator[None]:
    """Library failures become ``click.ClickException`` (exit status 1)."""
    try:
        yield
    except NexcpError as exc:
        current_app.logger.debug("command failed", exc_info=True)
        raise click.ClickException(str(exc)) from exc


def handles_errors(func: Callable) -> Callable:
    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        with translate_errors():
            return func(*args, **kwargs)

    return wrapper
