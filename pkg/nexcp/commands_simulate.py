from __future__ import annotations

import click
from flask import Flask, current_app

from .cli import build_config, experiment_options, handles_errors
from .experiments import SimulationSetting, resolve_methods, run_trials
from .utils import summary_lines, write_report


def register_simulate_commands(app: Flask) -> None:
    """
    Register the ``simulate`` command (sequential runs on Settings 1-3).
    """

    @app.cli.command("simulate")
    @click.option("--setting", type=click.IntRange(1, 3), default=1, show_default=True)
    @click.option("--trials", type=click.IntRange(min=1), default=None)
    @click.option("--n", "n", type=click.IntRange(min=2), default=None, help="Series length N.")
    @click.option("--threads", type=click.IntRange(min=1), default=None)
    @experiment_options
    @handles_errors
    def simulate(setting: int, trials, n, threads, **flags):
        """Run the sequential experiment on a simulated setting and write CSVs."""
        config = build_config("simulate", "SIM_WINDOW", trials=trials, n=n, threads=threads, **flags)
        if config.burn_in >= config.n:
            raise click.UsageError(f"burn-in {config.burn_in} must be below N = {config.n}")
        if config.window > config.n - config.burn_in:
            raise click.UsageError(
                f"window {config.window} exceeds the {config.n - config.burn_in} predicted points"
            )

        current_app.logger.info(
            "setting %d: %d trials, N=%d, methods %s", setting, config.trials, config.n, ", ".join(config.methods)
        )
        report = run_trials(
            SimulationSetting(setting, config.n),
            resolve_methods(config.methods),
            config.sequential(),
            seed=config.seed,
            trials=config.trials,
            window=config.window,
            threads=config.threads,
        )
        paths = write_report(report, config.out)
        for line in summary_lines(report):
            click.echo(line)
        current_app.logger.info("wrote %s", ", ".join(paths))
