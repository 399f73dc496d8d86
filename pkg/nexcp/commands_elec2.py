from __future__ import annotations

import os

import click
from flask import Flask, current_app

from .cli import build_config, experiment_options, handles_errors
from .experiments import resolve_methods, run_sequential
from .ingest import Elec2Config, load_elec2, permute_dataset
from .streams import PERMUTATION, substream
from .utils import summary_lines, write_report

DEFAULT_FILENAME = "elec2.csv"


def register_elec2_commands(app: Flask) -> None:
    @app.cli.command("elec2")
    @click.option(
        "--data",
        "data_path",
        type=click.Path(dir_okay=False),
        default=None,
        help="ELEC2 csv (default: $NEXCP_DATA_DIR/elec2.csv).",
    )
    @click.option("--permute", is_flag=True, help="Shuffle the series first (control run).")
    @click.option("--first-slot", type=click.IntRange(1, 48), default=19, show_default=True)
    @click.option("--last-slot", type=click.IntRange(1, 48), default=24, show_default=True)
    @click.option("--keep-constant-prefix", is_flag=True)
    @experiment_options
    @handles_errors
    def elec2(data_path, permute: bool, first_slot: int, last_slot: int, keep_constant_prefix: bool, **flags):
        """Run the sequential experiment on the ELEC2 transfer series and write CSVs."""
        path = data_path or os.path.join(current_app.config["DATA_DIR"], DEFAULT_FILENAME)
        config = build_config("elec2", "ELEC2_WINDOW", data_path=path, permute=permute, trials=1, **flags)

        data = load_elec2(path, Elec2Config(first_slot, last_slot, not keep_constant_prefix))
        if config.permute:
            data = permute_dataset(data, substream(config.seed, PERMUTATION))
        current_app.logger.info("loaded %d points from %s", len(data), path)
        if config.window > len(data) - config.burn_in:
            raise click.UsageError(
                f"window {config.window} exceeds the {len(data) - config.burn_in} predicted points"
            )

        report = run_sequential(
            data,
            resolve_methods(config.methods),
            config.sequential(),
            seed=config.seed,
            window=config.window,
        )
        paths = write_report(report, config.out)
        for line in summary_lines(report):
            click.echo(line)
        current_app.logger.info("wrote %s", ", ".join(paths))
