from __future__ import annotations

import click
from flask import Flask, current_app

from .cli import SEED_RANGE, handles_errors
from .diagnostics import run_property_suites


def register_diagnose_commands(app: Flask) -> None:
    @app.cli.command("diagnose")
    @click.option("--fuzz", type=click.IntRange(min=1), default=10_000, show_default=True)
    @click.option("--seed", type=SEED_RANGE, default=None)
    @handles_errors
    def diagnose(fuzz: int, seed):
        """Run the property suites; exits nonzero on any violation."""
        seed = current_app.config["SEED"] if seed is None else seed
        results = run_property_suites(fuzz=fuzz, seed=seed)
        for result in results:
            status = "PASS" if result.passed else "FAIL"
            click.echo(f"{status} {result.name}: {result.cases} cases, {result.violations} violations")
        failed = [r.name for r in results if not r.passed]
        if failed:
            raise click.ClickException(f"violated: {', '.join(failed)}")
