#!/usr/bin/env python
"""
Command-line entry point for nexcp.

    python run.py simulate --setting 2 --trials 50
    python run.py bounds huber --alpha 0.05 --eps 0.1
"""

import logging

import click
from flask.cli import FlaskGroup

from nexcp import create_app


@click.group(cls=FlaskGroup, create_app=create_app, load_dotenv=True, add_version_option=False)
@click.option("--verbose", is_flag=True, help="Debug logging from the library.")
def cli(verbose: bool) -> None:
    if verbose:
        logging.getLogger("nexcp").setLevel(logging.DEBUG)


if __name__ == "__main__":
    cli()
