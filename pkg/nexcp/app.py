from __future__ import annotations

import logging
import os
from typing import Any, Callable

from flask import Flask
from flask.logging import default_handler


def _env(name: str, default: Any, cast: Callable[[str], Any] = str) -> Any:
    raw = os.environ.get(f"NEXCP_{name}")
    if raw is None or raw == "":
        return default
    return cast(raw)


def _defaults() -> dict:
    return {
        "ALPHA": _env("ALPHA", 0.1, float),
        "RHO": _env("RHO", 0.99, float),
        "BURN_IN": _env("BURN_IN", 100, int),
        "TRIALS": _env("TRIALS", 200, int),
        "SIM_WINDOW": _env("SIM_WINDOW", 10, int),
        "ELEC2_WINDOW": _env("ELEC2_WINDOW", 300, int),
        "GRID_SIZE": _env("GRID_SIZE", 1000, int),
        "GRID_PADDING": _env("GRID_PADDING", 0.5, float),
        "SEED": _env("SEED", 0, int),
        "N": _env("N", 2000, int),
        "THREADS": _env("THREADS", os.cpu_count() or 1, int),
        "DATA_DIR": _env("DATA_DIR", os.path.join(os.getcwd(), "data")),
        "OUT_DIR": _env("OUT_DIR", os.path.join(os.getcwd(), "out")),
        "LOG_LEVEL": _env("LOG_LEVEL", "INFO"),
    }


# Desk-scale values so the test suite runs in seconds.
TESTING_OVERRIDES = {
    "TESTING": True,
    "TRIALS": 2,
    "N": 140,
    "BURN_IN": 40,
    "SIM_WINDOW": 5,
    "ELEC2_WINDOW": 10,
    "GRID_SIZE": 60,
    "THREADS": 1,
    "LOG_LEVEL": "WARNING",
}


def create_app(config_name: str = "default", **overrides: Any) -> Flask:
    """
    Application factory for the nexcp command line.

    Run defaults live in ``app.config`` (environment variables with the
    NEXCP_ prefix override the built-in values; keyword overrides win over
    both), and every command group is registered on ``app.cli``.
    """
    app = Flask(__name__)
    app.config.update(_defaults())
    if config_name == "testing":
        app.config.update(TESTING_OVERRIDES)
    elif config_name != "default":
        raise ValueError(f"unknown configuration {config_name!r}")
    app.config.update(overrides)

    # Library modules log under "nexcp"; share Flask's stderr handler with them.
    package_logger = logging.getLogger("nexcp")
    if default_handler not in package_logger.handlers:
        package_logger.addHandler(default_handler)
    package_logger.setLevel(app.config["LOG_LEVEL"])

    _register_simulate_commands(app)
    _register_elec2_commands(app)
    _register_bounds_commands(app)
    _register_diagnose_commands(app)
    _register_huber_commands(app)

    return app


def _register_simulate_commands(app: Flask) -> None:
    from .commands_simulate import register_simulate_commands

    register_simulate_commands(app)


def _register_elec2_commands(app: Flask) -> None:
    from .commands_elec2 import register_elec2_commands

    register_elec2_commands(app)


def _register_bounds_commands(app: Flask) -> None:
    from .commands_bounds import register_bounds_commands

    register_bounds_commands(app)


def _register_diagnose_commands(app: Flask) -> None:
    from .commands_diagnose import register_diagnose_commands

    register_diagnose_commands(app)


def _register_huber_commands(app: Flask) -> None:
    from .commands_huber import register_huber_commands

    register_huber_commands(app)
