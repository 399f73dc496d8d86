from __future__ import annotations

import os
from typing import List

import pandas as pd

from .experiments import ExperimentReport

# 17 significant digits round-trip every double.
FLOAT_FORMAT = "%.17g"

REPORT_FILES = {
    "results.csv": "records",
    "summary.csv": "summary",
    "rolling.csv": "rolling",
}


def format_float(value: float) -> str:
    return FLOAT_FORMAT % value


def write_csv(frame: pd.DataFrame, path: str) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_report(report: ExperimentReport, out_dir: str) -> List[str]:
    """
    Write results.csv, summary.csv and rolling.csv under ``out_dir``
    (created if needed) and return the paths written.
    """
    os.makedirs(out_dir, exist_ok=True)
    written: List[str] = []
    for filename, attr in REPORT_FILES.items():
        path = os.path.join(out_dir, filename)
        write_csv(getattr(report, attr), path)
        written.append(path)
    return written


def summary_lines(report: ExperimentReport) -> List[str]:
    lines = []
    for row in report.summary.itertuples(index=False):
        lines.append(
            f"{row.method:<14} coverage {row.mean_coverage:.3f}  width {row.mean_width:.3f}"
        )
    return lines
