from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from nexcp import create_app
from nexcp.ingest import ELEC2_COLUMNS
from nexcp.models import TaggedDataset


@pytest.fixture
def app(tmp_path):
    return create_app("testing", OUT_DIR=str(tmp_path / "out"), DATA_DIR=str(tmp_path))


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


@pytest.fixture
def linear_data():
    """Factory for y = x'beta + noise datasets tagged 1..n."""

    def build(rng, n, beta=(2.0, 1.0), noise=1.0):
        beta = np.asarray(beta, dtype=float)
        X = rng.standard_normal((n, beta.shape[0]))
        y = X @ beta + noise * rng.standard_normal(n)
        return TaggedDataset.from_arrays(X, y)

    return build


@pytest.fixture
def elec2_frame():
    """Factory for synthetic ELEC2 rows: 48 slots a day, period scaled to [0, 1].

    Inside slots 19-24 the first ``flat`` rows share transfer 0.5.
    """

    def build(days=3, flat=3):
        rows = []
        in_window = 0
        for day in range(days):
            for slot in range(1, 49):
                transfer = 0.4 + 0.01 * len(rows)
                if 19 <= slot <= 24:
                    if in_window < flat:
                        transfer = 0.5
                    in_window += 1
                rows.append(
                    {
                        "date": day,
                        "day": day % 7 + 1,
                        "period": (slot - 1) / 47,
                        "nswprice": 1.0 + slot,
                        "nswdemand": 2.0 + slot,
                        "vicprice": 3.0 + slot,
                        "vicdemand": 4.0 + slot,
                        "transfer": transfer,
                    }
                )
        return pd.DataFrame(rows, columns=list(ELEC2_COLUMNS))

    return build
