import os

import numpy as np
import pandas as pd
import pytest

from panelspec.core.monte_carlo import DgpConfig, generate_panel
from panelspec.core.panel import PanelDataset
from panelspec.logger.logger import reset_run_tracking

PSID_DUMMIES = ["OCC", "IND", "SOUTH", "SMSA", "MS", "UNION"]


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: statistical acceptance runs (set PANELSPEC_RUN_SLOW=1)")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("PANELSPEC_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set PANELSPEC_RUN_SLOW=1 to run slow suites")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def clean_run_tracking():
    """Fresh status, timings and failure counts for every test"""
    reset_run_tracking()
    yield
    reset_run_tracking()


@pytest.fixture
def sim_panel():
    """Partially linear panel with correlated fixed effects (n=120, T=3)"""
    return generate_panel(DgpConfig(n=120, T=3, dgp="sp_null", seed=11), 0)


@pytest.fixture
def sim_frame(sim_panel):
    """The same panel as a long-format DataFrame"""
    return pd.DataFrame({
        "id": np.repeat(sim_panel.ids, sim_panel.T),
        "time": np.tile(sim_panel.times, sim_panel.n),
        "y": sim_panel.y,
        "x1": sim_panel.X[:, 0],
        "x2": sim_panel.X[:, 1],
    })


@pytest.fixture
def sim_csv(sim_frame, tmp_path):
    path = tmp_path / "panel.csv"
    sim_frame.to_csv(path, index=False)
    return str(path)


@pytest.fixture
def wage_like_panel():
    """
    Synthetic panel with the wage-equation layout: weeks worked, experience
    growing by one per period, and six time-varying dummies
    """
    rng = np.random.default_rng(5)
    n, T = 80, 7
    wks = rng.integers(30, 53, size=(n, T)).astype(float)
    exp = rng.integers(1, 30, size=(n, 1)) + np.arange(T)[None, :]
    dummies = rng.integers(0, 2, size=(n, T, len(PSID_DUMMIES))).astype(float)
    mu = rng.normal(size=(n, 1))
    lwage = mu + 0.01 * wks + 0.04 * exp - 0.0007 * exp ** 2 + rng.normal(0, 0.2, size=(n, T))

    X = np.column_stack([wks.ravel(), exp.ravel().astype(float), dummies.reshape(n * T, -1)])
    return PanelDataset(
        ids=np.arange(1, n + 1),
        times=np.arange(1, T + 1),
        y=lwage.ravel(),
        X=X,
        x_names=("WKS", "EXP", *PSID_DUMMIES),
        y_name="LWAGE",
    )


@pytest.fixture
def psid_path():
    path = os.environ.get("PANELSPEC_PSID_PATH", "")
    if not path or not os.path.exists(path):
        pytest.skip("set PANELSPEC_PSID_PATH to the wage panel file")
    return path
