"""
panelspec - Consistent series specification tests for fixed-effects panel models
"""

__version__ = "0.1.0"

from .logger import get_logger

from .core.panel import PanelDataset, load_panel, load_panel_csv, transform_panel
from .core.basis import BasisSpec, build_null_and_test_designs, orthonormalize
from .core.projection import fit_restricted
from .core.lm_test import TestResult, run_lm_test
from .core.bootstrap import run_bootstrap, bootstrap_pvalue
from .core.selection import build_grid, select_rn
from .runner import cli

__all__ = [
    "__version__",
    "PanelDataset",
    "load_panel",
    "load_panel_csv",
    "transform_panel",
    "BasisSpec",
    "build_null_and_test_designs",
    "orthonormalize",
    "fit_restricted",
    "TestResult",
    "run_lm_test",
    "run_bootstrap",
    "bootstrap_pvalue",
    "build_grid",
    "select_rn",
    "cli",
]
