"""
Wage-equation checks

The empirical cases need the wage panel (fetch it with `panelspec fetch-psid`
and set PANELSPEC_PSID_PATH); the arithmetic checks always run.
"""

import math

import pytest

from panelspec.core.basis import build_null_and_test_designs, orthonormalize, psid_specs
from panelspec.core.lm_test import TestResult, chi2_quantile, normalized_statistic, run_lm_test
from panelspec.core.panel import load_panel, within_transform
from panelspec.core.projection import fit_restricted
from panelspec.schemas import PRESET_COLUMNS
from panelspec.utils.fixtures import prepare_psid_frame

# model -> (r_n, reported t, tolerance on t)
WAGE_EQUATIONS = {
    "quadratic": (12, 1.599, 0.1),
    "linear": (13, 5.750, 0.3),
    "semiparametric": (11, 1.057, 0.15),
}


def test_reported_quadratic_statistic_is_consistent():
    xi, r_n = 19.835, 12
    assert normalized_statistic(xi, r_n) == pytest.approx(1.599, abs=1e-3)
    # rejected at 10% but not at 5%
    assert chi2_quantile(r_n, 0.90) < xi < chi2_quantile(r_n, 0.95)
    result = TestResult.from_statistic(xi, "hc", r_n=r_n, m_n=9)
    assert result.reject(0.10) and not result.reject(0.05)


@pytest.mark.parametrize("model", sorted(WAGE_EQUATIONS))
def test_reported_t_values_imply_positive_statistics(model):
    r_n, t, _ = WAGE_EQUATIONS[model]
    xi = r_n + t * math.sqrt(2 * r_n)
    assert normalized_statistic(xi, r_n) == pytest.approx(t)
    assert xi > 0


@pytest.fixture
def wage_panel(psid_path):
    frame = prepare_psid_frame(psid_path)
    cols = PRESET_COLUMNS
    return load_panel(frame, cols["id_col"], cols["time_col"], cols["y_col"], cols["x"] + cols["dummies"])


@pytest.mark.parametrize("model", sorted(WAGE_EQUATIONS))
def test_wage_equation(wage_panel, model):
    r_n, t, tolerance = WAGE_EQUATIONS[model]
    tp = within_transform(wage_panel)
    null, alt = psid_specs(model)
    fit = fit_restricted(tp, orthonormalize(build_null_and_test_designs(tp, null, alt)))
    result = run_lm_test(fit, "hc")

    assert wage_panel.n == 595 and wage_panel.T == 7
    assert result.r_n == r_n
    assert result.t_rn == pytest.approx(t, abs=tolerance)
    if model == "quadratic":
        assert result.xi == pytest.approx(19.835, abs=0.5)
    if model == "linear":
        assert result.reject(0.05)
    else:
        assert not result.reject(0.05)
