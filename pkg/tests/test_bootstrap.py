import math

import numpy as np
import pandas as pd
import pytest

from panelspec.core import bootstrap
from panelspec.core.basis import BasisSpec, build_null_and_test_designs, orthonormalize
from panelspec.core.bootstrap import (
    MAMMEN,
    RADEMACHER,
    BootstrapDistribution,
    bootstrap_critical_value,
    bootstrap_pvalue,
    draw_multipliers,
    get_law,
    replicate_statistic,
    run_bootstrap,
    write_bootstrap_csv,
)
from panelspec.core.errors import PanelSpecError, ReplicateFailureError, SingularOmega
from panelspec.core.lm_test import normalized_statistic, run_lm_test
from panelspec.core.monte_carlo import DgpConfig, generate_panel
from panelspec.core.panel import within_transform
from panelspec.core.projection import fit_restricted
from panelspec.logger.logger import get_failure_count

NULL = BasisSpec.from_roles(linear=("x1",), nonparametric=("x2",), a_n=3)
ALT = BasisSpec.from_roles(nonparametric=("x1", "x2"), a_n=4)


def _fit(panel):
    tp = within_transform(panel)
    return fit_restricted(tp, orthonormalize(build_null_and_test_designs(tp, NULL, ALT)))


@pytest.fixture
def fit(sim_panel):
    return _fit(sim_panel)


def _dist(stats):
    stats = np.asarray(stats, dtype=float)
    return BootstrapDistribution(stats=stats, B=len(stats), seed=0, law=RADEMACHER, kind="hc")


@pytest.mark.parametrize("law", [MAMMEN, RADEMACHER])
def test_multiplier_moments(law):
    assert sum(law.probabilities) == pytest.approx(1.0)
    assert law.moment(1) == pytest.approx(0.0, abs=1e-12)
    assert law.moment(2) == pytest.approx(1.0)


def test_mammen_third_moment_is_one():
    assert MAMMEN.moment(3) == pytest.approx(1.0)


def test_get_law():
    assert get_law("Mammen") is MAMMEN
    assert get_law(RADEMACHER) is RADEMACHER
    with pytest.raises(PanelSpecError):
        get_law("gaussian")


def test_multipliers_are_deterministic_per_replicate():
    a = draw_multipliers("mammen", 50, seed=3, rep_index=7)
    b = draw_multipliers("mammen", 50, seed=3, rep_index=7)
    c = draw_multipliers("mammen", 50, seed=3, rep_index=8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert set(np.unique(a)) <= set(MAMMEN.support)


def test_rademacher_sample_mean():
    draws = draw_multipliers("rademacher", 20000, seed=1, rep_index=0)
    assert set(np.unique(draws)) == {-1.0, 1.0}
    assert abs(draws.mean()) < 0.03


def test_identity_multipliers_reproduce_observed_statistic(fit):
    t_star = replicate_statistic(fit, "hc", np.ones(fit.n))
    observed = run_lm_test(fit, "hc")
    assert t_star == pytest.approx(observed.t_rn, rel=1e-8)


@pytest.mark.parametrize("law", [RADEMACHER, MAMMEN])
def test_bootstrap_residuals_stay_orthogonal_to_null_design(fit, law):
    W = fit.design.W
    for rep in range(3):
        multipliers = draw_multipliers(law, fit.n, seed=8, rep_index=rep)
        e_star = fit.maker.apply((fit.resid_blocks * multipliers[:, None]).ravel())
        scale = np.linalg.norm(W) * np.linalg.norm(e_star)
        assert np.abs(W.T @ e_star).max() <= 1e-8 * scale


def test_zero_multipliers_give_degenerate_replicate(fit):
    t_star = replicate_statistic(fit, "hom", np.zeros(fit.n))
    assert t_star == pytest.approx(-fit.r_n / math.sqrt(2 * fit.r_n))


def test_pvalue_counts_exceedances():
    dist = _dist(np.arange(400) / 400.0)
    # 20 replicates at or above 0.95
    assert bootstrap_pvalue(0.95, dist) == pytest.approx(21 / 401)
    assert bootstrap_pvalue(10.0, dist) == pytest.approx(1 / 401)


def test_critical_value_order_statistic():
    dist = _dist(np.arange(399, 0, -1).astype(float))
    # ceil(400 * 0.95) = 380th smallest of 1..399
    assert bootstrap_critical_value(dist, 0.05) == 380.0
    with pytest.raises(PanelSpecError):
        bootstrap_critical_value(dist, 1.2)


def test_bootstrap_independent_of_worker_count(fit):
    serial = run_bootstrap(fit, "hc", "mammen", B=130, seed=17, workers=1)
    threaded = run_bootstrap(fit, "hc", "mammen", B=130, seed=17, workers=4)
    assert serial.successful == 130
    assert np.array_equal(serial.stats, threaded.stats)
    assert bootstrap_pvalue(0.0, serial) == bootstrap_pvalue(0.0, threaded)


def test_bootstrap_rejects_empty_run(fit):
    with pytest.raises(PanelSpecError):
        run_bootstrap(fit, "hc", B=0)


def test_failed_replicates_are_excluded(fit, monkeypatch):
    real = bootstrap.bootstrap_statistic

    def flaky(fit, law, kind, seed, rep_index):
        if rep_index == 5:
            raise SingularOmega("replicate omega")
        return real(fit, law, kind, seed, rep_index)

    monkeypatch.setattr(bootstrap, "bootstrap_statistic", flaky)
    dist = run_bootstrap(fit, "hc", B=200, seed=1, workers=1)
    assert dist.failures == 1
    assert dist.successful == 199
    assert get_failure_count("bootstrap") == 1


def test_too_many_failures_abort(fit, monkeypatch):
    def broken(fit, law, kind, seed, rep_index):
        if rep_index % 10 == 0:
            raise SingularOmega("replicate omega")
        return 0.0

    monkeypatch.setattr(bootstrap, "bootstrap_statistic", broken)
    with pytest.raises(ReplicateFailureError):
        run_bootstrap(fit, "hc", B=100, seed=1, workers=1)


def test_write_bootstrap_csv(tmp_path):
    path = tmp_path / "boot.csv"
    write_bootstrap_csv(_dist([0.5, -1.25, 2.0]), str(path))
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["t_star"]
    assert frame["t_star"].tolist() == [0.5, -1.25, 2.0]


@pytest.mark.slow
def test_bootstrap_distribution_is_centred_under_null():
    panel = generate_panel(DgpConfig(n=400, T=3, dgp="sp_null", errors="heteroskedastic", seed=4), 0)
    fit = _fit(panel)
    dist = run_bootstrap(fit, "hc", "mammen", B=999, seed=2)
    # median of chi2(r) is close to r - 2/3
    assert abs(np.median(dist.stats) - normalized_statistic(fit.r_n - 2 / 3, fit.r_n)) < 0.5
    assert bootstrap_critical_value(dist, 0.05) > 0.5
