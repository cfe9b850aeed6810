import logging

import numpy as np
import pytest

from panelspec.core.errors import DuplicateCell, MissingColumn, MissingValue, UnbalancedPanel
from panelspec.core.panel import (
    FIRST_DIFFERENCE,
    WITHIN,
    PanelDataset,
    first_difference,
    first_differences,
    load_panel,
    load_panel_csv,
    pooled_design,
    transform_panel,
    within_demean,
    within_transform,
)


def _records():
    rows = []
    for i in (2, 1):
        for t in (3, 1, 2):
            rows.append({"id": i, "t": t, "y": 10 * i + t ** 2, "x": float(i * t)})
    return rows


def test_within_demean_small_block():
    out = within_demean(np.array([1.0, 2.0, 3.0, 5.0, 5.0, 5.0]), n=2, T=3)
    assert np.allclose(out, [-1.0, 0.0, 1.0, 0.0, 0.0, 0.0])


def test_first_differences_small_block():
    out = first_differences(np.array([1.0, 4.0, 9.0, 2.0, 2.0, 3.0]), n=2, T=3)
    assert out.shape == (4,)
    assert np.allclose(out, [3.0, 5.0, 0.0, 1.0])


def test_within_blocks_sum_to_zero(sim_panel):
    tp = within_transform(sim_panel)
    assert tp.Tprime == sim_panel.T
    assert np.allclose(tp.blocks(tp.yhat).sum(axis=1), 0.0, atol=1e-10)
    assert np.allclose(tp.blocks(tp.Xhat).sum(axis=1), 0.0, atol=1e-10)


def test_first_difference_of_within_equals_first_difference(sim_panel):
    n, T = sim_panel.n, sim_panel.T
    assert np.allclose(
        first_differences(within_demean(sim_panel.X, n, T), n, T),
        first_differences(sim_panel.X, n, T),
    )


@pytest.mark.parametrize("transform", [within_demean, first_differences])
def test_transforms_are_linear(transform):
    rng = np.random.default_rng(3)
    n, T = 25, 4
    a, b = rng.normal(size=(n * T, 3)), rng.normal(size=(n * T, 3))
    combined = transform(2.5 * a - 0.75 * b, n, T)
    separate = 2.5 * transform(a, n, T) - 0.75 * transform(b, n, T)
    assert np.allclose(combined, separate, rtol=1e-12, atol=1e-12 * np.abs(separate).max())


def test_within_is_idempotent(sim_panel):
    n, T = sim_panel.n, sim_panel.T
    once = within_demean(sim_panel.X, n, T)
    assert np.allclose(within_demean(once, n, T), once, rtol=1e-12, atol=1e-12)


def test_time_invariant_column_is_annihilated():
    A = np.repeat([3.0, -1.0, 7.0], 4)
    assert np.allclose(within_demean(A, 3, 4), 0.0)
    assert np.allclose(first_differences(A, 3, 4), 0.0)


def test_first_difference_panel_rows(sim_panel):
    tp = first_difference(sim_panel)
    assert tp.transform_tag == FIRST_DIFFERENCE
    assert tp.Tprime == sim_panel.T - 1
    assert tp.yhat.shape == (sim_panel.n * (sim_panel.T - 1),)
    assert transform_panel(sim_panel, "fd").nobs == tp.nobs


def test_transform_panel_rejects_unknown_tag(sim_panel):
    with pytest.raises(Exception, match="Unknown transform"):
        transform_panel(sim_panel, "between")


def test_pooled_design_has_constant(sim_panel):
    y, D = pooled_design(sim_panel)
    assert D.shape == (sim_panel.n * sim_panel.T, 1 + sim_panel.d_x)
    assert np.all(D[:, 0] == 1.0)
    assert np.array_equal(y, sim_panel.y)


def test_load_panel_sorts_individual_major():
    panel = load_panel(_records(), "id", "t", "y", ["x"])
    assert list(panel.ids) == [1, 2]
    assert list(panel.times) == [1, 2, 3]
    assert np.allclose(panel.y, [11, 14, 19, 21, 24, 29])
    assert np.allclose(panel.column("x"), [1, 2, 3, 2, 4, 6])


def test_load_panel_missing_column_names_it():
    with pytest.raises(MissingColumn, match="wage"):
        load_panel(_records(), "id", "t", "wage", ["x"])


def test_load_panel_duplicate_cell():
    rows = _records() + [{"id": 1, "t": 2, "y": 0.0, "x": 0.0}]
    with pytest.raises(DuplicateCell):
        load_panel(rows, "id", "t", "y", ["x"])


def test_load_panel_unbalanced():
    rows = [r for r in _records() if not (r["id"] == 2 and r["t"] == 3)]
    with pytest.raises(UnbalancedPanel):
        load_panel(rows, "id", "t", "y", ["x"])


def test_load_panel_missing_value():
    rows = _records()
    rows[0]["x"] = None
    with pytest.raises(MissingValue):
        load_panel(rows, "id", "t", "y", ["x"])


def test_load_panel_non_numeric_time_sorts_lexicographically(caplog):
    rows = []
    for i in (1, 2):
        for t in ("b", "a", "c"):
            rows.append({"id": i, "t": t, "y": float(ord(t)), "x": 1.0 + i})
    with caplog.at_level(logging.WARNING):
        panel = load_panel(rows, "id", "t", "y", ["x"])
    assert list(panel.times) == ["a", "b", "c"]
    assert np.allclose(panel.y[:3], [97.0, 98.0, 99.0])
    assert "lexicographically" in caplog.text


def test_panel_needs_two_individuals():
    with pytest.raises(UnbalancedPanel):
        PanelDataset(ids=np.array([1]), times=np.array([1, 2]), y=np.zeros(2),
                     X=np.zeros((2, 1)), x_names=("x",))


def test_panel_rejects_non_finite_values():
    with pytest.raises(MissingValue):
        PanelDataset(ids=np.array([1, 2]), times=np.array([1, 2]), y=np.array([1.0, np.inf, 0.0, 0.0]),
                     X=np.zeros((4, 1)), x_names=("x",))


def test_panel_arrays_are_read_only(sim_panel):
    with pytest.raises(ValueError):
        sim_panel.y[0] = 1.0


def test_load_panel_csv_roundtrip(sim_csv, sim_panel):
    panel = load_panel_csv(sim_csv, "id", "time", "y", ["x1", "x2"])
    assert panel.n == sim_panel.n and panel.T == sim_panel.T
    assert np.allclose(panel.y, sim_panel.y)
    assert within_transform(panel).transform_tag == WITHIN
