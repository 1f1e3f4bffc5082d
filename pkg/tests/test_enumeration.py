"""Enumeration correctness against box-scan oracles, plus orbit closure."""

import numpy as np
import pytest

from conftest import brute_force_forms
from qfsectors.enumeration import (
    QuadraticForm,
    count_ball,
    count_ball_grid,
    entry_bound,
    enumerate_forms,
    iter_form_batches,
    orbit_enumerate,
    resolve_threads,
)


def test_d3_matches_brute_force_at_t15(brute_d3_t15):
    got = [f.entries for f in enumerate_forms(3, 1.5)]
    assert got == brute_d3_t15
    assert len(got) == 308


def test_d3_matches_brute_force_at_t25():
    got = [f.entries for f in enumerate_forms(3, 2.5)]
    assert got == brute_force_forms(3, 2.5)


def test_d3_frobenius_matches_brute_force():
    got = [f.entries for f in enumerate_forms(3, 2.2, norm="frobenius")]
    assert got == brute_force_forms(3, 2.2, norm="frobenius")


def test_d2_matches_brute_force():
    for t in (1.5, 2.5, 4.0):
        got = sorted(f.entries for f in enumerate_forms(2, t))
        assert got == brute_force_forms(2, t)
    got = sorted(f.entries for f in enumerate_forms(2, 3.0, norm="frobenius"))
    assert got == brute_force_forms(2, 3.0, norm="frobenius")


def test_d4_matches_brute_force_at_t15():
    got = sorted(f.entries for f in enumerate_forms(4, 1.5))
    assert got == brute_force_forms(4, 1.5)


def test_each_form_is_valid():
    for f in enumerate_forms(3, 3.0):
        assert f.det in (1, -1)
        assert f.norm < 3.0
        m = f.matrix()
        assert np.array_equal(m, m.T)
        assert round(float(np.linalg.det(m))) == f.det
        assert f.norm == float(np.abs(m).max())


def test_forms_arrive_in_lex_order_without_duplicates():
    entries = [f.entries for f in enumerate_forms(3, 2.5)]
    assert entries == sorted(set(entries))


def test_count_ball_agrees_with_enumeration():
    for norm in ("max", "frobenius"):
        n = count_ball(3, 3.0, norm=norm)
        assert n == len(list(enumerate_forms(3, 3.0, norm=norm)))


def test_count_ball_grid_single_scan_matches_pointwise():
    grid = [1.5, 2.0, 3.0]
    assert count_ball_grid(3, grid) == [count_ball(3, t) for t in grid]
    with pytest.raises(ValueError):
        count_ball_grid(3, [3.0, 2.0])


def test_thresholds_are_strict():
    # norm < 1 admits only the zero matrix, which is not unimodular
    assert count_ball(3, 1.0) == 0
    # entries of absolute value 2 require T > 2
    at2 = {f.entries for f in enumerate_forms(3, 2.0)}
    assert all(max(abs(v) for v in e) <= 1 for e in at2)
    with pytest.raises(ValueError):
        count_ball(3, 0.5)


def test_threads_do_not_change_results(monkeypatch):
    base = count_ball(3, 4.0)
    assert count_ball(3, 4.0, threads=2) == base
    monkeypatch.setenv("QFSECTORS_THREADS", "3")
    assert resolve_threads() == 3
    assert count_ball(3, 4.0) == base
    monkeypatch.delenv("QFSECTORS_THREADS")
    assert resolve_threads() == 1
    assert resolve_threads(5) == 5


def test_batches_carry_consistent_norms():
    for tri, det, norms in iter_form_batches(3, 3.0, "frobenius"):
        weights = np.array([1.0, 2.0, 2.0, 1.0, 2.0, 1.0])
        recomputed = np.sqrt((tri.astype(float) ** 2) @ weights)
        assert np.allclose(norms, recomputed)
        assert np.all(np.isin(det, (-1, 1)))


def test_dimension_and_scale_guards():
    with pytest.raises(ValueError):
        list(iter_form_batches(5, 2.0))
    with pytest.raises(ValueError):
        list(iter_form_batches(4, 6.0))  # d=4 stays at smoke scale
    with pytest.raises(OverflowError):
        list(iter_form_batches(3, 2.0e6))


def test_entry_bound_is_strict():
    assert entry_bound(2.0) == 1
    assert entry_bound(2.5) == 2
    assert entry_bound(1.0) == 0


def test_quadratic_form_round_trip():
    f = QuadraticForm.from_matrix([[2, 1, 0], [1, 1, 0], [0, 0, 1]])
    assert f.det == 1
    assert f.norm == 2.0
    assert f.entries == (2, 1, 0, 1, 0, 1)
    assert QuadraticForm.from_matrix(f.matrix()) == f
    with pytest.raises(ValueError):
        QuadraticForm.from_matrix([[1, 2], [3, 4]])


def test_orbit_is_subset_of_matching_det_enumeration():
    t = 4.0
    plus = {f.entries for f in enumerate_forms(3, t) if f.det == 1}
    minus = {f.entries for f in enumerate_forms(3, t) if f.det == -1}
    orb1 = orbit_enumerate(np.eye(3, dtype=int), t)
    assert not orb1.partial
    assert {f.entries for f in orb1.forms} <= plus
    assert (1, 0, 0, 1, 0, 1) in {f.entries for f in orb1.forms}
    orb2 = orbit_enumerate(np.diag([1, 1, -1]), t)
    assert {f.entries for f in orb2.forms} <= minus
    assert all(f.det == -1 for f in orb2.forms)


def test_orbit_guards_and_budget():
    with pytest.raises(ValueError):
        orbit_enumerate(np.diag([2, 1, 1]), 3.0)
    with pytest.raises(ValueError):
        orbit_enumerate(np.eye(3, dtype=int), 3.0, slack=0.5)
    capped = orbit_enumerate(np.eye(3, dtype=int), 6.0, max_states=50)
    assert capped.partial
    assert capped.visited <= 50
