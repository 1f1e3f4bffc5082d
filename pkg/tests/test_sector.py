"""Spectral classification, counting, and exponent fitting."""

import math

import numpy as np
import pytest

from qfsectors.enumeration import enumerate_forms, iter_form_batches, triangle_indices
from qfsectors.sector import (
    AntiCap,
    Cap,
    CountSeries,
    FullFrame,
    SectorSpec,
    _classify_batch,
    count_sector,
    fit_exponent,
    make_spec,
    sector_membership,
    sign_pattern_specs,
    spectral_data,
    with_fit,
)


def tri_to_matrix(row, d=3):
    m = np.zeros((d, d))
    for col, (i, j) in enumerate(triangle_indices(d)):
        m[i, j] = m[j, i] = row[col]
    return m


# ------------------------------------------------------------- spectral data


def test_spectral_data_orders_and_reconstructs():
    data = spectral_data(np.diag([3.0, -2.0, 1.0]))
    assert data.eigenvalues == (3.0, -2.0, 1.0)
    assert data.gaps == (1.0, 1.0)
    assert np.linalg.det(data.frame) > 0
    rec = data.frame @ np.diag(data.eigenvalues) @ data.frame.T
    assert np.linalg.norm(rec - np.diag([3.0, -2.0, 1.0])) < 1e-10


def test_spectral_data_breaks_abs_ties_plus_first():
    data = spectral_data(np.diag([-2.0, 1.0, 2.0]))
    assert data.eigenvalues == (2.0, -2.0, 1.0)
    assert data.gaps == (0.0, 1.0)


def test_spectral_data_identity_has_zero_gaps():
    data = spectral_data(np.eye(3))
    assert data.gaps == (0.0, 0.0)


def test_spectral_data_random_reconstruction():
    rng = np.random.default_rng(2)
    for _ in range(25):
        a = rng.standard_normal((3, 3))
        a = (a + a.T) / 2
        data = spectral_data(a)
        rec = data.frame @ np.diag(data.eigenvalues) @ data.frame.T
        assert np.linalg.norm(rec - a) < 1e-10
        assert abs(np.linalg.det(data.frame) - 1.0) < 1e-10


# ---------------------------------------------------------------- membership


def test_membership_sign_patterns():
    q = np.diag([3.0, -2.0, 1.0])
    spec = make_spec((1, 1, 1), ["+", "-", "+"])
    res = sector_membership(q, spec)
    assert res.status == "member"
    w = res.witness
    assert w.scales == pytest.approx((3.0, 2.0, 1.0))
    assert w.assignment == ((0,), (1,), (2,))
    assert w.block_dets == (1, -1, 1)
    assert w.margins == pytest.approx((math.log(3 / 2), math.log(2)))
    assert sector_membership(q, make_spec((1, 1, 1), ["+", "+", "-"])).status == "nonmember"


def test_membership_witness_determinant_consistency():
    """prod(scale_i^dim_i) * prod(det of block signature) == det q."""
    spec_list = sign_pattern_specs(3) + [
        make_spec((1, 2), ["+", (1, 1)]),
        make_spec((1, 2), ["+", (2, 0)]),
        make_spec((2, 1), [(1, 1), "-"]),
    ]
    checked = 0
    for f in enumerate_forms(3, 3.0):
        for spec in spec_list:
            res = sector_membership(f, spec)
            if res.status != "member":
                continue
            w = res.witness
            dims = spec.block.dims
            val = 1.0
            for s, dim, bd in zip(w.scales, dims, w.block_dets):
                val *= (s**dim) * bd
            assert val == pytest.approx(float(f.det), abs=1e-8)
            assert all(m > 0 for m in w.margins)
            checked += 1
    assert checked > 1000


def test_membership_degenerate_on_ties():
    spec = make_spec((1, 1, 1), ["+", "+", "-"])
    assert sector_membership(np.eye(3), spec).status == "degenerate"
    assert sector_membership(np.diag([2.0, -2.0, 1.0]), spec).status == "degenerate"
    # degeneracy is decided before the signs: identical verdict across specs
    for sp in sign_pattern_specs(3):
        assert sector_membership(np.diag([2.0, -2.0, 1.0]), sp).status == "degenerate"


def test_membership_blocked_specs():
    q = np.diag([3.0, 1.0, -1.0])
    ok = make_spec((1, 2), ["+", (1, 1)])
    assert sector_membership(q, ok).status == "member"
    wrong = make_spec((1, 2), ["+", (2, 0)])
    assert sector_membership(q, wrong).status == "nonmember"
    # the block boundary must be a strict |eigenvalue| drop
    assert sector_membership(np.diag([1.0, 1.0, -1.0]), ok).status == "degenerate"


def test_membership_block_window():
    q = np.diag([8.0, 2.0, 1.0])  # block logs (log 2, 0), spread log(2)/2
    spread = math.log(2.0) / 2
    wide = make_spec((1, 2), ["+", (2, 0)], block_window=spread + 0.01)
    tight = make_spec((1, 2), ["+", (2, 0)], block_window=spread - 0.01)
    assert sector_membership(q, wide).status == "member"
    assert sector_membership(q, tight).status == "nonmember"


def test_membership_tie_tol_parameter():
    q = np.diag([1.0 + 3e-7, 1.0, -0.5])
    spec = make_spec((1, 1, 1), ["+", "+", "-"])
    assert sector_membership(q, spec, tie_tol=1e-9).status == "member"
    assert sector_membership(q, spec, tie_tol=1e-6).status == "degenerate"


def test_membership_frame_constraints():
    q = np.diag([3.0, -2.0, 1.0])  # top axis is e1
    base = ["+", "-", "+"]
    cap_hit = make_spec((1, 1, 1), base, frame=Cap(axis=(1, 0, 0), angle=0.2))
    cap_miss = make_spec((1, 1, 1), base, frame=Cap(axis=(0, 0, 1), angle=0.2))
    anti = make_spec((1, 1, 1), base, frame=AntiCap(axis=(0, 0, 1), angle=0.2))
    assert sector_membership(q, cap_hit).status == "member"
    assert sector_membership(q, cap_miss).status == "nonmember"
    assert sector_membership(q, anti).status == "member"
    # the axis is a line: the flipped eigenvector counts as the same frame
    flipped = make_spec((1, 1, 1), base, frame=Cap(axis=(-1, 0, 0), angle=0.2))
    assert sector_membership(q, flipped).status == "member"


def test_cap_validation():
    with pytest.raises(ValueError):
        Cap(axis=(0.0, 0.0, 0.0), angle=0.5)
    with pytest.raises(ValueError):
        Cap(axis=(1.0, 0.0, 0.0), angle=0.0)
    with pytest.raises(ValueError):
        Cap(axis=(1.0, 0.0, 0.0), angle=math.pi)


def test_spec_validation_and_digest():
    with pytest.raises(ValueError):
        make_spec((1, 2), ["+", (2, 1)])  # block signature sum mismatch
    with pytest.raises(ValueError):
        make_spec((1, 2), ["+", "+"])  # shorthand on a 2-dim block
    with pytest.raises(ValueError):
        make_spec((1, 1, 1), ["+", "+", "-"], block_window=0.0)
    with pytest.raises(ValueError):
        make_spec((1, 1, 1), ["+", "+", "-"], norm="spectral")
    a = make_spec((1, 1, 1), ["+", "+", "-"])
    b = make_spec((1, 1, 1), [(1, 0), (1, 0), (0, 1)])
    assert a.digest() == b.digest()
    assert a.digest() != make_spec((1, 1, 1), ["+", "-", "+"]).digest()
    assert a.digest() != make_spec((1, 1, 1), ["+", "+", "-"], norm="frobenius").digest()
    assert a.digest() != make_spec(
        (1, 1, 1), ["+", "+", "-"], frame=Cap(axis=(0, 0, 1), angle=0.3)
    ).digest()


def test_sign_pattern_specs_enumerates_all_patterns():
    specs = sign_pattern_specs(3)
    assert len(specs) == 8
    sigs = {tuple(s.block_signatures) for s in specs}
    assert len(sigs) == 8
    assert all(s.block.dims == (1, 1, 1) for s in specs)


# ------------------------------------------------------------ batch pipeline


def test_classify_batch_agrees_with_per_form_path():
    specs = sign_pattern_specs(3)[:3] + [
        make_spec((1, 2), ["+", (1, 1)], block_window=0.6),
        make_spec((2, 1), [(2, 0), "-"]),
        make_spec((1, 1, 1), ["+", "+", "-"], frame=Cap(axis=(0, 0, 1), angle=0.9)),
    ]
    for tri, _, _ in iter_form_batches(3, 3.0, "max"):
        for spec in specs:
            member, degenerate = _classify_batch(tri, 3, spec, 1e-9)
            for r in range(tri.shape[0]):
                res = sector_membership(tri_to_matrix(tri[r]), spec)
                assert member[r] == (res.status == "member")
                assert degenerate[r] == (res.status == "degenerate")


def test_count_sector_matches_manual_loop():
    spec = make_spec((1, 1, 1), ["+", "+", "-"])
    series = count_sector([2.0, 3.0], spec)
    for t, val, deg in zip(series.t_grid, series.values, series.degenerate):
        statuses = [
            sector_membership(f, spec).status for f in enumerate_forms(3, t)
        ]
        assert val == statuses.count("member")
        assert deg == statuses.count("degenerate")
    assert series.spec_digest == spec.digest()
    assert series.manifest["kind"] == "sector-counts"


def test_partition_audit_small():
    """Sign sectors partition the non-degenerate forms; the degenerate
    tally is identical for every spec because it is sign-independent."""
    specs = sign_pattern_specs(3)
    total = 0
    members = 0
    degs = [0] * len(specs)
    for tri, _, _ in iter_form_batches(3, 4.0, "max"):
        total += tri.shape[0]
        for i, spec in enumerate(specs):
            m, dg = _classify_batch(tri, 3, spec, 1e-9)
            members += int(m.sum())
            degs[i] += int(dg.sum())
    assert len(set(degs)) == 1
    assert members + degs[0] == total


def test_cap_counts_monotone_in_angle_and_complementary():
    angles = [0.4, 0.8, 1.2]
    base = ["+", "+", "-"]
    counts = []
    for ang in angles:
        spec = make_spec((1, 1, 1), base, frame=Cap(axis=(0, 0, 1), angle=ang))
        counts.append(count_sector([3.0], spec).values[0])
    assert counts == sorted(counts)
    full = count_sector([3.0], make_spec((1, 1, 1), base)).values[0]
    cap = make_spec((1, 1, 1), base, frame=Cap(axis=(0, 0, 1), angle=0.8))
    anti = make_spec((1, 1, 1), base, frame=AntiCap(axis=(0, 0, 1), angle=0.8))
    assert (
        count_sector([3.0], cap).values[0] + count_sector([3.0], anti).values[0]
        == full
    )


def test_count_sector_needs_increasing_grid():
    spec = make_spec((1, 1, 1), ["+", "+", "-"])
    with pytest.raises(ValueError):
        count_sector([3.0, 2.0], spec)
    with pytest.raises(ValueError):
        count_sector([], spec)


# ----------------------------------------------------------------- fitting


def test_count_series_validation():
    with pytest.raises(ValueError):
        CountSeries(t_grid=(1.0, 2.0), values=(1.0,), spec_digest="x")
    with pytest.raises(ValueError):
        CountSeries(t_grid=(1.0,), values=(-1.0,), spec_digest="x")


def test_fit_recovers_planted_power_law():
    ts = np.array([3.0, 5.0, 9.0, 17.0, 33.0, 65.0])
    res = fit_exponent((ts, 5.0 * ts**3))
    assert res.a == pytest.approx(3.0, abs=1e-9)
    assert res.c == pytest.approx(5.0, rel=1e-9)
    assert res.r2 > 1 - 1e-12
    assert max(abs(r) for r in res.residuals) < 1e-12


def test_fit_with_log_factor_and_free_b():
    ts = np.array([3.0, 10.0, 100.0, 1e3, 1e4, 1e5])
    vals = 7.0 * ts**2.5 * np.log(ts)
    res = fit_exponent((ts, vals), b_fixed=2)
    assert res.a == pytest.approx(2.5, abs=1e-9)
    assert res.c == pytest.approx(7.0, rel=1e-9)
    assert res.b_free == pytest.approx(2.0, abs=1e-6)
    assert res.a_free == pytest.approx(2.5, abs=1e-6)
    assert res.c_free == pytest.approx(7.0, rel=1e-4)


def test_fit_requires_enough_positive_points():
    with pytest.raises(ValueError, match="insufficient data"):
        fit_exponent(([2.0, 3.0, 4.0], [1.0, 2.0, 3.0]))
    with pytest.raises(ValueError, match="insufficient data"):
        fit_exponent(([2.0, 3.0, 4.0, 5.0, 6.0], [0.0, 0.0, 1.0, 2.0, 3.0]))
    with pytest.raises(ValueError):
        fit_exponent(([0.5, 2.0, 3.0, 4.0], [1.0, 1.0, 1.0, 1.0]))


def test_with_fit_attaches_or_passes_through():
    good = CountSeries(
        t_grid=(2.0, 4.0, 8.0, 16.0),
        values=(8.0, 64.0, 512.0, 4096.0),
        spec_digest="x",
    )
    fitted = with_fit(good)
    assert fitted.fit_a == pytest.approx(3.0, abs=1e-9)
    short = CountSeries(t_grid=(2.0, 4.0), values=(1.0, 2.0), spec_digest="x")
    assert with_fit(short).fit_a is None
