"""Metric checks and perturbation-stability probes."""

import math

import numpy as np
import pytest
import scipy.linalg

from qfsectors.cartan import kah_decompose, weyl_matrix
from qfsectors.sampling import (
    derive_rng,
    random_indefinite_orthogonal,
    random_rotation,
    random_traceless,
)
from qfsectors.wavefront import (
    MetricDomainError,
    b_inner,
    b_norm,
    chamber_point,
    coarse_probe,
    fine_probe,
    group_distance,
    lipschitz_sweep,
    margins_for_depth,
)

REGULAR_G = np.array([[2.0, 1.0, 0.3], [0.4, 1.5, 0.2], [0.1, 0.3, 1.2]])
REGULAR_G /= abs(np.linalg.det(REGULAR_G)) ** (1 / 3)


def unit_direction(rng, d):
    x = random_traceless(rng, d)
    return x / b_norm(x)


def test_bform_matches_trace_formula():
    # B(X, Y) = -tr(ad X ad theta(Y)) evaluates to 2d tr(X Y^T) on sl_d;
    # the package computes the left side literally, the test the right
    rng = derive_rng(1, "bform")
    for d in (2, 3, 4):
        for _ in range(10):
            x, y = random_traceless(rng, d), random_traceless(rng, d)
            assert b_inner(x, y) == pytest.approx(
                2 * d * float(np.trace(x @ y.T)), rel=1e-12
            )
            assert b_norm(x) == pytest.approx(
                math.sqrt(2 * d) * np.linalg.norm(x), rel=1e-12
            )


def test_group_distance_identity_symmetry_first_order():
    rng = derive_rng(2, "gd")
    x = unit_direction(rng, 3)
    g = scipy.linalg.expm(0.15 * unit_direction(rng, 3))
    h = scipy.linalg.expm(0.1 * unit_direction(rng, 3))
    assert group_distance(g, g) == 0.0
    assert abs(group_distance(g, h) - group_distance(h, g)) < 1e-12
    t = 1e-4
    d = group_distance(scipy.linalg.expm(t * x), np.eye(3))
    assert d == pytest.approx(t * b_norm(x), rel=1e-6)


def test_group_distance_triangle_inequality_statistically():
    rng = derive_rng(3, "triangle")
    worst = -np.inf
    for _ in range(100):
        pts = [
            scipy.linalg.expm(3e-4 * unit_direction(rng, 3)) for _ in range(3)
        ]
        dxy = group_distance(pts[0], pts[1])
        dyz = group_distance(pts[1], pts[2])
        dxz = group_distance(pts[0], pts[2])
        worst = max(worst, dxz - dxy - dyz)
    assert worst <= 1e-9


def test_group_distance_domain_error():
    with pytest.raises(MetricDomainError):
        group_distance(np.diag([10.0, 1.0, 0.1]), np.eye(3))


def test_fine_probe_epsilon_consistency():
    reports = {
        eps: fine_probe(REGULAR_G, (2, 1), epsilon=eps, n=8, seed=77)
        for eps in (1e-2, 1e-3, 1e-4)
    }
    ratios = [r.ratio_k for r in reports.values()]
    for a, b in zip(ratios, ratios[1:]):
        assert abs(a - b) / b < 0.20
    for r in reports.values():
        assert r.crossings == 0
        for val in (r.ratio_k, r.ratio_a, r.ratio_h):
            assert val is not None and np.isfinite(val) and val >= 0


def test_fine_probe_is_deterministic():
    r1 = fine_probe(REGULAR_G, (2, 1), epsilon=1e-3, n=6, seed=9)
    r2 = fine_probe(REGULAR_G, (2, 1), epsilon=1e-3, n=6, seed=9)
    assert (r1.ratio_k, r1.ratio_a, r1.ratio_h) == (r2.ratio_k, r2.ratio_a, r2.ratio_h)


def test_fine_probe_near_identity_crosses_weyl_slots():
    # a = e sits on every wall: slot order is unstable under perturbation
    rng = derive_rng(11, "singular-base")
    k0 = random_rotation(rng, 3)
    h0 = random_indefinite_orthogonal(rng, 2, 1, scale=0.05)
    g = k0 @ weyl_matrix((1, 1, -1), (2, 1)) @ h0
    report = fine_probe(g, (2, 1), epsilon=1e-3, n=16, seed=5)
    assert report.crossings >= 1
    # surviving samples see the arbitrary tie-broken frame: blow-up
    assert report.ratio_k is None or report.ratio_k > 100.0


def test_fine_probe_epsilon_guard():
    with pytest.raises(ValueError):
        fine_probe(REGULAR_G, (2, 1), epsilon=0.5, n=2, seed=0)
    with pytest.raises(ValueError):
        fine_probe(REGULAR_G, (2, 1), epsilon=0.0, n=2, seed=0)


def test_coarse_probe_trivial_grouping_matches_fine():
    """With nothing joined the coarse A-observable is the fine one, and
    the span-angle frame observable brackets the metric k-distance:
    max principal angle <= ||log relative rotation||_F <= sqrt(d) * max,
    with the B-norm a fixed sqrt(2d) rescale of the Frobenius norm."""
    fine = fine_probe(REGULAR_G, (2, 1), epsilon=1e-3, n=10, seed=77)
    coarse = coarse_probe(REGULAR_G, (2, 1), (), epsilon=1e-3, n=10, seed=77)
    assert coarse.ratio_coarse_aI == fine.ratio_a
    d = 3
    lo = fine.ratio_k / math.sqrt(2 * d) / math.sqrt(d)
    hi = fine.ratio_k / math.sqrt(2 * d)
    assert 0.95 * lo <= coarse.ratio_coarse_frame <= 1.05 * hi


def test_coarse_probe_rejects_ambiguous_clustering():
    rng = derive_rng(19, "tight-margin")
    avec = np.exp(chamber_point([0.05, 1.0]))
    g = (
        random_rotation(rng, 3)
        @ (avec[:, None] * (weyl_matrix((1, 1, -1), (2, 1))
                            @ random_indefinite_orthogonal(rng, 2, 1, 0.3)))
    )
    # kept wall 1 has margin 0.05 < 10 * 0.01
    with pytest.raises(ValueError):
        coarse_probe(g, (2, 1), (), epsilon=1e-2, n=2, seed=0)
    # joining that wall lifts the ambiguity
    coarse_probe(g, (2, 1), (1,), epsilon=1e-2, n=2, seed=0)


def test_coarse_probe_rescues_near_wall_base_point():
    """The frame factor loses Lipschitz control like 1/margin at a wall;
    the coarse probe joining that wall stays at the deep-chamber scale.
    The a-coordinates never blow up: a congruence by exp(eps X) moves
    every log |eigenvalue| by at most ~2 eps ||X||_2 (Ostrowski), so
    ratio_a stays O(1) at any margin and only k and h degrade."""
    rng = derive_rng(21, "near-wall")
    margins = np.array([0.01, 1.0])
    avec = np.exp(chamber_point(margins))
    k0 = random_rotation(rng, 3)
    h0 = random_indefinite_orthogonal(rng, 2, 1, scale=0.4)
    g = k0 @ (avec[:, None] * (weyl_matrix((1, 1, -1), (2, 1)) @ h0))
    dirs_seed = 33
    fine = fine_probe(g, (2, 1), epsilon=1e-4, n=12, seed=dirs_seed)
    coarse = coarse_probe(g, (2, 1), (1,), epsilon=1e-4, n=12, seed=dirs_seed)
    assert fine.crossings == 0
    assert fine.ratio_k >= 10.0 * coarse.ratio_coarse_frame
    assert fine.ratio_h >= 10.0 * max(coarse.ratio_coarse_frame, coarse.ratio_coarse_aI)
    assert fine.ratio_a < 2.0  # Ostrowski bound, no rescue needed


def test_coarse_probe_joined_validation():
    with pytest.raises(ValueError):
        coarse_probe(REGULAR_G, (2, 1), (3,), epsilon=1e-3, n=2, seed=0)


def test_chamber_point_and_margins_for_depth():
    m = np.array([0.3, 0.7])
    y = chamber_point(m)
    assert abs(y.sum()) < 1e-12
    assert np.allclose(-np.diff(y), m)
    mm = margins_for_depth(3, wall=1, c=0.2, depth=2.0)
    assert mm[0] == pytest.approx(0.2)
    assert np.linalg.norm(chamber_point(mm)) == pytest.approx(2.0)
    assert mm.min() == pytest.approx(0.2)  # pinned wall is the minimum
    with pytest.raises(ValueError):
        margins_for_depth(3, wall=1, c=1.0, depth=0.5)


def test_lipschitz_sweep_shape_and_empty_cells():
    cells = lipschitz_sweep(
        (2, 1), c_grid=[0.5], depth_grid=[0.1, 2.0], epsilon=1e-3,
        n_per_cell=3, seed=4, wall=1,
    )
    assert len(cells) == 2
    shallow, deep = cells
    # depth 0.1 cannot hold a margin-0.5 point: recorded empty, no numbers
    assert shallow.empty and shallow.n_points == 0 and shallow.ratio_k is None
    assert not deep.empty and deep.n_points == 3
    assert deep.ratio_k > 0 and deep.ratio_a > 0 and deep.ratio_h > 0
    assert deep.ratio_coarse_aI > 0 and deep.ratio_coarse_frame > 0


def test_lipschitz_sweep_deterministic_per_seed():
    kw = dict(
        c_grid=[0.4], depth_grid=[1.5], epsilon=1e-3, n_per_cell=2, seed=8, wall=1
    )
    a = lipschitz_sweep((2, 1), **kw)
    b = lipschitz_sweep((2, 1), **kw)
    assert a == b
