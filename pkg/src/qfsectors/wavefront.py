"""Stability probes for the k a w h factorization.

The factor map g -> (k, a, w, h) is smooth where the |eigenvalues| of
g J g.T stay simple, and it degenerates at the chamber walls where
neighbouring slots collide.  The probes measure that empirically:
perturb g on the left by exp(eps X) for random unit tangent directions
X, refactor, gauge away the column-sign ambiguity of the eigenvector
frame, and compare factor displacement against eps.

Distances on the group use the metric induced by the quadratic form
B(X, Y) = -tr(ad X . ad theta(Y)) on traceless matrices, theta(Y)=-Y.T,
evaluated through the literal adjoint action on an explicit basis.  The
a factor is compared in plain Euclidean log coordinates (the same
metric up to a constant factor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from . import sampling
from .cartan import (
    CartanFactors,
    kah_decompose,
    signature_matrix,
    weyl_matrix,
)

MAX_PROBE_EPS = 1e-2


class MetricDomainError(ValueError):
    """The two group elements are too far apart for the matrix log."""


@lru_cache(maxsize=8)
def _sl_basis(d: int) -> tuple[np.ndarray, ...]:
    """Basis of traceless d x d matrices: E_ij (i != j), then E_kk - E_dd."""
    out = []
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            e = np.zeros((d, d))
            e[i, j] = 1.0
            out.append(e)
    for kk in range(d - 1):
        e = np.zeros((d, d))
        e[kk, kk] = 1.0
        e[d - 1, d - 1] = -1.0
        out.append(e)
    for m in out:
        m.flags.writeable = False
    return tuple(out)


def matrix_to_coords(x: np.ndarray) -> np.ndarray:
    """Coordinates of a traceless matrix in the _sl_basis ordering."""
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    off = [x[i, j] for i in range(d) for j in range(d) if i != j]
    return np.array(off + list(np.diag(x)[: d - 1]))


@lru_cache(maxsize=8)
def bmetric_gram(d: int) -> np.ndarray:
    """Gram matrix of B on the _sl_basis, via the literal ad action."""
    basis = _sl_basis(d)
    eye = np.eye(d)
    # row-major vec: ad(X) = kron(X, I) - kron(I, X.T)
    ads = [np.kron(b, eye) - np.kron(eye, b.T) for b in basis]
    ads_theta = [np.kron(-b.T, eye) + np.kron(eye, b) for b in basis]
    n = len(basis)
    gram = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            gram[i, j] = -np.trace(ads[i] @ ads_theta[j])
    gram.flags.writeable = False
    return gram


def b_inner(x: np.ndarray, y: np.ndarray) -> float:
    d = np.asarray(x).shape[0]
    cx = matrix_to_coords(x)
    cy = matrix_to_coords(y)
    return float(cx @ bmetric_gram(d) @ cy)


def b_norm(x: np.ndarray) -> float:
    return math.sqrt(max(b_inner(x, x), 0.0))


def _real_log(m: np.ndarray) -> np.ndarray:
    if np.linalg.norm(m - np.eye(m.shape[0])) >= 1.0:
        raise MetricDomainError("group elements too far apart for the local metric")
    lg = scipy.linalg.logm(m)
    if np.linalg.norm(np.imag(lg)) > 1e-8 * max(1.0, np.linalg.norm(lg)):
        raise MetricDomainError("matrix log left the real domain")
    return np.real(lg)


def group_distance(x: np.ndarray, y: np.ndarray) -> float:
    """|| log(x y^-1) ||_B for nearby invertible x, y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.array_equal(x, y):
        return 0.0
    m = np.linalg.solve(y.T, x.T).T  # x @ inv(y)
    return b_norm(_real_log(m))


@dataclass(frozen=True)
class ProbeSample:
    """One perturbation direction: measured displacements (None if crossed)."""

    d_input: float
    crossed: bool
    d_k: float | None = None
    d_a: float | None = None
    d_h: float | None = None


@dataclass(frozen=True)
class ProbeReport:
    base: CartanFactors
    epsilon: float
    samples: int
    regularity_c: float
    chamber_depth: float
    crossings: int
    ratio_k: float | None = None
    ratio_a: float | None = None
    ratio_h: float | None = None
    ratio_coarse_aI: float | None = None
    ratio_coarse_frame: float | None = None
    detail: tuple[ProbeSample, ...] = ()


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, (int, np.integer)):
        return sampling.derive_rng(int(seed), "wavefront-probe")
    return seed


def _unit_directions(d: int, n: int, rng) -> list[np.ndarray]:
    dirs = []
    for _ in range(n):
        x = sampling.random_traceless(rng, d)
        dirs.append(x / b_norm(x))
    return dirs


def _gauge(base: CartanFactors, probe: CartanFactors):
    """Align probe's column-sign gauge to base; factors must share w."""
    dots = np.einsum("ij,ij->j", base.k, probe.k)
    signs = np.where(dots >= 0, 1.0, -1.0)
    if np.prod(signs) < 0:
        signs[int(np.argmin(np.abs(dots)))] *= -1.0
    k_al = probe.k * signs
    pmat = weyl_matrix(probe.w, probe.signature)
    h_al = (pmat.T @ np.diag(signs) @ pmat) @ probe.h
    return k_al, h_al


def fine_probe(
    g: np.ndarray,
    signature: tuple[int, int],
    epsilon: float,
    n: int,
    seed,
    directions=None,
) -> ProbeReport:
    """Refactor exp(eps X).g for n random unit X; compare every factor.

    seed may be an integer or a numpy Generator.  Perturbations whose
    sign pattern differs from the base are Weyl-slot crossings: counted,
    excluded from the ratios.
    """
    if not 0.0 < epsilon <= MAX_PROBE_EPS:
        raise ValueError("epsilon must lie in (0, 1e-2]")
    base = kah_decompose(g, signature)
    d = sum(signature)
    jmat = signature_matrix(*signature)
    if directions is None:
        directions = _unit_directions(d, n, _as_rng(seed))
    detail = []
    for x in directions:
        gp = scipy.linalg.expm(epsilon * x) @ g
        probe = kah_decompose(gp, signature)
        d_in = group_distance(gp, g)
        if probe.w != base.w:
            detail.append(ProbeSample(d_input=d_in, crossed=True))
            continue
        k_al, h_al = _gauge(base, probe)
        # a tied base frame can be arbitrarily far from the probe's even
        # with w unchanged; that is the blow-up at the singular set and
        # it reports as an infinite displacement, not a crash
        try:
            d_k = b_norm(_real_log(k_al @ base.k.T))
        except MetricDomainError:
            d_k = math.inf
        d_a = float(np.linalg.norm(np.log(probe.a) - np.log(base.a)))
        h_inv = jmat @ base.h.T @ jmat  # exact inverse in H
        try:
            d_h = b_norm(_real_log(h_al @ h_inv))
        except MetricDomainError:
            d_h = math.inf
        detail.append(
            ProbeSample(d_input=d_in, crossed=False, d_k=d_k, d_a=d_a, d_h=d_h)
        )
    kept = [s for s in detail if not s.crossed]
    return ProbeReport(
        base=base,
        epsilon=epsilon,
        samples=len(detail),
        regularity_c=float(min(base.margins)),
        chamber_depth=base.chamber_depth,
        crossings=len(detail) - len(kept),
        ratio_k=max(s.d_k / epsilon for s in kept) if kept else None,
        ratio_a=max(s.d_a / epsilon for s in kept) if kept else None,
        ratio_h=max(s.d_h / epsilon for s in kept) if kept else None,
        detail=tuple(detail),
    )


def _blocks_from_joined(d: int, joined: tuple[int, ...]):
    blocks, cur = [], [0]
    for i in range(1, d):
        if i in joined:  # boundary i joined: slots i-1, i share a block
            cur.append(i)
        else:
            blocks.append(cur)
            cur = [i]
    blocks.append(cur)
    return blocks


def coarse_probe(
    g: np.ndarray,
    signature: tuple[int, int],
    joined: tuple[int, ...],
    epsilon: float,
    n: int,
    seed,
    directions=None,
) -> ProbeReport:
    """Block-averaged stability: slots across each joined boundary merge.

    joined lists 1-based boundary indices allowed to degenerate.  Every
    kept boundary must have margin at least 10 eps, otherwise the block
    clustering is ambiguous and the base point is rejected.  Only the
    coarse observables are measured: block geometric means of the a
    coordinates and the largest principal angle between grouped
    eigenvector column spans.
    """
    if not 0.0 < epsilon <= MAX_PROBE_EPS:
        raise ValueError("epsilon must lie in (0, 1e-2]")
    d = sum(signature)
    joined = tuple(sorted(set(joined)))
    if any(i < 1 or i > d - 1 for i in joined):
        raise ValueError("joined entries must be boundary indices 1..d-1")
    base = kah_decompose(g, signature)
    for i in range(1, d):
        if i not in joined and base.margins[i - 1] < 10.0 * epsilon:
            raise ValueError(
                "margin at a kept boundary is below 10*eps; join it or shrink eps"
            )
    blocks = _blocks_from_joined(d, joined)
    base_means = np.array([np.log(base.a)[b].mean() for b in blocks])
    if directions is None:
        directions = _unit_directions(d, n, _as_rng(seed))
    detail = []
    ratio_ai, ratio_frame = 0.0, 0.0
    for x in directions:
        gp = scipy.linalg.expm(epsilon * x) @ g
        probe = kah_decompose(gp, signature)
        d_in = group_distance(gp, g)
        means = np.array([np.log(probe.a)[b].mean() for b in blocks])
        d_blocks = float(np.linalg.norm(means - base_means))
        ang = 0.0
        for b in blocks:
            theta = scipy.linalg.subspace_angles(base.k[:, b], probe.k[:, b])
            ang = max(ang, float(theta[0]))
        ratio_ai = max(ratio_ai, d_blocks / epsilon)
        ratio_frame = max(ratio_frame, ang / epsilon)
        detail.append(ProbeSample(d_input=d_in, crossed=False, d_a=d_blocks, d_k=ang))
    return ProbeReport(
        base=base,
        epsilon=epsilon,
        samples=len(detail),
        regularity_c=float(min(base.margins)),
        chamber_depth=base.chamber_depth,
        crossings=0,
        ratio_coarse_aI=ratio_ai,
        ratio_coarse_frame=ratio_frame,
        detail=tuple(detail),
    )


def chamber_point(margins) -> np.ndarray:
    """Centered log-a vector realizing the given successive margins."""
    m = np.asarray(margins, dtype=float)
    y = np.concatenate([[0.0], -np.cumsum(m)])
    return y - y.mean()


def margins_for_depth(d: int, wall: int, c: float, depth: float) -> np.ndarray:
    """Margins with margins[wall]=c, the rest equal, ||chamber_point||=depth.

    The shared value t of the free margins solves a quadratic; the
    construction requires t >= c so that c really is the minimum margin.
    """
    base = np.zeros(d - 1)
    base[wall - 1] = c
    unit = np.ones(d - 1)
    unit[wall - 1] = 0.0
    u = chamber_point(base)
    v = chamber_point(unit)  # chamber_point is linear in the margins
    aa = float(v @ v)
    bb = 2.0 * float(u @ v)
    cc = float(u @ u) - depth * depth
    disc = bb * bb - 4.0 * aa * cc
    if aa == 0.0 or disc < 0.0:
        raise ValueError("no chamber point at this depth with the pinned margin")
    t = (-bb + math.sqrt(disc)) / (2.0 * aa)
    if t < c:
        raise ValueError("depth too small: the pinned margin would not be minimal")
    return base + t * unit


@dataclass(frozen=True)
class SweepCell:
    c: float
    depth: float
    epsilon: float
    n_points: int
    empty: bool
    crossings: int
    ratio_k: float | None = None
    ratio_a: float | None = None
    ratio_h: float | None = None
    ratio_coarse_aI: float | None = None
    ratio_coarse_frame: float | None = None


def lipschitz_sweep(
    signature: tuple[int, int],
    c_grid,
    depth_grid,
    epsilon: float,
    n_per_cell: int,
    seed: int,
    wall: int | None = None,
    directions_per_point: int = 3,
    coarse: bool = True,
) -> list[SweepCell]:
    """Max displacement ratios over synthetic base points per (c, depth) cell.

    Base points are built directly as k0.diag(a).W.h0 with the canonical
    sign pattern, prescribed minimum margin c (at `wall`, or a random
    wall per point when None) and chamber depth ||log a||.  Fine and
    coarse probes run on the same directions; the coarse probe joins
    exactly the pinned wall.  Cells whose base-point construction fails
    are recorded as empty rather than fabricated.
    """
    p, q = signature
    d = p + q
    w0 = (1,) * p + (-1,) * q
    wmat = weyl_matrix(w0, signature)
    cells = []
    for c in c_grid:
        for depth in depth_grid:
            rk, ra, rh, rai, rfr = [], [], [], [], []
            crossings = 0
            n_ok = 0
            for b in range(n_per_cell):
                rng = sampling.derive_rng(
                    seed, "sweep", float(c), float(depth), b
                )
                wall_b = wall if wall is not None else int(rng.integers(1, d))
                try:
                    margins = margins_for_depth(d, wall_b, float(c), float(depth))
                except ValueError:
                    continue
                avec = np.exp(chamber_point(margins))
                k0 = sampling.random_rotation(rng, d)
                h0 = sampling.random_indefinite_orthogonal(rng, p, q, scale=0.5)
                g = k0 @ (avec[:, None] * (wmat @ h0))
                dirs = _unit_directions(d, directions_per_point, rng)
                fine = fine_probe(g, signature, epsilon, 0, None, directions=dirs)
                n_ok += 1
                crossings += fine.crossings
                if fine.ratio_k is not None:
                    rk.append(fine.ratio_k)
                    ra.append(fine.ratio_a)
                    rh.append(fine.ratio_h)
                if coarse:
                    try:
                        co = coarse_probe(
                            g, signature, (wall_b,), epsilon, 0, None,
                            directions=dirs,
                        )
                        rai.append(co.ratio_coarse_aI)
                        rfr.append(co.ratio_coarse_frame)
                    except ValueError:
                        pass
            cells.append(
                SweepCell(
                    c=float(c),
                    depth=float(depth),
                    epsilon=epsilon,
                    n_points=n_ok,
                    empty=not rk,
                    crossings=crossings,
                    ratio_k=max(rk) if rk else None,
                    ratio_a=max(ra) if ra else None,
                    ratio_h=max(rh) if rh else None,
                    ratio_coarse_aI=max(rai) if rai else None,
                    ratio_coarse_frame=max(rfr) if rfr else None,
                )
            )
    return cells
