"""Numerical volumes of sector regions under the invariant density.

The region attached to a block pattern is parameterized by a frame in
SO(d) and a point of the closed cone A_I+, coordinatized by its wall
margins m_1..m_n (one per interior cut).  The invariant density in
these coordinates is

    xi(a) = prod over cross-block positive roots alpha of
            sinh(alpha(log a))^{l+} * cosh(alpha(log a))^{l-},

which the quadrature path integrates directly (frobenius balls only,
where the radius is frame-independent) and the Monte Carlo path samples
with an exponential tilt matched to xi's growth rate in each margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate as _sintegrate
from scipy.linalg import expm
from scipy.special import betainc

from . import enumeration
from .rootdata import (
    BlockDecomposition,
    RootDatum,
    datum_for_signs,
    predict_exponent,
    weight_coefficients,
)
from .sampling import derive_rng, random_rotation
from .sector import (
    AntiCap,
    Cap,
    CountSeries,
    FullFrame,
    _classify_batch,
    make_spec,
    with_fit,
)
from .wavefront import _unit_directions

CHAMBER_TOL = 1e-9
_QUAD_OPTS = {"limit": 120, "epsabs": 1e-11, "epsrel": 1e-9}


@dataclass(frozen=True)
class DensityContext:
    """Root datum + joined walls + base diagonal: everything xi needs.

    joined lists the simple roots (1-based positions) collapsed to zero
    on A_I; the remaining positions are the interior cuts, and the cone
    coordinates are the margins at those cuts.  signs is the diagonal of
    the base form the cone acts on.
    """

    datum: RootDatum
    joined: tuple[int, ...]
    signs: tuple[int, ...]

    def __post_init__(self) -> None:
        d = self.datum.d
        joined = tuple(sorted(set(int(i) for i in self.joined)))
        if any(i < 1 or i > d - 1 for i in joined):
            raise ValueError("joined walls must lie in 1..d-1")
        signs = tuple(int(s) for s in self.signs)
        if len(signs) != d or any(s not in (-1, 1) for s in signs):
            raise ValueError("signs must be a +-1 vector of length d")
        if sum(1 for s in signs if s == 1) != self.datum.p:
            raise ValueError("sign pattern disagrees with the datum signature")
        object.__setattr__(self, "joined", joined)
        object.__setattr__(self, "signs", signs)

    @property
    def d(self) -> int:
        return self.datum.d

    @property
    def blocks(self) -> BlockDecomposition:
        d = self.d
        cuts = [i for i in range(1, d) if i not in self.joined]
        dims, prev = [], 0
        for c in cuts + [d]:
            dims.append(c - prev)
            prev = c
        return BlockDecomposition(d=d, dims=tuple(dims))

    @property
    def cuts(self) -> tuple[int, ...]:
        return self.blocks.cuts

    @property
    def chamber(self) -> tuple[tuple[float, ...], ...]:
        """Rows w with the cone given by w . log_a >= 0 (one per cut)."""
        d = self.d
        rows = []
        for c in self.cuts:
            row = [0.0] * d
            row[c - 1], row[c] = 1.0, -1.0
            rows.append(tuple(row))
        return tuple(rows)

    @property
    def base_vector(self) -> tuple[int, ...]:
        """Upper-triangle coordinates of the base form diag(signs)."""
        vec = {(i, i): s for i, s in enumerate(self.signs)}
        return tuple(vec.get(ij, 0) for ij in enumeration.triangle_indices(self.d))

    def base_form(self) -> np.ndarray:
        return np.diag(np.asarray(self.signs, dtype=float))

    def free_roots(self) -> tuple[tuple[int, int, int, int], ...]:
        """Cross-block positive roots as (i, j, l_plus, l_minus)."""
        cuts = self.cuts
        blk = np.zeros(self.d + 1, dtype=int)
        for c in cuts:
            blk[c + 1 :] += 1
        out = []
        for i, j in self.datum.positive_roots:
            if blk[i] != blk[j]:
                out.append((i, j, *self.datum.multiplicity((i, j))))
        return tuple(out)

    def log_coords(self, margins) -> np.ndarray:
        """Margins -> trace-free block-constant log coordinates.

        Accepts one margin vector (n,) or a batch (N, n); returns (d,)
        or (N, d) correspondingly.
        """
        m = np.asarray(margins, dtype=float)
        single = m.ndim == 1
        m = np.atleast_2d(m)
        if m.shape[1] != len(self.cuts):
            raise ValueError("one margin per interior cut required")
        dims = np.asarray(self.blocks.dims, dtype=float)
        drop = np.concatenate([np.zeros((m.shape[0], 1)), np.cumsum(m, axis=1)], axis=1)
        shift = (drop @ dims) / self.d
        vals = shift[:, None] - drop
        y = np.repeat(vals, self.blocks.dims, axis=1)
        return y[0] if single else y


def context_for(signs, joined=()) -> DensityContext:
    return DensityContext(datum=datum_for_signs(signs), joined=tuple(joined), signs=tuple(signs))


def context_pq(d: int, p: int, q: int, joined=()) -> DensityContext:
    return context_for((1,) * p + (-1,) * q, joined=joined)


def _xi_margins(ctx: DensityContext, margins: np.ndarray) -> np.ndarray:
    """Signed density values on a batch of margin vectors (no chamber check)."""
    y = np.atleast_2d(ctx.log_coords(margins))
    out = np.ones(y.shape[0])
    for i, j, lp, lm in ctx.free_roots():
        v = y[:, i - 1] - y[:, j - 1]
        if lp:
            out = out * np.sinh(v) ** lp
        if lm:
            out = out * np.cosh(v) ** lm
    return out


def xi_density(ctx: DensityContext, log_a) -> float:
    """Density at a point of the closed cone; rejects points off it."""
    y = np.asarray(log_a, dtype=float)
    if y.shape != (ctx.d,):
        raise ValueError("log_a must be a length-d vector")
    if abs(float(y.sum())) > CHAMBER_TOL * ctx.d:
        raise ValueError("log_a outside the chamber: nonzero trace")
    starts = np.concatenate([[0], np.asarray(ctx.cuts, dtype=int)])
    dims = np.asarray(ctx.blocks.dims)
    means = np.add.reduceat(y, starts) / dims
    spread = float(np.max(np.abs(y - np.repeat(means, dims))))
    if spread > CHAMBER_TOL:
        raise ValueError("log_a outside the chamber: not block-constant")
    margins = -np.diff(means)
    if np.any(margins < -CHAMBER_TOL):
        raise ValueError("log_a outside the chamber: negative wall margin")
    val = float(_xi_margins(ctx, np.maximum(margins, 0.0)[None, :])[0])
    return max(val, 0.0)


def _ball_radius(ctx: DensityContext, margins: np.ndarray) -> np.ndarray:
    """Frobenius norm of a . v0 on a batch of margin vectors."""
    y = np.atleast_2d(ctx.log_coords(margins))
    starts = np.concatenate([[0], np.asarray(ctx.cuts, dtype=int)])
    dims = np.asarray(ctx.blocks.dims, dtype=float)
    vals = y[:, starts]
    return np.sqrt(np.exp(4.0 * vals) @ dims)


def haar_fraction(frame, d: int) -> float:
    """Haar measure of frames whose top axis meets the constraint."""
    if frame is None or isinstance(frame, FullFrame):
        return 1.0
    theta = frame.angle
    if theta >= math.pi / 2:
        inside = 1.0
    else:
        inside = 1.0 - float(betainc(0.5, (d - 1) / 2.0, math.cos(theta) ** 2))
    if isinstance(frame, AntiCap):
        return 1.0 - inside
    if isinstance(frame, Cap):
        return inside
    raise ValueError("unsupported frame constraint")


def _predicted_pair(ctx: DensityContext):
    return predict_exponent(ctx.d, ctx.blocks.dims)


def _upper_margin(ctx, prefix: list, t: float, fill: float) -> float:
    """Largest value of the next margin keeping the cone point inside the
    T-ball when the remaining margins sit at `fill`.  Radius is monotone
    increasing in every margin, so bisection against the minimal
    completion is a true upper bound."""
    n = len(ctx.cuts)
    rest = n - len(prefix) - 1

    def radius(mv: float) -> float:
        row = np.asarray(prefix + [mv] + [fill] * rest)
        return float(_ball_radius(ctx, row[None, :])[0])

    if radius(fill) >= t:
        return fill
    hi = max(1.0, 2.0 * fill)
    for _ in range(200):
        if radius(hi) >= t:
            break
        hi *= 2.0
    else:
        raise ArithmeticError("ball radius failed to grow along the margin")
    lo = fill
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if radius(mid) < t:
            lo = mid
        else:
            hi = mid
    return lo


def _nested_quadrature(ctx: DensityContext, t: float, lower: float) -> float:
    """Integral of xi over {all margins > lower} inside the T-ball."""
    n = len(ctx.cuts)

    def rec(prefix: list) -> float:
        k = len(prefix)
        if k == n:
            return float(_xi_margins(ctx, np.asarray(prefix)[None, :])[0])
        ub = _upper_margin(ctx, prefix, t, lower)
        if ub <= lower:
            return 0.0
        val, _ = _sintegrate.quad(lambda mv: rec(prefix + [mv]), lower, ub, **_QUAD_OPTS)
        return val

    return rec([])


def _margin_boxes(ctx: DensityContext, t: float) -> np.ndarray:
    """Per-cut upper bounds: beyond box k the point leaves the T-ball
    even with every other margin at zero (radius is monotone)."""
    n = len(ctx.cuts)
    return np.asarray([_upper_margin(ctx, [0.0] * k, t, 0.0) for k in range(n)])


def _tilted_margins(ctx, t: float, rng, samples: int, lo: float = 0.0, pad: float = 0.25):
    """Exponentially tilted margin sample on [lo, box_k + pad] per cut.

    The tilt rate at cut k is the number of roots crossing that cut,
    which is xi's asymptotic log-slope in m_k, so the weights xi/p stay
    bounded across the box.  Returns (margins, log proposal density).
    """
    u, _ = weight_coefficients(ctx.blocks)
    rates = np.asarray([float(x) for x in u])
    hi = np.maximum(_margin_boxes(ctx, t) + pad, lo + 1e-6)
    a, b = np.exp(rates * lo), np.exp(rates * hi)
    v = rng.random((samples, len(rates)))
    margins = np.log(a + v * (b - a)) / rates
    logp = margins @ rates - float(np.sum(np.log((b - a) / rates)))
    return margins, logp


def _log_abs_xi(ctx: DensityContext, margins: np.ndarray) -> np.ndarray:
    y = ctx.log_coords(margins)
    with np.errstate(divide="ignore"):
        out = np.zeros(margins.shape[0])
        for i, j, lp, lm in ctx.free_roots():
            v = y[:, i - 1] - y[:, j - 1]
            if lp:
                out += lp * np.log(np.abs(np.sinh(v)))
            if lm:
                out += lm * np.log(np.cosh(v))
    return out


_GRID_BINS = {1: 2048, 2: 120, 3: 36}


def _grid_margins(ctx, t: float, rng, samples: int, lo: float = 0.0, pad: float = 0.25):
    """Margin sample from a piecewise-constant sketch of |xi| on the box.

    Cells whose center cannot reach the T-ball (with slack for the cell
    size and the collar) get zero mass; the rest are weighted by |xi| at
    their center, mixed 9:1 with uniform-over-kept-cells so the
    importance weights stay bounded near the walls where xi vanishes.
    Falls back to the coordinate tilt above chamber dimension 3.
    """
    n = len(ctx.cuts)
    if n > 3:
        return _tilted_margins(ctx, t, rng, samples, lo=lo, pad=pad)
    bins = _GRID_BINS[n]
    hi = np.maximum(_margin_boxes(ctx, t) + pad, lo + 1e-6)
    edges = [np.linspace(lo, h, bins + 1) for h in hi]
    widths = np.asarray([e[1] - e[0] for e in edges])
    mids = [0.5 * (e[:-1] + e[1:]) for e in edges]
    centers = np.stack(
        [g.ravel() for g in np.meshgrid(*mids, indexing="ij")], axis=1
    )
    slack = (pad - lo) + 2.0 * float(widths.sum())
    keep = _ball_radius(ctx, centers) <= t * math.exp(slack)
    if not np.any(keep):
        keep = np.ones(len(centers), dtype=bool)
    logxi = _log_abs_xi(ctx, centers)
    logxi[~keep] = -np.inf
    shift = np.max(logxi)
    mass = np.exp(logxi - shift)
    total = float(mass.sum())
    nkept = int(np.count_nonzero(keep))
    p_cell = 0.9 * mass / total + 0.1 * keep / nkept
    idx = rng.choice(len(centers), size=samples, p=p_cell)
    jitter = rng.random((samples, n)) - 0.5
    margins = centers[idx] + jitter * widths[None, :]
    area = float(np.prod(widths))
    logp = np.log(p_cell[idx]) - math.log(area)
    return margins, logp


def _mc_series(
    ctx: DensityContext,
    ts,
    norm: str,
    frame,
    samples: int,
    seed,
    near_wall_c: Optional[float] = None,
):
    rng = derive_rng(seed, "volume-mc") if isinstance(seed, int) else seed
    d = ctx.d
    margins, logp = _grid_margins(ctx, max(ts), rng, samples)
    weights = np.exp(_log_abs_xi(ctx, margins) - logp)

    factor = 1.0
    if norm == "frobenius":
        radii = _ball_radius(ctx, margins)
        factor = haar_fraction(frame, d)
    elif norm == "max":
        y = ctx.log_coords(margins)
        eig = np.asarray(ctx.signs, dtype=float) * np.exp(2.0 * y)
        frames = np.stack([random_rotation(rng, d) for _ in range(samples)])
        forms = np.einsum("nij,nj,nkj->nik", frames, eig, frames)
        radii = np.max(np.abs(forms), axis=(1, 2))
        if not (frame is None or isinstance(frame, FullFrame)):
            top = ctx.blocks.dims[0]
            axis = np.asarray(frame.axis)
            proj = np.sqrt(
                np.minimum(np.sum((frames[:, :, :top] * axis[None, :, None]) ** 2, axis=(1, 2)), 1.0)
            )
            inside = np.arccos(proj) <= frame.angle
            accept = ~inside if isinstance(frame, AntiCap) else inside
            weights = weights * accept
    else:
        raise ValueError("unknown norm")

    if near_wall_c is not None:
        weights = weights * (np.min(margins, axis=1) <= near_wall_c)

    values, errs = [], []
    for t in ts:
        contrib = factor * weights * (radii < t)
        values.append(float(contrib.mean()))
        errs.append(float(contrib.std(ddof=1) / math.sqrt(samples)))
    return values, errs


def volume_series(
    ctx: DensityContext,
    t_grid,
    method: str = "quadrature",
    frame=None,
    norm: str = "frobenius",
    samples: int = 200_000,
    seed=None,
) -> CountSeries:
    """Region volume per threshold, quadrature or importance-sampled MC."""
    ts = [float(x) for x in t_grid]
    if not ts or sorted(ts) != ts:
        raise ValueError("T grid must be nonempty and increasing")
    n = len(ctx.cuts)
    if n == 0:
        raise ValueError("chamber must have at least one interior cut")
    pair = _predicted_pair(ctx)
    stderr = None
    if method == "quadrature":
        if norm != "frobenius":
            raise ValueError("quadrature supports the frobenius norm only")
        if n > 3:
            raise ValueError("quadrature limited to chamber dimension <= 3; use monte-carlo")
        factor = haar_fraction(frame, ctx.d)
        values = [factor * _nested_quadrature(ctx, t, 0.0) for t in ts]
    elif method in ("mc", "monte-carlo"):
        if seed is None:
            raise ValueError("monte-carlo needs a seed")
        values, errs = _mc_series(ctx, ts, norm, frame, int(samples), seed)
        stderr = tuple(errs)
    else:
        raise ValueError("method must be quadrature or monte-carlo")
    series = CountSeries(
        t_grid=tuple(ts),
        values=tuple(values),
        spec_digest=_context_digest(ctx, frame, norm),
        manifest={
            "kind": "volume",
            "method": method,
            "norm": norm,
            "signs": list(ctx.signs),
            "joined": list(ctx.joined),
            "samples": int(samples) if method != "quadrature" else None,
            "seed": seed if isinstance(seed, int) else None,
            "predicted_a": str(pair.a),
            "predicted_b": pair.b,
        },
        stderr=stderr,
    )
    return with_fit(series, b_fixed=pair.b)


def _context_digest(ctx: DensityContext, frame, norm: str) -> str:
    spec = make_spec(
        ctx.blocks.dims,
        _block_signatures(ctx),
        frame=frame,
        norm=norm if norm in enumeration.NORMS else "max",
    )
    return spec.digest()


def _block_signatures(ctx: DensityContext) -> list[tuple[int, int]]:
    sigs, pos = [], 0
    for dim in ctx.blocks.dims:
        chunk = ctx.signs[pos : pos + dim]
        sigs.append((sum(1 for s in chunk if s == 1), sum(1 for s in chunk if s == -1)))
        pos += dim
    return sigs


def singular_volume(
    ctx: DensityContext,
    c: float,
    t_grid,
    method: str = "quadrature",
    frame=None,
    norm: str = "frobenius",
    samples: int = 200_000,
    seed=None,
) -> CountSeries:
    """Volume of the near-wall slice: some margin <= c, inside the ball."""
    if c < 0:
        raise ValueError("need c >= 0")
    ts = [float(x) for x in t_grid]
    if not ts or sorted(ts) != ts:
        raise ValueError("T grid must be nonempty and increasing")
    n = len(ctx.cuts)
    if n == 0:
        raise ValueError("chamber must have at least one interior cut")
    pair = _predicted_pair(ctx)
    stderr = None
    if method == "quadrature":
        if norm != "frobenius":
            raise ValueError("quadrature supports the frobenius norm only")
        if n > 3:
            raise ValueError("quadrature limited to chamber dimension <= 3; use monte-carlo")
        factor = haar_fraction(frame, ctx.d)
        values = [
            max(
                0.0,
                factor * (_nested_quadrature(ctx, t, 0.0) - _nested_quadrature(ctx, t, c)),
            )
            for t in ts
        ]
    elif method in ("mc", "monte-carlo"):
        if seed is None:
            raise ValueError("monte-carlo needs a seed")
        values, errs = _mc_series(ctx, ts, norm, frame, int(samples), seed, near_wall_c=c)
        stderr = tuple(errs)
    else:
        raise ValueError("method must be quadrature or monte-carlo")
    series = CountSeries(
        t_grid=tuple(ts),
        values=tuple(values),
        spec_digest=_context_digest(ctx, frame, norm),
        manifest={
            "kind": "singular-volume",
            "method": method,
            "norm": norm,
            "c": c,
            "signs": list(ctx.signs),
            "joined": list(ctx.joined),
            "samples": int(samples) if method != "quadrature" else None,
            "seed": seed if isinstance(seed, int) else None,
        },
        stderr=stderr,
    )
    return with_fit(series, b_fixed=pair.b)


@dataclass(frozen=True)
class WellRoundedness:
    ratio: float
    stderr: float
    epsilon: float
    t: float
    member_weight: float
    boundary_weight: float
    inconclusive: bool


def wellroundedness_ratio(
    ctx: DensityContext,
    epsilon: float,
    t: float,
    seed,
    samples: int = 4000,
    frame=None,
    norm: str = "frobenius",
    n_probe: int = 8,
    tie_tol: float = 1e-9,
) -> WellRoundedness:
    """MC estimate of vol(eps-thickened boundary) / vol(region) at one T.

    A sampled point is "boundary" when its probe orbit (the point plus
    n_probe images under exp(eps X) with X of unit metric norm) contains
    both members and nonmembers of the region.  Sampling covers a thin
    collar outside the walls so the outer half of the boundary layer is
    seen; weights are |xi| there, the magnitude of the adjacent-chart
    density.
    """
    if epsilon <= 0:
        raise ValueError("need epsilon > 0")
    if any(dim != 1 for dim in ctx.blocks.dims):
        raise ValueError("thickened-boundary probes need all blocks one-dimensional")
    d = ctx.d
    rng = derive_rng(seed, "wellrounded") if isinstance(seed, int) else seed
    spec = make_spec(ctx.blocks.dims, _block_signatures(ctx), frame=frame, norm="max")
    margins, logp = _grid_margins(
        ctx, t, rng, samples, lo=-8.0 * epsilon, pad=0.25 + 2.0 * epsilon
    )
    weights = np.exp(_log_abs_xi(ctx, margins) - logp)
    y = ctx.log_coords(margins)
    eig = np.asarray(ctx.signs, dtype=float) * np.exp(2.0 * y)
    frames = np.stack([random_rotation(rng, d) for _ in range(samples)])
    base = np.einsum("nij,nj,nkj->nik", frames, eig, frames)
    probes = [base]
    for x in _unit_directions(d, n_probe, rng):
        e = expm(epsilon * x)
        probes.append(np.einsum("ij,njk,lk->nil", e, base, e))
    stacked = np.concatenate(probes, axis=0)
    pairs = enumeration.triangle_indices(d)
    tri = np.stack([stacked[:, i, j] for (i, j) in pairs], axis=1)
    member, _ = _classify_batch(tri, d, spec, tie_tol)
    if norm == "max":
        radii = np.max(np.abs(stacked), axis=(1, 2))
    elif norm == "frobenius":
        radii = np.sqrt(np.sum(stacked**2, axis=(1, 2)))
    else:
        raise ValueError("unknown norm")
    inside = (member & (radii < t)).reshape(1 + n_probe, samples).T
    center = inside[:, 0]
    mixed = inside.any(axis=1) & (~inside).any(axis=1)

    num = float(np.sum(weights * mixed))
    den = float(np.sum(weights * center))
    ratio = math.inf if den == 0.0 else num / den
    nblk = 20
    idx = np.array_split(np.arange(samples), nblk)
    parts = []
    for block in idx:
        mask = np.ones(samples, dtype=bool)
        mask[block] = False
        dsub = float(np.sum(weights[mask] * center[mask]))
        if dsub > 0:
            parts.append(float(np.sum(weights[mask] * mixed[mask])) / dsub)
    if len(parts) >= 2 and math.isfinite(ratio):
        parts_arr = np.asarray(parts)
        stderr = float(
            math.sqrt((len(parts) - 1) / len(parts) * np.sum((parts_arr - parts_arr.mean()) ** 2))
        )
    else:
        stderr = math.inf
    inconclusive = not math.isfinite(ratio) or (ratio > 0 and stderr > 0.1 * ratio)
    return WellRoundedness(
        ratio=ratio,
        stderr=stderr,
        epsilon=epsilon,
        t=t,
        member_weight=den,
        boundary_weight=num,
        inconclusive=inconclusive,
    )
