"""Spectral sector membership, sector counting, and exponent fitting.

A sector is described by a block decomposition of the eigenvalue slots
(in |eigenvalue|-descending order), a per-block inertia constraint, an
optional bound on the within-block spread, and a frame constraint on
the top eigenvector.  A form belongs to the sector when its spectrum,
grouped consecutively by the block dimensions, has strictly decreasing
block geometric means, matching per-block signatures, spread inside the
window, and an admissible frame.  Forms whose required strict
inequalities sit inside the tie tolerance are "degenerate": tallied
separately, never counted as members.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import enumeration
from .jacobi import jacobi_eigh, sym2_eigvals_batch, sym3_eigvals_batch
from .rootdata import BlockDecomposition

DEFAULT_TIE_TOL = 1e-9


@dataclass(frozen=True)
class FullFrame:
    kind: str = field(default="full", init=False)


@dataclass(frozen=True)
class Cap:
    """Frames whose top-|eigenvalue| axis lies within `angle` of `axis`.

    Eigenvector sign is a gauge choice, so the angle is measured on the
    axis (line) through the eigenvector: arccos|<v, axis>|.
    """

    axis: tuple[float, ...]
    angle: float
    kind: str = field(default="cap", init=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.axis, dtype=float)
        n = float(np.linalg.norm(v))
        if n == 0.0:
            raise ValueError("cap axis must be nonzero")
        object.__setattr__(self, "axis", tuple(v / n))
        if not 0.0 < self.angle < math.pi:
            raise ValueError("cap angle must lie in (0, pi)")

    def accepts(self, top: np.ndarray) -> bool:
        c = abs(float(np.dot(np.asarray(self.axis), top)))
        return math.acos(min(c, 1.0)) <= self.angle


@dataclass(frozen=True)
class AntiCap(Cap):
    """Frames whose top axis avoids the cap entirely (complement)."""

    kind: str = field(default="anticap", init=False)

    def accepts(self, top: np.ndarray) -> bool:
        return not super().accepts(top)


def _frame_accepts(constraint, top: np.ndarray) -> bool:
    if isinstance(constraint, FullFrame):
        return True
    return constraint.accepts(top)


@dataclass(frozen=True)
class SectorSpec:
    block: BlockDecomposition
    block_signatures: tuple[tuple[int, int], ...]
    frame_constraint: object = FullFrame()
    norm: str = "max"
    block_window: Optional[float] = None

    def __post_init__(self) -> None:
        dims = self.block.dims
        sigs = tuple(_as_signature(s, dim) for s, dim in zip(self.block_signatures, dims))
        if len(sigs) != len(dims):
            raise ValueError("one signature per block required")
        for (pp, qq), dim in zip(sigs, dims):
            if pp < 0 or qq < 0 or pp + qq != dim:
                raise ValueError("block signature must sum to the block dimension")
        object.__setattr__(self, "block_signatures", sigs)
        if self.block_window is not None and self.block_window <= 0:
            raise ValueError("block window must be positive when given")
        if self.norm not in enumeration.NORMS:
            raise ValueError("unknown norm")

    def digest(self) -> str:
        frame = self.frame_constraint
        payload = {
            "dims": list(self.block.dims),
            "sigs": [list(s) for s in self.block_signatures],
            "frame": [frame.kind] + (
                [list(frame.axis), frame.angle] if isinstance(frame, Cap) else []
            ),
            "norm": self.norm,
            "window": self.block_window,
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.blake2b(blob, digest_size=8).hexdigest()


def _as_signature(s, dim: int) -> tuple[int, int]:
    if s == "+" or s == 1:
        return (1, 0) if dim == 1 else _bad_sig(s)
    if s == "-" or s == -1:
        return (0, 1) if dim == 1 else _bad_sig(s)
    pp, qq = s
    return (int(pp), int(qq))


def _bad_sig(s):
    raise ValueError(f"sign shorthand {s!r} only applies to 1-dim blocks")


def make_spec(
    dims,
    signatures,
    frame=None,
    norm: str = "max",
    block_window: Optional[float] = None,
) -> SectorSpec:
    block = BlockDecomposition(d=sum(dims), dims=tuple(int(x) for x in dims))
    return SectorSpec(
        block=block,
        block_signatures=tuple(signatures),
        frame_constraint=frame if frame is not None else FullFrame(),
        norm=norm,
        block_window=block_window,
    )


def sign_pattern_specs(d: int, frame=None, norm: str = "max") -> list[SectorSpec]:
    """All 2^d one-dimensional-block sign-pattern sectors."""
    specs = []
    for bits in range(2**d):
        signs = ["+" if (bits >> i) & 1 == 0 else "-" for i in range(d)]
        specs.append(make_spec((1,) * d, signs, frame=frame, norm=norm))
    return specs


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: tuple[float, ...]  # |lambda| descending
    frame: np.ndarray  # columns follow the eigenvalue order, det +1
    gaps: tuple[float, ...]  # |lambda_i| - |lambda_{i+1}|


def spectral_data(q) -> SpectralData:
    mat = q.matrix() if isinstance(q, enumeration.QuadraticForm) else np.asarray(q)
    lam, vec = jacobi_eigh(np.asarray(mat, dtype=float))
    order = sorted(
        range(len(lam)), key=lambda i: (-abs(lam[i]), 0 if lam[i] > 0 else 1, i)
    )
    lam = lam[order]
    vec = vec[:, order]
    if np.linalg.det(vec) < 0:
        vec = vec.copy()
        vec[:, -1] = -vec[:, -1]
    gaps = tuple(float(abs(lam[i]) - abs(lam[i + 1])) for i in range(len(lam) - 1))
    return SpectralData(eigenvalues=tuple(float(x) for x in lam), frame=vec, gaps=gaps)


@dataclass(frozen=True)
class Witness:
    assignment: tuple[tuple[int, ...], ...]
    scales: tuple[float, ...]
    block_dets: tuple[int, ...]
    margins: tuple[float, ...]


@dataclass(frozen=True)
class Membership:
    status: str  # "member" | "nonmember" | "degenerate"
    witness: Optional[Witness] = None


def sector_membership(
    q, spec: SectorSpec, tie_tol: float = DEFAULT_TIE_TOL
) -> Membership:
    """Classify one form.  Degeneracy (a tie where strictness is needed)
    is decided before the sign tests, so it does not depend on the
    requested signatures."""
    data = spectral_data(q)
    lam = np.asarray(data.eigenvalues)
    dims = spec.block.dims
    cuts = spec.block.cuts
    alam = np.abs(lam)
    if np.any(alam < 1e-300):
        return Membership(status="degenerate")
    logs = np.log(alam)
    starts = np.concatenate([[0], np.asarray(cuts)])
    means = np.add.reduceat(logs, starts) / np.asarray(dims, dtype=float)
    for c in cuts:
        if logs[c - 1] - logs[c] <= tie_tol:
            return Membership(status="degenerate")
    if np.any(means[:-1] - means[1:] <= tie_tol):
        return Membership(status="degenerate")

    groups = [tuple(range(s, s + dim)) for s, dim in zip(starts, dims)]
    for g, (pp, qq) in zip(groups, spec.block_signatures):
        pos = sum(1 for i in g if lam[i] > 0)
        if pos != pp or len(g) - pos != qq:
            return Membership(status="nonmember")
    if spec.block_window is not None:
        for g, mean in zip(groups, means):
            if len(g) >= 2 and max(abs(logs[i] - mean) for i in g) > spec.block_window:
                return Membership(status="nonmember")
    if not _frame_accepts(spec.frame_constraint, data.frame[:, 0]):
        return Membership(status="nonmember")
    scales = tuple(float(math.exp(m)) for m in means)
    block_dets = tuple(
        int(np.sign(np.prod(np.sign(lam[list(g)])))) for g in groups
    )
    margins = tuple(float(means[i] - means[i + 1]) for i in range(len(means) - 1))
    return Membership(
        status="member",
        witness=Witness(
            assignment=tuple(groups),
            scales=scales,
            block_dets=block_dets,
            margins=margins,
        ),
    )


def _eigvals_batch(tri: np.ndarray, d: int) -> np.ndarray:
    n = tri.shape[0]
    mats = np.zeros((n, d, d))
    for col, (i, j) in enumerate(enumeration.triangle_indices(d)):
        mats[:, i, j] = tri[:, col]
        mats[:, j, i] = tri[:, col]
    if d == 2:
        lam = sym2_eigvals_batch(mats)
    elif d == 3:
        lam = sym3_eigvals_batch(mats)
    else:
        out = np.empty((n, d))
        for r in range(n):
            w, _ = jacobi_eigh(mats[r])
            out[r] = w
        return out
    # the closed forms lose ~1e-9 near repeated |eigenvalues|, exactly
    # where the tie tolerance decides degeneracy; rerun those few rows
    # through the cyclic Jacobi path, which keeps ties at machine epsilon
    alam = np.sort(np.abs(lam), axis=1)
    rel = np.diff(alam, axis=1) / np.maximum(alam[:, 1:], 1e-300)
    close = np.min(rel, axis=1) <= 1e-6
    for r in np.nonzero(close)[0]:
        w, _ = jacobi_eigh(mats[r])
        lam[r] = w
    return lam


def _classify_batch(tri: np.ndarray, d: int, spec: SectorSpec, tie_tol: float):
    """Vectorized verdicts for one batch: (member, degenerate) masks.

    The frame constraint, when present, is applied per candidate with
    the full eigendecomposition; everything else is array arithmetic.
    """
    lam = _eigvals_batch(tri, d)
    alam = np.abs(lam)
    order = np.argsort(-alam, axis=1, kind="stable")
    lam_s = np.take_along_axis(lam, order, axis=1)
    alam_s = np.take_along_axis(alam, order, axis=1)
    tiny = np.any(alam_s < 1e-300, axis=1)
    logs = np.log(np.maximum(alam_s, 1e-300))
    dims = np.asarray(spec.block.dims)
    cuts = spec.block.cuts
    starts = np.concatenate([[0], np.asarray(cuts, dtype=int)])
    means = np.add.reduceat(logs, starts, axis=1) / dims[None, :]

    degenerate = tiny.copy()
    for c in cuts:
        degenerate |= logs[:, c - 1] - logs[:, c] <= tie_tol
    if len(dims) > 1:
        degenerate |= np.any(means[:, :-1] - means[:, 1:] <= tie_tol, axis=1)

    member = ~degenerate
    pos = np.add.reduceat((lam_s > 0).astype(np.int64), starts, axis=1)
    want_p = np.asarray([s[0] for s in spec.block_signatures])
    member &= np.all(pos == want_p[None, :], axis=1)
    if spec.block_window is not None:
        spread = np.abs(logs - np.repeat(means, dims, axis=1))
        max_spread = np.maximum.reduceat(spread, starts, axis=1)
        wide = np.any(max_spread[:, dims >= 2] > spec.block_window, axis=1)
        member &= ~wide
    if not isinstance(spec.frame_constraint, FullFrame):
        pairs = enumeration.triangle_indices(d)
        for r in np.nonzero(member)[0]:
            mat = np.zeros((d, d))
            for col, (i, j) in enumerate(pairs):
                mat[i, j] = mat[j, i] = tri[r, col]
            res = sector_membership(mat, spec, tie_tol=tie_tol)
            member[r] = res.status == "member"
    return member, degenerate


@dataclass(frozen=True)
class CountSeries:
    """A T-grid with counts or volumes, provenance, and an attached fit."""

    t_grid: tuple[float, ...]
    values: tuple[float, ...]
    spec_digest: str
    fit_b_fixed: int = 1
    fit_a: Optional[float] = None
    fit_c: Optional[float] = None
    residuals: Optional[tuple[float, ...]] = None
    manifest: dict = field(default_factory=dict)
    degenerate: Optional[tuple[int, ...]] = None
    stderr: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if len(self.t_grid) != len(self.values):
            raise ValueError("T grid and values must have equal length")
        if any(v < 0 for v in self.values):
            raise ValueError("values must be nonnegative")


def with_fit(series: CountSeries, b_fixed: int = 1) -> CountSeries:
    """Attach the fixed-b fit when there are enough positive points."""
    try:
        fit = fit_exponent(series, b_fixed)
    except ValueError:
        return series
    return CountSeries(
        t_grid=series.t_grid,
        values=series.values,
        spec_digest=series.spec_digest,
        fit_b_fixed=b_fixed,
        fit_a=fit.a,
        fit_c=fit.c,
        residuals=fit.residuals,
        manifest=series.manifest,
        degenerate=series.degenerate,
        stderr=series.stderr,
    )


def count_sector(
    t_grid,
    spec: SectorSpec,
    d: int = 3,
    tie_tol: float = DEFAULT_TIE_TOL,
    threads: int | None = None,
) -> CountSeries:
    """Stream the ball at max(T), classify once per form, bin by threshold."""
    ts = [float(x) for x in t_grid]
    if sorted(ts) != ts or not ts:
        raise ValueError("T grid must be nonempty and increasing")
    counts = np.zeros(len(ts), dtype=np.int64)
    degs = np.zeros(len(ts), dtype=np.int64)
    for tri, _, norms in enumeration.iter_form_batches(d, max(ts), spec.norm, threads):
        member, degenerate = _classify_batch(tri, d, spec, tie_tol)
        for j, tj in enumerate(ts):
            inball = norms < tj
            counts[j] += int(np.count_nonzero(member & inball))
            degs[j] += int(np.count_nonzero(degenerate & inball))
    series = CountSeries(
        t_grid=tuple(ts),
        values=tuple(float(c) for c in counts),
        spec_digest=spec.digest(),
        manifest={
            "kind": "sector-counts",
            "d": d,
            "norm": spec.norm,
            "dims": list(spec.block.dims),
            "tie_tol": tie_tol,
        },
        degenerate=tuple(int(x) for x in degs),
    )
    return with_fit(series, b_fixed=1)


@dataclass(frozen=True)
class FitResult:
    a: float
    c: float
    r2: float
    b_fixed: int
    residuals: tuple[float, ...]
    a_free: Optional[float] = None
    b_free: Optional[float] = None
    c_free: Optional[float] = None


def fit_exponent(series, b_fixed: int = 1) -> FitResult:
    """Least squares for log N = log c + a log T + (b-1) log log T.

    Accepts a CountSeries or a (t_grid, values) pair.  Needs at least 4
    positive data points; also reports the free-b fit as a diagnostic
    when there are enough points for three parameters.
    """
    if isinstance(series, CountSeries):
        ts, vals = np.asarray(series.t_grid), np.asarray(series.values)
    else:
        ts, vals = (np.asarray(x, dtype=float) for x in series)
    keep = vals > 0
    if int(keep.sum()) < 4:
        raise ValueError("insufficient data: need at least 4 positive points")
    ts, vals = ts[keep], vals[keep]
    if np.any(ts <= 1.0):
        raise ValueError("T values must exceed 1 for the log-log model")
    logt = np.log(ts)
    loglogt = np.log(logt)
    y = np.log(vals) - (b_fixed - 1) * loglogt
    design = np.column_stack([np.ones_like(logt), logt])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    sstot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / sstot if sstot > 0 else 1.0
    a_free = b_free = c_free = None
    if len(ts) >= 5:
        d3 = np.column_stack([np.ones_like(logt), logt, loglogt])
        c3, *_ = np.linalg.lstsq(d3, np.log(vals), rcond=None)
        c_free, a_free, b_free = float(np.exp(c3[0])), float(c3[1]), float(c3[2] + 1)
    return FitResult(
        a=float(coef[1]),
        c=float(np.exp(coef[0])),
        r2=r2,
        b_fixed=b_fixed,
        residuals=tuple(float(r) for r in resid),
        a_free=a_free,
        b_free=b_free,
        c_free=c_free,
    )
