"""Generalized Cartan decomposition g = k a w h for SL_d(R).

Here k is special orthogonal, a is a positive diagonal with entries in
weakly decreasing order and product one, w is a sign interleaving
realized by a canonical signed permutation, and h preserves the
indefinite form J = diag(I_p, -I_q):  h J h.T = J, det h = 1.

The factors are computed from the congruence S = g J g.T.  Rather than
assembling S and diagonalizing it (which loses the small eigenvalues to
cancellation once cond(g)^2 u reaches the working precision), the cyclic
Jacobi rotations are applied one-sidedly to a running copy of g, and
every 2x2 subproblem is read off fresh J-weighted row products.  The
rotation sequence is the same as two-sided Jacobi on S; the accuracy is
that of the factored form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .jacobi import DEFAULT_MAX_SWEEPS, DEFAULT_TOL, rotation_for

DET_TOL = 1e-9
ORTHO_TOL = 1e-10
CHAMBER_TOL = 1e-10
FORM_TOL = 1e-8
AMBIGUITY_TOL = 1e-10


@dataclass
class CartanFactors:
    """Factors of g = k diag(a) W(w) h plus derived chamber data.

    w is the sign pattern of the |eigenvalue|-sorted slots of g J g.T
    (+1 entries come from the positive class of J).  margins[i] is
    log(a[i] / a[i+1]), never materially negative.  tie marks an
    |eigenvalue| tie at the resolution of the sort, in which case the
    slot assignment used a documented tie-break and w is not stable
    under perturbations.
    """

    signature: tuple[int, int]
    k: np.ndarray
    a: np.ndarray
    w: tuple[int, ...]
    h: np.ndarray
    margins: np.ndarray = field(default=None)
    tie: bool = False

    def __post_init__(self) -> None:
        if self.margins is None:
            logs = np.log(np.asarray(self.a, dtype=float))
            self.margins = logs[:-1] - logs[1:]

    @property
    def chamber_depth(self) -> float:
        return float(np.linalg.norm(np.log(self.a)))

    def validate(self) -> None:
        """Raise ValueError on any structural invariant violation."""
        p, q = self.signature
        d = p + q
        if np.linalg.norm(self.k.T @ self.k - np.eye(d)) > ORTHO_TOL:
            raise ValueError("k is not orthogonal to tolerance")
        if np.linalg.det(self.k) < 0:
            raise ValueError("k has determinant -1")
        if np.any(np.asarray(self.margins) < -CHAMBER_TOL):
            raise ValueError("a is not in the closed positive chamber")
        prod = float(np.prod(np.asarray(self.a, dtype=float)))
        if abs(prod - 1.0) > 1e-9 * max(1.0, abs(prod)):
            raise ValueError("product of the a entries is not 1")
        if sorted(self.w) != sorted((1,) * p + (-1,) * q):
            raise ValueError("sign pattern does not carry p pluses and q minuses")
        j = signature_matrix(p, q)
        if np.linalg.norm(self.h @ j @ self.h.T - j) > FORM_TOL:
            raise ValueError("h does not preserve the indefinite form")
        if abs(np.linalg.det(self.h) - 1.0) > 1e-6:
            raise ValueError("h has determinant away from 1")


@dataclass(frozen=True)
class RegularityReport:
    regular: bool
    c: float
    subset: tuple[int, ...]
    margins: tuple[float, ...]


def signature_matrix(p: int, q: int) -> np.ndarray:
    return np.diag(np.array([1.0] * p + [-1.0] * q))


def weyl_matrix(w: tuple[int, ...], signature: tuple[int, int]) -> np.ndarray:
    """Canonical representative of the sign interleaving w.

    A signed permutation P with P J P.T = diag(w), order preserving
    within each sign class, det fixed to +1 by negating the last row's
    entry when needed (this leaves P J P.T unchanged).
    """
    p, q = signature
    d = p + q
    if len(w) != d or sum(1 for s in w if s == 1) != p:
        raise ValueError("sign pattern does not match the signature")
    perm = np.empty(d, dtype=int)
    next_plus, next_minus = 0, p
    for i, s in enumerate(w):
        if s == 1:
            perm[i] = next_plus
            next_plus += 1
        else:
            perm[i] = next_minus
            next_minus += 1
    mat = np.zeros((d, d))
    mat[np.arange(d), perm] = 1.0
    # parity of perm by inversion count; d stays tiny here
    inversions = sum(
        1 for i in range(d) for jj in range(i + 1, d) if perm[i] > perm[jj]
    )
    if inversions % 2 == 1:
        mat[d - 1, perm[d - 1]] = -1.0
    return mat


def kah_decompose(
    g: np.ndarray,
    signature: tuple[int, int],
    cond_bound: float = 1e6,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    ambiguity_tol: float = AMBIGUITY_TOL,
) -> CartanFactors:
    """Decompose g in SL_d(R) as k diag(a) W(w) h.

    Requires det(g) = 1 to 1e-9 and a condition number below cond_bound.
    The slots of a are sorted by |eigenvalue| of g J g.T descending,
    ties broken by sign (+ first) then original index; an |eigenvalue|
    tie within ambiguity_tol (log scale) sets the tie flag.
    """
    g = np.asarray(g, dtype=float)
    p, q = signature
    d = p + q
    if g.shape != (d, d):
        raise ValueError("matrix shape does not match the signature")
    if p < 0 or q < 0 or d < 2:
        raise ValueError("bad signature")
    det = np.linalg.det(g)
    if abs(det - 1.0) > DET_TOL:
        raise ValueError("determinant is not 1 to tolerance")
    sv = np.linalg.svd(g, compute_uv=False)
    if sv[0] > cond_bound * sv[-1]:
        raise ValueError("matrix condition exceeds the configured bound")

    jdiag = np.array([1.0] * p + [-1.0] * q)
    rows = g.copy()
    k = np.eye(d)
    eps_floor = 16.0 * np.finfo(float).eps
    converged = False
    for _ in range(max_sweeps):
        rotated = False
        for i in range(d - 1):
            for jj in range(i + 1, d):
                ri = rows[i] * jdiag
                app = float(ri @ rows[i])
                apq = float(ri @ rows[jj])
                aqq = float((rows[jj] * jdiag) @ rows[jj])
                floor = eps_floor * float(
                    np.linalg.norm(rows[i]) * np.linalg.norm(rows[jj])
                )
                if abs(apq) <= max(tol * math.sqrt(abs(app * aqq)), floor):
                    continue
                rotated = True
                c, sn = rotation_for(app, aqq, apq)
                tmp = c * rows[i] - sn * rows[jj]
                rows[jj] = sn * rows[i] + c * rows[jj]
                rows[i] = tmp
                tmp = c * k[:, i] - sn * k[:, jj]
                k[:, jj] = sn * k[:, i] + c * k[:, jj]
                k[:, i] = tmp
        if not rotated:
            converged = True
            break
    if not converged:
        raise ArithmeticError("jacobi iteration did not converge")

    lam = np.einsum("ij,j,ij->i", rows, jdiag, rows)
    order = sorted(
        range(d), key=lambda i: (-abs(lam[i]), 0 if lam[i] > 0 else 1, i)
    )
    rows = rows[order]
    k = k[:, order]
    lam = lam[order]
    svals = np.sqrt(np.abs(lam))
    w = tuple(1 if v > 0 else -1 for v in lam)

    logs = np.log(svals)
    gaps = 2.0 * (logs[:-1] - logs[1:])  # log |eigenvalue| gaps
    tie = bool(np.any(gaps <= ambiguity_tol))

    if np.linalg.det(k) < 0:
        k[:, -1] = -k[:, -1]
        rows[-1] = -rows[-1]

    wmat = weyl_matrix(w, signature)
    h = wmat.T @ (rows / svals[:, None])

    factors = CartanFactors(
        signature=signature, k=k, a=svals, w=w, h=h, tie=tie
    )
    factors.validate()
    return factors


def reconstruct(factors: CartanFactors) -> np.ndarray:
    """Multiply the factors back together."""
    wmat = weyl_matrix(factors.w, factors.signature)
    return factors.k @ (factors.a[:, None] * (wmat @ factors.h))


def regularity(
    factors: CartanFactors, c: float, subset=None
) -> RegularityReport:
    """Check margins against c on a subset of simple root indices (1-based)."""
    d = sum(factors.signature)
    subset = tuple(sorted(subset)) if subset is not None else tuple(range(1, d))
    if any(i < 1 or i > d - 1 for i in subset):
        raise ValueError("subset entries must be simple root indices")
    margins = tuple(float(x) for x in factors.margins)
    regular = all(margins[i - 1] >= c for i in subset)
    return RegularityReport(regular=regular, c=c, subset=subset, margins=margins)
