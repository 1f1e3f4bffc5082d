"""Self-contained symmetric eigensolvers.

jacobi_eigh is a classic cyclic Jacobi iteration, accurate and fully
deterministic on small symmetric matrices.  sym3_eigvals_batch and
sym2_eigvals_batch are vectorized eigenvalue-only routines for bulk
classification of 2x2 and 3x3 forms; sym3_eigvals_batch uses the
trigonometric closed form polished by two Newton steps on the
characteristic polynomial, which restores full relative accuracy when
the matrix entries are exact integers.
"""

from __future__ import annotations

import math

import numpy as np

# stop once an off-diagonal entry is this small relative to its diagonal
# neighborhood; |S_ij| <= tol sqrt(|S_ii S_jj|) keeps tiny eigenvalues
# meaningful where an absolute threshold would not
DEFAULT_TOL = 1e-13
DEFAULT_MAX_SWEEPS = 100


def rotation_for(app: float, aqq: float, apq: float) -> tuple[float, float]:
    """Cosine and sine of the Jacobi rotation zeroing the (p, q) entry."""
    tau = (aqq - app) / (2.0 * apq)
    t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
    c = 1.0 / math.sqrt(1.0 + t * t)
    return c, t * c


def jacobi_eigh(
    a: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Returns (w, v) with a = v @ diag(w) @ v.T and v orthogonal.
    Eigenvalues come out unordered; callers sort to taste.  Raises
    ArithmeticError if the sweep limit is hit, which does not happen
    for the small dimensions used here.
    """
    s = np.array(a, dtype=float)
    d = s.shape[0]
    if s.shape != (d, d):
        raise ValueError("expected a square matrix")
    if not np.allclose(s, s.T, atol=1e-12 * (1.0 + np.abs(s).max())):
        raise ValueError("expected a symmetric matrix")
    s = (s + s.T) / 2.0
    v = np.eye(d)
    eps_floor = 16.0 * np.finfo(float).eps
    for _ in range(max_sweeps):
        rotated = False
        for i in range(d - 1):
            for j in range(i + 1, d):
                apq = s[i, j]
                app, aqq = s[i, i], s[j, j]
                if abs(apq) <= max(
                    tol * math.sqrt(abs(app * aqq)),
                    eps_floor * math.sqrt(abs(app) + abs(aqq) + abs(apq)) ** 2,
                ):
                    continue
                rotated = True
                c, sn = rotation_for(app, aqq, apq)
                gi = s[i].copy()
                s[i] = c * gi - sn * s[j]
                s[j] = sn * gi + c * s[j]
                ci = s[:, i].copy()
                s[:, i] = c * ci - sn * s[:, j]
                s[:, j] = sn * ci + c * s[:, j]
                s[i, j] = s[j, i] = 0.0
                ki = v[:, i].copy()
                v[:, i] = c * ki - sn * v[:, j]
                v[:, j] = sn * ki + c * v[:, j]
        if not rotated:
            return np.diag(s).copy(), v
    raise ArithmeticError("jacobi iteration did not converge")


def sym2_eigvals_batch(mats: np.ndarray) -> np.ndarray:
    """Eigenvalues of a stack of symmetric 2x2 matrices, shape (n, 2)."""
    a = mats[:, 0, 0]
    b = mats[:, 0, 1]
    c = mats[:, 1, 1]
    half = (a + c) / 2.0
    rad = np.sqrt(((a - c) / 2.0) ** 2 + b * b)
    return np.stack([half + rad, half - rad], axis=1)


def sym3_eigvals_batch(mats: np.ndarray) -> np.ndarray:
    """Eigenvalues of a stack of symmetric 3x3 matrices, shape (n, 3).

    Trigonometric closed form plus Newton polish on the characteristic
    polynomial.  The polynomial coefficients are exact whenever the
    entries are integers well inside 2**53, so the polished roots carry
    full relative accuracy even for badly scaled spectra.
    """
    m = np.asarray(mats, dtype=float)
    a00 = m[:, 0, 0]
    a11 = m[:, 1, 1]
    a22 = m[:, 2, 2]
    a01 = m[:, 0, 1]
    a02 = m[:, 0, 2]
    a12 = m[:, 1, 2]

    q = (a00 + a11 + a22) / 3.0
    p1 = a01 ** 2 + a02 ** 2 + a12 ** 2
    p2 = (a00 - q) ** 2 + (a11 - q) ** 2 + (a22 - q) ** 2 + 2.0 * p1
    p = np.sqrt(np.maximum(p2 / 6.0, 0.0))
    safe = p > 0
    pn = np.where(safe, p, 1.0)

    b00 = (a00 - q) / pn
    b11 = (a11 - q) / pn
    b22 = (a22 - q) / pn
    b01 = a01 / pn
    b02 = a02 / pn
    b12 = a12 / pn
    detb = (
        b00 * (b11 * b22 - b12 * b12)
        - b01 * (b01 * b22 - b12 * b02)
        + b02 * (b01 * b12 - b11 * b02)
    )
    r = np.clip(detb / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0

    e1 = q + 2.0 * p * np.cos(phi)
    e3 = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    eig = np.stack([e1, e2, e3], axis=1)
    eig[~safe] = q[~safe, None]

    # char poly x^3 - c2 x^2 + c1 x - c0, coefficients from the entries
    c2 = a00 + a11 + a22
    c1 = (
        a00 * a11 - a01 * a01
        + a00 * a22 - a02 * a02
        + a11 * a22 - a12 * a12
    )
    c0 = (
        a00 * (a11 * a22 - a12 * a12)
        - a01 * (a01 * a22 - a12 * a02)
        + a02 * (a01 * a12 - a11 * a02)
    )
    for _ in range(2):
        f = ((eig - c2[:, None]) * eig + c1[:, None]) * eig - c0[:, None]
        fp = (3.0 * eig - 2.0 * c2[:, None]) * eig + c1[:, None]
        step = np.where(np.abs(fp) > 1e-30, f / np.where(fp == 0, 1.0, fp), 0.0)
        # Newton is only trustworthy away from multiple roots; a double
        # root makes fp vanish and the trig value is already fine there
        scale = np.abs(eig) + np.abs(c2[:, None]) + 1.0
        ok = np.abs(step) < 1e-3 * scale
        eig = eig - np.where(ok, step, 0.0)
    return eig
