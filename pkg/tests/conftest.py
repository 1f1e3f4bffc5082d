"""Shared oracles for the test suite.

The brute-force scans below are deliberately independent of the package
internals: they walk the full integer box with numpy and decide det ±1
from a rounded float determinant (entries are tiny, so the float det is
exact to well under 0.5).
"""

import itertools

import numpy as np
import pytest


def brute_force_forms(d: int, t: float, norm: str = "max"):
    """Every symmetric integer matrix with det ±1, norm < t, as a sorted
    list of upper-triangle tuples.  Box scan, no pruning."""
    b = int(np.ceil(t)) - 1 if float(t).is_integer() else int(np.floor(t))
    if norm == "frobenius":
        b = int(np.floor(np.sqrt(t * t - 1e-12)))
    idx = [(i, j) for i in range(d) for j in range(i, d)]
    weights = [1 if i == j else 2 for i, j in idx]
    out = []
    for entries in itertools.product(range(-b, b + 1), repeat=len(idx)):
        if norm == "max":
            if max(abs(v) for v in entries) >= t:
                continue
        else:
            if sum(w * v * v for w, v in zip(weights, entries)) >= t * t:
                continue
        m = np.zeros((d, d))
        for (i, j), v in zip(idx, entries):
            m[i, j] = m[j, i] = v
        det = round(float(np.linalg.det(m)))
        if det in (1, -1):
            out.append(entries)
    return sorted(out)


@pytest.fixture(scope="session")
def brute_d3_t15():
    return brute_force_forms(3, 1.5)
