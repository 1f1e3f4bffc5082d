"""Factor one unimodular matrix through K A W H and put it back together.

The decomposition writes g = k diag(a) W h with k a rotation, a the
sorted spectral scales, W a signed permutation, and h J-orthogonal for
the (2, 1) signature.  Margins measure the distance to each chamber
wall; a tie flag marks ambiguous factorizations.
"""

import numpy as np

from qfsectors.cartan import kah_decompose, reconstruct, regularity, signature_matrix

if __name__ == "__main__":
    g = np.array([[2.0, 1.0, 0.3], [0.4, 1.5, 0.2], [0.1, 0.3, 1.2]])
    g /= np.linalg.det(g) ** (1.0 / 3.0)
    f = kah_decompose(g, (2, 1))

    np.set_printoptions(precision=6, suppress=True)
    print("a       =", f.a)
    print("w       =", f.w)
    print("margins =", np.round(f.margins, 6))
    print("depth   =", round(f.chamber_depth, 6))
    print("tie     =", f.tie)

    err = np.linalg.norm(reconstruct(f) - g) / np.linalg.norm(g)
    j = signature_matrix(2, 1)
    herr = np.linalg.norm(f.h @ j @ f.h.T - j)
    print(f"reconstruction error = {err:.2e}")
    print(f"h J-orthogonality    = {herr:.2e}")

    for c in (0.05, 0.5):
        rep = regularity(f, c)
        print(f"c = {c}: regular = {rep.regular}")

    # two equal scales: the rotation factor is no longer pinned down
    tied = kah_decompose(np.diag([2.0, 2.0, 0.25]), (2, 1))
    print("tied example: tie =", tied.tie, " a =", tied.a)
