"""Lattice counts against the continuous volume for a joined-wall sector.

The sector fixes the block pattern (1, 2) with a positive leading scale
and a mixed lower block, a bounded within-block spread, and the
frobenius norm.  Its continuous model is the density integral over the
one-margin cone.  Both series should grow like T^(3/2).
"""

from qfsectors.sector import count_sector, make_spec
from qfsectors.volume import context_for, volume_series

if __name__ == "__main__":
    grid = [8.0, 11.0, 16.0, 22.0]
    spec = make_spec((1, 2), ["+", (1, 1)], norm="frobenius", block_window=0.6)
    counts = count_sector(grid, spec)
    ctx = context_for((1, 1, -1), joined=(2,))
    vols = volume_series(ctx, grid)

    print(f"{'T':>6} {'count':>10} {'volume':>12}")
    for t, n, v in zip(grid, counts.values, vols.values):
        print(f"{t:>6.1f} {n:>10.0f} {v:>12.2f}")
    print(f"count slope  = {counts.fit_a:.4f}" if counts.fit_a else "count fit: n/a")
    print(f"volume slope = {vols.fit_a:.4f}")
    print(f"predicted    = {vols.manifest['predicted_a']}")
