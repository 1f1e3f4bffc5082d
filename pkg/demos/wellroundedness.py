"""How thick is the boundary of a sign sector, relative to its bulk?

Monte Carlo estimate of vol(eps-thickened boundary) / vol(sector) for
the fully split pattern.  The ratio shrinks with eps and stays tame as
T grows, which is the stability property that makes sector counts
track volumes.
"""

from qfsectors.volume import context_for, wellroundedness_ratio

if __name__ == "__main__":
    ctx = context_for((1, 1, -1))
    print(f"{'T':>5} {'eps':>7} {'ratio':>9} {'stderr':>9}")
    for t in (8.0, 32.0):
        for eps in (0.1, 0.05):
            r = wellroundedness_ratio(ctx, eps, t, seed=11, samples=20000)
            flag = "  (inconclusive)" if r.inconclusive else ""
            print(f"{t:>5.0f} {eps:>7.3f} {r.ratio:>9.4f} {r.stderr:>9.4f}{flag}")
