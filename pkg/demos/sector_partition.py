"""The eight sign sectors tile the ball, up to a degenerate sliver.

Every nondegenerate ternary form has a strict |eigenvalue| ordering, so
it lands in exactly one sign pattern.  The degenerate tally is the same
for every pattern because ties are detected before signs are read.
"""

from qfsectors.enumeration import count_ball
from qfsectors.sector import count_sector, sign_pattern_specs

if __name__ == "__main__":
    t = 6.0
    total = count_ball(3, t)
    acc = 0
    deg = None
    for spec in sign_pattern_specs(3):
        series = count_sector([t], spec)
        signs = "".join("+" if s == (1, 0) else "-" for s in spec.block_signatures)
        print(f"sector {signs}   count = {series.values[0]:>8.0f}")
        acc += int(series.values[0])
        deg = series.degenerate[0]
    print(f"degenerate        count = {deg:>8}")
    print(f"sum + degenerate = {acc + deg},  ball = {total}")
