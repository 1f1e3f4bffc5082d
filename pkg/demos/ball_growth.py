"""Ball counts against the predicted T^3 law for ternary forms.

Counts det = +-1 integral forms with max-norm below T, then fits the
exponent with the log factor pinned at b = 1.  The predicted a is
d(d-1)/2 = 3; finite-T slopes land a bit above it.
"""

from qfsectors.enumeration import count_ball_grid
from qfsectors.rootdata import predict_exponent
from qfsectors.sector import fit_exponent

if __name__ == "__main__":
    grid = [6.0, 8.0, 11.0, 15.0, 20.0]
    counts = count_ball_grid(3, grid)
    for t, n in zip(grid, counts):
        print(f"T = {t:5.1f}   count = {n}")
    fit = fit_exponent((grid, [float(c) for c in counts]))
    pair = predict_exponent(3, (3,))
    print(f"fitted a = {fit.a:.4f}   predicted a = {pair.a}   r2 = {fit.r2:.6f}")
