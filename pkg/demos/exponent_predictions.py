"""Exact growth exponents for every block pattern in low dimension.

The count of unimodular forms near a fixed spectral shape grows like
c T^a (log T)^(b-1); a and b come straight from the restricted root
data.  This prints the full table for d = 3, 4, 5.
"""

from itertools import product

from qfsectors.rootdata import predict_exponent


def compositions(d):
    for cuts in product((0, 1), repeat=d - 1):
        dims, run = [], 1
        for c in cuts:
            if c:
                dims.append(run)
                run = 1
            else:
                run += 1
        dims.append(run)
        yield tuple(dims)


if __name__ == "__main__":
    for d in (3, 4, 5):
        print(f"d = {d}")
        for dims in sorted(compositions(d)):
            pair = predict_exponent(d, dims)
            kind = "ball" if pair.ball else "sector"
            print(f"  blocks {str(dims):<16} a = {str(pair.a):<6} b = {pair.b}  ({kind})")
        print()
