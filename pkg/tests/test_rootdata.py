"""Exact root-datum arithmetic: multiplicities, weights, exponents."""

import itertools
from fractions import Fraction

import pytest

from qfsectors.rootdata import (
    BlockDecomposition,
    ExponentPair,
    build_root_datum,
    datum_for_signs,
    exponents,
    predict_exponent,
    root_multiplicities,
    weight_coefficients,
)


def compositions(d):
    """All ordered compositions of d into >= 2 positive parts."""
    for mask in range(1, 2 ** (d - 1)):
        cuts = [i + 1 for i in range(d - 1) if (mask >> i) & 1]
        dims = []
        prev = 0
        for c in cuts + [d]:
            dims.append(c - prev)
            prev = c
        yield tuple(dims)


def brute_pair(d, dims):
    """Max/argmax of the u/m ratio table, computed from scratch."""
    cuts, acc = [], 0
    for m in dims[:-1]:
        acc += m
        cuts.append(acc)
    ratios = [
        Fraction(ik * (d - ik)) / (Fraction(2 * (d - ik), d)) for ik in cuts
    ]
    a = max(ratios)
    return a, sum(1 for r in ratios if r == a)


def test_exponent_formula_exhaustive_d3_to_d8():
    for d in range(3, 9):
        for dims in compositions(d):
            pair = predict_exponent(d, dims)
            a_brute, b_brute = brute_pair(d, dims)
            assert pair.a == a_brute and pair.b == b_brute
            # closed form: the deepest cut i_n = d - dims[-1] wins alone
            assert pair.a == Fraction(d * (d - dims[-1]), 2)
            assert pair.b == 1
            assert isinstance(pair.a, Fraction)


def test_one_block_is_the_ball_pair():
    for d in (2, 3, 5):
        pair = predict_exponent(d, (d,))
        assert pair.ball
        assert pair.a == Fraction(d * (d - 1), 2)
        assert pair.b == 1


def test_weight_coefficients_closed_form():
    blocks = BlockDecomposition(d=5, dims=(2, 1, 2))
    u, m = weight_coefficients(blocks)
    assert blocks.cuts == (2, 3)
    assert u == (Fraction(2 * 3), Fraction(3 * 2))
    assert m == (Fraction(2 * 3, 5), Fraction(2 * 2, 5))


def test_weight_coefficients_need_a_cut():
    with pytest.raises(ValueError):
        weight_coefficients(BlockDecomposition(d=3, dims=(3,)))


def test_exponents_counts_ties():
    pair = exponents([Fraction(2), Fraction(2)], [Fraction(1), Fraction(1)])
    assert pair.a == 2 and pair.b == 2
    with pytest.raises(ValueError):
        exponents([Fraction(1)], [Fraction(0)])
    with pytest.raises(ValueError):
        exponents([], [])


def test_multiplicities_follow_sign_products():
    signs = (1, 1, -1)
    roots, l_plus, l_minus = root_multiplicities(signs)
    assert roots == ((1, 2), (1, 3), (2, 3))
    for i, j in roots:
        same = signs[i - 1] * signs[j - 1] == 1
        assert l_plus[(i, j)] == (1 if same else 0)
        assert l_minus[(i, j)] == (0 if same else 1)
        assert l_plus[(i, j)] + l_minus[(i, j)] == 1


def test_datum_shapes_and_simple_roots():
    datum = build_root_datum(4, 2, 2)
    assert len(datum.positive_roots) == 6
    assert datum.simple_roots == ((1, 2), (2, 3), (3, 4))
    assert datum.multiplicity((1, 2)) == (1, 0)
    assert datum.multiplicity((2, 3)) == (0, 1)
    # interleaved signs differ from the sorted p,q arrangement
    inter = datum_for_signs((1, -1, 1, -1))
    assert inter.p == 2 and inter.q == 2
    assert inter.multiplicity((1, 2)) == (0, 1)
    assert inter.multiplicity((1, 3)) == (1, 0)


def test_datum_validation():
    with pytest.raises(ValueError):
        build_root_datum(3, 3, 0)
    with pytest.raises(ValueError):
        build_root_datum(1, 1, 0)
    with pytest.raises(ValueError):
        datum_for_signs((1, 0, -1))
    with pytest.raises(ValueError):
        BlockDecomposition(d=3, dims=(2, 2))
    with pytest.raises(ValueError):
        BlockDecomposition(d=3, dims=(3, 0))


def test_exponent_pair_validation():
    with pytest.raises(ValueError):
        ExponentPair(a=Fraction(0), b=1)
    with pytest.raises(ValueError):
        ExponentPair(a=Fraction(1), b=0)
