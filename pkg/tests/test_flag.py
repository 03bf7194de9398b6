from fractions import Fraction
from itertools import product

import pytest

from nilrect.flag import (GrowthVector, bracket_flag, equiregular_check, hausdorff_dimension,
                          weights)
from nilrect.library import bundled, parse_field
from nilrect.linalg import rank
from nilrect.symvec import Frame


def brute_growth(frame, p, depth=4):
    """Span of all iterated brackets of length <= k at p, by brute force."""
    layers = [list(frame.fields)]
    dims = []
    for k in range(depth):
        if k:
            layers.append([a.bracket(b) for a in layers[0] for b in layers[-1]])
        vecs = [f.evaluate(p) for layer in layers for f in layer]
        dims.append(rank(vecs))
        if dims[-1] == frame.ambient_dim:
            break
    return tuple(dims)


def heis():
    return Frame([parse_field({"x": "1"}, ["x", "y", "z"]),
                  parse_field({"y": "1", "z": "x"}, ["x", "y", "z"])], "heis")


@pytest.mark.parametrize("frame,p,want", [
    (bundled("example5"), [1, 0, 0, 0, 0], (4, 5)),
    (heis(), [0, 0, 0], (2, 3)),
    (bundled("martinet"), [0, 0, 0], (2, 2, 3)),
    (bundled("martinet"), [1, 0, 0], (2, 3)),
])
def test_bracket_flag_against_brute_force(frame, p, want):
    g, fb = bracket_flag(frame, p)
    assert g.dims == want
    assert brute_growth(frame, p) == want
    assert len(fb) == frame.ambient_dim


def test_martinet_not_equiregular():
    v = equiregular_check(bundled("martinet"), [[0, 0, 0], [1, 0, 0]])
    assert not v.equiregular
    got = {tuple(g.dims) for _, g in v.witnesses}
    assert got == {(2, 2, 3), (2, 3)}


def test_example5_equiregular_including_x1_zero():
    pts = [[Fraction(a, 2), b, 0, c, 0] for a, b, c in product(range(-1, 2), repeat=3)]
    v = equiregular_check(bundled("example5"), pts)
    assert v.equiregular and v.growth.dims == (4, 5)
    assert hausdorff_dimension(v.growth) == 6


def test_example7_equiregular_on_small_grid():
    vals = [Fraction(1, 16), Fraction(3, 16)]
    pts = [[a, b, c, 0, d, 0, 0] for a, b, c, d in product(vals, repeat=4)]
    v = equiregular_check(bundled("example7"), pts)
    assert v.equiregular and v.growth.dims == (3, 6, 7)


@pytest.mark.parametrize("dims,q,w", [
    ((2, 3), 4, (1, 1, 2)),
    ((4, 5), 6, (1, 1, 1, 1, 2)),
    ((3, 6, 7), 12, (1, 1, 1, 2, 2, 2, 3)),
])
def test_weights_and_q(dims, q, w):
    g = GrowthVector(dims, dims[-1])
    assert hausdorff_dimension(g) == q
    assert weights(g) == w


def test_float_points_refused():
    with pytest.raises((TypeError, ValueError)):
        bracket_flag(bundled("martinet"), [0.5, 0.0, 0.0])


def test_empty_region_rejected():
    with pytest.raises(ValueError):
        equiregular_check(bundled("martinet"), [])
