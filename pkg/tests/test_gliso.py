from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nilrect.gliso import (GradedLieAlgebra, GradedMap, Verdict, abelian, change_basis,
                           direct_sum, e147_family, e147_orbit, heisenberg, in_e147_orbit,
                           invariant_prescreen, stratified_iso_search, symbol0_algebra,
                           symbol0_normalizer, validate_graded)


def test_validate_examples():
    assert validate_graded(e147_family(F(1, 4)))
    bad = GradedLieAlgebra((2, 1), {(0, 1, 2): 1, (1, 0, 2): 1})
    v = validate_graded(bad)
    assert not v and v.violation == "antisymmetry"
    v = validate_graded(GradedLieAlgebra((2, 1), {}))
    assert not v and v.violation == "stratification"


def test_jacobi_on_first_triple_of_e147():
    g = e147_family(F(1, 4))
    e = [[int(i == j) for j in range(7)] for i in range(7)]
    jac = [a + b + c for a, b, c in zip(g.bracket(e[0], g.bracket(e[1], e[2])),
                                        g.bracket(e[1], g.bracket(e[2], e[0])),
                                        g.bracket(e[2], g.bracket(e[0], e[1])))]
    assert jac == [0] * 7


def test_identity_change_of_basis():
    g = e147_family(F(1, 3))
    assert change_basis(g, GradedMap.identity(g.strata_dims)).constants == g.constants


blocks = st.lists(st.integers(-3, 3), min_size=9, max_size=9)


def graded_map(entries, scale3):
    """A GradedMap of (3,3,1) from a 3x3 block (made invertible) plus a scalar."""
    a = [[F(entries[3 * i + j]) for j in range(3)] for i in range(3)]
    for i in range(3):
        a[i][i] += 7
    m = [[F(0)] * 7 for _ in range(7)]
    for i in range(3):
        for j in range(3):
            m[i][j] = a[i][j]
            m[i + 3][j + 3] = a[j][i] + (1 if i == j else 0)
    m[6][6] = F(scale3)
    return GradedMap(m, (3, 3, 1))


@settings(max_examples=20, deadline=None)
@given(blocks, blocks, st.integers(1, 4), st.integers(1, 4))
def test_change_basis_is_functorial(x, y, s, t):
    g = e147_family(F(1, 5))
    A, B = graded_map(x, s), graded_map(y, t)
    assert change_basis(g, A.compose(B)).constants == change_basis(change_basis(g, B), A).constants


def test_symbol0_change_of_variables_zeroes_coefficients():
    x1, x2, x3 = F(1, 10), F(1, 3), F(-2, 7)
    h = change_basis(symbol0_algebra(x1, x2, x3), symbol0_normalizer(x1, x2, x3))
    assert h.constants.get((0, 3, 6), 0) == 0 and h.constants.get((0, 5, 6), 0) == 0
    assert h.constants == e147_family(2 * x1).constants


def test_iso_self_and_orbit():
    g = e147_family(F(1, 10))
    r = stratified_iso_search(g, g)
    assert r.verdict is Verdict.TRUE and r.residual == 0
    assert bool(stratified_iso_search(g, e147_family(10)))
    assert not stratified_iso_search(g, e147_family(F(3, 10)))


def test_fingerprints():
    f2 = invariant_prescreen(heisenberg(2))
    f11 = invariant_prescreen(direct_sum(abelian(2), heisenberg(1)))
    assert f2.pairing_rank == 4 and f11.pairing_rank == 2 and f2 != f11
    assert invariant_prescreen(abelian(4)).center_dim == 4
    for xi in (F(1, 7), F(2, 5), F(3)):
        assert invariant_prescreen(e147_family(xi)).strata_dims == (3, 3, 1)
    r = stratified_iso_search(heisenberg(2), direct_sum(abelian(2), heisenberg(1)))
    assert r.verdict is Verdict.CERTIFIED_FALSE


def test_orbit_examples():
    assert e147_orbit(F(1, 2)) == {F(1, 2), F(2), F(-1)}
    got = sorted(float(v) for v in e147_orbit(0.1))
    assert np.allclose(got, sorted([0.1, 10, 0.9, -9, 10 / 9, -1 / 9]))


def test_search_agrees_with_orbit_on_grid():
    grid = [F(k, 11) for k in range(1, 5)] + [F(2) + F(k, 5) for k in range(1, 4)]
    for xi in grid[:4]:
        for eta in grid:
            got = bool(stratified_iso_search(e147_family(xi), e147_family(eta), restarts=15))
            assert got == in_e147_orbit(eta, xi), (xi, eta)


def test_json_round_trip():
    g = e147_family(F(2, 9))
    assert GradedLieAlgebra.from_json(g.to_json()) == g


def test_singular_block_rejected():
    from nilrect.errors import SingularBlock
    with pytest.raises(SingularBlock):
        GradedMap([[1, 1, 0], [1, 1, 0], [0, 0, 1]], (2, 1))
