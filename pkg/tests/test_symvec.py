from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from nilrect.library import BUNDLED, bundled, parse_poly, source_text
from nilrect.symvec import Frame, Poly, PolyVectorField

X = ["x1", "x2", "x3"]


def P(text, names=X):
    return parse_poly(text, names)


coef = st.fractions(min_value=-5, max_value=5, max_denominator=7)
exps = st.tuples(*[st.integers(0, 3)] * 3)
polys = st.dictionaries(exps, coef, max_size=5).map(lambda t: Poly(3, t))
fields = st.lists(polys, min_size=3, max_size=3).map(lambda c: PolyVectorField(c, 3))


def to_sympy(p: Poly, syms):
    return sum((c * sympy.prod([s ** e for s, e in zip(syms, exp)])
                for exp, c in p.terms.items()), sympy.Integer(0))


def test_poly_arith_examples():
    assert (P("x1") + P("-x1")).is_zero()
    assert P("x1") * P("x3") == P("x1*x3")
    # coefficient of d7 in X2 of the seven-dimensional example
    assert P("-x1*x3*(-1+x1)") == P("x1*x3 - x1**2*x3")


def test_vf_apply_examples():
    d1 = PolyVectorField.coordinate(3, 0)
    assert d1.apply(P("x1**2")) == P("2*x1")
    names = ["x1", "x2", "x3", "x4"]
    v = PolyVectorField.from_dict(4, {1: 1, 3: parse_poly("x1", names)})
    assert v.apply(parse_poly("x4", names)) == parse_poly("x1", names)
    assert v.apply(Poly.const(4, 1)).is_zero()


def test_brackets_of_example5():
    f = bundled("example5")
    X1, Y1, X2, Y2 = f.fields
    z = PolyVectorField.coordinate(5, 4)
    assert X1.bracket(Y1) == PolyVectorField.from_dict(5, {4: parse_poly("2*x1", f.coord_names)})
    assert X2.bracket(Y2) == z


def test_evaluate_examples():
    names = bundled("example5").coord_names
    v = PolyVectorField.from_dict(5, {4: parse_poly("2*x1", names)})
    assert v.evaluate([3, 0, 0, 0, 0]) == [0, 0, 0, 0, 6]
    assert PolyVectorField.coordinate(5, 0).evaluate([7, 1, 2, 3, 4]) == [1, 0, 0, 0, 0]
    X3 = bundled("example7").fields[2]
    assert X3.evaluate([1, 1, 0, 0, 0, 0, 0])[6] == -1


@settings(max_examples=40, deadline=None)
@given(fields, fields, fields)
def test_jacobi_and_antisymmetry(a, b, c):
    assert a.bracket(a).is_zero()
    assert a.bracket(b) == -b.bracket(a)
    jac = a.bracket(b.bracket(c)) + b.bracket(c.bracket(a)) + c.bracket(a.bracket(b))
    assert jac.is_zero()


@settings(max_examples=40, deadline=None)
@given(fields, polys, polys)
def test_leibniz(v, f, g):
    assert v.apply(f * g) == v.apply(f) * g + f * v.apply(g)


@settings(max_examples=30, deadline=None)
@given(fields, fields)
def test_bracket_matches_sympy(a, b):
    syms = sympy.symbols(X)
    br = a.bracket(b)
    for i in range(3):
        want = sum(to_sympy(a.components[j], syms) * sympy.diff(to_sympy(b.components[i], syms),
                                                                syms[j])
                   - to_sympy(b.components[j], syms) * sympy.diff(to_sympy(a.components[i], syms),
                                                                  syms[j])
                   for j in range(3))
        assert sympy.expand(want - to_sympy(br.components[i], syms)) == 0


@settings(max_examples=30, deadline=None)
@given(polys, st.lists(coef, min_size=3, max_size=3))
def test_exact_evaluation_matches_sympy(p, pt):
    syms = sympy.symbols(X)
    want = to_sympy(p, syms).subs(dict(zip(syms, [sympy.Rational(x.numerator, x.denominator)
                                                  for x in pt])))
    assert Fraction(str(want)) == p.evaluate(pt)


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_round_trip(name):
    f = bundled(name)
    assert Frame.from_json(f.to_json()) == f
    src = source_text(name)
    names = src["coords"]
    syms = sympy.symbols(names)
    for field, spec in zip(f.fields, src["fields"]):
        for k, text in spec.items():
            comp = field.components[names.index(k)]
            assert sympy.expand(to_sympy(comp, syms) - sympy.sympify(text, dict(zip(names, syms)))) == 0
            # the printed form parses back to the same polynomial
            assert parse_poly(comp.to_str(names), names) == comp


def test_dimension_mismatch():
    from nilrect.errors import DimensionMismatch
    with pytest.raises(DimensionMismatch):
        Poly(2, {(1,): 1})
    with pytest.raises(DimensionMismatch):
        PolyVectorField.coordinate(2, 0).bracket(PolyVectorField.coordinate(3, 0))
