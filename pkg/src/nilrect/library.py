"""Bundled frames: the 7-dimensional and 5-dimensional examples, Martinet, and
the first and second Heisenberg models.

Fields are written as text, coefficient by coefficient, and parsed through
sympy into exact :class:`Poly` objects.
"""
from __future__ import annotations

from fractions import Fraction

import sympy

from .symvec import Frame, Poly, PolyVectorField

__all__ = ["parse_poly", "parse_field", "bundled", "BUNDLED", "EXPECTED_FACTS"]


def parse_poly(text, names):
    """Parse a polynomial expression in the variables ``names``."""
    syms = sympy.symbols(list(names))
    local = dict(zip(names, syms))
    expr = sympy.sympify(text, locals=local)
    poly = sympy.Poly(sympy.expand(expr), *syms, domain="QQ")
    terms = {}
    for exp, c in poly.terms():
        terms[tuple(exp)] = Fraction(int(c.p), int(c.q))
    return Poly(len(names), terms)


def parse_field(spec, names):
    """Parse ``{coordinate name: coefficient text}`` into a field."""
    n = len(names)
    coeffs = {names.index(k): parse_poly(v, names) for k, v in spec.items()}
    return PolyVectorField.from_dict(n, coeffs)


_SOURCES = {
    "example7": {
        "coords": ["x1", "x2", "x3", "x4", "x5", "x6", "x7"],
        "fields": [
            {"x1": "1"},
            {"x2": "1", "x4": "x1", "x7": "-x1*x3*(-1+x1)"},
            {"x3": "1", "x5": "x2", "x6": "-x1", "x7": "-x1*x2*x1"},
        ],
    },
    "example5": {
        "coords": ["x1", "y1", "x2", "y2", "z"],
        "fields": [
            {"x1": "1"},
            {"y1": "1", "z": "x1**2"},
            {"x2": "1"},
            {"y2": "1", "z": "x2"},
        ],
    },
    "martinet": {
        "coords": ["x", "y", "z"],
        "fields": [{"x": "1"}, {"y": "1", "z": "x**2"}],
    },
    # left-invariant frames of the models with [e1,e2]=e3 (resp. [e1,e2]=[e3,e4]=e5)
    "heis1": {
        "coords": ["a", "b", "c"],
        "fields": [{"a": "1", "c": "-b/2"}, {"b": "1", "c": "a/2"}],
    },
    "heis2": {
        "coords": ["a1", "b1", "a2", "b2", "c"],
        "fields": [
            {"a1": "1", "c": "-b1/2"},
            {"b1": "1", "c": "a1/2"},
            {"a2": "1", "c": "-b2/2"},
            {"b2": "1", "c": "a2/2"},
        ],
    },
}

EXPECTED_FACTS = {
    "example7": "equiregular with growth (3,6,7), Q=12; nilpotentization at x is 147E with xi=2*x1",
    "example5": "equiregular with growth (4,5), Q=6; second Heisenberg where x1 != 0, R^2 x Heis1 at x1 = 0",
    "martinet": "not equiregular: growth (2,2,3) on x=0, (2,3) elsewhere",
    "heis1": "first Heisenberg group, growth (2,3), Q=4",
    "heis2": "second Heisenberg group, growth (4,5), Q=6",
}

BUNDLED = tuple(_SOURCES)


def bundled(name) -> Frame:
    try:
        src = _SOURCES[name]
    except KeyError:
        raise KeyError(f"unknown bundled example {name!r}; choose from {BUNDLED}") from None
    names = src["coords"]
    fields = [parse_field(f, names) for f in src["fields"]]
    return Frame(fields, name=name, coord_names=names)


def source_text(name):
    """The textual field definitions, as bundled."""
    return _SOURCES[name]
