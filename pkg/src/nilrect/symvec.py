"""Exact polynomial vector fields on R^n.

Coefficients are :class:`fractions.Fraction`; floats only appear when a field
is evaluated with ``exact=False``.  Every object here is immutable.
"""
from __future__ import annotations

import json
from fractions import Fraction
from numbers import Rational

from .errors import DimensionMismatch

__all__ = ["Poly", "PolyVectorField", "Frame", "as_fraction", "weighted_degree"]


def as_fraction(value):
    """Convert ints, Fractions, decimal strings and "p/q" strings to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        return Fraction(value)
    raise TypeError(f"cannot convert {value!r} to an exact rational")


def weighted_degree(exp, weights):
    return sum(e * w for e, w in zip(exp, weights))


def _grlex_key(exp):
    return (sum(exp), exp)


class Poly:
    """Multivariate polynomial with rational coefficients.

    ``terms`` maps exponent tuples to nonzero Fractions.
    """

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars, terms=None):
        if nvars < 0:
            raise ValueError("nvars must be non-negative")
        clean = {}
        if terms:
            for exp, c in terms.items():
                exp = tuple(int(e) for e in exp)
                if len(exp) != nvars or any(e < 0 for e in exp):
                    raise DimensionMismatch(f"bad exponent {exp} for nvars={nvars}")
                c = as_fraction(c)
                if c:
                    clean[exp] = clean.get(exp, 0) + c
                    if not clean[exp]:
                        del clean[exp]
        self.nvars = nvars
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, nvars, terms):
        # trusted constructor: terms already canonical
        p = cls.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        p._hash = None
        return p

    @classmethod
    def zero(cls, nvars):
        return cls._raw(nvars, {})

    @classmethod
    def const(cls, nvars, c):
        c = as_fraction(c)
        return cls._raw(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def var(cls, nvars, i):
        exp = [0] * nvars
        exp[i] = 1
        return cls._raw(nvars, {tuple(exp): Fraction(1)})

    @classmethod
    def monomial(cls, nvars, exp, c=1):
        return cls(nvars, {tuple(exp): c})

    # -- structure ---------------------------------------------------------
    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def sorted_terms(self):
        """Terms in graded lexicographic order (ascending)."""
        return sorted(self.terms.items(), key=lambda kv: _grlex_key(kv[0]))

    def constant_term(self):
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def degree(self, weights=None):
        if not self.terms:
            return -1
        if weights is None:
            return max(sum(e) for e in self.terms)
        return max(weighted_degree(e, weights) for e in self.terms)

    def min_degree(self, weights=None):
        if not self.terms:
            return None
        if weights is None:
            return min(sum(e) for e in self.terms)
        return min(weighted_degree(e, weights) for e in self.terms)

    def homogeneous_part(self, weights, d):
        return Poly._raw(self.nvars, {e: c for e, c in self.terms.items()
                                      if weighted_degree(e, weights) == d})

    def truncate(self, weights, max_degree):
        return Poly._raw(self.nvars, {e: c for e, c in self.terms.items()
                                      if weighted_degree(e, weights) <= max_degree})

    def _check(self, other):
        if self.nvars != other.nvars:
            raise DimensionMismatch(f"nvars {self.nvars} != {other.nvars}")

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(self.nvars, other)
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return Poly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(self.nvars, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        c = as_fraction(c)
        if not c:
            return Poly.zero(self.nvars)
        return Poly._raw(self.nvars, {e: v * c for e, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return self.scale(other)
        return self.mul(other)

    __rmul__ = __mul__

    def mul(self, other, weights=None, max_degree=None):
        """Product, optionally discarding terms of weighted degree > max_degree."""
        self._check(other)
        out = {}
        trunc = max_degree is not None
        if trunc and weights is None:
            weights = (1,) * self.nvars
        b_items = list(other.terms.items())
        if trunc:
            b_deg = [weighted_degree(e, weights) for e, _ in b_items]
        for ea, ca in self.terms.items():
            if trunc:
                da = weighted_degree(ea, weights)
                if da > max_degree:
                    continue
            for idx, (eb, cb) in enumerate(b_items):
                if trunc and da + b_deg[idx] > max_degree:
                    continue
                e = tuple(x + y for x, y in zip(ea, eb))
                v = out.get(e, 0) + ca * cb
                if v:
                    out[e] = v
                else:
                    del out[e]
        return Poly._raw(self.nvars, out)

    def __pow__(self, k):
        if k < 0:
            raise ValueError("negative power")
        out = Poly.const(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def derivative(self, i):
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                out[tuple(ne)] = c * e[i]
        return Poly._raw(self.nvars, out)

    def integrate(self, i):
        """Antiderivative in variable i vanishing on x_i = 0."""
        out = {}
        for e, c in self.terms.items():
            ne = list(e)
            ne[i] += 1
            out[tuple(ne)] = c / ne[i]
        return Poly._raw(self.nvars, out)

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == Poly.const(self.nvars, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    # -- evaluation / composition -------------------------------------------
    def evaluate(self, point, exact=True):
        if len(point) != self.nvars:
            raise DimensionMismatch(f"point has {len(point)} coords, expected {self.nvars}")
        if exact:
            point = [as_fraction(x) for x in point]
            total = Fraction(0)
        else:
            point = [float(x) for x in point]
            total = 0.0
        for e, c in self.terms.items():
            term = c if exact else float(c)
            for x, k in zip(point, e):
                if k:
                    term = term * x ** k
            total += term
        return total

    def substitute(self, values, weights=None, max_degree=None):
        """Compose with a list of Polys (one per variable), all in a common ring.

        With ``max_degree`` the result is truncated in the target ring's
        weighted degree; correct when every substituted value has no constant
        term or truncation is harmless.
        """
        if len(values) != self.nvars:
            raise DimensionMismatch("substitution needs one value per variable")
        if not values:
            return self
        m = values[0].nvars
        powers = [[Poly.const(m, 1)] for _ in values]
        result = Poly.zero(m)
        for e, c in self.sorted_terms():
            term = Poly.const(m, c)
            for i, k in enumerate(e):
                if not k:
                    continue
                pw = powers[i]
                while len(pw) <= k:
                    pw.append(pw[-1].mul(values[i], weights, max_degree))
                term = term.mul(pw[k], weights, max_degree)
            result = result + term
        return result

    def shift(self, point):
        """Polynomial in xi with p(point + xi) == self(point) identically."""
        n = self.nvars
        vals = [Poly.var(n, i) + Poly.const(n, as_fraction(point[i])) for i in range(n)]
        return self.substitute(vals)

    # -- io ----------------------------------------------------------------
    def to_json(self):
        return [{"exp": list(e), "num": str(c.numerator), "den": str(c.denominator)}
                for e, c in self.sorted_terms()]

    @classmethod
    def from_json(cls, nvars, data):
        return cls(nvars, {tuple(t["exp"]): Fraction(int(t["num"]), int(t["den"]))
                           for t in data})

    def __repr__(self):
        return f"Poly({self.to_str()})"

    def to_str(self, names=None):
        if not self.terms:
            return "0"
        names = names or [f"x{i + 1}" for i in range(self.nvars)]
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(f"{names[i]}^{k}" if k > 1 else names[i]
                            for i, k in enumerate(e) if k)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


class PolyVectorField:
    """Vector field sum_i components[i] * d/dx_i with polynomial coefficients."""

    __slots__ = ("nvars", "components")

    def __init__(self, components, nvars=None):
        components = tuple(components)
        if nvars is None:
            if not components:
                raise DimensionMismatch("cannot infer nvars of an empty field")
            nvars = components[0].nvars
        if len(components) != nvars:
            raise DimensionMismatch(f"{len(components)} components for nvars={nvars}")
        for c in components:
            if c.nvars != nvars:
                raise DimensionMismatch("component ring mismatch")
        self.nvars = nvars
        self.components = components

    @classmethod
    def zero(cls, nvars):
        return cls([Poly.zero(nvars) for _ in range(nvars)], nvars)

    @classmethod
    def coordinate(cls, nvars, i):
        """The constant field d/dx_i."""
        comps = [Poly.zero(nvars) for _ in range(nvars)]
        comps[i] = Poly.const(nvars, 1)
        return cls(comps, nvars)

    @classmethod
    def from_dict(cls, nvars, coeffs):
        """Build from {index: Poly or scalar}."""
        comps = [Poly.zero(nvars) for _ in range(nvars)]
        for i, c in coeffs.items():
            comps[i] = c if isinstance(c, Poly) else Poly.const(nvars, c)
        return cls(comps, nvars)

    def _check(self, other):
        if self.nvars != other.nvars:
            raise DimensionMismatch(f"nvars {self.nvars} != {other.nvars}")

    def is_zero(self):
        return all(c.is_zero() for c in self.components)

    def __add__(self, other):
        self._check(other)
        return PolyVectorField([a + b for a, b in zip(self.components, other.components)], self.nvars)

    def __sub__(self, other):
        self._check(other)
        return PolyVectorField([a - b for a, b in zip(self.components, other.components)], self.nvars)

    def __neg__(self):
        return PolyVectorField([-a for a in self.components], self.nvars)

    def scale(self, c):
        """Multiply by a rational constant or a Poly."""
        if isinstance(c, Poly):
            return PolyVectorField([c * a for a in self.components], self.nvars)
        return PolyVectorField([a.scale(c) for a in self.components], self.nvars)

    __mul__ = scale
    __rmul__ = scale

    def __eq__(self, other):
        if not isinstance(other, PolyVectorField):
            return NotImplemented
        return self.nvars == other.nvars and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def apply(self, f):
        """Derivation action: sum_i V_i * df/dx_i."""
        if f.nvars != self.nvars:
            raise DimensionMismatch("field and function live on different spaces")
        out = Poly.zero(self.nvars)
        for i, vi in enumerate(self.components):
            if vi:
                d = f.derivative(i)
                if d:
                    out = out + vi * d
        return out

    def bracket(self, other):
        """Lie bracket [self, other] with component i equal to V(W_i) - W(V_i)."""
        self._check(other)
        return PolyVectorField(
            [self.apply(w) - other.apply(v) for v, w in zip(self.components, other.components)],
            self.nvars)

    def evaluate(self, point, exact=True):
        return [c.evaluate(point, exact) for c in self.components]

    def weighted_degrees(self, weights):
        """Set of weighted degrees deg(coefficient term) - w_i over all terms."""
        out = set()
        for i, c in enumerate(self.components):
            for e in c.terms:
                out.add(weighted_degree(e, weights) - weights[i])
        return out

    def homogeneous_part(self, weights, d):
        """Part of weighted degree d, where x^a d_i has degree <a,w> - w_i."""
        return PolyVectorField([c.homogeneous_part(weights, d + weights[i])
                                for i, c in enumerate(self.components)], self.nvars)

    def is_homogeneous(self, weights, d):
        degs = self.weighted_degrees(weights)
        return degs <= {d}

    def shift(self, point):
        return PolyVectorField([c.shift(point) for c in self.components], self.nvars)

    def to_json(self):
        return {"nvars": self.nvars, "components": [c.to_json() for c in self.components]}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        n = int(data["nvars"])
        return cls([Poly.from_json(n, c) for c in data["components"]], n)

    def to_str(self, names=None):
        names = names or [f"x{i + 1}" for i in range(self.nvars)]
        parts = []
        for i, c in enumerate(self.components):
            if not c:
                continue
            s = c.to_str(names)
            if len(c.terms) > 1:
                s = f"({s})"
            parts.append(f"d{names[i]}" if s == "1" else f"{s}*d{names[i]}")
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"PolyVectorField({self.to_str()})"


class Frame:
    """Ordered tuple of d polynomial vector fields on R^n, 1 <= d <= n."""

    __slots__ = ("fields", "ambient_dim", "name", "coord_names")

    def __init__(self, fields, name="frame", coord_names=None):
        fields = tuple(fields)
        if not fields:
            raise ValueError("a frame needs at least one field")
        n = fields[0].nvars
        if n == 0:
            raise ValueError("ambient dimension must be positive")
        if any(f.nvars != n for f in fields):
            raise DimensionMismatch("frame fields live on different spaces")
        if len(fields) > n:
            raise ValueError(f"rank {len(fields)} exceeds ambient dimension {n}")
        self.fields = fields
        self.ambient_dim = n
        self.name = name
        self.coord_names = tuple(coord_names) if coord_names else tuple(f"x{i + 1}" for i in range(n))

    @property
    def rank(self):
        return len(self.fields)

    def __len__(self):
        return len(self.fields)

    def __iter__(self):
        return iter(self.fields)

    def __getitem__(self, i):
        return self.fields[i]

    def __eq__(self, other):
        return isinstance(other, Frame) and self.fields == other.fields

    def __hash__(self):
        return hash(self.fields)

    def evaluate_matrix(self, point, exact=False):
        """n x d matrix whose columns are the field values at ``point``."""
        cols = [f.evaluate(point, exact) for f in self.fields]
        return [[cols[j][i] for j in range(len(cols))] for i in range(self.ambient_dim)]

    def to_json(self):
        return {"name": self.name, "ambient_dim": self.ambient_dim,
                "coords": list(self.coord_names),
                "fields": [f.to_json() for f in self.fields]}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        fields = [PolyVectorField.from_json(f) for f in data["fields"]]
        return cls(fields, name=data.get("name", "frame"), coord_names=data.get("coords"))

    def __repr__(self):
        body = ", ".join(f.to_str(list(self.coord_names)) for f in self.fields)
        return f"Frame({self.name}: {body})"
