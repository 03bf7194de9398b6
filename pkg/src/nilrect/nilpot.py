"""Privileged coordinates, nilpotent approximation and nilpotentization.

Charts are exponential coordinates of the second kind built from an adapted
frame Y_1..Y_n at p::

    psi(t) = exp(t_1 Y_1) o ... o exp(t_n Y_n)(p)

Each flow is expanded as a polynomial jet in t by Picard iteration; the
coordinate t_j carries weight w_j and all jets are truncated in that weighted
degree.  Frame fields are then pulled back through psi.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator

from .errors import BasisExpressionFailed, FlagFailure, NilrectError, PrivilegedCheckFailed
from .flag import FlagBasis, GrowthVector, bracket_flag, exact_point, word_field
from .gliso import GradedLieAlgebra, validate_graded
from .linalg import inverse, solve
from .symvec import Frame, Poly, PolyVectorField, weighted_degree

__all__ = [
    "PrivilegedChart", "privileged_coordinates", "nilpotent_approximation",
    "homogeneous_decomposition", "structure_constants", "nilpotentization",
    "flow_jet", "Nilpotentizer", "flag_quotient_algebra",
]


@dataclass
class PrivilegedChart:
    base_point: tuple
    growth: GrowthVector
    flag_basis: FlagBasis
    weights: tuple
    truncation_order: int
    psi: tuple            # jets of x - p as polynomials in t (weighted degree <= order + step)
    pushforward_jets: tuple  # frame fields in t coordinates (coefficients truncated at order)
    frame: Frame

    @property
    def step(self):
        return self.growth.step

    def to_chart(self, q, tol=1e-13, max_iter=50):
        """Numerically invert the truncated chart jet: t with psi(t) ~= q - p."""
        q = np.asarray([float(x) for x in q])
        p = np.asarray([float(x) for x in self.base_point])
        target = q - p
        fn = _compile_polys(self.psi)
        jac = _compile_polys([c.derivative(j) for c in self.psi for j in range(len(self.psi))])
        n = len(self.psi)
        t = np.linalg.solve(jac(np.zeros(n)).reshape(n, n), target)
        for _ in range(max_iter):
            r = fn(t) - target
            if np.max(np.abs(r)) < tol:
                break
            t = t - np.linalg.solve(jac(t).reshape(n, n), r)
        return t

    def from_chart(self, t):
        fn = _compile_polys(self.psi)
        return np.asarray([float(x) for x in self.base_point]) + fn(np.asarray(t, dtype=float))


def _compile_polys(polys):
    """Vectorized float evaluator for a list of Polys in a common ring."""
    exps, coefs, owners = [], [], []
    for k, p in enumerate(polys):
        for e, c in p.terms.items():
            exps.append(e)
            coefs.append(float(c))
            owners.append(k)
    m = len(polys)
    if not exps:
        return lambda x: np.zeros(m)
    E = np.array(exps, dtype=float)
    C = np.array(coefs)
    O = np.zeros((len(exps), m))
    O[np.arange(len(exps)), owners] = 1.0

    def f(x):
        x = np.asarray(x, dtype=float)
        mon = np.prod(np.power(x[..., None, :], E), axis=-1)
        return (mon * C) @ O
    return f


# ---------------------------------------------------------------------------
# jets


def flow_jet(field: PolyVectorField, start, time_var, weights, max_degree, max_rounds=None):
    """Picard iteration for z' = V(z), z(0) = start, in jet arithmetic.

    ``start`` is a list of Polys without constant terms (the initial point
    expressed in centred coordinates as a jet); ``time_var`` indexes the
    variable playing the role of time.  Returns the stationary jet.
    """
    w_t = weights[time_var]
    rounds = max_rounds or (max_degree // w_t + 2)
    z = list(start)
    for _ in range(rounds + 1):
        vals = [c.substitute(z, weights, max_degree) if c else Poly.zero(z[0].nvars)
                for c in field.components]
        new = [s + v.integrate(time_var).truncate(weights, max_degree)
               for s, v in zip(start, vals)]
        if new == z:
            return z
        z = new
    raise NilrectError("Picard iteration did not become stationary")


def _chart_jet(adapted, n, weights, max_degree):
    zero = [Poly.zero(n) for _ in range(n)]
    z = zero
    for j in reversed(range(len(adapted))):
        z = flow_jet(adapted[j], z, j, weights, max_degree)
    return z


def _pull_back(field, psi, dpsi_const_inv, dpsi_rest, weights, order):
    """Solve Dpsi(t) V~(t) = V(psi(t)) for V~ by Neumann iteration."""
    n = len(psi)
    b = [c.substitute(psi, weights, order) if c else Poly.zero(n) for c in field.components]
    b = [c.truncate(weights, order) for c in b]

    def apply_const(mat, vec):
        out = []
        for i in range(n):
            acc = Poly.zero(n)
            for k in range(n):
                if mat[i][k] and vec[k]:
                    acc = acc + vec[k].scale(mat[i][k])
            out.append(acc)
        return out

    v = apply_const(dpsi_const_inv, b)
    for _ in range(order + 2):
        rv = []
        for i in range(n):
            acc = Poly.zero(n)
            for k in range(n):
                if dpsi_rest[i][k] and v[k]:
                    acc = acc + dpsi_rest[i][k].mul(v[k], weights, order)
            rv.append(acc)
        new = apply_const(dpsi_const_inv, [bi - ri for bi, ri in zip(b, rv)])
        if new == v:
            return PolyVectorField(v, n)
        v = new
    raise NilrectError("pull-back iteration did not become stationary")


def privileged_coordinates(frame: Frame, p, order: int | None = None, words=None) -> PrivilegedChart:
    """Exponential coordinates of the second kind at p and pulled-back frame jets.

    ``words`` optionally overrides the adapted basis with an explicit list of
    bracket words (used to compare orderings).
    """
    p = exact_point(p)
    try:
        growth, fb = bracket_flag(frame, p)
    except NilrectError as exc:
        raise FlagFailure(str(exc)) from exc
    if any(a == b for a, b in zip(growth.dims, growth.dims[1:])):
        raise FlagFailure(f"p is not a regular point of a usable flag: growth {growth.dims}")
    if words is not None:
        fb = _flag_basis_from_words(frame, p, words)
    s = growth.step
    if order is None:
        order = s
    if order < s:
        raise ValueError(f"truncation order {order} is below the step {s}")
    n = frame.ambient_dim
    w = fb.weights
    adapted = [f.shift(p) for f in fb.fields]
    fields = [f.shift(p) for f in frame.fields]
    big = order + s
    psi = _chart_jet(adapted, n, w, big)
    d0 = [[psi[i].derivative(j).constant_term() for j in range(n)] for i in range(n)]
    d0inv = inverse(d0)
    rest = [[(psi[i].derivative(j) - Poly.const(n, d0[i][j])).truncate(w, order)
             for j in range(n)] for i in range(n)]
    jets = []
    for f in fields:
        jf = _pull_back(f, psi, d0inv, rest, w, order)
        jf = PolyVectorField([c.truncate(w, order) for c in jf.components], n)
        jets.append(jf)
    chart = PrivilegedChart(p, growth, fb, tuple(w), order, tuple(psi), tuple(jets), frame)
    _check_privileged(chart)
    return chart


def _flag_basis_from_words(frame, p, words):
    cache = {}
    fields = [word_field(frame, tuple(wd), cache) for wd in words]
    vals = [f.evaluate(p) for f in fields]
    n = frame.ambient_dim
    if len(words) != n:
        raise FlagFailure("word list must have one word per dimension")
    mat = [[vals[j][i] for j in range(n)] for i in range(n)]
    try:
        inverse(mat)
    except ZeroDivisionError:
        raise FlagFailure("words are not independent at p") from None
    wts = tuple(len(wd) for wd in words)
    if list(wts) != sorted(wts):
        raise FlagFailure("words must be sorted by length")
    return FlagBasis(tuple(tuple(wd) for wd in words), tuple(fields), wts, p)


def _check_privileged(chart):
    w = chart.weights
    for i, jf in enumerate(chart.pushforward_jets):
        degs = jf.weighted_degrees(w)
        if degs and min(degs) < -1:
            raise PrivilegedCheckFailed(
                f"frame field {i} has a term of weighted degree {min(degs)} < -1")


def homogeneous_decomposition(chart: PrivilegedChart):
    """Per frame field: {degree: homogeneous part} for degrees -1 .. order - 1."""
    w = chart.weights
    out = []
    for jf in chart.pushforward_jets:
        parts = {}
        for d in range(-1, chart.truncation_order - max(w) + 1):
            part = jf.homogeneous_part(w, d)
            if not part.is_zero():
                parts[d] = part
        out.append(parts)
    return out


def nilpotent_approximation(chart: PrivilegedChart) -> Frame:
    """Weighted-degree -1 parts of the pulled-back frame fields."""
    w = chart.weights
    hats = [jf.homogeneous_part(w, -1) for jf in chart.pushforward_jets]
    for h in hats:
        if not h.is_homogeneous(w, -1):
            raise PrivilegedCheckFailed("degree -1 part is not homogeneous")
    return Frame(hats, name=f"{chart.frame.name}^hat", coord_names=[f"t{i + 1}" for i in range(len(w))])


def structure_constants(hat: Frame, flag_basis: FlagBasis, weights=None) -> GradedLieAlgebra:
    """Constants of Lie(hat) in the basis of adapted words evaluated on the hat fields."""
    w = tuple(weights or flag_basis.weights)
    n = hat.ambient_dim
    cache = {}
    basis = []
    for word, wt in zip(flag_basis.words, flag_basis.weights):
        f = word_field(hat, word, cache).homogeneous_part(w, -wt)
        basis.append(f)
    # linear system: coefficients of each basis field, keyed by (component, monomial)
    keys = sorted({(i, e) for f in basis for i, c in enumerate(f.components) for e in c.terms})
    index = {k: r for r, k in enumerate(keys)}
    mat = [[Fraction(0)] * n for _ in keys]
    for j, f in enumerate(basis):
        for i, c in enumerate(f.components):
            for e, v in c.terms.items():
                mat[index[(i, e)]][j] = v
    step = max(flag_basis.weights)
    consts = {}
    for a in range(n):
        for b in range(a + 1, n):
            br = basis[a].bracket(basis[b])
            if br.is_zero():
                continue
            if flag_basis.weights[a] + flag_basis.weights[b] > step:
                raise BasisExpressionFailed(
                    f"bracket of basis fields {a},{b} is nonzero beyond the step")
            rhs = [Fraction(0)] * len(keys)
            for i, c in enumerate(br.components):
                for e, v in c.terms.items():
                    if (i, e) not in index:
                        raise BasisExpressionFailed(f"[Y{a},Y{b}] leaves the span of the basis")
                    rhs[index[(i, e)]] = v
            x = solve(mat, rhs)
            if x is None:
                raise BasisExpressionFailed(f"[Y{a},Y{b}] leaves the span of the basis")
            for k, v in enumerate(x):
                if v:
                    consts[(a, b, k)] = v
                    consts[(b, a, k)] = -v
    strata = []
    for s in range(1, step + 1):
        strata.append(sum(1 for x in flag_basis.weights if x == s))
    return GradedLieAlgebra(strata, consts, name=f"nil({hat.name})")


def nilpotentization(frame: Frame, p, order: int | None = None, words=None) -> GradedLieAlgebra:
    chart = privileged_coordinates(frame, p, order, words)
    hat = nilpotent_approximation(chart)
    g = structure_constants(hat, chart.flag_basis)
    verdict = validate_graded(g)
    if not verdict:
        raise BasisExpressionFailed(f"nilpotentization failed validation: {verdict}")
    g.name = f"nil({frame.name}, p)"
    return g


def flag_quotient_algebra(frame: Frame, p) -> GradedLieAlgebra:
    """Graded algebra of the flag at p: brackets of adapted words taken modulo
    the lower layer and read off at p.  Independent of any chart."""
    p = exact_point(p)
    growth, fb = bracket_flag(frame, p)
    n = frame.ambient_dim
    vals = [f.evaluate(p) for f in fb.fields]
    consts = {}
    for a in range(n):
        for b in range(a + 1, n):
            wa, wb = fb.weights[a], fb.weights[b]
            target = wa + wb
            if target > growth.step:
                continue
            br = fb.fields[a].bracket(fb.fields[b])
            v = br.evaluate(p)
            cols = [j for j in range(n) if fb.weights[j] <= target]
            mat = [[vals[j][i] for j in cols] for i in range(n)]
            x = solve(mat, v)
            if x is None:
                raise BasisExpressionFailed("bracket value outside the flag layer")
            for jj, j in enumerate(cols):
                if fb.weights[j] == target and x[jj]:
                    consts[(a, b, j)] = x[jj]
                    consts[(b, a, j)] = -x[jj]
    return GradedLieAlgebra(growth.strata_dims, consts, f"gr({frame.name}, p)")


class Nilpotentizer(BaseEstimator):
    """Estimator wrapper: ``fit(frame, point)`` computes the tangent algebra.

    Fitted attributes: ``chart_``, ``hat_frame_``, ``algebra_``, ``growth_``.
    """

    def __init__(self, order=None, words=None):
        self.order = order
        self.words = words

    def fit(self, frame, point):
        self.chart_ = privileged_coordinates(frame, point, self.order, self.words)
        self.hat_frame_ = nilpotent_approximation(self.chart_)
        self.algebra_ = structure_constants(self.hat_frame_, self.chart_.flag_basis)
        self.growth_ = self.chart_.growth
        return self

    def transform(self, points):
        """Chart coordinates of points near the base point."""
        from sklearn.utils.validation import check_is_fitted
        check_is_fitted(self, "chart_")
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.array([self.chart_.to_chart(q) for q in pts])
