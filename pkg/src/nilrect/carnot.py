"""Carnot group models in exponential coordinates of the first kind.

The group law is the Baker-Campbell-Hausdorff series, which terminates at
bracket length equal to the step.  Haar measure is Lebesgue measure in these
coordinates and dilations are diagonal.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import factorial

import numpy as np
from scipy.optimize import brentq, minimize

from .errors import SolverFailed
from .gliso import GradedLieAlgebra, validate_graded
from .symvec import Frame, Poly, PolyVectorField

__all__ = [
    "CarnotGroup", "ControlSignal", "dynkin_terms", "heisenberg_distance",
]


class ControlSignal:
    """Piecewise-constant controls: a list of (duration, u) segments."""

    __slots__ = ("durations", "values")

    def __init__(self, durations, values):
        durations = np.asarray(durations, dtype=float).reshape(-1)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(len(durations), -1) if len(durations) else values.reshape(0, 0)
        if len(durations) != len(values):
            raise ValueError("one control value per segment")
        if np.any(durations <= 0):
            raise ValueError("segment durations must be positive")
        self.durations = durations
        self.values = values

    @classmethod
    def empty(cls, rank):
        return cls(np.zeros(0), np.zeros((0, rank)))

    @classmethod
    def constant(cls, u, duration=1.0):
        return cls([duration], [u])

    @property
    def rank(self):
        return self.values.shape[1] if self.values.ndim == 2 else 0

    @property
    def total_duration(self):
        return float(self.durations.sum())

    def __len__(self):
        return len(self.durations)

    def length(self):
        """L1(L2) norm: sum of duration * |u|_2."""
        if not len(self):
            return 0.0
        return float(np.sum(self.durations * np.linalg.norm(self.values, axis=1)))

    def concat(self, other):
        if not len(self):
            return other
        if not len(other):
            return self
        return ControlSignal(np.concatenate([self.durations, other.durations]),
                             np.vstack([self.values, other.values]))

    def reversed(self):
        """Time reversal with negated controls: retraces the curve backwards."""
        return ControlSignal(self.durations[::-1], -self.values[::-1])

    def scaled(self, lam):
        """Same path shape, speed scaled by lam (a dilation in Carnot frames)."""
        return ControlSignal(self.durations, self.values * lam)

    def to_json(self):
        return {"durations": self.durations.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_json(cls, data):
        return cls(data["durations"], data["values"])

    def __repr__(self):
        return f"ControlSignal({len(self)} segments, length={self.length():.6g})"


@lru_cache(maxsize=None)
def dynkin_terms(step):
    """BCH coefficients: tuple of (coefficient, word) with word over {0: X, 1: Y},
    meaning the right-nested bracket [w1, [w2, ..., [w_{m-1}, w_m]]]."""
    coeffs = {}

    def pairs_seq(remaining, seq):
        # sequences of (r_i, s_i) with r_i + s_i > 0 and total <= step
        if seq:
            yield list(seq)
        for r in range(remaining + 1):
            for s in range(remaining + 1 - r):
                if r + s == 0:
                    continue
                yield from pairs_seq(remaining - r - s, seq + [(r, s)])

    for seq in pairs_seq(step, []):
        nterms = len(seq)
        total = sum(r + s for r, s in seq)
        denom = total
        for r, s in seq:
            denom *= factorial(r) * factorial(s)
        c = Fraction((-1) ** (nterms - 1), nterms * denom)
        word = []
        for r, s in seq:
            word += [0] * r + [1] * s
        word = tuple(word)
        if len(word) >= 2 and word[-1] == word[-2]:
            continue
        coeffs[word] = coeffs.get(word, 0) + c
    return tuple((c, w) for w, c in sorted(coeffs.items(), key=lambda kv: (len(kv[0]), kv[0])) if c)


class CarnotGroup:
    """Simply connected nilpotent group of a stratified algebra."""

    def __init__(self, algebra: GradedLieAlgebra, check=True):
        if check:
            verdict = validate_graded(algebra)
            if not verdict:
                raise ValueError(f"algebra is not a valid stratified algebra: {verdict}")
        self.algebra = algebra
        self.dim = algebra.dim
        self.step = algebra.step
        self.weights = np.array(algebra.weights)
        self.rank = algebra.strata_dims[0]
        self._tensor = algebra.tensor()
        self._heis = _heisenberg_type(algebra)
        self._tensor_flat = self._tensor.reshape(self.dim * self.dim, self.dim)

    def __repr__(self):
        return f"CarnotGroup({self.algebra.name}, dim={self.dim}, step={self.step})"

    # -- group law ------------------------------------------------------------
    def _bracket_np(self, u, v):
        n = self.dim
        outer = (u[..., :, None] * v[..., None, :]).reshape(u.shape[:-1] + (n * n,))
        return outer @ self._tensor_flat

    def bch_product(self, x, y):
        """x * y.  Exact for sequences of Fractions, vectorized for float arrays."""
        if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            x, y = np.broadcast_arrays(x, y)
            out = np.zeros_like(x)
            for c, word in dynkin_terms(self.step):
                v = y if word[-1] else x
                for letter in reversed(word[:-1]):
                    v = self._bracket_np(y if letter else x, v)
                out = out + float(c) * v
            return out
        x, y = list(x), list(y)
        out = [0] * self.dim
        for c, word in dynkin_terms(self.step):
            v = list(y if word[-1] else x)
            for letter in reversed(word[:-1]):
                v = self.algebra.bracket(list(y if letter else x), v)
            out = [a + c * b for a, b in zip(out, v)]
        return out

    def inverse(self, x):
        if isinstance(x, np.ndarray):
            return -x
        return [-a for a in x]

    def identity(self):
        return np.zeros(self.dim)

    def difference(self, x, y):
        """x^{-1} y."""
        return self.bch_product(self.inverse(x), y)

    def dilation(self, lam, x):
        if lam <= 0:
            raise ValueError("dilation factor must be positive")
        if isinstance(x, np.ndarray):
            return x * float(lam) ** self.weights
        return [a * lam ** int(w) for a, w in zip(x, self.weights)]

    def homogeneous_quasinorm(self, x):
        x = np.asarray(x, dtype=float)
        return np.sum(np.abs(x) ** (1.0 / self.weights), axis=-1)

    def left_invariant_frame(self) -> Frame:
        """Fields X_i(x) = d/dt [x * exp(t e_i)] at t = 0."""
        n = self.dim
        xs = [Poly.var(n, k) for k in range(n)]
        fields = []
        for i in range(self.rank):
            e = [Poly.const(n, int(k == i)) for k in range(n)]
            comp = [Poly.zero(n) for _ in range(n)]
            for c, word in dynkin_terms(self.step):
                if sum(word) != 1:
                    continue
                v = e if word[-1] else xs
                for letter in reversed(word[:-1]):
                    v = self.algebra.bracket(e if letter else xs, v)
                comp = [a + b.scale(c) for a, b in zip(comp, v)]
            fields.append(PolyVectorField(comp, n))
        return Frame(fields, name=f"G({self.algebra.name})",
                     coord_names=[f"g{k + 1}" for k in range(n)])

    # -- horizontal paths -------------------------------------------------------
    def endpoint(self, controls: ControlSignal, start=None):
        """Exact endpoint: product of exp(duration * u) over segments."""
        x = np.zeros(self.dim) if start is None else np.asarray(start, dtype=float)
        for dt, u in zip(controls.durations, controls.values):
            v = np.zeros(self.dim)
            v[:self.rank] = dt * u
            x = self.bch_product(x, v)
        return x

    def _endpoints_batch(self, u):
        """u: (batch, K, rank) with unit durations 1/K; returns (batch, n)."""
        b, k, _ = u.shape
        x = np.zeros((b, self.dim))
        for j in range(k):
            v = np.zeros((b, self.dim))
            v[:, :self.rank] = u[:, j, :] / k
            x = self.bch_product(x, v)
        return x

    @property
    def is_heisenberg_type(self):
        return self._heis is not None

    @property
    def has_exact_distance(self):
        return self._heis is not None or self.step == 1

    def distance(self, x, y):
        """Exact CC distance for abelian and isotropic Heisenberg-type groups (vectorized)."""
        if not self.has_exact_distance:
            raise NotImplementedError("closed form only for abelian and isotropic Heisenberg-type groups")
        d = self.difference(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        if self.step == 1:
            return np.linalg.norm(d, axis=-1)
        mu = self._heis
        r = np.linalg.norm(d[..., :self.rank], axis=-1)
        return heisenberg_distance(r, d[..., -1] / mu)

    def group_geodesic(self, x, y, segments=32, restarts=8, seed=0, tol=1e-9):
        """Horizontal path from x to y as piecewise-constant controls.

        Returns (ControlSignal on [0, 1], length).  Heisenberg-type groups use
        an inscribed-polygon arc that hits y exactly; other groups use direct
        transcription (energy minimization with an endpoint constraint).
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        target = self.difference(x, y)
        if np.allclose(target, 0, atol=1e-15):
            return ControlSignal.empty(self.rank), 0.0
        if self.step == 1:
            ctrl = ControlSignal([1.0], [target])
        elif self._heis is not None:
            ctrl = self._heisenberg_polygon(target, segments)
        else:
            ctrl = self._transcribe(target, max(segments, self.dim), restarts, seed, tol)
        return ctrl, ctrl.length()

    def _heisenberg_polygon(self, target, m):
        mu = self._heis
        d = self.rank
        z = target[:d]
        area = target[-1] / mu
        r = np.linalg.norm(z)
        if abs(area) < 1e-300 or (r > 0 and abs(area) / r ** 2 < 1e-14):
            return ControlSignal([1.0], [z])
        j = self._complex_structure
        if r > 0:
            zhat = z / r
        else:
            zhat = np.zeros(d)
            zhat[0] = 1.0
        jz = j @ zhat
        sign = 1.0 if area > 0 else -1.0
        a = abs(area)
        if r > 0:
            def poly_ratio(phi):
                return (m * np.sin(phi / m) - np.sin(phi)) / (8 * np.sin(phi / 2) ** 2)
            target_ratio = a / r ** 2
            lo, hi = 1e-6, 2 * np.pi - 1e-9
            if target_ratio <= poly_ratio(lo):
                # nearly straight: small-angle expansion of the ratio
                phi = 12 * target_ratio / (1 - 1 / m ** 2)
            elif target_ratio >= poly_ratio(hi):
                phi = hi
            else:
                phi = brentq(lambda p: poly_ratio(p) - target_ratio, lo, hi, xtol=1e-15)
            radius = r / (2 * np.sin(phi / 2))
        else:
            phi = 2 * np.pi
            radius = np.sqrt(2 * a / (m * np.sin(2 * np.pi / m)))
        chord = 2 * radius * np.sin(phi / (2 * m))
        thetas = -phi / 2 + (np.arange(m) + 0.5) * phi / m
        dirs = np.outer(np.cos(thetas), zhat) + sign * np.outer(np.sin(thetas), jz)
        return ControlSignal(np.full(m, 1.0 / m), dirs * chord * m)

    @property
    def _complex_structure(self):
        # J_ab = c[a][b][top]; the unit-speed rotation direction is -J/mu
        d = self.rank
        jm = self._tensor[:d, :d, -1]
        return -jm / self._heis

    def _transcribe(self, target, k, restarts, seed, tol):
        rng = np.random.default_rng(seed)
        d = self.rank
        scale = max(self.homogeneous_quasinorm(target), 1e-12)

        def unpack(v):
            return v.reshape(1, k, d)

        def energy(v):
            return float(np.sum(v ** 2)) / k

        def energy_grad(v):
            return 2 * v / k

        def cons(v):
            return self._endpoints_batch(unpack(v))[0] - target

        def cons_jac(v):
            # forward differences, all perturbations in one batched product
            h = 1e-7
            batch = np.repeat(v[None, :], v.size + 1, axis=0)
            batch[1:] += h * np.eye(v.size)
            ends = self._endpoints_batch(batch.reshape(-1, k, d))
            return ((ends[1:] - ends[0]) / h).T

        best = None
        for attempt in range(restarts):
            if attempt == 0:
                v0 = np.zeros((k, d))
                v0[:, :] = target[:d]
                v0 += 0.3 * scale * np.sin(np.outer(np.arange(k) * 2 * np.pi / k, np.ones(d))
                                           + np.arange(d))
            else:
                v0 = rng.normal(scale=scale, size=(k, d))
            sol = minimize(energy, v0.ravel(), jac=energy_grad, method="SLSQP",
                           constraints=[{"type": "eq", "fun": cons, "jac": cons_jac}],
                           options={"maxiter": 400, "ftol": 1e-14})
            resid = np.max(np.abs(cons(sol.x)))
            if resid <= tol * max(1.0, np.abs(target).max()):
                length = ControlSignal(np.full(k, 1.0 / k), unpack(sol.x)[0]).length()
                if best is None or length < best[0]:
                    best = (length, sol.x)
        if best is None:
            raise SolverFailed("direct transcription missed the endpoint on every restart")
        return ControlSignal(np.full(k, 1.0 / k), unpack(best[1])[0])

    def distance_bounds(self, x, y, constants=None):
        """(lower, upper) CC distance.  Exact for Heisenberg-type groups;
        otherwise the calibrated quasinorm comparison ``constants=(c_lo, c_hi)``
        with quasinorm / c_lo <= d <= c_hi * quasinorm."""
        if self.has_exact_distance:
            d = self.distance(x, y)
            return d * (1 - 1e-9), d * (1 + 1e-9)
        if constants is None:
            constants = self.calibrate_quasinorm()
        q = self.homogeneous_quasinorm(self.difference(np.asarray(x, float), np.asarray(y, float)))
        return q / constants[0], q * constants[1]

    def calibrate_quasinorm(self, samples=8, seed=0, restarts=3):
        """Fit c_lo, c_hi from geodesic lengths on the unit quasi-sphere.

        Both ratios are dilation invariant, so unit-sphere samples cover all
        scales; the constants are still only as good as the sample.
        """
        if getattr(self, "_calib", None) is not None:
            return self._calib
        rng = np.random.default_rng(seed)
        ratios = []
        for _ in range(samples):
            v = rng.normal(size=self.dim)
            v = v / self.homogeneous_quasinorm(v)
            # renormalize exactly onto the unit quasi-sphere by a dilation
            lam = 1.0
            for _ in range(60):
                q = self.homogeneous_quasinorm(self.dilation(lam, v))
                lam /= q
                if abs(q - 1) < 1e-14:
                    break
            v = self.dilation(lam, v)
            _, length = self.group_geodesic(np.zeros(self.dim), v, segments=max(16, self.dim * 3),
                                            restarts=restarts, seed=seed)
            ratios.append(length)
        ratios = np.array(ratios)
        # quasinorm is 1: d <= length, so c_hi = max length; the lower constant
        # needs a guess of the true distance, taken as the shortest length found
        c_hi = float(ratios.max()) * 1.05
        c_lo = 1.0 / (float(ratios.min()) / 1.25)
        self._calib = (c_lo, c_hi)
        return self._calib


def _heisenberg_type(g: GradedLieAlgebra):
    """mu if g is step 2 with one-dimensional centre stratum and J^T J = mu^2 I."""
    if g.step != 2 or g.strata_dims[1] != 1 or g.strata_dims[0] % 2:
        return None
    d = g.strata_dims[0]
    t = g.tensor()
    jm = t[:d, :d, d]
    jtj = jm.T @ jm
    mu2 = jtj[0, 0]
    if mu2 <= 0 or not np.allclose(jtj, mu2 * np.eye(d), rtol=1e-12, atol=1e-14):
        return None
    return float(np.sqrt(mu2))


_PHI_GRID = None


def _phi_table():
    global _PHI_GRID
    if _PHI_GRID is None:
        phi = np.linspace(1e-6, 2 * np.pi - 1e-6, 20001)
        ratio = (phi - np.sin(phi)) / (8 * np.sin(phi / 2) ** 2)
        _PHI_GRID = (phi, ratio)
    return _PHI_GRID


def heisenberg_distance(r, area):
    """CC distance from the origin to (z, area) in the isotropic Heisenberg group,
    with |z| = r and area = signed area swept by the projection.

    Geodesics project to circular arcs of angle phi: r = 2R sin(phi/2) and
    area = R^2 (phi - sin phi) / 2, length = R phi.
    """
    r = np.abs(np.asarray(r, dtype=float))
    a = np.abs(np.asarray(area, dtype=float))
    r, a = np.broadcast_arrays(r, a)
    out = np.empty(r.shape)
    flat_r, flat_a, flat_o = r.ravel(), a.ravel(), out.reshape(-1)
    vertical = flat_r <= 1e-300
    flat_o[vertical] = np.sqrt(4 * np.pi * flat_a[vertical])
    rest = ~vertical
    if np.any(rest):
        rr, aa = flat_r[rest], flat_a[rest]
        target = aa / rr ** 2
        phi_g, ratio_g = _phi_table()
        phi = np.interp(target, ratio_g, phi_g)
        # Newton polish on f(phi) = ratio(phi) - target
        for _ in range(2):
            s2 = np.sin(phi / 2) ** 2
            f = (phi - np.sin(phi)) / (8 * s2) - target
            df = ((1 - np.cos(phi)) * 8 * s2 - (phi - np.sin(phi)) * 8 * np.sin(phi / 2) * np.cos(phi / 2)) / (64 * s2 ** 2)
            step = np.where(df > 0, f / np.where(df > 0, df, 1), 0)
            phi = np.clip(phi - step, 1e-9, 2 * np.pi - 1e-9)
        length = phi * rr / (2 * np.sin(phi / 2))
        # tiny phi: phi ~ 12 * ratio and L = r (1 + phi^2 / 24)
        small = target < 1e-8
        length = np.where(small, rr * (1 + (12 * target) ** 2 / 24), length)
        # beyond the table the path is essentially a full circle
        length = np.where(target > ratio_g[-1], np.sqrt(4 * np.pi * aa), length)
        flat_o[rest] = length
    return out if out.shape else float(out)
