"""Graded nilpotent Lie algebras given by structure constants.

Basis indices are 0-based everywhere, including JSON.  Constants may be
Fractions (exact mode) or floats.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np
from scipy.optimize import least_squares

from .errors import SingularBlock
from .linalg import EchelonBasis, inverse, rank as exact_rank

__all__ = [
    "GradedLieAlgebra", "GradedMap", "GradedVerdict", "Verdict", "IsoResult",
    "validate_graded", "change_basis", "rebase", "word_basis",
    "invariant_prescreen", "stratified_iso_search",
    "e147_family", "e147_orbit", "symbol0_algebra", "heisenberg", "abelian", "direct_sum",
]


def _is_exact(x):
    return isinstance(x, (int, Fraction))


class GradedLieAlgebra:
    """Structure constants c[i][j][k] with [e_i, e_j] = sum_k c[i][j][k] e_k."""

    def __init__(self, strata_dims, constants, name=""):
        self.strata_dims = tuple(int(m) for m in strata_dims)
        self.dim = sum(self.strata_dims)
        self.name = name
        clean = {}
        for (i, j, k), v in dict(constants).items():
            if not (0 <= i < self.dim and 0 <= j < self.dim and 0 <= k < self.dim):
                raise IndexError(f"constant index ({i},{j},{k}) out of range")
            if v:
                clean[(int(i), int(j), int(k))] = v
        self.constants = clean
        self.weights = tuple(s + 1 for s, m in enumerate(self.strata_dims) for _ in range(m))

    @classmethod
    def from_relations(cls, strata_dims, relations, name=""):
        """Build from {(i, j): {k: c}} with i < j; antisymmetry is filled in."""
        consts = {}
        for (i, j), out in relations.items():
            for k, c in out.items():
                consts[(i, j, k)] = c
                consts[(j, i, k)] = -c
        return cls(strata_dims, consts, name)

    @property
    def step(self):
        return len(self.strata_dims)

    @property
    def exact(self):
        return all(_is_exact(v) for v in self.constants.values())

    def stratum(self, i):
        return self.weights[i]

    def stratum_indices(self, s):
        """Basis indices of stratum s (1-based stratum number)."""
        start = sum(self.strata_dims[:s - 1])
        return list(range(start, start + self.strata_dims[s - 1]))

    def bracket(self, u, v):
        """Bracket of coordinate vectors; works over any ring supporting + and *."""
        zero = u[0] * 0 if len(u) else 0
        out = [zero] * self.dim
        for (i, j, k), c in self.constants.items():
            if u[i] and v[j]:
                out[k] = out[k] + c * u[i] * v[j]
        return out

    def tensor(self):
        t = np.zeros((self.dim,) * 3)
        for (i, j, k), v in self.constants.items():
            t[i, j, k] = float(v)
        return t

    def to_float(self):
        return GradedLieAlgebra(self.strata_dims,
                                {key: float(v) for key, v in self.constants.items()}, self.name)

    def __eq__(self, other):
        if not isinstance(other, GradedLieAlgebra):
            return NotImplemented
        return self.strata_dims == other.strata_dims and self.constants == other.constants

    def __repr__(self):
        rels = []
        for (i, j, k), c in sorted(self.constants.items()):
            if i < j:
                rels.append(f"[e{i},e{j}]+={c}e{k}")
        return f"GradedLieAlgebra({self.name or ''} strata={self.strata_dims}; {', '.join(rels)})"

    def to_json(self):
        consts = []
        for (i, j, k), c in sorted(self.constants.items()):
            if _is_exact(c):
                c = Fraction(c)
                consts.append({"i": i, "j": j, "k": k,
                               "num": str(c.numerator), "den": str(c.denominator)})
            else:
                consts.append({"i": i, "j": j, "k": k, "value": float(c)})
        return {"name": self.name, "dim": self.dim, "strata": list(self.strata_dims),
                "constants": consts}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        consts = {}
        for c in data["constants"]:
            if "num" in c:
                v = Fraction(int(c["num"]), int(c.get("den", 1)))
            else:
                v = float(c["value"])
            consts[(c["i"], c["j"], c["k"])] = v
        g = cls(data["strata"], consts, data.get("name", ""))
        if "dim" in data and int(data["dim"]) != g.dim:
            raise ValueError(f"dim {data['dim']} disagrees with strata {g.strata_dims}")
        return g


@dataclass(frozen=True)
class GradedVerdict:
    valid: bool
    violation: str = ""
    indices: tuple = ()

    def __bool__(self):
        return self.valid


def _close(a, b, tol):
    if _is_exact(a) and _is_exact(b):
        return a == b
    return abs(float(a) - float(b)) <= tol


def validate_graded(g: GradedLieAlgebra, tol=1e-9) -> GradedVerdict:
    """Check antisymmetry, grading, Jacobi and generation by the first stratum."""
    n = g.dim
    c = g.constants
    for (i, j, k), v in c.items():
        if not _close(v, -c.get((j, i, k), 0), tol):
            return GradedVerdict(False, "antisymmetry", (i, j, k))
    for (i, j, k), v in c.items():
        target = g.weights[i] + g.weights[j]
        if target > g.step or g.weights[k] != target:
            return GradedVerdict(False, "grading", (i, j, k))
    # Jacobi on basis triples
    for i in range(n):
        for j in range(i + 1, n):
            for l in range(j + 1, n):
                ei, ej, el = (_unit(n, x) for x in (i, j, l))
                s1 = g.bracket(ei, g.bracket(ej, el))
                s2 = g.bracket(ej, g.bracket(el, ei))
                s3 = g.bracket(el, g.bracket(ei, ej))
                for k in range(n):
                    if not _close(s1[k] + s2[k] + s3[k], 0, tol):
                        return GradedVerdict(False, "jacobi", (i, j, l))
    # generation: brackets of stratum 1 with stratum s span stratum s+1
    for s in range(1, g.step):
        lower = g.stratum_indices(1)
        prev = g.stratum_indices(s)
        nxt = g.stratum_indices(s + 1)
        rows = []
        for a in lower:
            for b in prev:
                v = g.bracket(_unit(n, a), _unit(n, b))
                rows.append([v[k] for k in nxt])
        if g.exact:
            r = exact_rank(rows) if rows else 0
        else:
            r = np.linalg.matrix_rank(np.array(rows, dtype=float), tol=1e-8) if rows else 0
        if r < len(nxt):
            return GradedVerdict(False, "stratification", (s + 1,))
    return GradedVerdict(True)


def _unit(n, i):
    v = [0] * n
    v[i] = 1
    return v


# ---------------------------------------------------------------------------
# graded maps and basis changes


class GradedMap:
    """Block-diagonal invertible matrix respecting a stratification."""

    def __init__(self, matrix, strata_dims):
        self.strata_dims = tuple(strata_dims)
        self.matrix = [list(r) for r in matrix]
        n = sum(self.strata_dims)
        if len(self.matrix) != n or any(len(r) != n for r in self.matrix):
            raise ValueError("matrix shape does not match strata")
        w = [s for s, m in enumerate(self.strata_dims) for _ in range(m)]
        for i in range(n):
            for j in range(n):
                if w[i] != w[j] and self.matrix[i][j]:
                    raise ValueError(f"entry ({i},{j}) couples different strata")
        self.exact = all(_is_exact(x) for r in self.matrix for x in r)
        start = 0
        for m in self.strata_dims:
            block = [r[start:start + m] for r in self.matrix[start:start + m]]
            if self.exact:
                if exact_rank(block) < m:
                    raise SingularBlock(f"block at {start} is singular")
            elif np.linalg.matrix_rank(np.array(block, dtype=float)) < m:
                raise SingularBlock(f"block at {start} is singular")
            start += m

    @classmethod
    def identity(cls, strata_dims):
        n = sum(strata_dims)
        return cls([[Fraction(int(i == j)) for j in range(n)] for i in range(n)], strata_dims)

    def inverse_matrix(self):
        if self.exact:
            return inverse([[Fraction(x) for x in r] for r in self.matrix])
        return np.linalg.inv(np.array(self.matrix, dtype=float)).tolist()

    def compose(self, other):
        """self after other."""
        a, b = self.matrix, other.matrix
        n = len(a)
        m = [[sum((a[i][k] * b[k][j] for k in range(n)), 0) for j in range(n)] for i in range(n)]
        return GradedMap(m, self.strata_dims)

    def to_json(self):
        def enc(x):
            return str(Fraction(x)) if _is_exact(x) else float(x)
        return [[enc(x) for x in r] for r in self.matrix]


def change_basis(g: GradedLieAlgebra, A: GradedMap) -> GradedLieAlgebra:
    """Push-forward (A_* c)(u, v) = A c(A^-1 u, A^-1 v)."""
    if A.strata_dims != g.strata_dims:
        raise ValueError("graded map and algebra have different strata")
    n = g.dim
    exact = A.exact and g.exact
    a = A.matrix
    b = A.inverse_matrix()
    cols = [[b[r][i] for r in range(n)] for i in range(n)]  # A^-1 e_i
    consts = {}
    for i in range(n):
        for j in range(i + 1, n):
            v = g.bracket(cols[i], cols[j])
            w = [sum((a[k][r] * v[r] for r in range(n)), 0) for k in range(n)]
            for k, x in enumerate(w):
                if not exact and abs(x) < 1e-15:
                    continue
                if x:
                    consts[(i, j, k)] = x
                    consts[(j, i, k)] = -x
    return GradedLieAlgebra(g.strata_dims, consts, g.name)


def rebase(g: GradedLieAlgebra, columns) -> GradedLieAlgebra:
    """Constants of g in the basis whose i-th vector has coordinates ``columns[i]``."""
    n = g.dim
    p = [[columns[j][i] for j in range(n)] for i in range(n)]
    if all(_is_exact(x) for r in p for x in r):
        pinv = inverse([[Fraction(x) for x in r] for r in p])
    else:
        pinv = np.linalg.inv(np.array(p, dtype=float)).tolist()
    return change_basis(g, GradedMap(pinv, g.strata_dims))


def word_value(g, generators, word):
    """Value of the left-normed word over the given V1 vectors."""
    v = list(generators[word[-1]])
    for a in reversed(word[:-1]):
        v = g.bracket(list(generators[a]), v)
    return v


def word_basis(g: GradedLieAlgebra, generators=None, words=None):
    """Graded basis of iterated brackets of ``generators``.

    When ``words`` is None, left-normed words are chosen greedily in
    lexicographic order.  ``words`` entries may be (sign, word) pairs.
    Returns (words, columns).
    """
    d = g.strata_dims[0]
    n = g.dim
    if generators is None:
        generators = [_unit(n, i) for i in range(d)]
    if words is not None:
        cols = []
        for entry in words:
            if len(entry) == 2 and isinstance(entry[1], tuple):
                sign, w = entry
            else:
                sign, w = 1, tuple(entry)
            cols.append([sign * x for x in word_value(g, generators, w)])
        return list(words), cols
    chosen, cols = [], []
    exact = g.exact and all(_is_exact(x) for v in generators for x in v)
    for s in range(1, g.step + 1):
        idx = g.stratum_indices(s)
        if exact:
            basis = EchelonBasis(len(idx))
        else:
            fbasis = np.zeros((0, len(idx)))
        for w in product(range(d), repeat=s):
            if s >= 2 and w[-1] == w[-2]:
                continue
            v = word_value(g, generators, w)
            part = [v[k] for k in idx]
            if exact:
                ok = basis.add(part)
                full = len(basis) == len(idx)
            else:
                cand = np.vstack([fbasis, np.array(part, dtype=float)])
                ok = np.linalg.matrix_rank(cand, tol=1e-9 * max(1.0, np.abs(cand).max())) > fbasis.shape[0]
                if ok:
                    fbasis = cand
                full = fbasis.shape[0] == len(idx)
            if ok:
                chosen.append(w)
                cols.append(v)
            if full:
                break
    if len(cols) != n:
        raise SingularBlock("generators do not span the algebra")
    return chosen, cols


# ---------------------------------------------------------------------------
# invariants


@dataclass(frozen=True)
class Fingerprint:
    strata_dims: tuple
    lower_central: tuple
    pairing_rank: int
    center_dim: int

    def to_json(self):
        return {"strata": list(self.strata_dims), "lower_central": list(self.lower_central),
                "pairing_rank": self.pairing_rank, "center_dim": self.center_dim}


def _rank(rows, exact):
    if not rows or not rows[0]:
        return 0
    if exact:
        return exact_rank(rows)
    a = np.array(rows, dtype=float)
    return int(np.linalg.matrix_rank(a, tol=1e-8 * max(1.0, np.abs(a).max())))


def invariant_prescreen(g: GradedLieAlgebra) -> Fingerprint:
    """Cheap isomorphism invariants; different fingerprints certify non-isomorphism."""
    n = g.dim
    exact = g.exact
    units = [_unit(n, i) for i in range(n)]
    # lower central series: g^1 = g, g^{k+1} = [g, g^k]
    lcs = [n]
    span = units
    while True:
        rows = [g.bracket(u, v) for u in units for v in span]
        r = _rank(rows, exact)
        if r == 0:
            lcs.append(0)
            break
        # basis of the new ideal as coordinate rows
        if exact:
            from .linalg import rref
            m, piv = rref(rows)
            span = m[:len(piv)]
        else:
            _, s, vt = np.linalg.svd(np.array(rows, dtype=float))
            span = vt[:r].tolist()
        lcs.append(r)
        if r == lcs[-2]:
            break
    v1 = g.stratum_indices(1)
    v2 = g.stratum_indices(2) if g.step >= 2 else []
    pairing = [[g.bracket(units[a], units[b])[k] for b in v1 for k in v2] for a in v1]
    prank = _rank(pairing, exact) if v2 else 0
    ad_rows = [[g.bracket(units[i], units[j])[k] for j in range(n) for k in range(n)]
               for i in range(n)]
    # center = kernel of x -> ad_x
    ad_t = [list(col) for col in zip(*ad_rows)]
    center = n - _rank(ad_t, exact)
    return Fingerprint(g.strata_dims, tuple(lcs), prank, center)


# ---------------------------------------------------------------------------
# isomorphism search


class Verdict(str, enum.Enum):
    TRUE = "True"
    CERTIFIED_FALSE = "CertifiedFalse"
    HEURISTIC_FALSE = "HeuristicFalse"


@dataclass
class IsoResult:
    verdict: Verdict
    residual: float
    witness: GradedMap | None = None
    exact: bool = False
    fingerprint1: Fingerprint | None = None
    fingerprint2: Fingerprint | None = None
    restarts_used: int = 0
    info: dict = field(default_factory=dict)

    def __bool__(self):
        return self.verdict is Verdict.TRUE

    def to_json(self):
        out = {"verdict": self.verdict.value, "residual": float(self.residual),
               "exact": self.exact,
               "fingerprint1": self.fingerprint1.to_json() if self.fingerprint1 else None,
               "fingerprint2": self.fingerprint2.to_json() if self.fingerprint2 else None}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


class _IsoProblem:
    """Residual of A_* c1 against c2 with A generated by its first block."""

    def __init__(self, g1, g2):
        self.g1, self.g2 = g1, g2
        self.d = g1.strata_dims[0]
        self.n = g1.dim
        self.words, cols = word_basis(g1)
        self.w1 = np.array(cols, dtype=float).T
        self.w1inv = np.linalg.inv(self.w1)
        self.c1 = g1.tensor()
        self.c2 = g2.tensor()
        self.c2n = self.c2 / max(np.linalg.norm(self.c2), 1e-300)
        iu = np.triu_indices(self.n, 1)
        self.iu = iu

    def _bracket2(self, u, v):
        return np.einsum("i,j,ijk->k", u, v, self.c2)

    def matrix(self, a1):
        gens = np.zeros((self.d, self.n))
        gens[:, :self.d] = a1.T
        cols = []
        for w in self.words:
            v = gens[w[-1]]
            for a in reversed(w[:-1]):
                v = self._bracket2(gens[a], v)
            cols.append(v)
        return np.array(cols).T @ self.w1inv

    def pushed(self, a):
        b = np.linalg.inv(a)
        t = np.tensordot(b, self.c1, axes=([0], [0]))      # i b c
        t = np.tensordot(t, b, axes=([1], [0]))            # i c j
        t = np.tensordot(t, a, axes=([1], [1]))            # i j k
        return t

    def residual_vector(self, x):
        a1 = x.reshape(self.d, self.d)
        bad = np.full(len(self.iu[0]) * self.n, 10.0)
        with np.errstate(all="ignore"):
            a = self.matrix(a1)
            try:
                t = self.pushed(a)
            except np.linalg.LinAlgError:
                return bad
        nt = np.linalg.norm(t)
        if not np.isfinite(nt) or nt == 0 or nt > 1e12:
            return bad
        diff = t / nt - self.c2n
        return diff[self.iu].ravel()

    def residual(self, x):
        return float(np.linalg.norm(self.residual_vector(x)))

    def witness(self, x):
        """Graded matrix, rescaled so that A_* c1 == c2 (not only up to scale)."""
        a = self.matrix(x.reshape(self.d, self.d))
        t = self.pushed(a)
        lam = np.linalg.norm(t) / max(np.linalg.norm(self.c2), 1e-300)
        # (mu I)_* c = c / mu
        return lam * a


def _optimize(problem, x0, fixed=None, max_nfev=600, anchor=None, weight=0.0):
    """Least squares over the free entries of the first block.

    With ``anchor`` a Tikhonov term ``weight * (x - anchor)`` is appended,
    which selects a witness close to the anchor.
    """
    fixed = fixed or {}
    free = [i for i in range(x0.size) if i not in fixed]
    base = x0.astype(float).copy()
    for i, v in fixed.items():
        base[i] = float(v)
    if not free:
        return base, problem.residual(base)

    def fun(z):
        x = base.copy()
        x[free] = z
        r = problem.residual_vector(x)
        if anchor is not None:
            r = np.concatenate([r, weight * (z - anchor[free])])
        return r

    try:
        sol = least_squares(fun, base[free], method="trf", xtol=1e-15, ftol=1e-15,
                            gtol=1e-15, max_nfev=max_nfev)
        z = sol.x
    except (ValueError, np.linalg.LinAlgError):
        z = base[free]
    x = base.copy()
    x[free] = z
    return x, problem.residual(x)


_SIMPLE_DENOMS = (1, 2, 3, 4, 5, 6, 8, 10, 12, 16)


def _rational_candidates(x, limit=6):
    cands = []
    for q in _SIMPLE_DENOMS:
        f = Fraction(round(x * q), q)
        cands.append((abs(float(f) - x), q, f))
    cands.sort()
    out = []
    for _, _, f in cands:
        if f not in out:
            out.append(f)
        if len(out) == limit:
            break
    if limit > 1:
        # entries forced by the others can have any denominator
        f = Fraction(x).limit_denominator(10 ** 4)
        if f not in out:
            out.append(f)
    return out


def _dilate_to_unit(problem, x):
    """Rescale the first block by a power of two (a dilation, so the
    normalized residual is unchanged) to bring its entries near 1."""
    m = np.abs(x).max()
    if m == 0:
        return x
    return x / 2.0 ** np.round(np.log2(m))


def _exact_from_block(problem, fixed):
    g1, g2 = problem.g1, problem.g2
    d, n = problem.d, problem.n
    a1 = [[fixed[r * d + c] for c in range(d)] for r in range(d)]
    pad = [Fraction(0)] * (n - d)
    gens = [[a1[r][i] for r in range(d)] + pad for i in range(d)]
    try:
        _, cols2 = word_basis(g2, gens, problem.words)
        _, cols1 = word_basis(g1, None, problem.words)
        w1 = [[cols1[j][i] for j in range(n)] for i in range(n)]
        w2 = [[cols2[j][i] for j in range(n)] for i in range(n)]
        w1inv = inverse(w1)
        a = [[sum((w2[i][k] * w1inv[k][j] for k in range(n)), Fraction(0)) for j in range(n)]
             for i in range(n)]
        amap = GradedMap(a, g1.strata_dims)
    except (SingularBlock, ZeroDivisionError):
        return None
    return amap if change_basis(g1, amap) == g2 else None


def _exact_witness(problem, x, tol, budget=400):
    """Snap the first block to simple rationals one entry at a time,
    re-solving for the remaining entries after each snap."""
    x = _dilate_to_unit(problem, x)
    size = x.size
    calls = [0]

    def snap(x, fixed):
        if len(fixed) == size:
            return _exact_from_block(problem, fixed)
        # entries nearest to 0 first, then nearest to a simple rational
        order = sorted((i for i in range(size) if i not in fixed),
                       key=lambda i: (abs(x[i]) > 1e-6,
                                      abs(float(_rational_candidates(x[i], 1)[0]) - x[i])))
        for i in order[:2]:
            for cand in _rational_candidates(x[i], 3):
                if calls[0] >= budget:
                    return None
                calls[0] += 1
                trial = dict(fixed)
                trial[i] = cand
                xt, _ = _optimize(problem, x, trial, max_nfev=200, anchor=x, weight=1e-3)
                xt, r = _optimize(problem, xt, trial, max_nfev=200)
                if r < tol:
                    out = snap(xt, trial)
                    if out is not None:
                        return out
        return None

    return snap(x, {})


def stratified_iso_search(g1: GradedLieAlgebra, g2: GradedLieAlgebra, restarts: int = 50,
                          tol: float = 1e-8, seed: int = 0, polish: bool = True) -> IsoResult:
    """Search for a graded isomorphism g1 -> g2.

    Minimizes the distance between unit-normalized constant tensors over
    graded maps determined by their action on the first stratum.  A True
    verdict carries a witness; False verdicts are certified only when the
    fingerprints differ.
    """
    if g1.strata_dims != g2.strata_dims:
        return IsoResult(Verdict.CERTIFIED_FALSE, float("inf"), info={"reason": "strata"})
    if not validate_graded(g1) or not validate_graded(g2):
        raise ValueError("both algebras must pass validate_graded")
    f1, f2 = invariant_prescreen(g1), invariant_prescreen(g2)
    if f1 != f2:
        return IsoResult(Verdict.CERTIFIED_FALSE, float("inf"), fingerprint1=f1,
                         fingerprint2=f2, info={"reason": "fingerprint"})
    problem = _IsoProblem(g1, g2)
    d = problem.d
    rng = np.random.default_rng(seed)
    eye = np.eye(d).ravel()
    good = []
    best_x, best_r, used = None, float("inf"), 0
    for k in range(max(1, restarts)):
        if k == 0:
            # identity-anchored start: prefers witnesses with simple entries
            x0, _ = _optimize(problem, eye, anchor=eye, weight=1e-2)
        else:
            x0 = rng.normal(size=d * d)
        x, r = _optimize(problem, x0)
        used = k + 1
        if r < best_r:
            best_x, best_r = x, r
        if r < tol:
            good.append(x)
        if best_r < tol * 1e-3 and (len(good) >= 3 or not polish):
            break
    if best_r >= tol:
        return IsoResult(Verdict.HEURISTIC_FALSE, best_r, fingerprint1=f1, fingerprint2=f2,
                         restarts_used=used)
    witness = None
    exact = False
    if polish and g1.exact and g2.exact:
        for x in good:
            witness = _exact_witness(problem, x, tol)
            if witness is not None:
                break
        exact = witness is not None
    if witness is None:
        witness = GradedMap(problem.witness(best_x).tolist(), g1.strata_dims)
    residual = 0.0 if exact else best_r
    return IsoResult(Verdict.TRUE, residual, witness, exact, f1, f2, used)


# ---------------------------------------------------------------------------
# named algebras


def abelian(n):
    return GradedLieAlgebra((n,), {}, f"R^{n}")


def heisenberg(k=1):
    """Heisenberg algebra of dimension 2k+1: [e_{2i}, e_{2i+1}] = e_{2k}."""
    rel = {(2 * i, 2 * i + 1): {2 * k: Fraction(1)} for i in range(k)}
    return GradedLieAlgebra.from_relations((2 * k, 1), rel, f"heis{k}")


def direct_sum(g, h, name=""):
    """Graded direct sum, basis ordered stratum by stratum."""
    step = max(g.step, h.step)
    gd = list(g.strata_dims) + [0] * (step - g.step)
    hd = list(h.strata_dims) + [0] * (step - h.step)
    strata = [a + b for a, b in zip(gd, hd)]
    # new index of the old basis vectors
    gmap, hmap = {}, {}
    pos = 0
    for s in range(step):
        for i in range(gd[s]):
            gmap[sum(gd[:s]) + i] = pos
            pos += 1
        for i in range(hd[s]):
            hmap[sum(hd[:s]) + i] = pos
            pos += 1
    consts = {}
    for (i, j, k), c in g.constants.items():
        consts[(gmap[i], gmap[j], gmap[k])] = c
    for (i, j, k), c in h.constants.items():
        consts[(hmap[i], hmap[j], hmap[k])] = c
    strata = [m for m in strata if m]
    return GradedLieAlgebra(strata, consts, name or f"{g.name}+{h.name}")


def symbol0_algebra(x1, x2=0, x3=0):
    """Tangent algebra of example7 at (x1, x2, x3, ...) in the basis of SYMBOL0_WORDS."""
    x1, x2, x3 = (Fraction(v) if not isinstance(v, float) else v for v in (x1, x2, x3))
    rel = {
        (0, 1): {3: 1}, (1, 2): {4: 1}, (0, 2): {5: -1},
        (0, 4): {6: -1}, (1, 5): {6: 2 * x1}, (2, 3): {6: 1 - 2 * x1},
        (0, 3): {6: -2 * x3}, (0, 5): {6: 2 * x2},
    }
    return GradedLieAlgebra.from_relations((3, 3, 1), rel, "symbol0")


# bracket words (E_1, ..., E_7) realizing the basis of symbol0_algebra
SYMBOL0_WORDS = ((0,), (1,), (2,), (0, 1), (1, 2), (2, 0), (0, 2, 1))


def symbol0_normalizer(x1, x2=0, x3=0) -> GradedMap:
    """Graded map taking symbol0_algebra(x1, x2, x3) to e147_family(2 x1).

    New first stratum e1 = E1 + a E2 + b E3, e2 = E2, e3 = E3 with a, b the
    roots of 2 x2 + a (1 + 2 x1) = 0 and -2 x3 + b (2 - 2 x1) = 0; the upper
    strata follow from the brackets.
    """
    x1, x2, x3 = (Fraction(v) for v in (x1, x2, x3))
    a = -2 * x2 / (1 + 2 * x1)
    b = x3 / (1 - x1)
    cols = [[1, a, b, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0, 0],
            [0, 0, 0, 1, -b, 0, 0], [0, 0, 0, 0, 1, 0, 0], [0, 0, 0, 0, -a, 1, 0],
            [0, 0, 0, 0, 0, 0, 1]]
    m = [[Fraction(cols[j][i]) for j in range(7)] for i in range(7)]
    return GradedMap(inverse(m), (3, 3, 1))


def e147_family(xi):
    """The algebra g^xi (147E): symbol0 with x2 = x3 = 0 and xi = 2 x1."""
    if not isinstance(xi, float):
        xi = Fraction(xi)
    rel = {
        (0, 1): {3: 1}, (1, 2): {4: 1}, (0, 2): {5: -1},
        (0, 4): {6: -1}, (1, 5): {6: xi}, (2, 3): {6: 1 - xi},
    }
    return GradedLieAlgebra.from_relations((3, 3, 1), rel, f"g^{xi}")


_ORBIT_MAPS = (
    lambda x: x,
    lambda x: 1 / x,
    lambda x: 1 - x,
    lambda x: (-1 + x) / x,
    lambda x: -1 / (-1 + x),
    lambda x: x / (-1 + x),
)


def e147_orbit(xi):
    """Parameters eta with g^eta isomorphic to g^xi."""
    if xi == 0 or xi == 1:
        raise ValueError("orbit undefined at xi in {0, 1}")
    if isinstance(xi, float):
        vals = []
        for f in _ORBIT_MAPS:
            v = f(xi)
            if not any(abs(v - u) <= 1e-12 * max(1.0, abs(u)) for u in vals):
                vals.append(v)
        return set(vals)
    xi = Fraction(xi)
    return {f(xi) for f in _ORBIT_MAPS}


def in_e147_orbit(eta, xi, tol=1e-12):
    return any(abs(float(eta) - float(v)) <= tol * max(1.0, abs(float(v))) for v in e147_orbit(xi))
