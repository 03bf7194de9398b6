"""Cantor sets cut out of a cube patchwork, their cube trees, and the
embedding of the Cantor set into a sub-Riemannian manifold by transferred
controls.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator

from .carnot import CarnotGroup, ControlSignal
from .ccmetric import (EstimateConstants, TangentModel, _compiled, _rk4, cc_distance_bounds,
                       integrate_controls)
from .errors import EmptyCantor, NilrectError
from .nilpot import privileged_coordinates
from .patchwork import CubicalPatchwork, _min_dist
from .symvec import Frame

log = logging.getLogger(__name__)

__all__ = [
    "CantorComplex", "build_cantor", "cantor_measure_report", "TreeMaps", "tree_maps",
    "check_biholder", "EmbeddingReport", "build_embedding", "default_r",
    "coverage_experiment", "CoverageReport", "decay_check", "Embedding",
    "strictly_increasing", "check_tree", "distortion_stability", "CantorEmbedder",
]


@dataclass
class CantorComplex:
    patchwork: CubicalPatchwork
    root: int
    tau: float
    s: int
    depth: int
    alive: list              # alive[j]: boolean mask of K_j over the cloud, j = 0..depth+1
    retained: list = field(default_factory=list)   # retained[k]: cube ids at level k meeting K

    @property
    def K(self):
        return self.alive[-1]

    def width(self, k):
        return self.tau * 2.0 ** (-k / (2 * self.s)) * self.patchwork.radius(k)

    def mass(self, j):
        return self.patchwork.cloud.cell_volume * int(self.alive[j].sum())

    @property
    def retained_fraction(self):
        return float(Fraction(int(self.alive[-1].sum()), int(self.alive[0].sum())))

    def decrements(self):
        return [self.mass(j) - self.mass(j + 1) for j in range(len(self.alive) - 1)]

    def to_json(self):
        return {"root": self.root, "tau": self.tau, "s": self.s, "depth": self.depth,
                "retained_fraction": self.retained_fraction,
                "masses": [str(self.mass(j)) for j in range(len(self.alive))],
                "decrements": [str(d) for d in self.decrements()],
                "retained_cubes": [len(r) for r in self.retained]}


def build_cantor(pw: CubicalPatchwork, root: int = 0, tau: float = 0.05, s: int = 2,
                 depth: int | None = None) -> CantorComplex:
    """Trim strips of width tau 2^{-k/2s} r_k around every level-k cube
    inside the level-0 cube ``root``, for k = 0..depth (r_k is the cube
    radius base_scale 2^-k).

    Inside the root, the union of the strips of all level-k cubes equals the
    set of points within the width of their own cube's complement, so only
    inner distances are computed.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if s < 1:
        raise ValueError("s must be >= 1")
    depth = pw.depth if depth is None else depth
    if depth > pw.depth:
        raise ValueError(f"depth {depth} exceeds patchwork depth {pw.depth}")
    cloud = pw.cloud
    cur = pw.labels[0] == root
    if not cur.any():
        raise ValueError(f"no level-0 cube {root}")
    cc = CantorComplex(pw, root, float(tau), int(s), depth, [cur.copy()])
    for k in range(depth + 1):
        w = cc.width(k)
        nxt = cur.copy()
        if w > 0:
            idx = np.flatnonzero(cur)
            d = _min_dist(cloud, idx, w, exclude_label=pw.labels[k])
            nxt[idx[d < w]] = False
        if not nxt.any():
            raise EmptyCantor(f"K is empty after trimming level {k}; try a smaller tau")
        cc.alive.append(nxt)
        cur = nxt
    K = cc.K
    cc.retained = [np.unique(pw.labels[k][K]) for k in range(depth + 1)]
    return cc


def cantor_measure_report(pw: CubicalPatchwork, taus, s=2, depth=None, root=0,
                          a0=None, eta=None):
    """Retained mass and per-level decrements for each tau, compared with
    the geometric bound a0 tau^eta 2^{-k eta / 2s} mu(Q0)."""
    a0 = pw.constants.get("a0") if a0 is None else a0
    eta = pw.constants.get("eta") if eta is None else eta
    rows = []
    for tau in taus:
        if tau == 0:
            n = (pw.depth if depth is None else depth) + 1
            rows.append({"tau": 0.0, "retained_fraction": 1.0, "decrements": [0.0] * n,
                         "bound": [0.0] * n, "within_bound": [True] * n})
            continue
        cc = build_cantor(pw, root, tau, s, depth)
        m0 = float(cc.mass(0))
        dec = [float(d) for d in cc.decrements()]
        bound = [a0 * tau ** eta * 2.0 ** (-k * eta / (2 * s)) * m0 if a0 is not None else float("nan")
                 for k in range(len(dec))]
        rows.append({"tau": float(tau), "retained_fraction": cc.retained_fraction,
                     "decrements": dec, "bound": bound,
                     "within_bound": [d <= b * (1 + 1e-12) for d, b in zip(dec, bound)]})
    rate = 2.0 ** (-eta / (2 * s)) if eta is not None and np.isfinite(eta) else float("nan")
    return {"rows": rows, "a0": a0, "eta": eta, "s": s, "predicted_rate": rate}


def decay_check(decrements, rate, factor=2.0):
    """Consecutive ratios of nonzero decrements within ``factor`` of ``rate``.

    Returns (ok, ratios, n_nonzero).  Fewer than two nonzero decrements
    leave nothing to measure and count as a failure.
    """
    dec = [d for d in decrements if d > 0]
    if len(dec) < 2 or not np.isfinite(rate):
        return False, [], len(dec)
    ratios = [b / a for a, b in zip(dec, dec[1:])]
    ok = all(rate / factor <= r <= rate * factor for r in ratios)
    return ok, ratios, len(dec)


# ---------------------------------------------------------------------------
# tree of retained cubes


@dataclass
class TreeMaps:
    cc: CantorComplex
    ends: np.ndarray          # ends[e, k]: level-k cube id of end e, k = 0..depth
    anchors: list             # anchors[k]: {cube id: cloud index of A(v_Q)}

    @property
    def depth(self):
        return self.cc.depth

    def rho(self, e, i):
        return int(self.ends[e, i])

    def split_level(self, e1, e2):
        """i(x, y): deepest level where the chains agree (depth + 1 if equal)."""
        same = self.ends[e1] == self.ends[e2]
        if same.all():
            return self.depth + 1
        return int(np.argmin(same)) - 1

    def tree_distance(self, e1, e2):
        """Ultrametric on ends: 2^{-i + 1}; 0 for equal ends."""
        if e1 == e2:
            return 0.0
        return 2.0 ** (-self.split_level(e1, e2) + 1)

    @staticmethod
    def root_distance(level):
        """d_T(v0, v) for v at ``level``: edges have length 2^-i, so 1 - 2^-level."""
        return 1.0 - 2.0 ** -level

    def A(self, k, cube):
        return self.cc.patchwork.cloud.points[self.anchors[k][int(cube)]]

    def Abar(self, e):
        return self.A(self.depth, self.ends[e, self.depth])

    def to_json(self):
        return {"n_ends": len(self.ends), "depth": self.depth,
                "ends": self.ends.tolist()}


def tree_maps(cc: CantorComplex) -> TreeMaps:
    """Ends are the chains of retained cubes down to the deepest level.
    A(v_Q) is the cube's net center when it survives in K, otherwise the K
    point of Q nearest to it (ties by index)."""
    pw = cc.patchwork
    cloud = pw.cloud
    K = cc.K
    anchors = []
    for k in range(cc.depth + 1):
        amap = {}
        for c in cc.retained[k]:
            ctr = pw.centers[k][c]
            if K[ctr]:
                amap[int(c)] = int(ctr)
                continue
            mem = np.flatnonzero((pw.labels[k] == c) & K)
            d = cloud.upper(cloud.points[ctr], cloud.points[mem])
            amap[int(c)] = int(mem[np.lexsort((mem, d))[0]])
        anchors.append(amap)
    deepest = cc.retained[cc.depth]
    ends = np.empty((len(deepest), cc.depth + 1), dtype=int)
    ends[:, cc.depth] = deepest
    for k in range(cc.depth, 0, -1):
        ends[:, k - 1] = np.asarray(pw.parents[k])[ends[:, k]]
    return TreeMaps(cc, ends, anchors)


def _sample_pairs(n, samples, rng):
    if n < 2:
        return np.zeros((0, 2), dtype=int)
    total = n * (n - 1) // 2
    if total <= samples:
        i, j = np.triu_indices(n, 1)
        return np.stack([i, j], axis=1)
    pairs = set()
    while len(pairs) < samples:
        a, b = rng.integers(0, n, size=2)
        if a != b:
            pairs.add((min(a, b), max(a, b)))
    return np.array(sorted(pairs))


def check_biholder(tm: TreeMaps, samples=500, seed=0):
    """Check tau/8 d^{1+1/2s} <= d_G(Abar x, Abar y) <= 2 C2 d on end pairs,
    in units of the base cube radius, with the resolution slack C2 r_depth
    on both sides."""
    cc = tm.cc
    pw = cc.patchwork
    cloud = pw.cloud
    c2 = pw.constants["C2"]
    unit = pw.base_scale
    slack = c2 * pw.radius(cc.depth)
    rng = np.random.default_rng(seed)
    pairs = _sample_pairs(len(tm.ends), samples, rng)
    rows, fails = [], []
    for e1, e2 in pairs:
        dt = tm.tree_distance(e1, e2)
        lo, hi = cloud.bounds(tm.Abar(e1), tm.Abar(e2))
        lo, hi = float(lo), float(hi)
        low_bound = unit * cc.tau / 8 * dt ** (1 + 1 / (2 * cc.s))
        up_bound = unit * 2 * c2 * dt
        ok_up = lo <= up_bound + slack
        ok_low = hi >= low_bound - slack
        ok_low_strict = hi >= low_bound
        row = {"e1": int(e1), "e2": int(e2), "d_T": dt, "dG_lo": lo, "dG_hi": hi,
               "lower_bound": low_bound, "upper_bound": up_bound,
               "ok_lower": bool(ok_low), "ok_upper": bool(ok_up),
               "ok_lower_without_slack": bool(ok_low_strict)}
        rows.append(row)
        if not (ok_up and ok_low):
            fails.append(row)
    n = len(rows)
    return {"pairs": n, "violations": len(fails), "pass_rate": 1.0 if n == 0 else 1 - len(fails) / n,
            "strict_lower_pass_rate": 1.0 if n == 0 else sum(r["ok_lower_without_slack"] for r in rows) / n,
            "slack": slack, "worst_lower_margin": min((r["dG_hi"] - r["lower_bound"] for r in rows), default=0.0),
            "worst_upper_margin": min((r["upper_bound"] - r["dG_lo"] for r in rows), default=0.0),
            "failures": fails[:50], "rows": rows}


def check_tree(tm: TreeMaps, samples=500, seed=0):
    """Ultrametric inequality on sampled end triples and the edge bound
    d_G(A(v_Q), A(v_P(Q))) <= 2 C2 d_T (in base-scale units) on every edge."""
    cc = tm.cc
    pw = cc.patchwork
    cloud = pw.cloud
    rng = np.random.default_rng(seed)
    n = len(tm.ends)
    bad_ultra = 0
    if n >= 3:
        for x, y, z in rng.integers(0, n, size=(samples, 3)):
            if tm.tree_distance(x, z) > max(tm.tree_distance(x, y), tm.tree_distance(y, z)):
                bad_ultra += 1
    bad_edges, worst = [], 0.0
    c2 = pw.constants["C2"]
    for k in range(1, cc.depth + 1):
        kids = np.asarray(cc.retained[k])
        par = np.asarray(pw.parents[k])[kids]
        a = cloud.points[[tm.anchors[k][int(c)] for c in kids]]
        b = cloud.points[[tm.anchors[k - 1][int(q)] for q in par]]
        d = np.atleast_1d(cloud.upper(a, b))
        bound = 2 * c2 * pw.base_scale * 2.0 ** -k
        worst = max(worst, float(np.max(d / bound)) if len(d) else 0.0)
        for c, dd in zip(kids[d > bound], d[d > bound]):
            bad_edges.append({"cube": f"{k}:{int(c)}", "d": float(dd), "bound": bound})
    return {"ultrametric_violations": bad_ultra, "edge_violations": len(bad_edges),
            "worst_edge_ratio": worst, "edges": bad_edges[:50]}


# ---------------------------------------------------------------------------
# embedding


def default_r(constants: EstimateConstants, tau, c2, s):
    """Largest r with 2r < L and C r^{1/s} <= tau / (80 C2), halved once."""
    r = min(constants.L / 2, (tau / (80 * c2 * constants.C)) ** s)
    return r / 2


@dataclass
class EmbeddingReport:
    params: dict
    pairs: list
    anchor_error: float
    incomplete: int
    warnings: list
    embedding: object = None

    def distortions(self):
        return np.array([p["distortion"] for p in self.pairs if p.get("distortion") is not None])

    def summary(self):
        dist = self.distortions()
        fac2 = [p["factor2_ok"] for p in self.pairs if p.get("factor2_ok") is not None]
        if len(dist) == 0:
            return {"pairs": 0}
        lip = [p["lipE_ok"] for p in self.pairs if "lipE_ok" in p]
        return {"pairs": len(self.pairs), "complete": int(len(dist)),
                "lipE_pass_rate": float(np.mean(lip)) if lip else float("nan"),
                "distortion_min": float(dist.min()), "distortion_max": float(dist.max()),
                "distortion_spread": float(dist.max() / dist.min()),
                "factor2_pass_rate": float(np.mean(fac2)) if fac2 else float("nan"),
                "anchor_error": self.anchor_error, "incomplete": self.incomplete}

    def to_json(self):
        return {"params": self.params, "summary": self.summary(), "warnings": self.warnings,
                "pairs": self.pairs}

    def to_csv(self):
        keys = ["e1", "e2", "d_T", "dG_lo", "dG_hi", "dM_lo", "dM_hi"]
        lines = [",".join(keys)]
        for p in self.pairs:
            lines.append(",".join(repr(p.get(k)) for k in keys))
        return "\n".join(lines) + "\n"


def _edge_controls(group: CarnotGroup, a, b, lam, duration, segments):
    """Controls running the dilated geodesic from a to b in the given time."""
    ctrl, _ = group.group_geodesic(group.dilation(lam, a), group.dilation(lam, b),
                                   segments=segments)
    if not len(ctrl):
        return ControlSignal.empty(group.rank)
    # geodesic controls live on [0, 1]; compress them to the edge duration
    return ControlSignal(ctrl.durations * duration, ctrl.values / duration)


def _density_end(tm: TreeMaps):
    """End whose deepest cube keeps the most K mass (ties by index)."""
    pw = tm.cc.patchwork
    K = tm.cc.K
    lab = pw.labels[tm.depth]
    counts = np.bincount(lab[K], minlength=pw.n_cubes(tm.depth))
    scores = counts[tm.ends[:, tm.depth]]
    return int(np.argmax(scores))


class Embedding:
    """E = delta_lam o Abar and F = endpoint in M of the tree-path controls
    started at q0, evaluated lazily per end with shared prefixes cached."""

    def __init__(self, tm: TreeMaps, group: CarnotGroup, frameM: Frame, p, r,
                 segments=8, step=None, nsub=8):
        self.tm, self.group, self.frameM = tm, group, frameM
        pw = tm.cc.patchwork
        self.r = float(r)
        self.lam = self.r / (2 * pw.constants["C2"] * pw.base_scale)
        self.segments, self.step, self.nsub = segments, step, nsub
        self.p = np.array([float(x) for x in p])
        self._edge, self._pos = {}, {}
        self.j0 = _density_end(tm)
        back = self.controls(self.j0).reversed()
        self.q0 = integrate_controls(frameM, self.p, back, step=step).endpoint if len(back) else self.p
        self._pos[(0, int(tm.ends[self.j0, 0]))] = self.q0

    def edge(self, k, c):
        """Controls along the tree edge into level-k cube c (duration 2^-k)."""
        key = (k, int(c))
        if key not in self._edge:
            tm = self.tm
            par = int(tm.cc.patchwork.parents[k][c])
            self._edge[key] = _edge_controls(self.group, tm.A(k - 1, par), tm.A(k, c), self.lam,
                                             2.0 ** -k, self.segments)
        return self._edge[key]

    def controls(self, e):
        """alpha_x for end e: the concatenated edge controls from the root."""
        u = ControlSignal.empty(self.group.rank)
        for k in range(1, self.tm.depth + 1):
            u = u.concat(self.edge(k, self.tm.ends[e, k]))
        return u

    def _edge_values(self, k, c):
        """Edge controls as (segments, rank) values on equal pieces."""
        u = self.edge(k, c)
        m = self.segments
        if not len(u):
            return np.zeros((m, self.group.rank))
        if len(u) == m:
            return u.values
        if m % len(u) == 0 and np.allclose(u.durations, u.durations[0]):
            return np.repeat(u.values, m // len(u), axis=0)
        raise ValueError(f"edge control with {len(u)} pieces does not fit {m} segments")

    def positions(self, ends):
        """F for the given ends; levels are integrated in batches with RK4
        (``nsub`` substeps per control piece) and cached per tree vertex."""
        tm = self.tm
        ends = np.asarray(ends, dtype=int)
        cf = _compiled(self.frameM)
        pw = tm.cc.patchwork
        for k in range(1, tm.depth + 1):
            need = [int(c) for c in np.unique(tm.ends[ends, k]) if (k, int(c)) not in self._pos]
            if not need:
                continue
            par = [int(pw.parents[k][c]) for c in need]
            x = np.array([self._pos[(k - 1, q)] for q in par])
            u = np.array([self._edge_values(k, c) for c in need])
            dur = np.full(self.segments, 2.0 ** -k / self.segments)
            x = _rk4(cf, x, u, dur, self.nsub, box=1e6)
            for c, xc in zip(need, x):
                self._pos[(k, c)] = xc
        return np.array([self._pos[(tm.depth, int(tm.ends[e, tm.depth]))] for e in ends])

    def F(self, e):
        return self.positions([e])[0]

    def E(self, e):
        return self.group.dilation(self.lam, self.tm.Abar(e))


def build_embedding(cc: CantorComplex, group: CarnotGroup, frameM: Frame, p, r,
                    constants: EstimateConstants | None = None, pairs=60, seed=0,
                    segments=8, budget=None, step=None, tm: TreeMaps | None = None):
    """Realize E, F on sampled end pairs and bracket d_M(F x, F y) against
    the exact d_G(E x, E y).  The density end is anchored so that F sends
    it to p."""
    tm = tm or tree_maps(cc)
    pw = cc.patchwork
    c2 = pw.constants["C2"]
    warnings = []
    if constants is not None:
        if not 2 * r < constants.L:
            warnings.append(f"r={r} violates 2r < L={constants.L}")
        if constants.C * r ** (1 / cc.s) > cc.tau / (80 * c2):
            warnings.append(f"r={r} violates C r^(1/s) <= tau/(80 C2) "
                            f"({constants.C * r ** (1 / cc.s):.3g} > {cc.tau / (80 * c2):.3g})")
    for w in warnings:
        log.warning(w)
    emb = Embedding(tm, group, frameM, p, r, segments, step)
    anchor_error = float(np.max(np.abs(emb.F(emb.j0) - emb.p)))
    params = {"tau": cc.tau, "s": cc.s, "depth": cc.depth, "r": float(r), "C2": c2,
              "lambda": emb.lam, "p": [str(x) for x in p], "q0": emb.q0.tolist(), "j0": emb.j0,
              "n_ends": len(tm.ends), "segments": segments, "seed": seed}
    report = EmbeddingReport(params, [], anchor_error, 0, warnings)
    rng = np.random.default_rng(seed)
    constants = constants or EstimateConstants()
    model = TangentModel(privileged_coordinates(frameM, p))
    budget = dict(budget or {"segments": 16, "restarts": 2})
    for e1, e2 in _sample_pairs(len(tm.ends), pairs, rng):
        row = {"e1": int(e1), "e2": int(e2), "d_T": tm.tree_distance(e1, e2)}
        glo, ghi = group.distance_bounds(emb.E(e1), emb.E(e2))
        row["dG_lo"], row["dG_hi"] = float(glo), float(ghi)
        try:
            mlo, mhi = cc_distance_bounds(frameM, emb.F(e1), emb.F(e2), constants=constants,
                                          budget=budget, model=model)
        except NilrectError as exc:
            row["error"] = str(exc)
            report.incomplete += 1
            report.pairs.append(row)
            continue
        row["dM_lo"], row["dM_hi"] = float(mlo), float(mhi)
        row["lipE_ok"] = bool(glo <= r * row["d_T"] * (1 + 1e-9) + emb.lam * pw.constants["C2"]
                              * pw.radius(cc.depth))
        if ghi > 0:
            row["distortion"] = mhi / ghi
            # interval form of the factor-2 comparison: both brackets must agree
            row["factor2_ok"] = bool(mlo >= 0.5 * ghi and mhi <= 2 * glo)
            row["factor2_ok_point"] = bool(0.5 <= mhi / ghi <= 2)
        report.pairs.append(row)
    report.embedding = emb
    return report


def distortion_stability(report_a: EmbeddingReport, report_b: EmbeddingReport, tol=0.25):
    """Relative change of the max/min distortion ratio and of the max
    distortion between two depths; stable when both are within ``tol``."""
    sa, sb = report_a.summary(), report_b.summary()
    if not sa.get("complete") or not sb.get("complete"):
        return {"stable": False, "reason": "no complete pairs"}
    spread = abs(sb["distortion_spread"] / sa["distortion_spread"] - 1)
    dmax = abs(sb["distortion_max"] / sa["distortion_max"] - 1)
    return {"spread_a": sa["distortion_spread"], "spread_b": sb["distortion_spread"],
            "spread_change": spread, "max_change": dmax,
            "finite": bool(np.isfinite(sa["distortion_spread"]) and np.isfinite(sb["distortion_spread"])),
            "stable": bool(spread <= tol and dmax <= tol)}


# ---------------------------------------------------------------------------
# coverage


@dataclass
class CoverageReport:
    fractions: list
    anchors: list
    params: dict

    def to_json(self):
        return {"coverage": self.fractions, "anchors": self.anchors, "params": self.params}

    def to_csv(self):
        lines = ["iteration,coverage"]
        lines += [f"{i},{c!r}" for i, c in enumerate(self.fractions)]
        return "\n".join(lines) + "\n"


def _nn_spacing(cloud, i):
    """Distance from cloud point i to its nearest neighbour."""
    d = cloud.upper(cloud.points[i], np.delete(cloud.points, i, axis=0))
    return float(np.min(d))


def coverage_experiment(cc: CantorComplex, group: CarnotGroup, frameM: Frame, p, r, rho=None,
                        grid=6, iterations=10, radius=None, max_ends=4096, seed=0, step=None,
                        segments=8, tm: TreeMaps | None = None) -> CoverageReport:
    """Greedy exhaustion of a ball-box region around p by embedded Cantor images.

    The region is a grid in the adapted linear coordinates y = B^-1 (x - p)
    of the frame at p, with |y_j| <= rho^{w_j}.  Each round anchors an
    embedding at the uncovered sample with the most uncovered samples
    nearby and marks samples within ``radius`` of its images in the box
    metric |dy_j| <= radius^{w_j}.  Defaults: each image point stands for
    one cloud cell, radius = lam * (cloud spacing), and rho = lam * R / 2
    with R the radius of the root cube, lam = r / (2 C2 base_scale).
    Returns coverage after 0, 1, ... rounds.
    """
    tm = tm or tree_maps(cc)
    pw = cc.patchwork
    cloud = pw.cloud
    lam = r / (2 * pw.constants["C2"] * pw.base_scale)
    ctr = pw.centers[0][cc.root]
    if radius is None:
        radius = lam * _nn_spacing(cloud, ctr)
    if rho is None:
        mem = pw.members(0, cc.root)
        rho = lam * float(np.max(cloud.upper(cloud.points[ctr], cloud.points[mem]))) / 2
    chart = privileged_coordinates(frameM, p)
    fb = chart.flag_basis
    B = np.array([[float(c) for c in f.evaluate(fb.point)] for f in fb.fields]).T
    Binv = np.linalg.inv(B)
    w = np.array(fb.weights, dtype=float)
    p_f = np.array([float(x) for x in p])
    axes = [np.linspace(-rho ** wj, rho ** wj, grid) for wj in w]
    ys = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(w))
    scale = 1.0 / radius ** w
    tree = cKDTree(ys * scale)
    n = len(ys)
    rng = np.random.default_rng(seed)
    ends = np.arange(len(tm.ends))
    if len(ends) > max_ends:
        ends = np.sort(rng.choice(ends, size=max_ends, replace=False))
    # neighbourhood used to rank anchors: one region-grid step in every direction
    probe = max(1.0, float(np.max((2 * rho ** w / max(grid - 1, 1)) * scale)))
    covered = np.zeros(n, dtype=bool)
    fractions, anchors = [0.0], []
    for _ in range(iterations):
        unc = np.flatnonzero(~covered)
        if len(unc) == 0:
            fractions.append(1.0)
            continue
        near = tree.query_ball_point(ys[unc] * scale, probe, p=np.inf)
        counts = np.array([int(np.sum(~covered[lst])) for lst in near])
        pick = int(unc[np.lexsort((unc, -counts))[0]])
        x = p_f + B @ ys[pick]
        emb = Embedding(tm, group, frameM, [Fraction(float(v)) for v in x], r, segments, step)
        imgs = emb.positions(np.append(ends, emb.j0))
        yi = (imgs - p_f) @ Binv.T
        for lst in tree.query_ball_point(yi * scale, 1.0, p=np.inf):
            covered[lst] = True
        covered[pick] = True
        anchors.append(x.tolist())
        fractions.append(float(covered.mean()))
    return CoverageReport(fractions, anchors, {"r": r, "rho": rho, "radius": radius, "grid": grid,
                                               "iterations": iterations, "n_region": n,
                                               "ends_used": int(len(ends)), "seed": seed})


def strictly_increasing(values, n):
    v = list(values)[:n + 1]
    return all(b > a for a, b in zip(v, v[1:]))


class CantorEmbedder(BaseEstimator):
    """Estimator wrapper: ``fit(patchwork, group=, frame=, point=)`` builds the
    Cantor set, its tree maps and the embedding F; ``transform(ends)``
    returns F of the given end indices as points of M."""

    def __init__(self, tau=0.05, s=2, depth=None, root=0, r=0.1, segments=8):
        self.tau = tau
        self.s = s
        self.depth = depth
        self.root = root
        self.r = r
        self.segments = segments

    def fit(self, patchwork, y=None, *, group=None, frame=None, point=None):
        self.cantor_ = build_cantor(patchwork, self.root, self.tau, self.s, self.depth)
        self.tree_ = tree_maps(self.cantor_)
        group = group or patchwork.cloud.group
        if frame is None:
            frame, point = group.left_invariant_frame(), [0] * group.dim
        self.embedding_ = Embedding(self.tree_, group, frame, point, self.r, self.segments)
        return self

    def transform(self, ends):
        from sklearn.utils.validation import check_is_fitted
        check_is_fitted(self, "embedding_")
        return self.embedding_.positions(np.asarray(ends, dtype=int))
