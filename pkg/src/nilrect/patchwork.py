"""Dyadic cube decompositions of a point cloud sampled from a Carnot group.

Cubes at level k come from nested greedy nets of radius base_scale * 2^-k.
Every net point of level k+1 hangs under its nearest net point of level k,
and every cloud point hangs under its nearest finest-level net point; cubes
are the fibres of this ancestor map, so nesting and partition are exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import pi

import numpy as np
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator

from .carnot import CarnotGroup
from .errors import DegenerateNet

__all__ = [
    "PointCloudMM", "CubicalPatchwork", "PatchworkBuilder", "sample_group_cloud",
    "lattice_box", "build_patchwork", "boundary_strip", "check_patchwork", "PatchworkReport",
]


class PointCloudMM:
    """Grid sample of a Carnot group with Haar cell weights."""

    def __init__(self, group: CarnotGroup, points, cell_volume, box, shape=None):
        self.group = group
        self.points = np.asarray(points, dtype=float)
        self.cell_volume = Fraction(cell_volume)
        self.weights = np.full(len(self.points), float(self.cell_volume))
        self.box = [(float(a), float(b)) for a, b in box]
        self.shape = shape
        h = self.points[:, :group.rank]
        self._rh = float(np.max(np.linalg.norm(h, axis=1))) if len(h) else 0.0

    def __len__(self):
        return len(self.points)

    @property
    def total_mass(self):
        return self.cell_volume * len(self.points)

    def mass(self, idx):
        """Exact mass of an index set."""
        return self.cell_volume * len(idx)

    def distance(self, x, y):
        """CC distance between coordinate arrays (broadcast)."""
        return self.group.distance(x, y)

    def bounds(self, x, y):
        if self.group.has_exact_distance:
            d = self.group.distance(x, y)
            return d, d
        return self.group.distance_bounds(x, y)

    def upper(self, x, y):
        return self.bounds(x, y)[1]

    def lower(self, x, y):
        return self.bounds(x, y)[0]

    def _scale(self, r, rh=None):
        """Per-axis factors with d(x, y) <= r => Chebyshev |scaled dx| <= r,
        for query points with horizontal norm at most ``rh``."""
        g = self.group
        sc = np.zeros(g.dim)
        sc[:g.rank] = 1.0
        if g.step == 1:
            return sc
        if g.is_heisenberg_type:
            sc[g.rank:] = r / self.vertical_reach(r, self._rh if rh is None else rh)
        return sc

    def vertical_reach(self, r, rh):
        """Bound on |y_c - x_c| over the ball B(x, r) when |x_h| <= rh
        (isoperimetry plus the BCH cross term), Heisenberg-type only."""
        mu = self.group._heis
        return 1.01 * mu * (r * r / (4 * pi) + 0.5 * rh * r)

    def pairs(self, qpts, tpts, r, chunk=256):
        """Flattened (query row, target row, upper distance) over all pairs
        of coordinate rows with distance <= r."""
        qpts = np.atleast_2d(np.asarray(qpts, dtype=float))
        tpts = np.atleast_2d(np.asarray(tpts, dtype=float))
        g = self.group
        if not g.is_heisenberg_type or len(qpts) == 0:
            sc = self._scale(r)
            return self._pairs_in(qpts, tpts, np.arange(len(qpts)), np.arange(len(tpts)),
                                  qpts * sc, tpts * sc, r, chunk)
        # tile the horizontal plane and left-translate each tile to its
        # anchor, so the vertical window only sees the tile's own shear
        k = g.rank
        both = np.concatenate([qpts[:, :k], tpts[:, :k]])
        lo = both.min(axis=0)
        span = float(np.max(both.max(axis=0) - lo)) + 1e-12
        per = max(1, min(int(np.ceil(span / r)), int(1024 ** (1 / k))))
        h = span / per
        tidx = np.clip(np.floor((qpts[:, :k] - lo) / h).astype(int), 0, per - 1)
        keys = np.ravel_multi_index(tidx.T, (per,) * k)
        htree = cKDTree(tpts[:, :k])
        sc = np.ones(g.dim)
        sc[k:] = r / self.vertical_reach(r, h / 2 * np.sqrt(k))
        out = []
        for key in np.unique(keys):
            qsel = np.flatnonzero(keys == key)
            anchor = np.zeros(g.dim)
            anchor[:k] = lo + (np.array(np.unravel_index(key, (per,) * k)) + 0.5) * h
            tsel = np.asarray(htree.query_ball_point(anchor[:k], h / 2 + r * (1 + 1e-9), p=np.inf),
                              dtype=int)
            if len(tsel) == 0:
                continue
            qt = g.bch_product(-anchor, qpts[qsel])
            tt = g.bch_product(-anchor, tpts[tsel])
            out.append(self._pairs_in(qpts, tpts, qsel, tsel, qt * sc, tt * sc, r, chunk))
        if not out:
            return np.zeros(0, int), np.zeros(0, int), np.zeros(0)
        return tuple(np.concatenate(z) for z in zip(*out))

    def _pairs_in(self, qpts, tpts, qsel, tsel, qs, ts, r, chunk):
        tree = cKDTree(ts)
        oq, oj, od = [], [], []
        for s in range(0, len(qsel), chunk):
            cand = tree.query_ball_point(qs[s:s + chunk], r * (1 + 1e-9), p=np.inf)
            lens = np.fromiter((len(c) for c in cand), dtype=int, count=len(cand))
            if lens.sum() == 0:
                continue
            fj = tsel[np.concatenate([np.asarray(c, dtype=int) for c in cand if len(c)])]
            fq = qsel[np.repeat(np.arange(s, s + len(cand)), lens)]
            d = self.upper(qpts[fq], tpts[fj])
            keep = d <= r
            oq.append(fq[keep])
            oj.append(fj[keep])
            od.append(d[keep])
        if not oq:
            return np.zeros(0, int), np.zeros(0, int), np.zeros(0)
        return np.concatenate(oq), np.concatenate(oj), np.concatenate(od)

    def neighbors(self, queries, r):
        """Flattened (query position, point index, distance) within r of
        the cloud points ``queries``, sorted by query."""
        queries = np.asarray(queries, dtype=int)
        q, j, d = self.pairs(self.points[queries], self.points, r)
        order = np.lexsort((j, q))
        return q[order], j[order], d[order]

    def ball(self, i, r):
        _, j, d = self.neighbors([i], r)
        return j, d

    def reach_box(self, x, r):
        """Per-axis half-widths of a box around x containing B(x, r)
        (axes without a bound get inf)."""
        g = self.group
        half = np.full(g.dim, np.inf)
        half[:g.rank] = r
        if g.step == 1:
            half[:] = r
        elif g.is_heisenberg_type:
            half[g.rank:] = self.vertical_reach(r, float(np.linalg.norm(np.asarray(x)[:g.rank])))
        return half

    def to_json(self):
        return {"n_points": len(self), "cell_volume": str(self.cell_volume),
                "box": self.box, "shape": self.shape, "group": self.group.algebra.to_json()}


def lattice_box(group: CarnotGroup, eps, extent=1.0):
    """Dilation-shaped box with lattice-compatible spacing.

    Axis j of weight w gets spacing eps^w and half-width extent^w (for
    Heisenberg-type groups the vertical axis uses mu eps^2 / 2 and
    mu extent^2 / 2, so the grid is a coset of a lattice subgroup).  Returns
    (box, resolution per axis).
    """
    box, res = [], []
    for w in group.weights:
        w = int(w)
        h, half = float(eps) ** w, float(extent) ** w
        if group.is_heisenberg_type and w == 2:
            h *= group._heis / 2
            half *= group._heis / 2
        m = max(8, int(round(2 * half / h)))
        box.append((-m * h / 2, m * h / 2))
        res.append(m)
    return box, tuple(res)


def sample_group_cloud(group: CarnotGroup, box, resolution, max_points=2_000_000) -> PointCloudMM:
    """Cell-centred grid on the box; each point carries its cell volume."""
    n = group.dim
    if len(box) != n:
        raise ValueError(f"box has {len(box)} ranges for a {n}-dimensional group")
    res = [int(resolution)] * n if np.isscalar(resolution) else [int(r) for r in resolution]
    if min(res) < 8:
        raise ValueError("resolution must be at least 8 per axis")
    total = int(np.prod(res))
    if total > max_points:
        raise MemoryError(f"{total} points exceeds max_points={max_points}")
    axes, vol = [], Fraction(1)
    for (lo, hi), m in zip(box, res):
        lo, hi = Fraction(lo), Fraction(hi)
        if hi <= lo:
            raise ValueError("empty box range")
        h = (hi - lo) / m
        vol *= h
        axes.append(np.array([float(lo + (j + Fraction(1, 2)) * h) for j in range(m)]))
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    return PointCloudMM(group, grid, vol, box, tuple(res))


@dataclass
class CubicalPatchwork:
    cloud: PointCloudMM
    depth: int
    base_scale: float
    centers: list          # centers[k]: point indices of level-k cubes (cube id = position)
    parents: list          # parents[k][c]: level-(k-1) cube id of level-k cube c (k >= 1)
    labels: np.ndarray     # labels[k, i]: level-k cube id of point i
    seed: int = 0
    sigma: float = 0.5
    constants: dict = field(default_factory=dict)

    def radius(self, k):
        return self.base_scale * 2.0 ** -k

    def n_cubes(self, k):
        return len(self.centers[k])

    def members(self, k, c):
        return np.flatnonzero(self.labels[k] == c)

    def members_by_cube(self, k):
        order = np.argsort(self.labels[k], kind="stable")
        counts = np.bincount(self.labels[k], minlength=self.n_cubes(k))
        return np.split(order, np.cumsum(counts)[:-1])

    def children(self, k, c):
        return np.flatnonzero(np.asarray(self.parents[k + 1]) == c)

    def descendants(self, k, c, level):
        ids = np.array([c])
        for j in range(k + 1, level + 1):
            ids = np.flatnonzero(np.isin(self.parents[j], ids))
        return ids

    def center_point(self, k, c):
        return self.cloud.points[self.centers[k][c]]

    def cube_mass(self, k, c):
        return self.cloud.mass(self.members(k, c))

    def verify_structure(self):
        """Exact checks: partition per level, nesting, parent consistency,
        mass conservation.  Returns a dict of violation counts."""
        n = len(self.cloud)
        v = {"partition": 0, "nesting": 0, "parent": 0, "mass": 0}
        for k in range(self.depth + 1):
            lab = self.labels[k]
            if lab.shape != (n,) or lab.min() < 0 or lab.max() >= self.n_cubes(k):
                v["partition"] += 1
            counts = np.bincount(lab, minlength=self.n_cubes(k))
            if np.any(counts == 0):
                v["partition"] += int(np.sum(counts == 0))
            if sum(self.cloud.cell_volume * int(c) for c in counts) != self.cloud.total_mass:
                v["mass"] += 1
            if k >= 1:
                par = np.asarray(self.parents[k])
                # nesting: a level-k cube sits inside exactly one level-(k-1) cube
                pairs = np.unique(np.stack([lab, self.labels[k - 1]], axis=1), axis=0)
                v["nesting"] += len(pairs) - self.n_cubes(k)
                v["parent"] += int(np.sum(par[lab] != self.labels[k - 1]))
        return v

    def tree_json(self):
        cubes = []
        for k in range(self.depth + 1):
            counts = np.bincount(self.labels[k], minlength=self.n_cubes(k))
            for c in range(self.n_cubes(k)):
                cubes.append({
                    "id": f"{k}:{c}", "level": k,
                    "parent": None if k == 0 else f"{k - 1}:{int(self.parents[k][c])}",
                    "center": self.center_point(k, c).tolist(),
                    "mass": str(self.cloud.cell_volume * int(counts[c])),
                })
        return {"depth": self.depth, "sigma": self.sigma, "base_scale": self.base_scale,
                "seed": self.seed, "constants": self.constants, "cubes": cubes}


def _neighbor_lists(cloud, queries, r):
    """Flattened (query position, point index, distance) for pairs within r."""
    return cloud.neighbors(queries, r)


def _min_dist(cloud, queries, reach, exclude_label=None, include_label=None):
    """For each query, min distance (capped at reach) to cloud points whose
    label differs from the query's (exclude_label) or equals a given label."""
    queries = np.asarray(queries, dtype=int)
    out = np.full(len(queries), float(reach))
    if len(queries) == 0:
        return out
    q, j, d = _neighbor_lists(cloud, queries, reach)
    if exclude_label is not None:
        ok = exclude_label[j] != exclude_label[queries[q]]
    else:
        lab, target = include_label
        ok = lab[j] == target
    np.minimum.at(out, q[ok], d[ok])
    return out


def _greedy_nets(cloud: PointCloudMM, radii, rng, order="farthest"):
    """Nested maximal nets.  Each level keeps the previous centers and adds
    uncovered points in the given order; "farthest" visits points far from
    the coarser centers first (ties by the seeded rank)."""
    n = len(cloud)
    rank = np.empty(n, dtype=int)
    if order == "lex":
        rank[np.lexsort(cloud.points.T[::-1])] = np.arange(n)
    else:
        rank[rng.permutation(n)] = np.arange(n)
    centers = []
    probe = rng.permutation(n)[:min(64, n)]
    for level, r in enumerate(radii):
        current = list(centers[-1]) if centers else []
        far = np.full(n, np.inf)
        if current and order == "farthest":
            q, _, d = cloud.pairs(cloud.points, cloud.points[current], radii[level - 1])
            np.minimum.at(far, q, d)
        visit = np.lexsort((rank, -far))
        covered = np.zeros(n, dtype=bool)
        pq, pj, _ = _neighbor_lists(cloud, probe, r)
        bulk = len(pj) / max(len(probe), 1) * n < 4e6
        if bulk:
            q, j, _ = _neighbor_lists(cloud, np.arange(n), r)
            starts = np.searchsorted(q, np.arange(n + 1))
            nbr = lambda i: j[starts[i]:starts[i + 1]]
        else:
            nbr = lambda i: cloud.ball(i, r)[0]
        for c in current:
            covered[nbr(c)] = True
        for i in visit:
            if covered[i]:
                continue
            current.append(int(i))
            covered[nbr(i)] = True
            covered[i] = True
        centers.append(np.array(current, dtype=int))
    return centers


def _nearest(cloud, queries, center_idx, r):
    """For each query point index, the nearest center (ties by center id)
    among centers within r; every query has one by maximality of the net."""
    queries = np.asarray(queries, dtype=int)
    fq, fc, d = cloud.pairs(cloud.points[queries], cloud.points[center_idx], r)
    if len(np.unique(fq)) < len(queries):
        raise DegenerateNet("a point has no net center within the net radius")
    # lexicographic: by query, then distance, then center id
    order = np.lexsort((fc, d, fq))
    first = np.ones(len(order), dtype=bool)
    first[1:] = fq[order][1:] != fq[order][:-1]
    out = np.empty(len(queries), dtype=int)
    out[fq[order][first]] = fc[order][first]
    return out


def build_patchwork(cloud: PointCloudMM, depth: int, seed=0, base_scale=None,
                    order="random") -> CubicalPatchwork:
    """Nested greedy nets and ancestor-routed cubes; fits C1 and C2.

    ``order`` is the greedy visiting order: "random" (seeded permutation),
    "lex" (coordinate order) or "farthest" (far from coarser centers first).
    """
    if depth < 2:
        raise ValueError("depth must be >= 2")
    if order not in ("random", "lex", "farthest"):
        raise ValueError(f"unknown net order {order!r}")
    if base_scale is None:
        base_scale = _auto_scale(cloud, depth)
    rng = np.random.default_rng(seed)
    radii = [base_scale * 2.0 ** -k for k in range(depth + 1)]
    centers = _greedy_nets(cloud, radii, rng, order)
    n = len(cloud)
    for k in range(1, depth + 1):
        if len(centers[k]) == 1 and n > 1:
            raise DegenerateNet(f"level {k} has a single cube; lower base_scale")
    parents = [np.zeros(len(centers[0]), dtype=int)]
    for k in range(1, depth + 1):
        parents.append(_nearest(cloud, centers[k], centers[k - 1], radii[k - 1]))
    labels = np.empty((depth + 1, n), dtype=int)
    labels[depth] = _nearest(cloud, np.arange(n), centers[depth], radii[depth])
    for k in range(depth, 0, -1):
        labels[k - 1] = parents[k][labels[k]]
    pw = CubicalPatchwork(cloud, depth, float(base_scale), centers, parents, labels, seed)
    pw.constants.update(_fit_c1_c2(pw))
    return pw


def _auto_scale(cloud, depth):
    # finest radius ~ 1.5 nearest-neighbour spacings, coarsest ~ half the cloud
    p0 = cloud.points[len(cloud) // 2]
    d = cloud.upper(p0, np.delete(cloud.points, len(cloud) // 2, axis=0))
    spacing = float(np.min(d))
    far = float(np.max(cloud.upper(p0, cloud.points)))
    return float(min(far / 2, 1.5 * spacing * 2 ** depth))


def _fit_c1_c2(pw, probes=8, exact_max=64, exact_diam_max=1500, seed=0):
    """Constants relative to r_k, over cubes with at least two points.

    C2: max of diam / r_k, with diam exact for cubes up to ``exact_diam_max``
    points and 2 * (center radius) above that.
    C1: min of the best inner-ball radius / r_k (distance to the complement,
    capped at r_k) over all members of cubes up to ``exact_max`` points and
    over the center plus ``probes`` sampled members of larger ones.
    The ``*_interior`` values skip cubes within 2 r_k of the sample box.
    """
    cloud = pw.cloud
    rng = np.random.default_rng(seed)
    c1 = {True: np.inf, False: np.inf}
    c2 = {True: 0.0, False: 0.0}
    for k in range(pw.depth + 1):
        unit = pw.radius(k)
        groups = pw.members_by_cube(k)
        qs, owner = [], []
        inner = np.zeros(pw.n_cubes(k), dtype=bool)
        for c, mem in enumerate(groups):
            if len(mem) < 2:
                continue
            inner[c] = not _touches_box(pw, k, c, 2 * unit)
            pts = cloud.points[mem]
            if len(mem) <= exact_diam_max:
                diam = max(float(np.max(cloud.upper(pts[i:i + 64, None], pts[None])))
                           for i in range(0, len(mem), 64))
            else:
                diam = 2 * float(np.max(cloud.upper(cloud.points[pw.centers[k][c]], pts)))
            c2[False] = max(c2[False], diam / unit)
            if inner[c]:
                c2[True] = max(c2[True], diam / unit)
            if pw.n_cubes(k) == 1:
                continue
            if len(mem) <= exact_max:
                pick = list(mem)
            else:
                pick = [pw.centers[k][c]] + list(rng.choice(mem, size=probes, replace=False))
            qs += pick
            owner += [c] * len(pick)
        if not qs:
            continue
        d = _min_dist(cloud, np.array(qs), unit, exclude_label=pw.labels[k])
        best = np.zeros(pw.n_cubes(k))
        np.maximum.at(best, np.array(owner), d)
        used = np.unique(owner)
        c1[False] = min(c1[False], float(best[used].min()) / unit)
        if inner[used].any():
            c1[True] = min(c1[True], float(best[used][inner[used]].min()) / unit)
    out = {"C1": float(c1[False]), "C2": float(c2[False]),
           "C2_over_C1": float(c2[False] / c1[False])}
    if np.isfinite(c1[True]):
        out.update({"C1_interior": float(c1[True]), "C2_interior": float(c2[True]),
                    "C2_over_C1_interior": float(c2[True] / c1[True])})
    return out


def _strip_distances(pw, k, c, t_max):
    """Distances for strip membership of cube (k, c): inner points to the
    complement, outer points to the cube, both capped at t_max * r_k."""
    cloud = pw.cloud
    width = t_max * pw.radius(k)
    mem = pw.members(k, c)
    ctr = pw.center_point(k, c)
    rad = float(np.max(cloud.upper(ctr, cloud.points[mem])))
    _, cand, _ = cloud.neighbors([pw.centers[k][c]], rad + width)
    out = cand[pw.labels[k][cand] != c]
    din = _min_dist(cloud, mem, width, exclude_label=pw.labels[k])
    dout = _min_dist(cloud, out, width, include_label=(pw.labels[k], c))
    # capped values mean "no point within the width"
    din[din >= width] = np.inf
    dout[dout >= width] = np.inf
    return mem, din, out, dout


def boundary_strip(pw: CubicalPatchwork, k, c, t):
    """Indices of the strip around cube (k, c) at relative width t."""
    if not 0 < t <= 1:
        raise ValueError("t must lie in (0, 1]")
    mem, din, out, dout = _strip_distances(pw, k, c, t)
    w = t * pw.radius(k)
    return np.sort(np.concatenate([mem[din < w], out[dout < w]]))


def _touches_box(pw, k, c, reach):
    cloud = pw.cloud
    ctr = pw.center_point(k, c)
    half = cloud.reach_box(ctr, reach)
    for j, (lo, hi) in enumerate(cloud.box):
        if np.isfinite(half[j]) and (ctr[j] - half[j] < lo or ctr[j] + half[j] > hi):
            return True
    return False


@dataclass
class PatchworkReport:
    C1: float
    C2: float
    a0: float
    eta: float
    t_grid: list
    rows: list
    violations: dict
    n_cubes_checked: int
    n_boundary_excluded: int
    monotone: bool
    ahlfors_flags: int

    @property
    def ok(self):
        return bool(sum(self.violations.values()) == 0 and self.monotone and self.eta > 0
                and np.isfinite(self.C2 / self.C1))

    def to_json(self):
        return {"C1": self.C1, "C2": self.C2, "C2_over_C1": self.C2 / self.C1, "a0": self.a0,
                "eta": self.eta, "t_grid": self.t_grid, "violations": self.violations,
                "cubes_checked": self.n_cubes_checked,
                "boundary_excluded": self.n_boundary_excluded, "strips_monotone": self.monotone,
                "ahlfors_flags": self.ahlfors_flags, "ok": self.ok}

    def to_csv(self):
        lines = ["cube,t,strip_mass,cube_mass"]
        lines += [f"{r['cube']},{r['t']!r},{r['strip_mass']!r},{r['cube_mass']!r}" for r in self.rows]
        return "\n".join(lines) + "\n"


def check_patchwork(pw: CubicalPatchwork, t_grid=(1, 0.5, 0.25, 0.125), max_cubes_per_level=40,
                    seed=0, ahlfors_factor=8.0) -> PatchworkReport:
    """Measure strip masses on sampled interior cubes and fit
    mu(strip) <= a0 t^eta mu(Q)."""
    t_grid = sorted(float(t) for t in t_grid)
    rng = np.random.default_rng(seed)
    cloud = pw.cloud
    rows, logs_t, logs_r = [], [], []
    monotone, checked, excluded = True, 0, 0
    ahl = []
    for k in range(1, pw.depth + 1):
        cubes = np.arange(pw.n_cubes(k))
        counts = np.bincount(pw.labels[k], minlength=pw.n_cubes(k))
        big = counts[counts >= 2]
        ahl.extend((big * float(cloud.cell_volume)) / pw.radius(k) ** float(
            np.sum(cloud.group.weights)))
        rng.shuffle(cubes)
        taken = 0
        for c in cubes:
            if taken >= max_cubes_per_level:
                break
            if counts[c] < 2:
                continue
            mem = pw.members(k, c)
            rad = float(np.max(cloud.upper(pw.center_point(k, c), cloud.points[mem])))
            if _touches_box(pw, k, c, rad + t_grid[-1] * pw.radius(k)):
                excluded += 1
                continue
            taken += 1
            checked += 1
            mem, din, out, dout = _strip_distances(pw, k, c, t_grid[-1])
            qmass = float(cloud.mass(mem))
            prev = -1.0
            for t in t_grid:
                w = t * pw.radius(k)
                sm = float(cloud.cell_volume) * (int(np.sum(din < w)) + int(np.sum(dout < w)))
                if sm < prev:
                    monotone = False
                prev = sm
                rows.append({"cube": f"{k}:{c}", "t": t, "strip_mass": sm, "cube_mass": qmass})
                if sm > 0:
                    logs_t.append(np.log(t))
                    logs_r.append(np.log(sm / qmass))
    if len(set(logs_t)) >= 2:
        eta = float(np.polyfit(logs_t, logs_r, 1)[0])
    else:
        eta = float("nan")
    ratios = [(r["strip_mass"] / r["cube_mass"], r["t"]) for r in rows]
    a0 = max((m / t ** eta for m, t in ratios), default=0.0) if np.isfinite(eta) else float("nan")
    ahl = np.asarray(ahl)
    med = np.median(ahl) if len(ahl) else 1.0
    flags = int(np.sum((ahl > ahlfors_factor * med) | (ahl < med / ahlfors_factor)))
    pw.constants.update({"a0": a0, "eta": eta})
    return PatchworkReport(pw.constants["C1"], pw.constants["C2"], a0, eta, t_grid, rows,
                           pw.verify_structure(), checked, excluded, monotone, flags)


class PatchworkBuilder(BaseEstimator):
    """Estimator wrapper: ``fit(cloud)`` builds ``patchwork_``; ``transform``
    returns the cube labels (levels x points) of given point indices."""

    def __init__(self, depth=6, seed=0, base_scale=None, order="random"):
        self.depth = depth
        self.seed = seed
        self.base_scale = base_scale
        self.order = order

    def fit(self, cloud, y=None):
        self.patchwork_ = build_patchwork(cloud, self.depth, self.seed, self.base_scale,
                                          order=self.order)
        return self

    def transform(self, indices):
        from sklearn.utils.validation import check_is_fitted
        check_is_fitted(self, "patchwork_")
        return self.patchwork_.labels[:, np.asarray(indices, dtype=int)].T
