from fractions import Fraction

import numpy as np
import pytest

from nilrect.carnot import CarnotGroup
from nilrect.errors import DegenerateNet
from nilrect.gliso import abelian, heisenberg
from nilrect.patchwork import (PatchworkBuilder, boundary_strip, build_patchwork, check_patchwork,
                               lattice_box, sample_group_cloud)


@pytest.fixture(scope="module")
def line():
    cl = sample_group_cloud(CarnotGroup(abelian(1)), [(0, 1)], 2000)
    return build_patchwork(cl, 6, base_scale=0.25, order="lex")


def test_unit_square_cloud():
    cl = sample_group_cloud(CarnotGroup(abelian(2)), [(0, 1), (0, 1)], 10)
    assert len(cl) == 100
    assert cl.cell_volume == Fraction(1, 100)
    assert cl.total_mass == 1


def test_heisenberg_box_mass():
    H = CarnotGroup(heisenberg(1))
    cl = sample_group_cloud(H, [(-1, 1)] * 3, 32)
    assert len(cl) == 32 ** 3
    assert cl.total_mass == 8
    assert np.allclose(cl.weights.sum(), 8.0)


def test_cloud_rejects_bad_input():
    A = CarnotGroup(abelian(2))
    with pytest.raises(ValueError):
        sample_group_cloud(A, [(0, 1)], 10)
    with pytest.raises(ValueError):
        sample_group_cloud(A, [(0, 1), (0, 1)], 4)
    with pytest.raises(MemoryError):
        sample_group_cloud(A, [(0, 1), (0, 1)], 100, max_points=1000)


def test_lattice_box_shape():
    H = CarnotGroup(heisenberg(1))
    box, res = lattice_box(H, Fraction(1, 8), 1.0)
    assert len(box) == 3 and len(res) == 3
    # vertical spacing is quadratic in eps
    h = [(b - a) / m for (a, b), m in zip(box, res)]
    assert h[0] == pytest.approx(1 / 8)
    assert h[2] < h[0] ** 1.5


def test_structure_exact(line):
    v = line.verify_structure()
    assert v == {"partition": 0, "nesting": 0, "parent": 0, "mass": 0}
    for k in range(1, line.depth + 1):
        # every child sits inside its parent's point set
        for c in range(line.n_cubes(k)):
            par = line.parents[k][c]
            assert set(line.members(k, c)) <= set(line.members(k - 1, par))


def test_line_constants(line):
    c = line.constants
    assert c["C2_over_C1_interior"] <= 8
    assert c["C1"] <= 1.0 + 1e-12


def test_line_strip_exponent(line):
    rep = check_patchwork(line, seed=1)
    assert rep.monotone
    assert rep.eta == pytest.approx(1.0, abs=0.2)
    assert rep.ok
    js = rep.to_json()
    assert js["strips_monotone"] is True
    assert rep.to_csv().startswith("cube,t,strip_mass,cube_mass")


def test_strip_matches_bruteforce(line):
    pts = line.cloud.points[:, 0]
    k = 3
    for c in range(0, line.n_cubes(k), 3):
        for t in (0.125, 0.5, 1.0):
            w = t * line.radius(k)
            inside = line.labels[k] == c
            din = np.array([np.min(np.abs(p - pts[~inside])) for p in pts[inside]])
            dout = np.array([np.min(np.abs(p - pts[inside])) for p in pts[~inside]])
            want = np.sort(np.concatenate([np.flatnonzero(inside)[din < w],
                                           np.flatnonzero(~inside)[dout < w]]))
            assert np.array_equal(boundary_strip(line, k, c, t), want)


def test_line_strip_mass(line):
    # an interior interval has two ends; each contributes t r_k on both sides
    k, t = 3, 0.5
    w = t * line.radius(k)
    mids = [c for c in range(line.n_cubes(k))
            if 0.2 < line.center_point(k, c)[0] < 0.8]
    for c in mids:
        m = float(line.cloud.mass(boundary_strip(line, k, c, t)))
        assert m == pytest.approx(4 * w, abs=4 / 2000)


def test_strip_rejects_t(line):
    with pytest.raises(ValueError):
        boundary_strip(line, 1, 0, 0)
    with pytest.raises(ValueError):
        boundary_strip(line, 1, 0, 1.5)


def test_degenerate_scale():
    cl = sample_group_cloud(CarnotGroup(abelian(1)), [(0, 1)], 64)
    with pytest.raises(DegenerateNet):
        build_patchwork(cl, 3, base_scale=10.0)
    with pytest.raises(ValueError):
        build_patchwork(cl, 1)
    with pytest.raises(ValueError):
        build_patchwork(cl, 3, order="spiral")


def test_seed_reproducible():
    cl = sample_group_cloud(CarnotGroup(abelian(2)), [(0, 1), (0, 1)], 24)
    a = build_patchwork(cl, 3, seed=5, base_scale=0.4)
    b = build_patchwork(cl, 3, seed=5, base_scale=0.4)
    assert np.array_equal(a.labels, b.labels)
    assert a.constants == b.constants


def test_builder_estimator():
    cl = sample_group_cloud(CarnotGroup(abelian(2)), [(0, 1), (0, 1)], 24)
    est = PatchworkBuilder(depth=3, base_scale=0.4, order="farthest")
    assert est.get_params()["order"] == "farthest"
    lab = est.fit(cl).transform([0, 5, 7])
    assert lab.shape == (3, 4)
    assert np.array_equal(lab, est.patchwork_.labels[:, [0, 5, 7]].T)
    assert est.patchwork_.verify_structure()["nesting"] == 0


def test_tree_json_masses():
    cl = sample_group_cloud(CarnotGroup(abelian(2)), [(0, 1), (0, 1)], 16)
    pw = build_patchwork(cl, 3, base_scale=0.4)
    tj = pw.tree_json()
    lvl0 = [Fraction(c["mass"]) for c in tj["cubes"] if c["level"] == 0]
    assert sum(lvl0) == 1
