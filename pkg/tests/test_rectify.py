from fractions import Fraction

import numpy as np
import pytest

from nilrect.carnot import CarnotGroup
from nilrect.errors import EmptyCantor
from nilrect.gliso import abelian, heisenberg
from nilrect.patchwork import build_patchwork, check_patchwork, lattice_box, sample_group_cloud
from nilrect.rectify import (CantorEmbedder, TreeMaps, build_cantor, build_embedding,
                             cantor_measure_report, check_biholder, check_tree,
                             coverage_experiment, decay_check, distortion_stability,
                             strictly_increasing, tree_maps)


@pytest.fixture(scope="module")
def heis():
    H = CarnotGroup(heisenberg(1))
    box, shape = lattice_box(H, Fraction(1, 4), 1.0)
    pw = build_patchwork(sample_group_cloud(H, box, shape), 4)
    root = int(np.argmax(np.bincount(pw.labels[0])))
    cc = build_cantor(pw, root, 0.2, 2)
    return H, pw, cc, tree_maps(cc)


@pytest.fixture(scope="module")
def line():
    cl = sample_group_cloud(CarnotGroup(abelian(1)), [(0, 1)], 2 ** 14)
    pw = build_patchwork(cl, 7, base_scale=1 / 32, order="lex")
    check_patchwork(pw)
    return pw


def test_tau_zero_keeps_everything(heis):
    _, pw, cc, _ = heis
    z = build_cantor(pw, cc.root, 0.0, 2)
    assert z.retained_fraction == 1.0
    assert all(d == 0 for d in z.decrements())
    rep = cantor_measure_report(pw, [0.0], s=2, root=cc.root)
    assert rep["rows"][0]["decrements"] == [0.0] * (pw.depth + 1)


def test_retention_monotone_in_tau(heis):
    _, pw, cc, _ = heis
    fr = [build_cantor(pw, cc.root, t, 2).retained_fraction for t in (0.025, 0.05, 0.1, 0.2)]
    assert all(a >= b for a, b in zip(fr, fr[1:]))
    assert 0 < fr[-1] < 1


def test_nested_sets(heis):
    cc = heis[2]
    for a, b in zip(cc.alive, cc.alive[1:]):
        assert not np.any(b & ~a)
    # decrements telescope to the lost mass
    assert sum(cc.decrements()) == cc.mass(0) - cc.mass(len(cc.alive) - 1)


def test_cantor_rejects(heis):
    _, pw, cc, _ = heis
    with pytest.raises(ValueError):
        build_cantor(pw, cc.root, -0.1)
    with pytest.raises(ValueError):
        build_cantor(pw, cc.root, 0.1, s=0)
    with pytest.raises(ValueError):
        build_cantor(pw, cc.root, 0.1, depth=pw.depth + 1)
    with pytest.raises(EmptyCantor):
        build_cantor(pw, cc.root, 50.0)


def test_root_distance():
    for i in range(6):
        assert TreeMaps.root_distance(i) == 1 - 2.0 ** -i


def test_tree_distance_ultrametric(heis):
    tm = heis[3]
    rep = check_tree(tm, samples=300)
    assert rep["ultrametric_violations"] == 0
    assert rep["edge_violations"] == 0
    assert tm.tree_distance(0, 0) == 0.0
    # ends differing at the first level are at distance 2^{1-0} = 2 at most
    assert max(tm.tree_distance(0, j) for j in range(len(tm.ends))) <= 2.0


def test_anchors_in_K(heis):
    _, pw, cc, tm = heis
    for k, amap in enumerate(tm.anchors):
        for c, i in amap.items():
            assert cc.K[i] and pw.labels[k][i] == c


def test_biholder(heis):
    rep = check_biholder(heis[3], samples=200)
    assert rep["violations"] == 0
    assert rep["pairs"] == 200


def test_self_embedding_isometric(heis):
    H, pw, cc, tm = heis
    er = build_embedding(cc, H, H.left_invariant_frame(), [0, 0, 0], 0.1, pairs=6, tm=tm)
    s = er.summary()
    assert er.anchor_error < 1e-12
    assert s["complete"] == 6
    assert s["distortion_max"] == pytest.approx(1.0, abs=0.02)
    assert s["factor2_pass_rate"] == 1.0
    assert distortion_stability(er, er)["stable"]
    assert er.to_csv().splitlines()[0].startswith("e1,e2,d_T")


def test_anchor_at_p(heis):
    H, pw, cc, tm = heis
    p = [Fraction(1, 10), Fraction(-1, 5), Fraction(1, 20)]
    er = build_embedding(cc, H, H.left_invariant_frame(), p, 0.1, pairs=0, tm=tm)
    emb = er.embedding
    assert np.allclose(emb.F(emb.j0), [float(x) for x in p], atol=1e-10)


def test_coverage_grows(heis):
    H, pw, cc, tm = heis
    cv = coverage_experiment(cc, H, H.left_invariant_frame(), [0, 0, 0], 0.2, iterations=3, tm=tm)
    assert cv.fractions[0] == 0.0
    assert all(b >= a for a, b in zip(cv.fractions, cv.fractions[1:]))
    assert strictly_increasing(cv.fractions, 3)
    assert len(cv.anchors) == 3


def test_estimator(heis):
    H, pw, cc, _ = heis
    est = CantorEmbedder(tau=0.2, root=cc.root)
    pos = est.fit(pw).transform([0, 1])
    assert pos.shape == (2, 3)
    assert est.cantor_.retained_fraction == cc.retained_fraction


def test_decay_check_helper():
    ok, ratios, n = decay_check([4.0, 2.0, 1.0, 0.0], 0.5)
    assert ok and n == 3 and ratios == [0.5, 0.5]
    assert decay_check([1.0, 0, 0], 0.5) == (False, [], 1)
    assert not decay_check([1.0, 0.05], 0.5)[0]


def test_line_decay(line):
    # level k has ~2^k cuts of width ~2^{-k} 2^{-k/2s}, so the lost mass per
    # level shrinks by 2^{-1/2s} = 2^{-eta/2s} with eta = 1
    root = int(np.argmax(np.bincount(line.labels[0])))
    rep = cantor_measure_report(line, [0.1, 0.05], s=1, root=root)
    assert rep["eta"] == pytest.approx(1.0, abs=0.2)
    for row in rep["rows"]:
        ok, ratios, n = decay_check(row["decrements"], rep["predicted_rate"])
        assert n >= 4
        assert ok, ratios
