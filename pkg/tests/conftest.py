from fractions import Fraction

import numpy as np
import pytest

from nilrect.carnot import CarnotGroup
from nilrect.gliso import heisenberg
from nilrect.library import bundled
from nilrect.nilpot import nilpotentization
from nilrect.patchwork import build_patchwork, check_patchwork, lattice_box, sample_group_cloud

# acceptance outcomes, printed in the terminal summary
CRITERIA = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")


@pytest.fixture
def criterion():
    def record(n, ok, detail):
        CRITERIA[n] = (bool(ok), detail)
        print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        return bool(ok)
    return record


def largest_root(pw):
    return int(np.argmax(np.bincount(pw.labels[0])))


@pytest.fixture(scope="session")
def heis_patchwork():
    """Heisenberg cloud at spacing 1/8, six levels, with the boundary fit."""
    H = CarnotGroup(heisenberg(1))
    box, shape = lattice_box(H, Fraction(1, 8), 1.0)
    pw = build_patchwork(sample_group_cloud(H, box, shape), 6)
    rep = check_patchwork(pw, t_grid=(1, 0.5, 0.25, 0.125))
    return pw, rep


@pytest.fixture(scope="session")
def tangent_patchwork():
    """Cloud on the tangent group of example5 at x1 = 1/2 (second Heisenberg)."""
    frame = bundled("example5")
    p = [Fraction(1, 2), 0, 0, 0, 0]
    G = CarnotGroup(nilpotentization(frame, p))
    box, shape = lattice_box(G, Fraction(1, 3), 1.0)
    pw = build_patchwork(sample_group_cloud(G, box, shape), 5)
    check_patchwork(pw)
    return frame, p, G, pw
