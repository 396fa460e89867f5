import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfdg.mesh import build_mesh_1d, build_mesh_2d


def test_edges_and_h():
    m = build_mesh_1d(0.0, 2 * math.pi, 10)
    assert m.h == pytest.approx(2 * math.pi / 10)
    assert m.edges.size == 11 and m.edges[0] == 0.0
    assert m.edges[-1] == pytest.approx(2 * math.pi)
    np.testing.assert_allclose(m.centers, m.edges[:-1] + m.h / 2)


def test_periodic_faces():
    m = build_mesh_1d(0.0, 1.0, 5)
    assert len(m.interior_faces()) == 5
    assert m.boundary_faces() == []
    wrap = [f for f in m.interior_faces() if f.left == 4]
    assert wrap[0].right == 0 and wrap[0].normal == 0


def test_bounded_faces():
    m = build_mesh_1d(0.0, 3 * math.pi, 10, "bounded")
    assert len(m.interior_faces()) == 9
    b = m.boundary_faces()
    assert len(b) == 2
    assert [f.normal for f in b] == [-1, 1]
    assert all(f.is_boundary for f in b)


@pytest.mark.parametrize("args", [(0.0, 1.0, 1), (1.0, 0.0, 4), (0.0, 0.0, 4)])
def test_invalid_mesh(args):
    with pytest.raises(ValueError):
        build_mesh_1d(*args)


def test_unknown_topology():
    with pytest.raises(ValueError):
        build_mesh_1d(0.0, 1.0, 4, "toroidal")


def test_locate_sides():
    m = build_mesh_1d(0.0, 4.0, 4)
    cell, xi = m.locate(np.array(1.0), "left")
    assert int(cell) == 0 and float(xi) == 1.0
    cell, xi = m.locate(np.array(1.0), "right")
    assert int(cell) == 1 and float(xi) == -1.0
    cell, xi = m.locate(np.array(0.0), "left")
    assert int(cell) == 3 and float(xi) == 1.0
    with pytest.raises(ValueError):
        m.locate(np.array(5.0))


@given(n=st.integers(2, 50), frac=st.floats(0.0, 1.0))
@settings(max_examples=60, deadline=None)
def test_locate_round_trip(n, frac):
    m = build_mesh_1d(-1.0, 2.0, n, "bounded")
    x = m.a + frac * m.length
    cell, xi = m.locate(np.array(x))
    assert 0 <= int(cell) < n and -1.0 <= float(xi) <= 1.0
    assert m.to_physical(cell, xi) == pytest.approx(x, abs=1e-12)


def test_mesh_2d():
    m = build_mesh_2d(((0.0, 4 * math.pi), (0.0, 2 * math.pi)), 8, 4)
    assert m.dx == pytest.approx(math.pi / 2) and m.dy == pytest.approx(math.pi / 2)
    assert m.ncells == 32 and m.periodic
    assert int(m.cell_index(2, 3)) == 2 * 4 + 3


def test_mixed_topology():
    m = build_mesh_2d(((0.0, 1.0), (0.0, 2.0)), 4, 6, ("periodic", "bounded"))
    assert m.x.periodic and not m.y.periodic
    assert not m.periodic
