import numpy as np
import pytest
from hypothesis import given, strategies as st

from fowler.mesh import Mesh, build_uniform_mesh, element_containing


def test_two_elements():
    m = build_uniform_mesh(1.0, 2)
    np.testing.assert_array_equal(m.nodes, [-1.0, 0.0, 1.0])
    assert m.h == 1.0


@pytest.mark.parametrize("N, h", [(20, 0.1), (640, 2.0 / 640)])
def test_uniform_width(N, h):
    m = build_uniform_mesh(1.0, N)
    assert m.n_elements == N
    assert m.uniform
    assert m.h == pytest.approx(h, rel=1e-14)
    assert np.allclose(m.widths, h, rtol=0, atol=np.spacing(2.0))


@pytest.mark.parametrize("L, N", [(1.0, 1), (1.0, 0), (0.0, 4), (-1.0, 4)])
def test_builder_rejects(L, N):
    with pytest.raises(ValueError):
        build_uniform_mesh(L, N)


def test_nodes_validated():
    with pytest.raises(ValueError):
        Mesh(1.0, np.array([-1.0, 0.5, 0.2, 1.0]))
    with pytest.raises(ValueError):
        Mesh(1.0, np.array([-0.9, 0.0, 1.0]))


@pytest.mark.parametrize("x, e", [(-1.0, 0), (0.49, 2), (1.0, 0), (0.5, 3), (-0.5, 1)])
def test_element_containing(x, e):
    assert element_containing(build_uniform_mesh(1.0, 4), x) == e


def test_nonuniform_mesh():
    m = Mesh(1.0, np.array([-1.0, -0.2, 0.1, 1.0]))
    assert not m.uniform
    assert m.h == pytest.approx(0.9)
    assert element_containing(m, 0.0) == 1


@given(st.integers(-50 * 1024, 50 * 1024), st.integers(2, 40))
def test_wrap_invariance(k, N):
    # dyadic coordinates keep x + 2L exact
    x = k / 1024.0
    m = build_uniform_mesh(1.0, N)
    e = element_containing(m, x)
    assert e == element_containing(m, x + 2.0)
    assert 0 <= e < N


@given(st.floats(-1.0, 1.0, exclude_max=True), st.integers(2, 40))
def test_partition_of_elements(x, N):
    m = build_uniform_mesh(1.0, N)
    inside = (m.nodes[:-1] <= x) & (x < m.nodes[1:])
    assert inside.sum() == 1
    assert element_containing(m, x) == int(np.flatnonzero(inside)[0])
