import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from fowler.experiments import example1
from fowler.fem_space import (FemSpace, StateVector, basis_eval, error_norms, interpolate,
                              l2_project, mass_matrix)
from fowler.mesh import build_uniform_mesh


def sin_pi(x):
    return np.sin(np.pi * x)


def test_dof_counts(space_factory):
    assert space_factory(N=10, r=2).dof_count == 10
    assert space_factory(N=10, r=3).dof_count == 20


def test_rejects_bad_order():
    with pytest.raises(ValueError):
        FemSpace(build_uniform_mesh(1.0, 4), r=1)


def test_basis_nodal_values(space_factory):
    sp = space_factory(N=4, r=2)
    nodes = sp.mesh.nodes
    assert basis_eval(sp, 1, nodes[1]) == pytest.approx(1.0)
    assert basis_eval(sp, 1, nodes[2]) == pytest.approx(0.0, abs=1e-15)


def test_quadratic_midpoint_basis(space_factory):
    sp = space_factory(N=4, r=3)
    # DOF 1 is the midpoint of element 0
    mid = 0.5 * (sp.mesh.nodes[0] + sp.mesh.nodes[1])
    assert sp.lagrange_points[1] == pytest.approx(mid)
    assert basis_eval(sp, 1, mid) == pytest.approx(1.0)


def test_basis_index_checked(space_factory):
    sp = space_factory(N=4)
    with pytest.raises(IndexError):
        basis_eval(sp, 4, 0.0)
    with pytest.raises(IndexError):
        basis_eval(sp, -1, 0.0)


@pytest.mark.parametrize("r", [2, 3])
def test_lagrange_property(space_factory, r):
    sp = space_factory(N=5, r=r)
    table = np.array([[basis_eval(sp, j, p) for p in sp.lagrange_points] for j in range(sp.dof_count)])
    np.testing.assert_allclose(table, np.eye(sp.dof_count), atol=1e-13)


@settings(max_examples=50)
@given(st.floats(-3.0, 3.0, allow_nan=False), st.sampled_from([2, 3]), st.integers(2, 12))
def test_partition_of_unity(x, r, N):
    sp = FemSpace(build_uniform_mesh(1.0, N), r)
    total = sp.evaluate(np.ones(sp.dof_count), np.array([x]))
    assert abs(total[0] - 1.0) < 1e-12


def test_basis_support_is_local(space_factory):
    sp = space_factory(N=8, r=2)
    # phi_0 lives on [-1, -0.75] and, by periodicity, on [0.75, 1]
    far = np.linspace(-0.7, 0.7, 15)
    assert np.all(basis_eval(sp, 0, far) == 0.0)
    assert basis_eval(sp, 0, 0.875) == pytest.approx(0.5)


def test_interpolate_constant(space_factory):
    u = interpolate(space_factory(N=7, r=3), lambda x: np.ones_like(x))
    np.testing.assert_array_equal(u.coefficients, 1.0)


def test_interpolate_example1_exact():
    # the piecewise-linear datum has kinks at -0.6, -0.4, 0, 0.2: all nodes when N = 20
    sp = FemSpace(build_uniform_mesh(1.0, 20), 2)
    u = interpolate(sp, example1)
    x = np.linspace(-1, 1, 1001, endpoint=False)
    np.testing.assert_allclose(u(x), example1(x), atol=1e-14)
    np.testing.assert_allclose(u.coefficients, example1(sp.mesh.nodes[:-1]), atol=0)


def test_interpolation_order():
    errs = []
    for N in (16, 32, 64):
        sp = FemSpace(build_uniform_mesh(1.0, N), 2)
        errs.append(error_norms(sp, interpolate(sp, sin_pi).coefficients, sin_pi))
    slopes = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(np.abs(slopes - 2.0) < 0.05)


def test_project_zero(space_factory):
    p = l2_project(space_factory(), lambda x: np.zeros_like(x))
    assert np.all(p.coefficients == 0.0)


@pytest.mark.parametrize("r", [2, 3])
def test_project_member_is_identity(space_factory, r):
    sp = space_factory(N=9, r=r)
    c = np.random.default_rng(3).standard_normal(sp.dof_count)
    p = l2_project(sp, lambda x: sp.evaluate(c, x))
    np.testing.assert_allclose(p.coefficients, c, atol=1e-10)


def test_projection_beats_interpolation(space_factory):
    sp = space_factory(N=12)
    e_proj = error_norms(sp, l2_project(sp, sin_pi).coefficients, sin_pi)
    e_int = error_norms(sp, interpolate(sp, sin_pi).coefficients, sin_pi)
    assert e_proj <= e_int


def test_error_norm_against_quad():
    sp = FemSpace(build_uniform_mesh(1.0, 6), 2)
    u = interpolate(sp, sin_pi)
    f = lambda x: (np.sin(np.pi * x) - u(np.array([x]))[0]) ** 2
    oracle = np.sqrt(sum(quad(f, a, b)[0] for a, b in zip(sp.mesh.nodes[:-1], sp.mesh.nodes[1:])))
    assert error_norms(sp, u.coefficients, sin_pi) == pytest.approx(oracle, rel=1e-9)


@pytest.mark.parametrize("r", [2, 3])
def test_reproduces_piecewise_polynomials(space_factory, r):
    sp = space_factory(N=6, r=r)
    # a continuous periodic function, polynomial of degree r-1 on each element
    pts = sp.lagrange_points
    rng = np.random.default_rng(r)
    c = rng.standard_normal(sp.dof_count)
    x = np.linspace(-1, 1, 333, endpoint=False)
    u = StateVector(c, sp)
    again = interpolate(sp, u)
    np.testing.assert_allclose(again.coefficients, c, atol=1e-13)
    np.testing.assert_allclose(again(x), u(x), atol=1e-13)
    assert pts.shape == (sp.dof_count,)


@pytest.mark.parametrize("r", [2, 3])
def test_best_approximation_orders(r):
    l2, h1 = [], []
    for N in (8, 16, 32, 64):
        sp = FemSpace(build_uniform_mesh(1.0, N), r)
        c = l2_project(sp, sin_pi).coefficients
        e0, e1 = error_norms(sp, c, sin_pi, lambda x: np.pi * np.cos(np.pi * x))
        l2.append(e0)
        h1.append(e1)
    s0 = np.polyfit(np.log(2.0 / np.array([8, 16, 32, 64])), np.log(l2), 1)[0]
    s1 = np.polyfit(np.log(2.0 / np.array([8, 16, 32, 64])), np.log(h1), 1)[0]
    assert abs(s0 - r) < 0.15
    assert abs(s1 - (r - 1)) < 0.15


def test_state_vector_length_checked(space_factory):
    with pytest.raises(ValueError):
        StateVector(np.zeros(3), space_factory(N=4))


def test_state_vector_copy_is_independent(space_factory):
    u = interpolate(space_factory(N=4), sin_pi, time=0.5)
    v = u.copy(time=1.0)
    v.coefficients[0] = 99.0
    assert u.coefficients[0] != 99.0
    assert (u.time, v.time) == (0.5, 1.0)


def test_mass_total_is_period(space_factory):
    for r in (2, 3):
        M = mass_matrix(space_factory(N=7, r=r, L=1.5))
        assert M.sum() == pytest.approx(3.0, rel=1e-14)
