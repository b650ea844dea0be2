from math import gamma

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from fowler.experiments import example1
from fowler.fem_space import FemSpace, StateVector, interpolate
from fowler.kernel import (KernelConfig, apply_I_split, apply_J_function, apply_J_pointwise,
                           build_symbol_table, fourier_symbol, growth_constant_w0,
                           incomplete_oscillatory, infinite_line_symbol_I, kernel_moment,
                           oscillatory_limit, oscillatory_tail, singular_integral)
from fowler.mesh import build_uniform_mesh

A = 1.0 / 3.0


def singular_quad(f, T, **kw):
    """Adaptive oracle for int_0^T xi^(-1/3) f(xi) dxi (algebraic-weight QUADPACK rule)."""
    return quad(f, 0.0, T, weight="alg", wvar=(-A, 0.0), limit=200, **kw)[0]


# -- config and moments ----------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(exponent=0.0), dict(exponent=1.0), dict(truncation=0.0),
                                dict(split_r=-1.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        KernelConfig(**kw)


def test_reach_defaults_to_half_period():
    assert KernelConfig().reach(2.5) == 2.5
    assert KernelConfig(truncation=0.7).reach(2.5) == 0.7


@pytest.mark.parametrize("a, b, p, expected", [
    (0.0, 1.0, 0, 1.5),
    (0.0, 8.0, 0, 6.0),
    (0.5, 1.0, 1, 0.6 * (1.0 - 0.5 ** (5.0 / 3.0))),
])
def test_kernel_moment_examples(a, b, p, expected):
    assert kernel_moment(a, b, p, A) == pytest.approx(expected, rel=1e-14)


def test_kernel_moment_rejects_negative():
    with pytest.raises(ValueError):
        kernel_moment(-0.1, 1.0, 0, A)


@given(st.floats(0, 3), st.floats(0, 3), st.floats(0, 3), st.integers(0, 4))
def test_kernel_moment_additive(a, b, c, p):
    a, b, c = sorted((a, b, c))
    total = kernel_moment(a, c, p, A)
    assert kernel_moment(a, b, p, A) + kernel_moment(b, c, p, A) == pytest.approx(total, abs=1e-12)


def test_singular_integral_against_quad():
    f = lambda x: np.cos(3.0 * x) + x ** 2
    assert singular_integral(f, 0.0, 1.3, A) == pytest.approx(singular_quad(f, 1.3), rel=1e-12)
    g = lambda x: np.exp(-x)
    oracle = quad(lambda x: x ** -A * np.exp(-x), 0.4, 2.0)[0]
    assert singular_integral(g, 0.4, 2.0, A) == pytest.approx(oracle, rel=1e-12)


# -- the oscillatory integral ----------------------------------------------------

def test_incomplete_oscillatory_zero():
    assert incomplete_oscillatory(0.0) == 0


@pytest.mark.parametrize("b", [0.3, 1.0, 2.5, 17.0])
def test_incomplete_oscillatory_against_quad(b):
    re = singular_quad(np.cos, b)
    im = -singular_quad(np.sin, b)
    assert incomplete_oscillatory(b) == pytest.approx(complex(re, im), abs=1e-12)


def test_incomplete_oscillatory_limits():
    b = 1.0e4
    value = incomplete_oscillatory(b) + oscillatory_tail(b)
    assert value.real == pytest.approx(0.5 * gamma(2.0 / 3.0), abs=1e-6)
    assert value.imag == pytest.approx(-np.sqrt(3.0) / 2.0 * gamma(2.0 / 3.0), abs=1e-6)
    assert oscillatory_limit() == pytest.approx(value, abs=1e-6)


def test_tail_matches_difference():
    b1, b2 = 40.0, 60.0
    direct = incomplete_oscillatory(b2) - incomplete_oscillatory(b1)
    via_tails = oscillatory_tail(b1) - oscillatory_tail(b2)
    assert direct == pytest.approx(via_tails, abs=1e-10)


# -- Fourier symbols -------------------------------------------------------------

def test_symbol_zero_mode():
    assert fourier_symbol(0, 1.0) == 0
    tab = build_symbol_table(1.0, 8)
    assert tab.s_J[0] == 0 and tab.s_I[0] == 0


@given(st.integers(1, 200), st.floats(0.5, 3.0))
@settings(max_examples=30)
def test_symbol_conjugate_symmetry(n, L):
    assert fourier_symbol(-n, L) == np.conj(fourier_symbol(n, L))


def test_symbol_n1_against_quad():
    re = singular_quad(lambda x: np.cos(np.pi * x), 1.0, epsabs=1e-14, epsrel=1e-13)
    im = -singular_quad(lambda x: np.sin(np.pi * x), 1.0, epsabs=1e-14, epsrel=1e-13)
    expected = 1j * np.pi * complex(re, im)
    assert abs(fourier_symbol(1, 1.0) - expected) < 1e-10


def test_symbol_is_eigenvalue_of_J():
    # J[exp(i k x)](x0) computed by direct singular quadrature
    L, n, x0 = 1.0, 3, 0.37
    k = np.pi * n / L
    re = singular_quad(lambda s: np.real(1j * k * np.exp(1j * k * (x0 - s))), L)
    im = singular_quad(lambda s: np.imag(1j * k * np.exp(1j * k * (x0 - s))), L)
    assert complex(re, im) == pytest.approx(fourier_symbol(n, L) * np.exp(1j * k * x0), abs=1e-9)


def test_symbol_bounded_by_two_thirds_power():
    n = np.arange(1, 513)
    ratio = np.abs([fourier_symbol(m, 1.0) for m in n]) / (1.0 + n ** 2.0) ** (1.0 / 3.0)
    C = ratio[:64].max()
    assert np.all(ratio <= C)


def test_long_truncation_approaches_infinite_line():
    k = np.pi
    errs = []
    for T in (1e2, 1e4):
        s_I = 1j * k * fourier_symbol(1, 1.0, KernelConfig(truncation=T))
        errs.append(abs(s_I - infinite_line_symbol_I(k)) / abs(infinite_line_symbol_I(k)))
    assert errs[1] < errs[0] < 0.2
    assert errs[1] < 0.05


def test_infinite_line_symbol_constant():
    v = infinite_line_symbol_I(np.array([1.0, -1.0]))
    g = gamma(2.0 / 3.0)
    assert v[0] == pytest.approx(-g * complex(0.5, -np.sqrt(3) / 2))
    assert v[1] == pytest.approx(-g * complex(0.5, np.sqrt(3) / 2))


# -- growth constant -------------------------------------------------------------

def test_w0_zero_without_kernel():
    w0, _ = growth_constant_w0(1.0, 64, KernelConfig(coefficient=0.0))
    assert w0 == 0.0


def test_w0_zero_for_unit_viscosity():
    # every mode is dissipative when eps = 1 on [-1, 1]
    assert growth_constant_w0(1.0, 128, eps=1.0)[0] == 0.0


def test_w0_positive_and_stable_under_refinement():
    w0, n_star = growth_constant_w0(1.0, 512, eps=0.1)
    w1, n_star1 = growth_constant_w0(1.0, 1024, eps=0.1)
    assert 0.0 < w0 < np.inf
    assert n_star < 10
    assert abs(w1 - w0) < 1e-12
    assert n_star1 == n_star


def test_w0_requires_modes():
    with pytest.raises(ValueError):
        growth_constant_w0(1.0, 0)


# -- physical-space application --------------------------------------------------

@pytest.mark.parametrize("r", [2, 3])
def test_J_annihilates_constants(r):
    sp = FemSpace(build_uniform_mesh(1.0, 12), r)
    u = StateVector(np.full(sp.dof_count, 2.5), sp)
    x = np.linspace(-1, 1, 41)
    assert np.max(np.abs(apply_J_pointwise(u, x))) < 1e-14


def test_J_of_sine_against_quad():
    sp = FemSpace(build_uniform_mesh(1.0, 256), 2)
    u = interpolate(sp, lambda x: np.sin(np.pi * x))
    oracle = singular_quad(lambda s: np.pi * np.cos(np.pi * (0.0 - s)), 1.0)
    assert apply_J_pointwise(u, 0.0) == pytest.approx(oracle, abs=1e-3)


def test_J_of_example1_is_finite():
    sp = FemSpace(build_uniform_mesh(1.0, 20), 2)
    u = interpolate(sp, example1)
    # includes every kink of the datum and the points right next to them
    x = np.concatenate([np.linspace(-1, 1, 401), [-0.6, -0.4, 0.0, 0.2, -0.6 + 1e-12, 0.2 - 1e-12]])
    vals = apply_J_pointwise(u, x)
    assert np.all(np.isfinite(vals))
    assert np.max(np.abs(vals)) < 10.0


def test_J_function_close_to_discrete():
    sp = FemSpace(build_uniform_mesh(1.0, 64), 3)
    u = interpolate(sp, lambda x: np.cos(np.pi * x))
    x = np.array([-0.81, 0.05, 0.6])
    smooth = apply_J_function(lambda y: -np.pi * np.sin(np.pi * y), x, A, 1.0)
    assert np.allclose(apply_J_pointwise(u, x), smooth, atol=2e-4)


@pytest.mark.parametrize("r", [2, 3])
def test_pointwise_agrees_with_symbol(r):
    n, x = 2, np.array([-0.77, -0.1, 0.33, 0.91])
    exact = np.real(fourier_symbol(n, 1.0) * np.exp(1j * np.pi * n * x))
    errs = []
    for N in (32, 64, 128):
        sp = FemSpace(build_uniform_mesh(1.0, N), r)
        u = interpolate(sp, lambda y: np.cos(np.pi * n * y))
        errs.append(np.max(np.abs(apply_J_pointwise(u, x) - exact)))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > r - 1 - 0.3)


def test_J_matches_symbol_after_truncation_change():
    # truncation shorter than the period
    cfg = KernelConfig(truncation=0.4)
    sp = FemSpace(build_uniform_mesh(1.0, 128), 3)
    u = interpolate(sp, lambda y: np.cos(np.pi * y))
    x = np.array([0.2])
    exact = np.real(fourier_symbol(1, 1.0, cfg) * np.exp(1j * np.pi * x))
    assert apply_J_pointwise(u, x, cfg) == pytest.approx(exact, abs=1e-5)


# -- the split I = I1 + I2 --------------------------------------------------------

def _sine():
    return (lambda x: np.sin(np.pi * x), lambda x: np.pi * np.cos(np.pi * x),
            lambda x: -np.pi ** 2 * np.sin(np.pi * x))


def test_split_of_constant():
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    i1, i2, total = apply_I_split(lambda x: np.ones_like(x), zero, zero, 0.3)
    assert (i1, i2, total) == (0.0, 0.0, 0.0)


def test_split_independent_of_radius():
    f = _sine()
    a = apply_I_split(*f, 0.4, KernelConfig(split_r=0.1))[2]
    b = apply_I_split(*f, 0.4, KernelConfig(split_r=0.3))[2]
    assert abs(a - b) < 1e-8


def test_split_matches_direct_quadrature():
    phi, dphi, d2phi = _sine()
    direct = singular_quad(lambda s: d2phi(0.0 - s), 1.0, epsabs=1e-13, epsrel=1e-13)
    assert apply_I_split(phi, dphi, d2phi, 0.0, KernelConfig(split_r=0.25))[2] == pytest.approx(direct, abs=1e-9)


def test_split_radius_must_be_inside_reach():
    with pytest.raises(ValueError):
        apply_I_split(*_sine(), 0.0, KernelConfig(split_r=1.0), L=1.0)
