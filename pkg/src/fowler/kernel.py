"""The weakly singular kernel ``xi**(-alpha)`` and the operators built on it.

``J[u](x) = int_0^T xi**(-alpha) u'(x - xi) dxi`` is the flux-form nonlocal
operator used by the scheme; ``I[u]`` is the same integral applied to
``u''``. ``T`` is the kernel truncation (the half-period by default).

Fourier convention: for ``e_n(x) = exp(i k_n x)`` with ``k_n = pi n / L``,
``J[e_n] = s_J(n) e_n`` with ``s_J(n) = i k_n int_0^T xi**(-alpha) exp(-i k_n xi) dxi``.
"""

from dataclasses import dataclass
from math import gamma

import numpy as np
from scipy.special import binom

from .fem_space import FemSpace, StateVector, gauss_legendre_01

_PANEL_POINTS = 24


@dataclass(frozen=True)
class KernelConfig:
    """Kernel exponent, truncation length and splitting radius.

    ``truncation=None`` means "use the half-period of the mesh". ``coefficient``
    scales the whole operator; 0 switches the nonlocal term off.
    """

    exponent: float = 1.0 / 3.0
    truncation: float = None
    split_r: float = 0.25
    coefficient: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.exponent < 1.0:
            raise ValueError(f"kernel exponent must lie in (0, 1), got {self.exponent}")
        if self.truncation is not None and not self.truncation > 0:
            raise ValueError(f"truncation must be positive, got {self.truncation}")
        if not self.split_r > 0:
            raise ValueError(f"split_r must be positive, got {self.split_r}")

    @property
    def enabled(self) -> bool:
        return self.coefficient != 0.0

    def reach(self, L: float) -> float:
        return float(L if self.truncation is None else self.truncation)


def kernel_moment(a, b, p, alpha):
    """``int_a^b xi**(p - alpha) dxi`` in closed form (vectorised over a, b)."""
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("kernel moments need a >= 0")
    beta = p - alpha + 1.0
    return (np.asarray(b, dtype=float) ** beta - a ** beta) / beta


# -- singular integrals of smooth integrands -----------------------------------

def _substituted_nodes(T, alpha, n_panels, n_points=_PANEL_POINTS):
    """Nodes/weights for ``int_0^T xi**(-alpha) f(xi) dxi``.

    Uses ``xi = t**(1/(1-alpha))``, after which the weight is the constant
    ``1/(1-alpha)`` and the integrand is smooth; composite Gauss in ``t``.
    """
    beta = 1.0 - alpha
    tmax = T ** beta
    s, w = gauss_legendre_01(n_points)
    edges = np.linspace(0.0, tmax, n_panels + 1)
    t = (edges[:-1, None] + np.diff(edges)[:, None] * s).ravel()
    wt = (np.diff(edges)[:, None] * w).ravel() / beta
    return t ** (1.0 / beta), wt


def singular_integral(f, a, b, alpha, n_panels=None):
    """``int_a^b xi**(-alpha) f(xi) dxi`` for smooth ``f`` and ``0 <= a < b``.

    ``f`` must accept arrays. The range is split at ``a``; the singular
    part is handled by the power substitution, the rest by composite Gauss.
    """
    if n_panels is None:
        n_panels = max(8, int(np.ceil(8 * (b - a))))
    if a == 0.0:
        xi, w = _substituted_nodes(b, alpha, n_panels)
        return np.sum(w * f(xi), axis=-1)
    s, w = gauss_legendre_01(_PANEL_POINTS)
    edges = np.geomspace(a, b, n_panels + 1)
    xi = (edges[:-1, None] + np.diff(edges)[:, None] * s).ravel()
    wt = (np.diff(edges)[:, None] * w).ravel()
    return np.sum(wt * xi ** (-alpha) * f(xi), axis=-1)


def apply_J_function(dv, x, alpha, T, n_panels=None):
    """``J[v](x)`` for a continuous target given by its derivative ``dv``."""
    x = np.asarray(x, dtype=float)
    if n_panels is None:
        n_panels = max(16, int(np.ceil(16 * T)))
    xi, w = _substituted_nodes(T, alpha, n_panels)
    return (dv(x[..., None] - xi) * w).sum(axis=-1)


def incomplete_oscillatory(b, alpha=1.0 / 3.0, n_terms=40):
    """``int_0^b exp(-i u) u**(-alpha) du``.

    On ``[0, min(b, 1)]`` the exponential is expanded in its Taylor series and
    integrated against ``u**(-alpha)`` term by term (exact moments); the rest
    uses unit-length Gauss-Legendre panels.
    """
    b = float(b)
    if b < 0:
        raise ValueError("upper limit must be non-negative")
    if b == 0.0:
        return 0j
    c = min(b, 1.0)
    m = np.arange(n_terms)
    fact = np.cumprod(np.r_[1.0, np.arange(1, n_terms)])
    head = np.sum((-1j) ** m * c ** (m + 1 - alpha) / (fact * (m + 1 - alpha)))
    if b <= c:
        return complex(head)
    n_panels = int(np.ceil(b - c))
    s, w = gauss_legendre_01(_PANEL_POINTS)
    edges = np.linspace(c, b, n_panels + 1)
    u = (edges[:-1, None] + np.diff(edges)[:, None] * s).ravel()
    wu = (np.diff(edges)[:, None] * w).ravel()
    return complex(head + np.sum(wu * np.exp(-1j * u) * u ** (-alpha)))


def oscillatory_tail(b, alpha=1.0 / 3.0, n_terms=12):
    """Asymptotic expansion of ``int_b^inf exp(-i u) u**(-alpha) du`` for large b."""
    total = 0j
    deriv = b ** (-alpha)  # m-th derivative of u**(-alpha) at b
    for m in range(n_terms):
        total += (-1j) ** (m + 1) * deriv
        deriv *= (-alpha - m) / b
    return complex(np.exp(-1j * b) * total)


def oscillatory_limit(alpha=1.0 / 3.0):
    """``int_0^inf exp(-i u) u**(-alpha) du = Gamma(1-alpha) exp(-i pi (1-alpha)/2)``."""
    phase = 0.5 * np.pi * (1.0 - alpha)
    return gamma(1.0 - alpha) * complex(np.cos(phase), -np.sin(phase))


# -- Fourier side --------------------------------------------------------------

def fourier_symbol(n, L, cfg: KernelConfig = KernelConfig()):
    """Multiplier ``s_J(n)`` with ``J[exp(i k_n x)] = s_J(n) exp(i k_n x)``."""
    n = int(n)
    if n == 0 or not cfg.enabled:
        return 0j
    T = cfg.reach(L)
    k = np.pi * abs(n) / L
    alpha = cfg.exponent
    # int_0^T xi^-alpha e^{-ik xi} dxi = k^(alpha-1) int_0^{kT} u^-alpha e^{-iu} du
    integral = k ** (alpha - 1.0) * incomplete_oscillatory(k * T, alpha)
    s = cfg.coefficient * 1j * k * integral
    return s if n > 0 else s.conjugate()


def infinite_line_symbol_I(k, alpha=1.0 / 3.0):
    """Symbol of the untruncated ``I`` in the ``exp(i k x)`` convention.

    ``-|k|**(1+alpha) Gamma(1-alpha) (cos(pi(1-alpha)/2) - i sgn(k) sin(pi(1-alpha)/2))``;
    for alpha = 1/3 this is ``-Gamma(2/3) (1/2 - i sgn(k) sqrt(3)/2) |k|**(4/3)``.
    """
    k = np.asarray(k, dtype=float)
    phase = 0.5 * np.pi * (1.0 - alpha)
    return -np.abs(k) ** (1.0 + alpha) * gamma(1.0 - alpha) * (
        np.cos(phase) - 1j * np.sign(k) * np.sin(phase))


@dataclass(frozen=True)
class SymbolTable:
    """Per-mode multipliers for ``J`` and ``I`` and the growth constant ``w0``."""

    L: float
    n: np.ndarray
    s_J: np.ndarray
    s_I: np.ndarray
    eps: float
    w0: float
    cfg: KernelConfig

    def wavenumbers(self):
        return np.pi * self.n / self.L

    def linear_rates(self):
        """Rate ``lambda_n`` in ``d/dt c_n = lambda_n c_n`` for the linear part."""
        k = self.wavenumbers()
        return -self.eps * k * k - 1j * k * self.s_J

    def J(self, n):
        return self.s_J[np.abs(n)] if n >= 0 else self.s_J[-n].conjugate()


def build_symbol_table(L, n_max, cfg: KernelConfig = KernelConfig(), eps=1.0) -> SymbolTable:
    """Symbols for modes ``0..n_max`` (negative modes follow by conjugation)."""
    n = np.arange(n_max + 1)
    s_J = np.array([fourier_symbol(m, L, cfg) for m in n])
    k = np.pi * n / L
    s_I = 1j * k * s_J
    rates = (-eps * k * k - 1j * k * s_J).real
    return SymbolTable(L=L, n=n, s_J=s_J, s_I=s_I, eps=eps,
                       w0=float(max(0.0, rates.max())), cfg=cfg)


def growth_constant_w0(L, n_max, cfg: KernelConfig = KernelConfig(), eps=1.0):
    """Largest L2 growth rate over modes ``|n| <= n_max`` (0 if all decay).

    Per mode, ``d/dt |c_n|^2 / 2 = Re(-eps k^2 - i k s_J(n)) |c_n|^2``.
    Returns ``(w0, n_star)`` where ``n_star`` attains the maximum.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    table = build_symbol_table(L, n_max, cfg, eps)
    rates = table.linear_rates().real
    n_star = int(np.argmax(rates))
    return table.w0, n_star


# -- physical space ------------------------------------------------------------

def _pieces(space: FemSpace, x, T):
    """Split ``xi in [0, T]`` at the mesh nodes seen from each point ``x``.

    Yields ``(elem, lo, hi, s0, width)`` arrays (one entry per point) for the
    k-th element to the left of ``x``; on that piece ``x - xi`` lies in
    ``elem`` at reference coordinate ``s0 - xi / width``.
    """
    mesh = space.mesh
    nel = mesh.n_elements
    x = mesh.wrap(np.asarray(x, dtype=float))
    m = np.searchsorted(mesh.nodes, x, side="right") - 1
    m = np.clip(m, 0, nel - 1)
    widths = mesh.widths
    k = 0
    while True:
        idx = m - k
        elem = np.mod(idx, nel)
        shift = np.floor_divide(idx, nel) * mesh.period
        left = mesh.nodes[elem] + shift
        width = widths[elem]
        lo = np.maximum(x - (left + width), 0.0)
        hi = np.minimum(x - left, T)
        if np.all(lo >= T):
            break
        yield elem, lo, np.maximum(hi, lo), (x - left) / width, width
        k += 1


def _piece_weights(space: FemSpace, lo, hi, s0, width, alpha):
    """``int_lo^hi xi**(-alpha) dphi_k/dx(x - xi) dxi`` for local functions k."""
    D = space.shape_deriv_coeffs  # (r, r-1): d/ds of local basis in powers of s
    deg = D.shape[1]
    mom = np.stack([kernel_moment(lo, hi, p, alpha) for p in range(deg)], axis=-1)
    # s**q = (s0 - xi/width)**q expanded in powers of xi
    out = np.zeros(lo.shape + (space.r,))
    for q in range(deg):
        term = np.zeros_like(lo)
        for p in range(q + 1):
            term = term + binom(q, p) * s0 ** (q - p) * (-1.0 / width) ** p * mom[..., p]
        out += term[..., None] * D[:, q]
    return out / width[..., None]


def J_matrix_at(space: FemSpace, x, cfg: KernelConfig):
    """Dense ``G[q, j] = J[phi_j](x_q)`` for points ``x`` (exact kernel moments)."""
    x = np.asarray(x, dtype=float).ravel()
    T = cfg.reach(space.mesh.L)
    G = np.zeros((x.size, space.dof_count))
    if not cfg.enabled:
        return G
    rows = np.arange(x.size)
    for elem, lo, hi, s0, width in _pieces(space, x, T):
        vals = _piece_weights(space, lo, hi, s0, width, cfg.exponent)
        dofs = space.element_dofs[elem]
        for k in range(space.r):
            # one entry per row for a fixed local index, so no duplicates
            G[rows, dofs[:, k]] += vals[:, k]
    return cfg.coefficient * G


def apply_J_pointwise(u: StateVector, x, cfg: KernelConfig = KernelConfig()):
    """``J[u_h](x)`` evaluated element by element with exact kernel moments."""
    x = np.asarray(x, dtype=float)
    G = J_matrix_at(u.space, x, cfg)
    out = G @ u.coefficients
    return out.reshape(x.shape) if x.ndim else float(out[0])


def apply_I_split(phi, dphi, d2phi, x, cfg: KernelConfig = KernelConfig(), L=1.0):
    """``(I1, I2, I1 + I2)`` for the splitting ``I = I1 + I2`` at radius ``cfg.split_r``.

    ``I1 = int_0^r xi^-a phi''(x-xi)``; ``I2`` comes from integrating the rest
    by parts: ``-a int_r^T xi^(-a-1) phi'(x-xi) + r^-a phi'(x-r) - T^-a phi'(x-T)``.
    The last term is the boundary contribution of the truncation.
    """
    T = cfg.reach(L)
    r = cfg.split_r
    a = cfg.exponent
    if r >= T:
        raise ValueError(f"split radius {r} must be smaller than the truncation {T}")
    x = float(x)
    I1 = singular_integral(lambda xi: d2phi(x - xi), 0.0, r, a)
    tail = singular_integral(lambda xi: dphi(x - xi) / xi, r, T, a)
    I2 = -a * tail + r ** (-a) * dphi(x - r) - T ** (-a) * dphi(x - T)
    c = cfg.coefficient
    return c * float(I1), c * float(I2), c * float(I1 + I2)
