"""Discrete operators of the variational form.

``M`` (mass), ``K`` (stiffness) and ``N`` with ``N_ij = (J[phi_j], phi_i')``.
The semidiscrete system reads ``M u' + b(u) + eps K u - N u = 0``.
"""

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .fem_space import FemSpace, StateVector, mass_matrix, scatter_matrix, scatter_vector
from .kernel import KernelConfig, J_matrix_at


@dataclass(frozen=True, eq=False)
class OperatorSet:
    space: FemSpace
    M: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    N: np.ndarray = field(repr=False)
    eps: float = 1.0
    lam: float = 0.0
    kernel: KernelConfig = KernelConfig()

    def with_shift(self, lam):
        return replace(self, lam=float(lam))

    @property
    def linear(self) -> np.ndarray:
        """``eps K - N``: the linear part acting on the unknown."""
        return self.eps * self.K - self.N

    def bilinear(self) -> np.ndarray:
        """Matrix of ``a(u, v) = eps (u', v') - (J[u], v') + lam (u, v)``."""
        return self.linear + self.lam * self.M


def assemble_mass(space: FemSpace) -> np.ndarray:
    return mass_matrix(space)


def assemble_stiffness(space: FemSpace) -> np.ndarray:
    _, w, _, dB = space.quadrature()
    local = np.einsum("en,eni,enj->eij", w, dB, dB)
    return scatter_matrix(space, local)


def assemble_nonlocal(space: FemSpace, cfg: KernelConfig = KernelConfig(), n_quad=None) -> np.ndarray:
    """Dense ``N_ij = int J[phi_j](x) phi_i'(x) dx``.

    Outer Gauss quadrature with ``r + 3`` points per element; the inner
    kernel integral is exact (piecewise polynomial against ``xi**(-alpha)``).
    """
    n = space.dof_count
    if not cfg.enabled:
        return np.zeros((n, n))
    n_quad = n_quad or space.r + 3
    x, w, _, dB = space.quadrature(n_quad)
    nel = space.mesh.n_elements
    N = np.zeros((n, n))
    # blocks of elements keep G = J[phi_j](x_q) small
    block = max(1, 4096 // n_quad)
    for start in range(0, nel, block):
        sl = slice(start, min(start + block, nel))
        G = J_matrix_at(space, x[sl], cfg).reshape(-1, n_quad, n)
        local = np.einsum("en,eni,enj->eij", w[sl], dB[sl], G)
        # rows: local test functions; columns of G are already global
        np.add.at(N, space.element_dofs[sl], local)
    return N


def assemble_nonlinear(u: StateVector) -> np.ndarray:
    """``b_i = int u_h u_h' phi_i dx`` (exact Gauss quadrature)."""
    return nonlinear_vector(u.space, u.coefficients)


def nonlinear_vector(space: FemSpace, c) -> np.ndarray:
    _, w, B, dB = _nonlinear_quadrature(space)
    local = np.asarray(c)[space.element_dofs]
    u = local @ B.T
    du = np.einsum("ei,eni->en", local, dB)
    return scatter_vector(space, (w * u * du) @ B)


def _nonlinear_quadrature(space):
    cache = space.__dict__.setdefault("_nl_quad", {})
    if "q" not in cache:
        # integrand degree 3r - 4 needs ceil((3r - 3) / 2) points
        cache["q"] = space.quadrature(max(space.quadrature_order, (3 * space.r - 2) // 2))
    return cache["q"]


def assemble_operators(space: FemSpace, cfg: KernelConfig = KernelConfig(), eps=1.0) -> OperatorSet:
    return OperatorSet(space=space, M=assemble_mass(space), K=assemble_stiffness(space),
                       N=assemble_nonlocal(space, cfg), eps=float(eps), kernel=cfg)


def garding_constant(ops: OperatorSet) -> float:
    """``alpha0 = max(0, -mu_min)`` with ``mu_min`` the smallest generalized
    eigenvalue of ``sym(eps K - N)`` against ``M``."""
    A = ops.linear
    S = 0.5 * (A + A.T)
    mu = float(sla.eigh(S, ops.M, eigvals_only=True, subset_by_index=[0, 0])[0])
    # the constant mode has mu = 0 exactly; do not report its rounding error
    noise = 1e-10 * np.abs(S).sum(axis=1).max() / ops.M.diagonal().min()
    return 0.0 if mu > -noise else -mu


def coercivity_shift(ops: OperatorSet, margin=2.0, min_shift=0.0) -> float:
    """Shift ``lam = max(margin * alpha0, min_shift)`` making ``a(., .)`` coercive.

    ``alpha0`` is zero when every non-constant mode is dissipative; the
    constant mode then needs ``min_shift > 0`` for a definite form.
    """
    if margin <= 1.0:
        raise ValueError("margin must exceed 1")
    try:
        alpha0 = garding_constant(ops)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise RuntimeError(f"generalized eigensolve failed: {exc}") from exc
    return max(margin * alpha0, float(min_shift))


def dump_matrix(A, path):
    """Write the nonzero entries of ``A`` as ``row col value`` lines."""
    rows, cols = np.nonzero(A)
    with open(path, "w") as fh:
        fh.write(f"# {A.shape[0]} {A.shape[1]}\n")
        for i, j in zip(rows, cols):
            fh.write(f"{i} {j} {float(A[i, j])!r}\n")
