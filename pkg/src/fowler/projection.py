"""Elliptic projection onto the finite-element space.

``P v`` solves ``a(P v, chi) = a(v, chi)`` for every basis function ``chi``,
with ``a(u, w) = eps (u', w') - (J[u], w') + lam (u, w)`` and ``lam``
chosen above the Garding constant so that ``a`` is coercive.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .assembly import OperatorSet, assemble_operators, coercivity_shift, garding_constant
from .fem_space import FemSpace, StateVector, error_norms, scatter_vector
from .kernel import KernelConfig, apply_J_function, apply_J_pointwise
from .mesh import build_uniform_mesh


@dataclass(frozen=True, eq=False)
class ProjectionProblem:
    """Operators with shift ``lam`` plus the target ``v`` and its derivative.

    ``target`` may also be a :class:`StateVector`; ``J[v]`` is then computed
    exactly from the kernel moments instead of by quadrature, which cannot
    resolve the kinks of a piecewise polynomial.
    """

    ops: OperatorSet
    target: Callable
    dtarget: Callable = None
    alpha0: float = None

    def __post_init__(self):
        if isinstance(self.target, StateVector):
            object.__setattr__(self, "dtarget", self.target.derivative)
        elif self.dtarget is None:
            raise ValueError("dtarget is required for a function target")
        if self.alpha0 is not None and not self.ops.lam > self.alpha0:
            raise ValueError(f"shift lam={self.ops.lam} must exceed the Garding constant {self.alpha0}")


def make_projection_problem(space: FemSpace, v, dv, kernel: KernelConfig = KernelConfig(),
                            eps=1.0, margin=2.0, min_shift=1.0) -> ProjectionProblem:
    """Assemble operators and pick ``lam = max(margin * alpha0, min_shift)``."""
    ops = assemble_operators(space, kernel, eps)
    alpha0 = garding_constant(ops)
    lam = coercivity_shift(ops, margin, min_shift)
    return ProjectionProblem(ops.with_shift(lam), v, dv, alpha0)


def projection_rhs(pb: ProjectionProblem, n_quad=None) -> np.ndarray:
    """``a(v, phi_i)`` with ``J[v]`` evaluated on the continuous target."""
    ops = pb.ops
    space = ops.space
    if n_quad is None:
        # a discrete target must see the same outer rule as the assembled N
        n_quad = space.r + 3 if isinstance(pb.target, StateVector) else space.r + 6
    x, w, B, dB = space.quadrature(n_quad)
    v = pb.target(x)
    dv = pb.dtarget(x)
    if not ops.kernel.enabled:
        Jv = np.zeros_like(x)
    elif isinstance(pb.target, StateVector):
        Jv = apply_J_pointwise(pb.target, x, ops.kernel)
    else:
        Jv = ops.kernel.coefficient * apply_J_function(
            pb.dtarget, x, ops.kernel.exponent, ops.kernel.reach(space.mesh.L))
    flux = ops.eps * dv - Jv
    local = np.einsum("en,en,eni->ei", w, flux, dB) + ops.lam * np.einsum("en,en,ni->ei", w, v, B)
    return scatter_vector(space, local)


def elliptic_project(pb: ProjectionProblem) -> StateVector:
    A = pb.ops.bilinear()
    rhs = projection_rhs(pb)
    try:
        lu = sla.lu_factor(A, check_finite=True)
    except (sla.LinAlgError, ValueError) as exc:
        raise ValueError(f"projection system is singular (lam too small?): {exc}") from exc
    if np.min(np.abs(np.diag(lu[0]))) < 1e-13 * np.max(np.abs(np.diag(lu[0]))):
        raise ValueError("projection system is numerically singular; lam must exceed the Garding constant")
    return StateVector(sla.lu_solve(lu, rhs), pb.ops.space)


def galerkin_residual(pb: ProjectionProblem, projected: StateVector) -> np.ndarray:
    """``a(v - P v, phi_i)`` for every basis function; zero up to rounding."""
    return projection_rhs(pb) - pb.ops.bilinear() @ projected.coefficients


@dataclass
class OrderStudy:
    element_counts: np.ndarray
    l2_errors: np.ndarray
    h1_errors: np.ndarray

    @property
    def h(self):
        return 2.0 / self.element_counts

    def slopes(self):
        """Least-squares slopes of ``log(error)`` against ``log(h)``: (L2, H1-seminorm)."""
        lh = np.log(self.h)
        return (float(np.polyfit(lh, np.log(self.l2_errors), 1)[0]),
                float(np.polyfit(lh, np.log(self.h1_errors), 1)[0]))


def projection_order_study(r, element_counts=(16, 32, 64, 128, 256), v=None, dv=None,
                           L=1.0, kernel: KernelConfig = KernelConfig(), eps=1.0) -> OrderStudy:
    """Errors of ``P v`` on a refinement ladder (default ``v = sin(pi x)``)."""
    if v is None:
        v = lambda x: np.sin(np.pi * x)
        dv = lambda x: np.pi * np.cos(np.pi * x)
    l2, h1 = [], []
    for n in element_counts:
        space = FemSpace(build_uniform_mesh(L, n), r)
        pv = elliptic_project(make_projection_problem(space, v, dv, kernel, eps))
        e0, e1 = error_norms(space, pv.coefficients, v, dv)
        l2.append(e0)
        h1.append(e1)
    return OrderStudy(np.asarray(element_counts, dtype=float), np.array(l2), np.array(h1))
