"""Periodic C0 Lagrange finite-element spaces of degree ``r - 1``.

Global numbering: element ``e`` owns the local points
``s = 0, 1/(r-1), ..., 1`` and its local index ``k`` maps to the global DOF
``e*(r-1) + k`` modulo ``dof_count``, so the right end of the last element is
identified with DOF 0.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import legendre

from .mesh import Mesh, element_containing


def gauss_legendre_01(n):
    """Gauss-Legendre points and weights on [0, 1]."""
    t, w = legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


def _poly_eval(coeffs, s):
    # coeffs[..., q] multiplies s**q
    s = np.asarray(s, dtype=float)
    powers = s[..., None] ** np.arange(coeffs.shape[-1])
    return powers @ coeffs.T


@dataclass(frozen=True, eq=False)
class FemSpace:
    mesh: Mesh
    r: int = 2
    quadrature_order: int = None

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 2:
            raise ValueError(f"order parameter r must be an integer >= 2, got {self.r}")
        if self.quadrature_order is None:
            object.__setattr__(self, "quadrature_order", self.r + 2)

    @property
    def degree(self) -> int:
        return self.r - 1

    @property
    def dof_count(self) -> int:
        return self.mesh.n_elements * self.degree

    @cached_property
    def local_points(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.r)

    @cached_property
    def shape_coeffs(self) -> np.ndarray:
        """Monomial coefficients of the reference Lagrange basis, one row per local function."""
        V = np.vander(self.local_points, self.r, increasing=True)
        return np.linalg.inv(V).T

    @cached_property
    def shape_deriv_coeffs(self) -> np.ndarray:
        """Monomial coefficients of d/ds of the reference basis (degree r-2)."""
        q = np.arange(1, self.r)
        return self.shape_coeffs[:, 1:] * q

    def shape(self, s):
        return _poly_eval(self.shape_coeffs, s)

    def shape_deriv(self, s):
        return _poly_eval(self.shape_deriv_coeffs, s)

    @cached_property
    def element_dofs(self) -> np.ndarray:
        e = np.arange(self.mesh.n_elements)[:, None]
        k = np.arange(self.r)[None, :]
        return (e * self.degree + k) % self.dof_count

    @cached_property
    def lagrange_points(self) -> np.ndarray:
        """Coordinate of every global DOF, in [-L, L)."""
        pts = np.empty(self.dof_count)
        left = self.mesh.nodes[:-1, None]
        width = self.mesh.widths[:, None]
        local = left + width * self.local_points[None, :-1]
        pts[self.element_dofs[:, :-1]] = local
        return pts

    def quadrature(self, n=None):
        """Physical points, weights (both (N, n)) and reference values (n, r), slopes (N, n, r)."""
        n = self.quadrature_order if n is None else n
        s, w = gauss_legendre_01(n)
        width = self.mesh.widths[:, None]
        x = self.mesh.nodes[:-1, None] + width * s[None, :]
        B = self.shape(s)
        dB = self.shape_deriv(s)[None, :, :] / width[:, :, None]
        return x, width * w[None, :], B, dB

    # -- evaluation of discrete functions -------------------------------------

    def _locate(self, x):
        x = self.mesh.wrap(x)
        e = element_containing(self.mesh, x)
        s = (x - self.mesh.nodes[e]) / self.mesh.widths[e]
        return e, s

    def evaluate(self, coeffs, x, derivative=False):
        """Values (or first derivatives) of ``sum_j c_j phi_j`` at points ``x``."""
        c = np.asarray(coeffs)
        x = np.asarray(x, dtype=float)
        e, s = self._locate(x.ravel())
        local = c[self.element_dofs[e]]
        if derivative:
            vals = self.shape_deriv(s) / self.mesh.widths[e][:, None]
        else:
            vals = self.shape(s)
        return np.sum(local * vals, axis=-1).reshape(x.shape)


@dataclass
class StateVector:
    """DOF coefficients of a discrete solution at time ``time``."""

    coefficients: np.ndarray
    space: FemSpace = field(repr=False)
    time: float = 0.0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.space.dof_count,):
            raise ValueError(
                f"state has {self.coefficients.size} coefficients, "
                f"space needs {self.space.dof_count}"
            )

    def __call__(self, x):
        return self.space.evaluate(self.coefficients, x)

    def derivative(self, x):
        return self.space.evaluate(self.coefficients, x, derivative=True)

    def copy(self, **changes):
        c = changes.pop("coefficients", self.coefficients.copy())
        return StateVector(c, changes.pop("space", self.space), changes.pop("time", self.time))


def basis_eval(space: FemSpace, j: int, x):
    """Value of the global periodic basis function ``phi_j`` at ``x``."""
    if not 0 <= j < space.dof_count:
        raise IndexError(f"basis index {j} outside [0, {space.dof_count})")
    c = np.zeros(space.dof_count)
    c[j] = 1.0
    return space.evaluate(c, x)


def interpolate(space: FemSpace, f, time=0.0) -> StateVector:
    """Nodal interpolant of ``f`` at the Lagrange points."""
    return StateVector(np.asarray(f(space.lagrange_points), dtype=float), space, time)


def mass_matrix(space: FemSpace) -> np.ndarray:
    x, w, B, _ = space.quadrature()
    local = np.einsum("en,ni,nj->eij", w, B, B)
    return scatter_matrix(space, local)


def scatter_matrix(space: FemSpace, local: np.ndarray) -> np.ndarray:
    """Sum element matrices ``local[e, i, j]`` into a dense global matrix."""
    n = space.dof_count
    dofs = space.element_dofs
    A = np.zeros((n, n))
    rows = np.repeat(dofs, space.r, axis=1).ravel()
    cols = np.tile(dofs, (1, space.r)).ravel()
    np.add.at(A, (rows, cols), local.reshape(len(dofs), -1).ravel())
    return A


def scatter_vector(space: FemSpace, local: np.ndarray) -> np.ndarray:
    return np.bincount(space.element_dofs.ravel(), weights=local.ravel(),
                       minlength=space.dof_count)


def load_vector(space: FemSpace, f, n_quad=None) -> np.ndarray:
    """``b_i = (f, phi_i)`` by Gauss quadrature."""
    x, w, B, _ = space.quadrature(n_quad)
    fx = np.asarray(f(x), dtype=float)
    return scatter_vector(space, np.einsum("en,en,ni->ei", w, fx, B))


def l2_project(space: FemSpace, f, n_quad=None, time=0.0) -> StateVector:
    """Orthogonal L2 projection of ``f`` onto the space."""
    n_quad = n_quad or space.quadrature_order + 4
    M = mass_matrix(space)
    b = load_vector(space, f, n_quad)
    return StateVector(np.linalg.solve(M, b), space, time)


def l2_norm(space: FemSpace, coeffs) -> float:
    x, w, B, _ = space.quadrature()
    u = np.asarray(coeffs)[space.element_dofs] @ B.T
    return float(np.sqrt(np.sum(w * u * u)))


def error_norms(space: FemSpace, coeffs, f, df=None, n_quad=None):
    """L2 error ``||f - u_h||`` and, if ``df`` is given, ``||f' - u_h'||``."""
    n_quad = n_quad or space.quadrature_order + 6
    x, w, B, dB = space.quadrature(n_quad)
    local = np.asarray(coeffs)[space.element_dofs]
    u = local @ B.T
    err = float(np.sqrt(np.sum(w * (f(x) - u) ** 2)))
    if df is None:
        return err
    du = np.einsum("ei,eni->en", local, dB)
    return err, float(np.sqrt(np.sum(w * (df(x) - du) ** 2)))
