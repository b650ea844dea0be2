"""Crank-Nicolson time stepping with Picard iteration, plus a method-of-lines RK4 check.

One step solves the midpoint system for ``V = (U^n + U^{n+1}) / 2``::

    (2M/dt + eps K - N) V = 2M U^n / dt - b(V)

by fixed-point sweeps on ``b`` and then sets ``U^{n+1} = 2V - U^n``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .assembly import OperatorSet, nonlinear_vector
from .fem_space import StateVector

log = logging.getLogger(__name__)

#: prefactor applied to measured inverse-inequality constants (the 1/4 weights
#: of the discrete energy estimate)
STABILITY_PREFACTOR = 0.25


class StabilityError(RuntimeError):
    """The stability gate refused a configuration."""


class SolverError(RuntimeError):
    """Picard iteration did not converge or the linear solve failed."""

    def __init__(self, msg, step=None):
        super().__init__(msg if step is None else f"step {step}: {msg}")
        self.step = step


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    T: float
    picard_tol: float = 1e-11
    picard_max: int = 50
    eps: float = None
    stability_override: bool = False
    nonlinear: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.T < 0 or (self.T > 0 and self.T < self.dt * (1 - 1e-12)):
            raise ValueError(f"final time T={self.T} must be 0 or at least dt={self.dt}")
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")


@dataclass(frozen=True)
class StabilityEstimate:
    C1: float
    C2: float
    lhs: float
    passed: bool

    @property
    def pass_(self):
        return self.passed


def block_symbols(A, b):
    """Fourier symbols ``A_hat[m]`` (b x b) of a block-circulant matrix.

    Row block 0 determines the matrix: ``A[(0,p),(d,q)] = a_d[p, q]``, and
    the eigen-problems decouple into ``A_hat(theta_m) = sum_d a_d exp(i theta_m d)``.
    """
    n = A.shape[0]
    blocks = A[:b, :].reshape(b, n // b, b)  # [p, d, q]
    return np.fft.ifft(blocks, axis=1).transpose(1, 0, 2) * (n // b)


def _uniform_extremes(ops):
    b = ops.space.degree
    Mh = block_symbols(ops.M, b)
    Kh = block_symbols(ops.K, b)
    Nh = block_symbols(ops.N, b)
    lam_K = 0.0
    sig_N = 0.0
    for m in range(Mh.shape[0]):
        Mm = 0.5 * (Mh[m] + Mh[m].conj().T)
        w, V = np.linalg.eigh(Mm)
        Wm = V / np.sqrt(w)  # Wm^H M Wm = I
        Kt = Wm.conj().T @ Kh[m] @ Wm
        lam_K = max(lam_K, float(np.linalg.eigvalsh(0.5 * (Kt + Kt.conj().T))[-1]))
        sig_N = max(sig_N, float(np.linalg.norm(Wm.conj().T @ Nh[m] @ Wm, 2)))
    return lam_K, sig_N


def _dense_extremes(ops):
    Lc = np.linalg.cholesky(ops.M)
    Li = sla.solve_triangular(Lc, np.eye(Lc.shape[0]), lower=True)
    Kt = Li @ ops.K @ Li.T
    lam_K = float(np.linalg.eigvalsh(0.5 * (Kt + Kt.T))[-1])
    sig_N = float(np.linalg.norm(Li @ ops.N @ Li.T, 2)) if np.any(ops.N) else 0.0
    return lam_K, sig_N


def estimate_inverse_constants(ops: OperatorSet, prefactor=STABILITY_PREFACTOR, dense=False):
    """Measured constants ``(C1, C2)`` of the gate ``C1 dt/h^2 + C2 dt/h^(4/3) <= 1``.

    ``C1 = prefactor * eps * h^2 * lambda_max(K, M)`` (inverse inequality for
    the derivative). ``C2 = prefactor * h^(4/3) * ||N||_M``, where ``||N||_M``
    is the largest singular value of ``M^(-1/2) N M^(-1/2)``, i.e. the sharp
    constant in ``|(J[u], v')| <= ||N||_M ||u|| ||v||``.

    Uniform meshes use the block-circulant structure; ``dense=True`` forces
    the dense generalized eigensolve.
    """
    h = ops.space.mesh.h
    try:
        if ops.space.mesh.uniform and not dense:
            lam_K, sig_N = _uniform_extremes(ops)
        else:
            lam_K, sig_N = _dense_extremes(ops)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"eigensolve failed: {exc}") from exc
    C1 = prefactor * ops.eps * h ** 2 * lam_K
    C2 = prefactor * h ** (4.0 / 3.0) * sig_N
    return float(C1), float(C2)


def check_stability(cfg: SolverConfig, est, h) -> StabilityEstimate:
    C1, C2 = est
    lhs = C1 * cfg.dt / h ** 2 + C2 * cfg.dt / h ** (4.0 / 3.0)
    # the slack lets dt = max_stable_dt(...) pass despite rounding in lhs
    return StabilityEstimate(C1=C1, C2=C2, lhs=lhs, passed=bool(lhs <= 1.0 + 1e-12))


def max_stable_dt(est, h):
    """Largest ``dt`` with ``C1 dt/h^2 + C2 dt/h^(4/3) <= 1``."""
    C1, C2 = est
    denom = C1 / h ** 2 + C2 / h ** (4.0 / 3.0)
    return np.inf if denom == 0 else 1.0 / denom


class CrankNicolson:
    """Stepper holding LU factors of ``2M/dt + eps K - N`` per distinct step size.

    ``dofs`` restricts the unknowns to a subset (homogeneous Dirichlet data
    on the complement), which is how the exterior condition is imposed.
    """

    def __init__(self, ops: OperatorSet, cfg: SolverConfig, dofs=None):
        self.ops = ops
        self.cfg = cfg
        self.eps = ops.eps if cfg.eps is None else cfg.eps
        n = ops.space.dof_count
        self.dofs = np.arange(n) if dofs is None else np.asarray(dofs)
        ix = np.ix_(self.dofs, self.dofs)
        self.M = ops.M[ix]
        self.Ms = sp.csr_matrix(self.M)
        self.A = self.eps * ops.K[ix] - ops.N[ix]
        self._lu = {}
        self.last_iterations = 0

    def _factor(self, dt):
        key = float(dt)
        if key not in self._lu:
            try:
                self._lu[key] = sla.lu_factor(2.0 * self.M / dt + self.A, check_finite=True)
            except (ValueError, sla.LinAlgError) as exc:
                raise SolverError(f"linear system could not be factored: {exc}") from exc
        return self._lu[key]

    def _b(self, v):
        full = np.zeros(self.ops.space.dof_count)
        full[self.dofs] = v
        return nonlinear_vector(self.ops.space, full)[self.dofs]

    def step(self, u, dt, v0=None):
        """Advance reduced coefficients ``u`` by ``dt``; returns ``U^{n+1}``."""
        lu = self._factor(dt)
        rhs0 = 2.0 * (self.Ms @ u) / dt
        v = u.copy() if v0 is None else v0.copy()
        if not self.cfg.nonlinear:
            self.last_iterations = 1
            return 2.0 * sla.lu_solve(lu, rhs0) - u
        for it in range(1, self.cfg.picard_max + 1):
            v_new = sla.lu_solve(lu, rhs0 - self._b(v))
            d = v_new - v
            inc = float(np.sqrt(abs(d @ (self.Ms @ d))))
            v = v_new
            if not np.isfinite(inc):
                break
            if inc < self.cfg.picard_tol:
                self.last_iterations = it
                return 2.0 * v - u
        self.last_iterations = self.cfg.picard_max
        raise SolverError(f"Picard iteration did not converge (last increment {inc:.3e})")


def crank_nicolson_step(u_n: StateVector, ops: OperatorSet, cfg: SolverConfig, dt=None) -> StateVector:
    """One Crank-Nicolson step of size ``dt`` (default ``cfg.dt``)."""
    dt = cfg.dt if dt is None else dt
    stepper = CrankNicolson(ops, cfg)
    c = stepper.step(u_n.coefficients, dt)
    return StateVector(c, u_n.space, u_n.time + dt)


def _step_times(T, dt, snapshots):
    """Step end times: multiples of dt, the snapshot times and T (final step shortened)."""
    n = int(np.floor(T / dt + 1e-9))
    grid = dt * np.arange(1, n + 1)
    extra = [t for t in snapshots if 0 < t < T] + [T]
    times = np.unique(np.concatenate([grid, extra]))
    # merge points that only differ by rounding
    keep = np.concatenate([[True], np.diff(times) > 1e-12 * max(T, 1.0)])
    times = times[keep]
    times[-1] = T
    return times[times > 0]


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)
    times: np.ndarray = None
    picard_iterations: list = field(default_factory=list)
    norm_ratio: list = field(default_factory=list)
    stability: StabilityEstimate = None

    @property
    def final(self) -> StateVector:
        return self.snapshots[-1]

    @property
    def max_norm_ratio(self) -> float:
        return max(self.norm_ratio) if self.norm_ratio else 1.0


def m_norm(M, c):
    return float(np.sqrt(max(c @ (M @ c), 0.0)))


def run_simulation(u0: StateVector, ops: OperatorSet, cfg: SolverConfig, snapshots=None,
                   dofs=None, est=None) -> Trajectory:
    """March ``u0`` to ``cfg.T`` and return the requested snapshots.

    The stability gate is checked first (``est`` overrides the measured
    constants) and raises :class:`StabilityError` unless overridden.
    """
    snapshots = [cfg.T] if snapshots is None else sorted(snapshots)
    est = estimate_inverse_constants(ops) if est is None else est
    gate = check_stability(cfg, est, ops.space.mesh.h)
    if not gate.passed and not cfg.stability_override:
        raise StabilityError(
            f"stability gate failed: C1 dt/h^2 + C2 dt/h^(4/3) = {gate.lhs:.4g} > 1")
    traj = Trajectory(stability=gate)
    stepper = CrankNicolson(ops, cfg, dofs)
    sel = stepper.dofs
    full = u0.coefficients.copy()
    u = full[sel].copy()
    norm0 = m_norm(stepper.Ms, u)
    u_prev = None
    want = list(snapshots)
    if want and want[0] <= 0:
        traj.snapshots.append(u0.copy())
        want.pop(0)
    t = 0.0
    times = _step_times(cfg.T, cfg.dt, want) if cfg.T > 0 else []
    for i, t_next in enumerate(times):
        try:
            # start Picard from the extrapolated midpoint
            v0 = None if u_prev is None else 1.5 * u - 0.5 * u_prev
            step = t_next - t
            if abs(step - cfg.dt) <= 1e-9 * cfg.dt:
                step = cfg.dt  # reuse the factorization despite rounding in t
            u_new = stepper.step(u, step, v0)
        except SolverError as exc:
            raise SolverError(str(exc), step=i + 1) from exc
        u_prev, u = u, u_new
        t = t_next
        traj.picard_iterations.append(stepper.last_iterations)
        traj.norm_ratio.append(m_norm(stepper.Ms, u) / norm0 if norm0 > 0 else 0.0)
        while want and abs(want[0] - t) <= 1e-9 * max(cfg.T, 1.0):
            full = np.zeros_like(full)
            full[sel] = u
            traj.snapshots.append(StateVector(full, u0.space, t))
            want.pop(0)
    traj.times = np.array([s.time for s in traj.snapshots])
    return traj


# -- method of lines -------------------------------------------------------------

class Semidiscrete:
    """Right-hand side ``M^{-1}(-b(u) - eps K u + N u)`` with a cached Cholesky factor.

    ``dofs`` restricts the system to a subset of unknowns, as in :class:`CrankNicolson`.
    """

    def __init__(self, ops: OperatorSet, eps=None, nonlinear=True, dofs=None):
        self.ops = ops
        self.eps = ops.eps if eps is None else eps
        n = ops.space.dof_count
        self.dofs = np.arange(n) if dofs is None else np.asarray(dofs)
        ix = np.ix_(self.dofs, self.dofs)
        self.A = self.eps * ops.K[ix] - ops.N[ix]
        self.chol = sla.cho_factor(ops.M[ix])
        self.nonlinear = nonlinear

    def __call__(self, c):
        f = -self.A @ c
        if self.nonlinear:
            full = np.zeros(self.ops.space.dof_count)
            full[self.dofs] = c
            f -= nonlinear_vector(self.ops.space, full)[self.dofs]
        return sla.cho_solve(self.chol, f)


def semidiscrete_rhs(u: StateVector, ops: OperatorSet) -> np.ndarray:
    return Semidiscrete(ops)(u.coefficients)


def rk4_run(u0: StateVector, ops: OperatorSet, dt, T, eps=None, nonlinear=True, record_norms=False,
            dofs=None):
    """Classical RK4 on the semidiscrete system; returns the final state (and M-norms)."""
    rhs = Semidiscrete(ops, eps, nonlinear, dofs)
    n = int(round(T / dt))
    if not np.isclose(n * dt, T, rtol=1e-10, atol=0):
        raise ValueError("T must be an integer multiple of dt for RK4 runs")
    Ms = sp.csr_matrix(ops.M[np.ix_(rhs.dofs, rhs.dofs)])
    c = u0.coefficients[rhs.dofs].copy()
    norms = [m_norm(Ms, c)]
    for _ in range(n):
        k1 = rhs(c)
        k2 = rhs(c + 0.5 * dt * k1)
        k3 = rhs(c + 0.5 * dt * k2)
        k4 = rhs(c + dt * k3)
        c = c + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if record_norms:
            norms.append(m_norm(Ms, c))
    full = np.zeros(ops.space.dof_count)
    full[rhs.dofs] = c
    out = StateVector(full, u0.space, u0.time + T)
    return (out, np.array(norms)) if record_norms else out
