"""Periodic pseudo-spectral reference solver.

Fourier coefficients follow ``c_n = (1/2L) int_{-L}^{L} u(x) exp(-i pi n x / L) dx``;
only ``n = 0..n_max`` are stored since the field is real. The linear part
(diffusion plus the truncated nonlocal term, through its exact symbol) is
integrated exactly, the Burgers term by RK4 inside a Strang splitting, with
products formed on a 3/2-padded grid.
"""

from dataclasses import dataclass, field

import numpy as np

from .fem_space import FemSpace, StateVector
from .kernel import SymbolTable
from .mesh import Mesh
from .time_stepper import SolverConfig, SolverError


@dataclass
class SpectralState:
    modes: np.ndarray
    L: float
    n_max: int
    grid_size: int
    time: float = 0.0

    def __post_init__(self):
        self.modes = np.asarray(self.modes, dtype=complex)
        if self.modes.shape != (self.n_max + 1,):
            raise ValueError(f"expected {self.n_max + 1} modes, got {self.modes.shape}")
        if self.grid_size < 2 * self.n_max + 2:
            raise ValueError("grid_size must be at least 2 n_max + 2")

    def full_modes(self):
        """Coefficients for ``n = -n_max..n_max`` (Hermitian completion)."""
        return np.concatenate([self.modes[:0:-1].conj(), self.modes])

    def grid(self):
        return -self.L + 2.0 * self.L * np.arange(self.grid_size) / self.grid_size

    def values(self, x=None):
        """Real trigonometric polynomial at ``x`` (default: the state's own grid)."""
        if x is None:
            return _to_grid(self.modes, self.grid_size)
        x = np.asarray(x, dtype=float)
        k = np.pi * np.arange(1, self.n_max + 1) / self.L
        phase = np.exp(1j * x[..., None] * k)
        return self.modes[0].real + 2.0 * (phase @ self.modes[1:]).real

    def energy_fraction_upper_third(self):
        p = np.abs(self.modes) ** 2
        p[1:] *= 2.0
        total = p.sum()
        return 0.0 if total == 0 else float(p[2 * (self.n_max + 1) // 3:].sum() / total)


def _shift(n, size):
    # grid starts at -L, so c_n = (-1)^n U_n / size
    return np.where(np.arange(n) % 2, -1.0, 1.0) / size


def _from_grid(u, n_max):
    size = u.shape[-1]
    U = np.fft.rfft(u)[: n_max + 1]
    return U * _shift(n_max + 1, size)


def _to_grid(modes, size):
    n = modes.shape[-1]
    U = np.zeros(size // 2 + 1, dtype=complex)
    U[:n] = modes / _shift(n, size)
    return np.fft.irfft(U, size)


def transform(u0, L, n_max, grid_size=None, time=0.0) -> SpectralState:
    """Sample ``u0`` on the uniform grid and keep modes ``0..n_max``."""
    grid_size = grid_size or 2 * n_max + 2
    x = -L + 2.0 * L * np.arange(grid_size) / grid_size
    modes = _from_grid(np.asarray(u0(x), dtype=float), n_max)
    if grid_size % 2 == 0 and n_max == grid_size // 2:
        modes[-1] = modes[-1].real
    return SpectralState(modes, L, n_max, grid_size, time)


def _burgers(modes, L, pad_size):
    """Fourier coefficients of ``-(u^2/2)_x``, products on the padded grid."""
    u = _to_grid(modes, pad_size)
    sq = _from_grid(0.5 * u * u, modes.shape[0] - 1)
    k = np.pi * np.arange(modes.shape[0]) / L
    return -1j * k * sq


@dataclass
class SpectralTrajectory:
    states: list = field(default_factory=list)

    @property
    def final(self) -> SpectralState:
        return self.states[-1]

    @property
    def times(self):
        return np.array([s.time for s in self.states])


def spectral_run(u0, cfg: SolverConfig, symbols: SymbolTable, grid_size=None, snapshots=None,
                 aliasing_guard=True) -> SpectralTrajectory:
    """Integrate to ``cfg.T`` with step ``cfg.dt``; modes ``0..n_max`` of ``symbols``.

    ``u0`` is a callable or a :class:`SpectralState`. The viscosity is
    ``cfg.eps`` if set, else the table's. With ``aliasing_guard`` the run
    stops with :class:`SolverError` once more than ``1e-6`` of the energy
    sits in the upper third of the retained modes.
    """
    n_max = int(symbols.n[-1])
    L = symbols.L
    if isinstance(u0, SpectralState):
        state = u0
        if state.n_max != n_max or state.L != L:
            raise ValueError("initial state does not match the symbol table")
    else:
        state = transform(u0, L, n_max, grid_size)
    eps = symbols.eps if cfg.eps is None else cfg.eps
    k = symbols.wavenumbers()
    rates = -eps * k * k - 1j * k * symbols.s_J
    pad = int(np.ceil(3 * (n_max + 1) / 2)) * 2

    def linear(c, tau):
        return np.exp(rates * tau) * c

    def nonlinear(c):
        return _burgers(c, L, pad) if cfg.nonlinear else np.zeros_like(c)

    snapshots = [cfg.T] if snapshots is None else sorted(snapshots)
    out = SpectralTrajectory()
    if snapshots and snapshots[0] <= 0:
        out.states.append(state)
        snapshots = snapshots[1:]
    n_steps = int(round(cfg.T / cfg.dt))
    if not np.isclose(n_steps * cfg.dt, cfg.T, rtol=1e-10, atol=0):
        raise ValueError("T must be an integer multiple of dt for spectral runs")
    c = state.modes.copy()
    t0 = state.time
    dt = cfg.dt
    for step in range(1, n_steps + 1):
        c = linear(c, 0.5 * dt)
        if cfg.nonlinear:
            k1 = nonlinear(c)
            k2 = nonlinear(c + 0.5 * dt * k1)
            k3 = nonlinear(c + 0.5 * dt * k2)
            k4 = nonlinear(c + dt * k3)
            c = c + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        c = linear(c, 0.5 * dt)
        c[0] = state.modes[0]  # the mean is exactly invariant
        t = step * dt
        if not np.all(np.isfinite(c)):
            raise SolverError("spectral state is no longer finite", step=step)
        cur = SpectralState(c.copy(), L, n_max, state.grid_size, t0 + t)
        if aliasing_guard and cfg.nonlinear and cur.energy_fraction_upper_third() > 1e-6:
            raise SolverError("aliasing guard: upper third of the spectrum holds more than 1e-6 of the energy",
                              step=step)
        while snapshots and abs(snapshots[0] - t) <= 1e-9 * max(cfg.T, 1.0):
            out.states.append(cur)
            snapshots.pop(0)
    return out


def evaluate_on_mesh(state: SpectralState, mesh: Mesh, space: FemSpace) -> StateVector:
    """Nodal values of the trigonometric interpolant at the Lagrange points."""
    if not np.isclose(mesh.L, state.L):
        raise ValueError(f"mesh half-period {mesh.L} differs from the spectral one {state.L}")
    return StateVector(state.values(space.lagrange_points), space, state.time)
