"""Convergence studies for the two benchmark initial data.

Runs use a periodic box ``[-box_L, box_L]`` around ``Omega = [-1, 1]``.
With ``exterior=True`` every DOF outside the open interval ``(-1, 1)`` is held
at zero, so the nonlocal operator only sees values inside ``Omega``; the
kernel reach defaults to ``2`` (the diameter of ``Omega``), which together
with ``box_L = 2`` keeps periodic images out of reach.
"""

import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .assembly import assemble_operators
from .fem_space import FemSpace, StateVector, interpolate
from .kernel import KernelConfig
from .mesh import Mesh, build_uniform_mesh
from .time_stepper import (SolverConfig, SolverError, StabilityError, estimate_inverse_constants, max_stable_dt,
                           run_simulation)

log = logging.getLogger(__name__)

#: viscosity used for the benchmark runs (not a published value; see README)
DEFAULT_EPS = 1.5


def example1(x):
    x = np.asarray(x, dtype=float)
    return np.select(
        [x <= -0.6, x <= -0.4, x <= 0.0, x <= 0.2],
        [np.zeros_like(x), 4.0 * x + 2.4, np.full_like(x, 0.8), 0.8 - 4.0 * x],
        0.0,
    )


def example2(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-50.0 * (x + 0.2) ** 2)


def initial_datum(example_id):
    """Example 1: piecewise-linear bump; Example 2: Gaussian centred at -0.2."""
    try:
        return {1: example1, 2: example2}[int(example_id)]
    except (KeyError, ValueError):
        raise ValueError(f"unknown example id {example_id!r} (expected 1 or 2)") from None


@dataclass(frozen=True)
class ExperimentConfig:
    example_id: int = 1
    r: int = 2
    element_counts: tuple = (20, 40, 80, 160)
    reference_count: int = 640
    T: float = 0.1
    eps: float = DEFAULT_EPS
    dt: float = None
    dt_divisions: int = 640
    box_L: float = 2.0
    truncation: float = 2.0
    exterior: bool = True
    picard_tol: float = 1e-11
    picard_max: int = 50

    def __post_init__(self):
        object.__setattr__(self, "element_counts", tuple(int(n) for n in self.element_counts))
        self.validate()

    def validate(self):
        initial_datum(self.example_id)
        if not self.element_counts:
            raise ValueError("element_counts must not be empty")
        if self.reference_count < 4 * max(self.element_counts):
            raise ValueError("reference_count must be at least 4x the finest ladder entry")
        bad = [n for n in self.element_counts if self.reference_count % n]
        if bad:
            raise ValueError(f"element counts {bad} do not divide reference_count={self.reference_count}")
        for n in self.element_counts + (self.reference_count,):
            if abs(n * self.box_L - round(n * self.box_L)) > 1e-9:
                raise ValueError(f"{n} elements on [-1, 1] do not tile the box [-{self.box_L}, {self.box_L}]")
        if self.box_L < 1:
            raise ValueError("box_L must be at least 1")
        if self.T <= 0 or self.eps <= 0:
            raise ValueError("T and eps must be positive")

    @property
    def kernel(self):
        return KernelConfig(truncation=self.truncation)


def omega_dofs(space: FemSpace):
    """Indices of DOFs whose Lagrange points lie strictly inside (-1, 1)."""
    pts = space.lagrange_points
    tol = 1e-9 * space.mesh.h
    return np.flatnonzero(np.abs(pts) < 1.0 - tol)


def apply_exterior_condition(state: StateVector, mesh: Mesh = None) -> StateVector:
    """Zero every DOF with Lagrange point outside the open interval (-1, 1)."""
    mesh = state.space.mesh if mesh is None else mesh
    for end in (-1.0, 1.0):
        if end < -mesh.L or end > mesh.L:
            continue
        if not np.any(np.isclose(np.r_[mesh.nodes, -mesh.nodes], end, rtol=0, atol=1e-12)):
            raise ValueError(f"Omega endpoint {end} is not a mesh node")
    keep = np.zeros(state.space.dof_count, dtype=bool)
    keep[omega_dofs(state.space)] = True
    return state.copy(coefficients=np.where(keep, state.coefficients, 0.0))


@dataclass
class Problem:
    space: FemSpace
    ops: object
    u0: StateVector
    dofs: np.ndarray = None


def build_problem(cfg: ExperimentConfig, n_omega: int) -> Problem:
    """Space, operators and initial state for ``n_omega`` elements on [-1, 1]."""
    if cfg.exterior:
        mesh = build_uniform_mesh(cfg.box_L, int(round(n_omega * cfg.box_L)))
        kernel = cfg.kernel
    else:
        mesh = build_uniform_mesh(1.0, n_omega)
        kernel = KernelConfig(truncation=None)
    space = FemSpace(mesh, cfg.r)
    ops = assemble_operators(space, kernel, cfg.eps)
    u0 = interpolate(space, initial_datum(cfg.example_id))
    dofs = None
    if cfg.exterior:
        u0 = apply_exterior_condition(u0)
        dofs = omega_dofs(space)
    return Problem(space, ops, u0, dofs)


def choose_dt(cfg: ExperimentConfig):
    """``min(T / dt_divisions, largest gate-passing dt on the finest ladder rung)``."""
    if cfg.dt is not None:
        return float(cfg.dt)
    finest = build_problem(cfg, max(cfg.element_counts))
    est = estimate_inverse_constants(finest.ops)
    dt_gate = max_stable_dt(est, finest.space.mesh.h)
    n = max(cfg.dt_divisions, int(np.ceil(cfg.T / dt_gate)))
    return cfg.T / n


def simulate(cfg: ExperimentConfig, n_omega: int, dt: float, override=False):
    pb = build_problem(cfg, n_omega)
    scfg = SolverConfig(dt=dt, T=cfg.T, eps=cfg.eps, picard_tol=cfg.picard_tol,
                        picard_max=cfg.picard_max, stability_override=override)
    traj = run_simulation(pb.u0, pb.ops, scfg, dofs=pb.dofs)
    return traj


def l2_distance(coarse: StateVector, fine: StateVector, region=None) -> float:
    """``||coarse - fine||`` by Gauss quadrature on the fine mesh (nested meshes)."""
    sp = fine.space
    x, w, B, _ = sp.quadrature(sp.r + 4)
    diff = coarse(x) - fine(x)
    if region is not None:
        w = np.where((x >= region[0]) & (x <= region[1]), w, 0.0)
    return float(np.sqrt(np.sum(w * diff * diff)))


@dataclass
class ConvergenceReport:
    """Rows ``(N, E_h, E_h^2, R_h, alpha_h)``.

    ``E_h = ||u_h(T) - u_ref(T)||``; the squared column follows the literal
    squared-norm formula. ``R_h`` divides by ``||u_ref||`` (resp. its square)
    and ``alpha_h = log2(E_h / E_{h/2})`` is blank on the last row.
    """

    element_counts: list
    E: np.ndarray
    ref_norm: float
    metadata: dict = field(default_factory=dict)

    @property
    def E_sq(self):
        return self.E ** 2

    @property
    def R(self):
        return self.E / self.ref_norm

    @property
    def R_sq(self):
        return self.E_sq / self.ref_norm ** 2

    @property
    def alpha(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log2(self.E[:-1] / self.E[1:])

    @property
    def alpha_sq(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log2(self.E_sq[:-1] / self.E_sq[1:])

    def rows(self):
        a, a2 = self.alpha, self.alpha_sq
        for i, n in enumerate(self.element_counts):
            last = i == len(self.element_counts) - 1
            yield (n, self.E[i], self.E_sq[i], self.R[i], None if last else a[i],
                   self.R_sq[i], None if last else a2[i])

    def to_csv(self) -> str:
        out = io.StringIO()
        for key in sorted(self.metadata):
            out.write(f"# {key} = {self.metadata[key]}\n")
        out.write("element_count,E_h,E_h_sq,R_h,alpha_h,R_h_sq,alpha_h_sq\n")
        for row in self.rows():
            cells = [str(row[0])] + ["" if v is None else f"{v:.10e}" for v in row[1:]]
            out.write(",".join(cells) + "\n")
        return out.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_csv())


def run_convergence_study(cfg: ExperimentConfig, workers=1, override=False) -> ConvergenceReport:
    """Errors of each ladder rung against the fine-grid run at ``reference_count``.

    All runs share one ``dt`` (see :func:`choose_dt`) so the spatial error
    dominates. Ladder rungs must pass the stability gate (unless
    ``override``); the reference run is executed with the gate overridden and
    its gate value is recorded.
    """
    dt = choose_dt(cfg)

    def rung(n):
        try:
            return simulate(cfg, n, dt, override=override)
        except StabilityError as exc:
            raise StabilityError(f"rung N={n}: {exc}") from exc
        except SolverError as exc:
            raise SolverError(f"rung N={n}: {exc}") from exc

    ref_traj = simulate(cfg, cfg.reference_count, dt, override=True)
    ref = ref_traj.final
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trajs = list(pool.map(rung, cfg.element_counts))
    else:
        trajs = [rung(n) for n in cfg.element_counts]
    E = np.array([l2_distance(t.final, ref) for t in trajs])
    ref_norm = l2_distance(ref.copy(coefficients=np.zeros_like(ref.coefficients)), ref)
    meta = {k: v for k, v in asdict(cfg).items() if k != "element_counts"}
    meta.update(dt=repr(dt), steps=int(round(cfg.T / dt)),
                reference_gate_lhs=f"{ref_traj.stability.lhs:.6g}",
                finest_rung_gate_lhs=f"{trajs[-1].stability.lhs:.6g}")
    log.info("convergence study example %s r=%s: E=%s", cfg.example_id, cfg.r, E)
    return ConvergenceReport(list(cfg.element_counts), E, ref_norm, meta)


def table1_config(**kw):
    base = dict(example_id=1, r=2, T=0.1)
    base.update(kw)
    return ExperimentConfig(**base)


def table2_config(**kw):
    base = dict(example_id=2, r=3, T=0.2)
    base.update(kw)
    return ExperimentConfig(**base)


# -- stability map ---------------------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    dt: float
    h: float
    lhs: float
    gate_pass: bool
    overridden: bool
    observed_max_norm_ratio: float = None
    status: str = "ok"


def stability_scan(cfg: ExperimentConfig, element_counts, dts, override=False, workers=1):
    """Gate value and observed ``max_n ||U^n|| / ||U^0||`` on a (dt, h) grid.

    Gate-failing cells are run only with ``override``; otherwise their
    observed ratio stays empty. Rows are ordered by element count, then ``dt``.
    """
    problems = {n: build_problem(cfg, n) for n in element_counts}
    consts = {n: estimate_inverse_constants(p.ops) for n, p in problems.items()}

    def cell(args):
        n, dt = args
        pb = problems[n]
        h = pb.space.mesh.h
        C1, C2 = consts[n]
        lhs = C1 * dt / h ** 2 + C2 * dt / h ** (4.0 / 3.0)
        passed = lhs <= 1.0 + 1e-12  # same slack as check_stability
        if not passed and not override:
            return ScanRow(dt, h, lhs, False, False, None, "refused")
        scfg = SolverConfig(dt=dt, T=cfg.T, eps=cfg.eps, picard_tol=cfg.picard_tol,
                            picard_max=cfg.picard_max, stability_override=True)
        try:
            traj = run_simulation(pb.u0, pb.ops, scfg, dofs=pb.dofs, est=consts[n])
            ratio, status = traj.max_norm_ratio, "ok"
        except SolverError as exc:
            ratio, status = None, f"solver failure at step {exc.step}"
        return ScanRow(dt, h, lhs, passed, not passed, ratio, status)

    grid = [(n, float(dt)) for n in sorted(element_counts) for dt in sorted(dts)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(cell, grid))
    return [cell(g) for g in grid]


def fit_growth_constant(rows, T):
    """``C = max(0, log(ratio) / T)`` on the finest passing cell (smallest h, then dt)."""
    ok = [r for r in rows if r.gate_pass and r.observed_max_norm_ratio is not None]
    if not ok:
        raise ValueError("no gate-passing rows to fit")
    best = min(ok, key=lambda r: (r.h, r.dt))
    return max(0.0, float(np.log(best.observed_max_norm_ratio)) / T)


def scan_csv(rows, meta=None) -> str:
    out = io.StringIO()
    for key in sorted(meta or {}):
        out.write(f"# {key} = {meta[key]}\n")
    out.write("dt,h,lhs,gate_pass,observed_max_norm_ratio,overridden,status\n")
    for r in rows:
        ratio = "" if r.observed_max_norm_ratio is None else f"{r.observed_max_norm_ratio:.10e}"
        out.write(f"{r.dt:.10e},{r.h:.10e},{r.lhs:.10e},{int(r.gate_pass)},{ratio},"
                  f"{int(r.overridden)},{r.status}\n")
    return out.getvalue()
