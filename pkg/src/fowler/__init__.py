"""Finite-element solver for a viscous Burgers equation with a fractional nonlocal term.

    u_t + (u^2/2 - eps u_x + J[u])_x = 0,   J[u](x) = int_0^T xi^(-1/3) u'(x - xi) dxi

on a periodic interval, discretised by continuous Lagrange elements in space
and Crank-Nicolson in time, with a pseudo-spectral reference solver.
"""

from .mesh import Mesh, build_uniform_mesh, element_containing
from .fem_space import (FemSpace, StateVector, basis_eval, error_norms, interpolate,
                        l2_project, mass_matrix)
from .kernel import (KernelConfig, SymbolTable, apply_I_split, apply_J_function, apply_J_pointwise,
                     build_symbol_table, fourier_symbol, growth_constant_w0, incomplete_oscillatory,
                     kernel_moment)
from .assembly import (OperatorSet, assemble_mass, assemble_nonlinear, assemble_nonlocal,
                       assemble_operators, assemble_stiffness, coercivity_shift, garding_constant)
from .projection import ProjectionProblem, elliptic_project, make_projection_problem
from .time_stepper import (SolverConfig, SolverError, StabilityError, StabilityEstimate,
                           check_stability, crank_nicolson_step, estimate_inverse_constants,
                           rk4_run, run_simulation, semidiscrete_rhs)
from .spectral import SpectralState, evaluate_on_mesh, spectral_run
from .experiments import (ConvergenceReport, ExperimentConfig, apply_exterior_condition,
                          initial_datum, run_convergence_study)

__version__ = "0.1.0"
