"""Solvers and diagnostics for Hamilton-Jacobi equations constrained by ``min_x u(t, x) = 0``."""

from .errors import (
    BlowUpError,
    BoundaryProximityError,
    ConfigurationError,
    ConstrainedHJError,
    ConvexityError,
    DomainError,
    DomainTooSmallError,
    InfeasibleMultiplierError,
    ModelInvalidError,
    OutOfDomainError,
    StepSizeError,
    UnsupportedRunError,
)
from .grid import Field, GridSpec, interpolate, truncate_domain
from .model import (
    AssumptionBox,
    KernelModel,
    ModelSpec,
    QuadraticModel,
    TabulatedModel,
    check_assumptions,
    eval_hamiltonian,
    eval_lagrangian,
    legendre_conjugate,
)
from .multiplier import MultiplierPath, Problem, RunResult, bv_seminorm, run, solve_multiplier_step
from .fd_route import NumericalHamiltonian, fd_step, run_fd
from .sl_route import Trajectory, backtrack_trajectory, euler_lagrange_residual, run_sl, sl_step
from .epsilon_model import compute_I_eps, convergence_table, eps_step, run_eps
from .diagnostics import check_pessimization, compare_runs, lower_bound_check, phi_weights

__version__ = "0.1.0"
