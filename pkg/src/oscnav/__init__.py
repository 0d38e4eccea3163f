"""Exact simulation, exact derivatives and level-set navigation for a
frequency-controlled harmonic oscillator."""

from .errors import (CorrectorFailed, EmptyProtocol, IndivisibleChunking,
                     NegativeOccupation, NonFiniteEntry, NonPositiveFrequency,
                     NonSymplectic, NotASolution, OscnavError,
                     RestartBudgetExhausted)
from .navigator import (CriticalPointReport, DescentConfig, DescentTrajectory,
                        LevelsetCurve, NavigationConfig, ScanConfig, ScanResult,
                        SolveResult, TraceConfig, TrajectoryRecord, descend,
                        navigate, null_projector, scan_levelset, solve,
                        trace_levelset)
from .objectives import (SecondaryCost, c1, c1_grad, c2, c2_grad,
                         symplectic_final, target_matrix, theta_infidelity,
                         theta_scan)
from .propagator import (BogoliubovPair, ModeState, bogoliubov, infidelity,
                         initial_state, particle_number, propagate, step_matrix,
                         wronskian_defect)
from .protocol import Protocol, collapse, refine, validate
from .sensitivities import (SensitivityBundle, fd_gradient, fd_hessian,
                            gradient, hessian, optimal_hessian, step_matrix_d1,
                            step_matrix_d2)

__version__ = "0.1.0"
__all__ = [
    "Protocol", "validate", "refine", "collapse",
    "ModeState", "BogoliubovPair", "initial_state", "step_matrix", "propagate",
    "bogoliubov", "infidelity", "particle_number", "wronskian_defect",
    "SensitivityBundle", "step_matrix_d1", "step_matrix_d2", "gradient",
    "hessian", "optimal_hessian", "fd_gradient", "fd_hessian",
    "SecondaryCost", "c1", "c1_grad", "c2", "c2_grad", "symplectic_final",
    "target_matrix", "theta_infidelity", "theta_scan",
    "DescentConfig", "NavigationConfig", "TraceConfig", "ScanConfig",
    "DescentTrajectory", "TrajectoryRecord", "CriticalPointReport",
    "SolveResult", "LevelsetCurve", "ScanResult",
    "descend", "solve", "null_projector", "navigate", "trace_levelset",
    "scan_levelset",
    "OscnavError", "NonPositiveFrequency", "NonFiniteEntry",
    "IndivisibleChunking", "NegativeOccupation", "EmptyProtocol",
    "NonSymplectic", "NotASolution", "RestartBudgetExhausted", "CorrectorFailed",
]
