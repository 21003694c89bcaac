"""Adaptive control-barrier-function safety filtering with a certified error bound.

Library layout:

* :mod:`adaptive_cbf.estimator` -- sliding-window least squares, the
  data-only error-decrease value tau and the nonincreasing bound nu
* :mod:`adaptive_cbf.schedule`  -- C1 inter-sample blending of (theta, nu)
* :mod:`adaptive_cbf.cbf`       -- higher-order safe-set chain and the
  uncertainty-robustified barrier constraint
* :mod:`adaptive_cbf.controller`-- closed-form minimum-intervention filter
* :mod:`adaptive_cbf.plants`    -- pendulum and differential-drive benchmarks
* :mod:`adaptive_cbf.sim`       -- fixed-step closed-loop simulation
* :mod:`adaptive_cbf.config` / :mod:`adaptive_cbf.cli` -- scenario runner
"""

from .cbf import ConstraintTerms, SafetySpec, psi_star_value, psi_value, softmin_psi0, terms
from .controller import (
    ControlDecision,
    ControllerParams,
    DegenerateConstraintError,
    omega_of,
    q_of,
    solve,
)
from .estimator import (
    EstimatorConfig,
    EstimatorError,
    EstimatorState,
    RegressorSample,
    build_omega_and_P,
    compute_tau,
    init_state,
    nu0_from_box,
    step,
    update_nu,
    update_theta,
)
from .plants import DifferentialDriveRobot, Pendulum, PendulumParams, RobotParams
from .schedule import BlendFunction, Schedule, xi, xi_derivative
from .sim import Case, SimConfig, SimulationAbort, TrajectoryLog, UnsafeInitialStateError, run

__version__ = "0.1.0"

__all__ = [
    "BlendFunction",
    "Case",
    "ConstraintTerms",
    "ControlDecision",
    "ControllerParams",
    "DegenerateConstraintError",
    "DifferentialDriveRobot",
    "EstimatorConfig",
    "EstimatorError",
    "EstimatorState",
    "Pendulum",
    "PendulumParams",
    "RegressorSample",
    "RobotParams",
    "SafetySpec",
    "Schedule",
    "SimConfig",
    "SimulationAbort",
    "TrajectoryLog",
    "UnsafeInitialStateError",
    "build_omega_and_P",
    "compute_tau",
    "init_state",
    "nu0_from_box",
    "omega_of",
    "psi_star_value",
    "psi_value",
    "q_of",
    "softmin_psi0",
    "solve",
    "step",
    "terms",
    "update_nu",
    "update_theta",
    "xi",
    "xi_derivative",
    "run",
]
