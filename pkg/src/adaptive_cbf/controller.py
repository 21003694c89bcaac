"""Closed-form minimum-intervention safety filter.

At each control instant the filter solves

    min_{u, delta}  (1/2)(u - u_d)' H (u - u_d) + (beta/2) delta^2
    s.t.            psi(x, th, nu, u, delta) >= 0

where the constraint is affine in (u, delta).  The first-order conditions
collapse to a single scalar multiplier:

    q      = L_g psi_{d-1} H^{-1} L_g psi_{d-1}' + psi_{d-1}^2 / beta
    omega  = psi evaluated at (u_d, 0)
    lambda = -omega / q   if omega < 0, else 0
    u      = u_d + lambda * H^{-1} L_g psi_{d-1}'
    delta  = lambda * psi_{d-1} / beta

so no iterative QP solve is needed.  When the nominal control already
satisfies the constraint (omega >= 0) the filter passes u_d through
unmodified; otherwise it applies the smallest H-weighted correction that
restores feasibility, and the constraint value at the solution is exactly
zero.  q > 0 is guaranteed wherever L_g psi_{d-1} is nonzero on the
psi_{d-1} = 0 boundary; a numerically vanishing q is reported as an error
rather than regularized away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_triangular

from .cbf import ConstraintTerms, psi_value

_Q_DEGENERATE_TOL = 1e-12


class DegenerateConstraintError(RuntimeError):
    """q(x, theta) fell to numerical zero: the constraint cannot be enforced."""


@dataclass(frozen=True)
class ControllerParams:
    """Cost weight H(x, theta), slack weight beta, desired control u_d(x, theta, t)."""

    H: Callable[[np.ndarray, np.ndarray], np.ndarray]
    beta: float
    u_d: Callable[[np.ndarray, np.ndarray, float], np.ndarray]

    def __post_init__(self):
        if not self.beta > 0.0:
            raise ValueError("beta must be positive")


@dataclass(frozen=True)
class ControlDecision:
    """Filter output at one instant, plus the scalars that produced it."""

    u_star: np.ndarray
    delta_star: float
    lambda_star: float
    omega_val: float
    q_val: float
    psi_at_solution: float
    u_d_val: np.ndarray


def _spd_solve(H, b):
    """Solve H z = b for symmetric positive-definite H (m <= 2 fast paths)."""
    H = np.asarray(H, dtype=float)
    b = np.asarray(b, dtype=float)
    m = b.shape[0]
    if m == 1:
        h = H[0, 0]
        if not h > 0.0:
            raise np.linalg.LinAlgError("H not positive definite")
        return b / h
    if m == 2:
        a, c = H[0, 0], H[1, 1]
        bb = 0.5 * (H[0, 1] + H[1, 0])
        det = a * c - bb * bb
        if not (a > 0.0 and det > 0.0):
            raise np.linalg.LinAlgError("H not positive definite")
        return np.array([(c * b[0] - bb * b[1]) / det,
                         (a * b[1] - bb * b[0]) / det])
    L = np.linalg.cholesky(H)
    return solve_triangular(L.T, solve_triangular(L, b, lower=True), lower=False)


def q_of(t: ConstraintTerms, H_at_x, beta: float, hinv_lg=None) -> float:
    """Constraint curvature q = Lg H^{-1} Lg' + psi_{d-1}^2 / beta."""
    if hinv_lg is None:
        hinv_lg = _spd_solve(H_at_x, t.Lg)
    q = float(t.Lg @ hinv_lg) + t.psi_dm1_val * t.psi_dm1_val / beta
    if q <= _Q_DEGENERATE_TOL:
        raise DegenerateConstraintError(
            f"degenerate constraint: q={q!r} at psi_dm1={t.psi_dm1_val!r}"
        )
    return q


def omega_of(t: ConstraintTerms, theta_t, nu_t: float, u_d_val,
             gain_dm1: float) -> float:
    """Constraint value at the unfiltered desired control (u_d, delta = 0)."""
    return psi_value(t, theta_t, nu_t, u_d_val, 0.0, gain_dm1)


def jbar(u_hat, delta_hat: float, u_d_val, H, beta: float) -> float:
    """Filter cost (1/2)(u - u_d)' H (u - u_d) + (beta/2) delta^2."""
    du = np.asarray(u_hat, dtype=float) - np.asarray(u_d_val, dtype=float)
    return 0.5 * float(du @ (np.asarray(H, dtype=float) @ du)) \
        + 0.5 * beta * delta_hat * delta_hat


def solve(t: ConstraintTerms, theta_t, nu_t: float, params: ControllerParams,
          x, time: float = 0.0, gain_dm1: float | None = None,
          u_d_val=None) -> ControlDecision:
    """Closed-form minimizer of the filter cost subject to psi >= 0.

    ``u_d_val`` overrides the desired control (callers that parameterize u_d
    by a different estimate than the constraint pass it precomputed);
    otherwise it is evaluated as params.u_d(x, theta_t, time).  A tie at
    omega = 0 takes the lambda = 0 branch.
    """
    if gain_dm1 is None:
        raise TypeError("gain_dm1 (top-level class-K coefficient) is required")
    if u_d_val is None:
        u_d_val = params.u_d(x, theta_t, time)
    u_d_val = np.asarray(u_d_val, dtype=float)
    H = params.H(x, theta_t)
    hinv_lg = _spd_solve(H, t.Lg)
    q = q_of(t, H, params.beta, hinv_lg=hinv_lg)
    omega = omega_of(t, theta_t, nu_t, u_d_val, gain_dm1)
    if omega < 0.0:
        lam = -omega / q
        u = u_d_val + lam * hinv_lg
        delta = lam * t.psi_dm1_val / params.beta
    else:
        lam = 0.0
        u = u_d_val
        delta = 0.0
    psi_sol = psi_value(t, theta_t, nu_t, u, delta, gain_dm1)
    if not math.isfinite(psi_sol):
        raise FloatingPointError("non-finite controller output")
    return ControlDecision(u, delta, lam, omega, q, psi_sol, u_d_val)
