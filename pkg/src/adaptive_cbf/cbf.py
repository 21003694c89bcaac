"""Higher-order safe-set chain and the robustified barrier constraint.

A relative-degree-d state constraint psi_0(x) >= 0 is enforced through the
chain psi_i = L_f psi_{i-1} + c_{i-1} * psi_{i-1} (linear class-K gains c_i),
whose joint zero-superlevel set is rendered forward invariant by keeping

    psi(x, th, nu, u, delta) = L_f psi_{d-1}(x) + L_g psi_{d-1}(x) u
                               + L_phi psi_{d-1}(x) th
                               - ||L_phi psi_{d-1}(x)|| nu
                               + c_{d-1} psi_{d-1}(x) + delta psi_{d-1}(x)

nonnegative.  The -||L_phi psi_{d-1}|| nu term pays for parameter uncertainty:
whenever nu >= ||th - theta_true||, psi lower-bounds the ideal constraint
evaluated at the true parameter, and the gap closes as (th, nu) converge.

Plants supply psi_{d-1} and its gradient analytically (both shipped examples
have d = 2); finite-difference checks in the test suite guard the algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SafetySpec:
    """Safe-set chain data: psi_0, the top-level psi_{d-1}, its gradient, gains.

    ``alpha_gains`` holds the d linear class-K coefficients c_0 .. c_{d-1}.
    The relative-degree assumptions (L_g and L_phi annihilate the lower chain
    levels, L_g psi_{d-1} nonzero on the psi_{d-1} = 0 boundary) are the
    caller's obligation and are not checked here.
    """

    d: int
    psi0: Callable[[np.ndarray], float]
    psi_dm1: Callable[[np.ndarray], float]
    grad_psi_dm1: Callable[[np.ndarray], np.ndarray]
    alpha_gains: tuple

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("relative degree d must be a positive integer")
        gains = tuple(float(c) for c in self.alpha_gains)
        if len(gains) != self.d:
            raise ValueError(f"need d={self.d} class-K gains, got {len(gains)}")
        if any(c <= 0.0 for c in gains):
            raise ValueError("class-K gains must be positive")
        object.__setattr__(self, "alpha_gains", gains)

    @property
    def gain_dm1(self) -> float:
        return self.alpha_gains[-1]


@dataclass(frozen=True)
class ConstraintTerms:
    """State-dependent pieces of the barrier constraint at one x."""

    Lf: float
    Lg: np.ndarray
    Lphi: np.ndarray
    norm_Lphi: float
    psi_dm1_val: float


def terms(spec: SafetySpec, plant, x) -> ConstraintTerms:
    """Lie derivatives of psi_{d-1} along f, g and phi at the state x."""
    grad = np.asarray(spec.grad_psi_dm1(x), dtype=float)
    f, phi, g = plant.eval(x)
    Lf = float(grad @ f)
    Lg = grad @ g
    Lphi = grad @ phi
    val = float(spec.psi_dm1(x))
    norm_Lphi = math.sqrt(float(Lphi @ Lphi))
    # a single NaN/inf anywhere poisons this sum
    if not math.isfinite(Lf + val + norm_Lphi + float(Lg.sum())):
        raise FloatingPointError(f"non-finite constraint terms at x={x!r}")
    return ConstraintTerms(Lf, Lg, Lphi, norm_Lphi, val)


def psi_value(t: ConstraintTerms, theta_hat, nu_hat: float,
              u_hat, delta_hat: float, gain_dm1: float) -> float:
    """Barrier constraint value at a candidate (u, delta) and estimate pair."""
    return (t.Lf
            + float(t.Lg @ u_hat)
            + float(t.Lphi @ theta_hat)
            - t.norm_Lphi * nu_hat
            + (gain_dm1 + delta_hat) * t.psi_dm1_val)


def psi_star_value(t: ConstraintTerms, theta_star, u_hat, delta_hat: float,
                   gain_dm1: float) -> float:
    """Ideal constraint: the true parameter with a zero uncertainty margin."""
    return psi_value(t, theta_star, 0.0, u_hat, delta_hat, gain_dm1)


def softmin_psi0(h_values, rho: float) -> float:
    """Smooth minimum -(1/rho) log sum exp(-rho h_i), max-shifted for stability.

    Lies within [min(h) - log(N)/rho, min(h)] for N values.
    """
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    h = np.asarray(h_values, dtype=float).reshape(-1)
    if h.size == 0:
        raise ValueError("softmin of an empty collection")
    z = -rho * h
    m = float(z.max())
    return -(m + math.log(float(np.exp(z - m).sum()))) / rho
