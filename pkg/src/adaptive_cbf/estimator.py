"""Sliding-window regularized least-squares estimation with a certified error bound.

The estimator consumes integrated regressor/output pairs (Phi_k, y_k), one per
sampling interval, and maintains three coupled quantities:

* ``theta_k``: the minimizer of
      sigma * ||th - theta_k||^2  +  sum_{i=k-k_n}^{k} ||Phi_i th - y_i||^2
  over the most recent ``k_n + 1`` samples (missing samples before the start
  of time count as zero matrices, which leave the estimate unchanged),
* ``tau_k``: a quantity computable from data alone that equals the change in
  squared estimation error, ||theta_{k+1} - theta_true||^2 -
  ||theta_k - theta_true||^2, whenever the data is consistent
  (y_i = Phi_i theta_true),
* ``nu_k``: an upper bound on ||theta_k - theta_true||, seeded from the known
  parameter box and shrunk every step by
      nu_{k+1} = min( sigma * lmax(P_k) * nu_k , sqrt(nu_k^2 + tau_k) ),
  where P_k = (sigma I + Omega_k)^{-1} and Omega_k = sum Phi_i^T Phi_i.

``tau_k <= 0`` holds for arbitrary data (not only consistent data), so ``nu_k``
is nonincreasing unconditionally.  When Omega_k stays full rank the contraction
factor sigma * lmax(P_k) drops below one and nu_k -> 0.

All operations are pure: ``step`` returns a fresh state and never mutates its
arguments, so independent estimator instances can run concurrently.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class EstimatorError(ValueError):
    """Bad configuration or non-finite data fed to the estimator."""


@dataclass(frozen=True)
class RegressorSample:
    """One sampling interval's integrated regressor (n x p) and output residual (n,)."""

    phi: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if phi.ndim != 2 or y.ndim != 1 or phi.shape[0] != y.shape[0]:
            raise EstimatorError(
                f"sample shapes inconsistent: phi {phi.shape}, y {y.shape}"
            )
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class EstimatorConfig:
    """Window length, regularizer, initial estimate and the known parameter box."""

    p: int
    k_n: int
    sigma: float
    theta0: np.ndarray
    theta_box_lo: np.ndarray
    theta_box_hi: np.ndarray

    def __post_init__(self):
        theta0 = np.asarray(self.theta0, dtype=float).reshape(-1)
        lo = np.asarray(self.theta_box_lo, dtype=float).reshape(-1)
        hi = np.asarray(self.theta_box_hi, dtype=float).reshape(-1)
        if self.p <= 0 or theta0.shape != (self.p,):
            raise EstimatorError(f"theta0 must have length p={self.p}")
        if lo.shape != (self.p,) or hi.shape != (self.p,):
            raise EstimatorError("parameter box must have length p")
        if np.any(lo > hi):
            raise EstimatorError("parameter box has lo > hi in some component")
        if not self.sigma > 0.0:
            raise EstimatorError("sigma must be positive")
        if self.k_n < 0:
            raise EstimatorError("k_n must be a nonnegative integer")
        object.__setattr__(self, "theta0", theta0)
        object.__setattr__(self, "theta_box_lo", lo)
        object.__setattr__(self, "theta_box_hi", hi)


@dataclass(frozen=True)
class EstimatorState:
    """Estimate, bound and the ring window after ``k`` completed steps.

    ``window`` always holds exactly ``k_n + 1`` samples, oldest first; entries
    for sample indices before time zero are all-zero pairs.
    """

    k: int
    theta: np.ndarray
    nu: float
    window: tuple
    last_tau: float
    last_lambda_max_P: float
    last_omega_min_eig: float


def nu0_from_box(cfg: EstimatorConfig) -> float:
    """Tight initial bound: sup over the box of ||theta0 - theta||.

    The supremum of a Euclidean distance over an axis-aligned box is attained
    at a corner, componentwise at whichever box edge is farther from theta0.
    """
    d = np.maximum(
        np.abs(cfg.theta0 - cfg.theta_box_lo),
        np.abs(cfg.theta0 - cfg.theta_box_hi),
    )
    return float(np.linalg.norm(d))


def init_state(cfg: EstimatorConfig, n: int) -> EstimatorState:
    """Fresh state with a zero-padded window for a plant with state dimension n."""
    zero = RegressorSample(np.zeros((n, cfg.p)), np.zeros(n))
    window = (zero,) * (cfg.k_n + 1)
    return EstimatorState(
        k=0,
        theta=cfg.theta0.copy(),
        nu=nu0_from_box(cfg),
        window=window,
        last_tau=0.0,
        last_lambda_max_P=1.0 / cfg.sigma,
        last_omega_min_eig=0.0,
    )


def build_omega_and_P(window, sigma: float):
    """Form Omega = sum Phi_i^T Phi_i and P = (sigma I + Omega)^{-1}.

    P comes from a Cholesky factorization (sigma I + Omega is symmetric
    positive definite by construction) and lmax(P) from the smallest
    eigenvalue of Omega, 1 / (sigma + lmin(Omega)), so the inverse is never
    eigensolved directly.

    Returns (omega, P, lambda_max_P, lambda_min_omega).
    """
    p = window[0].phi.shape[1]
    omega = np.zeros((p, p))
    for s in window:
        omega += s.phi.T @ s.phi
    omega = 0.5 * (omega + omega.T)
    if not np.all(np.isfinite(omega)) or not sigma > 0.0:
        raise EstimatorError("non-finite window data or nonpositive sigma")
    try:
        factor = cho_factor(sigma * np.eye(p) + omega, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise EstimatorError(f"SPD factorization failed: {exc}") from exc
    P = cho_solve(factor, np.eye(p))
    P = 0.5 * (P + P.T)
    lam_min_omega = max(0.0, float(np.linalg.eigvalsh(omega)[0]))
    lam_max_P = 1.0 / (sigma + lam_min_omega)
    return omega, P, lam_max_P, lam_min_omega


def update_theta(theta, window, sigma: float, P) -> np.ndarray:
    """Window least-squares update: theta_next = P (sum Phi_i^T y_i + sigma theta)."""
    b = sigma * np.asarray(theta, dtype=float)
    for s in window:
        b = b + s.phi.T @ s.y
    return P @ b


def compute_tau(theta, window, sigma: float, P) -> float:
    """Data-only value of the squared-error decrease over one step.

    With residuals ybar_i = Phi_i theta - y_i and S = sum Phi_i^T ybar_i the
    defining expression is

        tau = (2/sigma) * ( -sum ||ybar_i||^2 + S^T P S ) + S^T P^2 S.

    Evaluating that form literally loses ~ (2/sigma) * eps * ||Omega|| digits
    to cancellation.  Using P S = theta - theta_next, the bracket equals minus
    the window least-squares cost at theta_next, which turns the whole thing
    into the equivalent sum of squares

        tau = -(2/sigma) * sum ||Phi_i theta_next - y_i||^2
              - ||theta_next - theta||^2,

    exactly nonpositive in floating point as well.
    """
    theta = np.asarray(theta, dtype=float)
    theta_next = update_theta(theta, window, sigma, P)
    resid_sq = 0.0
    for s in window:
        r = s.phi @ theta_next - s.y
        resid_sq += float(r @ r)
    d = theta_next - theta
    tau = -(2.0 / sigma) * resid_sq - float(d @ d)
    if not np.isfinite(tau):
        raise EstimatorError("tau became non-finite")
    return tau


def update_nu(nu: float, tau: float, lambda_max_P: float, sigma: float) -> float:
    """Bound update: min(sigma * lmax(P) * nu, sqrt(nu^2 + tau)).

    The sqrt argument is clamped at zero; mathematically nu^2 + tau >= 0, but
    cancellation can push it a few ulp negative.
    """
    contracted = sigma * lambda_max_P * nu
    slack = nu * nu + tau
    return min(contracted, np.sqrt(slack) if slack > 0.0 else 0.0)


def step(state: EstimatorState, sample: RegressorSample,
         cfg: EstimatorConfig, sigma: float | None = None) -> EstimatorState:
    """Push one sample and advance (theta, nu) by one step.

    tau is evaluated with the pre-update theta against the new window (the
    window that includes ``sample``), then theta and nu are updated.  ``sigma``
    overrides the per-run constant for callers that schedule it.
    """
    if sample.phi.shape != state.window[0].phi.shape:
        raise EstimatorError(
            f"sample phi shape {sample.phi.shape} does not match window "
            f"{state.window[0].phi.shape}"
        )
    sig = cfg.sigma if sigma is None else float(sigma)
    window = state.window[1:] + (sample,)
    omega, P, lam_max_P, lam_min_omega = build_omega_and_P(window, sig)
    tau = compute_tau(state.theta, window, sig, P)
    theta_next = update_theta(state.theta, window, sig, P)
    nu_next = update_nu(state.nu, tau, lam_max_P, sig)
    return EstimatorState(
        k=state.k + 1,
        theta=theta_next,
        nu=nu_next,
        window=window,
        last_tau=tau,
        last_lambda_max_P=lam_max_P,
        last_omega_min_eig=lam_min_omega,
    )


def dump_window_debug(state: EstimatorState, sigma: float, fileobj) -> None:
    """Append one CSV row describing the current window and Omega spectrum."""
    omega, _, lam_max_P, _ = build_omega_and_P(state.window, sigma)
    eigs = np.linalg.eigvalsh(omega)
    writer = csv.writer(fileobj)
    row = [state.k, repr(float(sigma * lam_max_P))]
    row += [repr(float(e)) for e in eigs]
    for s in state.window:
        row.append(repr(float(np.linalg.norm(s.phi))))
        row.append(repr(float(np.linalg.norm(s.y))))
    writer.writerow(row)
