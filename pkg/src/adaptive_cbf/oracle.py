"""Independent verification batteries for the estimator, controller and quadrature.

Each battery checks an implementation against a source of truth it does not
share code with:

* the estimator bound identities are checked on synthetic windows whose true
  parameter is known, so the squared-error change can be computed directly;
* the closed-form controller is checked against first-order optimality
  residuals and against brute-force feasible sample clouds in the cost;
* the interval quadrature is checked with the known true parameter
  (y_k must equal Phi_k theta_true to integrator order) and a step-halving
  convergence ratio.

The CLI ``oracle`` subcommand runs all batteries; the acceptance test suite
runs the same functions at the published tolerances.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import cbf, controller, estimator
from .config import build, resolve
from .sim import Case, SimConfig, run


@dataclass(frozen=True)
class OracleResult:
    name: str
    passed: bool
    max_residual: float
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: max_residual={self.max_residual:.3e} ({self.detail})"


def _random_window(rng, n, p, k_n, theta_star, zero_prefix=0):
    """Window of k_n+1 consistent samples; optionally zero-padded at the front."""
    samples = []
    for i in range(k_n + 1):
        if i < zero_prefix:
            phi = np.zeros((n, p))
        else:
            phi = rng.standard_normal((n, p))
        samples.append(estimator.RegressorSample(phi, phi @ theta_star))
    return tuple(samples)


def lemma1_battery(n_windows: int = 1000, seed: int = 2024) -> OracleResult:
    """tau must equal the one-step change of the squared estimation error.

    Windows are random and consistent (y_i = Phi_i theta_true); the oracle
    side computes ||theta_next - theta_true||^2 - ||theta - theta_true||^2
    from the known truth, which never enters the tau computation.
    """
    rng = np.random.default_rng(seed)
    p, n = 5, 3
    worst = 0.0
    for i in range(n_windows):
        k_n = int(rng.choice([0, 5, 30]))
        sigma = float(rng.choice([1e-3, 0.1, 1.0]))
        theta_star = rng.standard_normal(p)
        theta_k = rng.standard_normal(p)
        window = _random_window(rng, n, p, k_n, theta_star,
                                zero_prefix=int(rng.integers(0, k_n + 1)))
        _, P, _, _ = estimator.build_omega_and_P(window, sigma)
        tau = estimator.compute_tau(theta_k, window, sigma, P)
        theta_next = estimator.update_theta(theta_k, window, sigma, P)
        err_k = theta_k - theta_star
        err_next = theta_next - theta_star
        dv = float(err_next @ err_next) - float(err_k @ err_k)
        scale = max(1.0, float(err_k @ err_k))
        worst = max(worst, abs(tau - dv) / scale)
    return OracleResult("lemma1-equality", worst <= 1e-9, worst,
                        f"{n_windows} random windows, tol 1e-9 relative")


def bound_battery(n_runs: int = 60, n_steps: int = 200,
                  seed: int = 7) -> OracleResult:
    """Certified-bound chain properties over synthetic estimation runs.

    Checks tau <= 1e-12, nu nonincreasing, nu >= ||error||, and that a
    persistently full-rank regressor stream drives nu below 1e-3 within
    n_steps.  Windows with k_n = 0 hold a single rank-n sample, so Omega is
    rank deficient there; those runs are exempt from the convergence clause
    (but not from the bound properties).
    """
    rng = np.random.default_rng(seed)
    p, n = 5, 3
    worst = 0.0
    final_nus = []
    for i in range(n_runs):
        k_n = int(rng.choice([0, 5, 30]))
        sigma = float(rng.choice([1e-3, 0.1, 1.0]))
        theta_star = rng.uniform(0.0, 2.5, size=p)
        cfg = estimator.EstimatorConfig(
            p=p, k_n=k_n, sigma=sigma,
            theta0=np.zeros(p),
            theta_box_lo=np.zeros(p),
            theta_box_hi=np.full(p, 2.5),
        )
        state = estimator.init_state(cfg, n)
        for _ in range(n_steps):
            prev_nu = state.nu
            phi = rng.standard_normal((n, p))
            state = estimator.step(
                state, estimator.RegressorSample(phi, phi @ theta_star), cfg)
            err = float(np.linalg.norm(state.theta - theta_star))
            worst = max(worst, state.last_tau,          # tau <= 0
                        state.nu - prev_nu,             # nu nonincreasing
                        err - state.nu - 1e-9)          # nu >= err
        if k_n > 0 and n * (k_n + 1) >= p:
            final_nus.append(state.nu)
    converged = max(final_nus) < 1e-3
    passed = worst <= 1e-12 and converged
    return OracleResult(
        "bound-chain", passed, worst,
        f"{n_runs} runs x {n_steps} steps; max full-rank final nu="
        f"{max(final_nus):.2e}")


def _random_instance(rng):
    m = int(rng.integers(1, 3))
    p = 3
    A = rng.standard_normal((m, m))
    H = A @ A.T + 0.5 * np.eye(m)
    beta = float(np.exp(rng.uniform(np.log(0.1), np.log(100.0))))
    t = cbf.ConstraintTerms(
        Lf=float(rng.normal(0, 2)),
        Lg=rng.normal(0, 2, size=m),
        Lphi=rng.normal(0, 2, size=p),
        norm_Lphi=0.0,
        psi_dm1_val=float(rng.normal(0, 2)),
    )
    t = cbf.ConstraintTerms(t.Lf, t.Lg, t.Lphi,
                            float(np.linalg.norm(t.Lphi)), t.psi_dm1_val)
    theta = rng.normal(0, 1, size=p)
    nu = abs(float(rng.normal(0, 2)))
    u_d = rng.normal(0, 2, size=m)
    gain = float(rng.uniform(0.5, 5.0))
    params = controller.ControllerParams(
        H=lambda x, th, _H=H: _H, beta=beta,
        u_d=lambda x, th, tt, _u=u_d: _u)
    return t, theta, nu, u_d, gain, H, beta, params


def kkt_battery(n_instances: int = 1000, cloud_per_instance: int = 1000,
                dense_instances: int = 5, dense_cloud: int = 10 ** 6,
                seed: int = 11) -> OracleResult:
    """First-order optimality and brute-force cloud check of the closed form.

    Every instance gets stationarity / feasibility / complementary-slackness
    residuals and a feasible sample cloud that the closed-form cost must not
    exceed; a handful of instances get a dense million-point cloud.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_gap = 0.0
    skipped = 0
    for i in range(n_instances + dense_instances):
        t, theta, nu, u_d, gain, H, beta, params = _random_instance(rng)
        try:
            dec = controller.solve(t, theta, nu, params, x=None, time=0.0,
                                   gain_dm1=gain)
        except controller.DegenerateConstraintError:
            skipped += 1
            continue
        m = u_d.shape[0]
        stat_u = np.linalg.norm(H @ (dec.u_star - u_d) - dec.lambda_star * t.Lg)
        stat_d = abs(beta * dec.delta_star - dec.lambda_star * t.psi_dm1_val)
        primal = max(0.0, -dec.psi_at_solution)
        compl = abs(dec.lambda_star * dec.psi_at_solution)
        dual = max(0.0, -dec.lambda_star)
        worst = max(worst, stat_u, stat_d, primal, dual, compl)

        n_cloud = dense_cloud if i >= n_instances else cloud_per_instance
        scale = 1.0 + float(np.linalg.norm(dec.u_star - u_d)) + abs(dec.delta_star)
        U = dec.u_star + scale * rng.standard_normal((n_cloud, m))
        D = dec.delta_star + scale * rng.standard_normal(n_cloud)
        base = (t.Lf + float(t.Lphi @ theta) - t.norm_Lphi * nu
                + gain * t.psi_dm1_val)
        psi_cloud = base + U @ t.Lg + D * t.psi_dm1_val
        feas = psi_cloud >= 0.0
        if not feas.any():
            skipped += 1
            continue
        dU = U[feas] - u_d
        J_cloud = 0.5 * np.einsum("ij,jk,ik->i", dU, H, dU) \
            + 0.5 * beta * D[feas] ** 2
        J_star = controller.jbar(dec.u_star, dec.delta_star, u_d, H, beta)
        worst_gap = max(worst_gap, J_star - float(J_cloud.min()))
        worst = max(worst, J_star - float(J_cloud.min()))
    passed = worst <= 1e-8
    return OracleResult(
        "kkt-cloud", passed, worst,
        f"{n_instances}+{dense_instances} instances, worst cost gap "
        f"{worst_gap:.3e}, {skipped} vacuous")


def quadrature_battery(t_end: float = 60.0, seed: int = 0) -> OracleResult:
    """Sample-consistency residual and its step-halving convergence ratio.

    Runs the stock pendulum scenario at the shipped ode step and at half the
    step; every interval must satisfy ||y_k - Phi_k theta|| <=
    1e-6 (1 + ||Phi_k theta||) and the max residual must drop by at least 8x.
    """
    cfg = resolve(f"sim.t_end = {t_end}")
    bundle = build(cfg)
    theta_star = bundle.plant.theta_star

    def max_resid(ode_dt):
        sim_cfg = SimConfig(t_end=t_end, ode_dt=ode_dt,
                            ctrl_hz=cfg["sim.ctrl_hz"],
                            sample_dt=cfg["sim.sample_dt"],
                            case=Case.ADAPT_BOTH,
                            x0=np.asarray(cfg["sim.x0"]))
        log = run(bundle.plant, bundle.safety, bundle.controller_params,
                  bundle.estimator_config, sim_cfg, eta=bundle.eta)
        worst_abs = 0.0
        worst_rel = 0.0
        for phi, y in log.samples:
            ref = phi @ theta_star
            r = float(np.linalg.norm(y - ref))
            worst_abs = max(worst_abs, r)
            worst_rel = max(worst_rel, r / (1.0 + float(np.linalg.norm(ref))))
        return worst_abs, worst_rel

    base_dt = float(cfg["sim.ode_dt"])
    abs1, rel1 = max_resid(base_dt)
    abs2, _ = max_resid(0.5 * base_dt)
    ratio = abs1 / abs2 if abs2 > 0 else float("inf")
    passed = rel1 <= 1e-6 and ratio >= 8.0
    return OracleResult(
        "quadrature", passed, rel1,
        f"residual {abs1:.3e} -> {abs2:.3e} on halving (ratio {ratio:.1f}x)")


def run_all(quick: bool = False):
    """All batteries, sized down when quick is set."""
    results = []
    t0 = time.perf_counter()
    if quick:
        results.append(lemma1_battery(n_windows=200))
        results.append(bound_battery(n_runs=15))
        results.append(kkt_battery(n_instances=200, dense_instances=1,
                                   dense_cloud=10 ** 5))
        results.append(quadrature_battery(t_end=10.0))
    else:
        results.append(lemma1_battery())
        results.append(bound_battery())
        results.append(kkt_battery())
        results.append(quadrature_battery())
    elapsed = time.perf_counter() - t0
    return results, elapsed
