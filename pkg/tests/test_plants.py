import math

import numpy as np
import pytest

from adaptive_cbf.plants import (
    DifferentialDriveRobot,
    Pendulum,
    PendulumParams,
    RobotParams,
)

QPI = math.pi / 4.0


# ---------------------------------------------------------------- pendulum


def test_pendulum_equilibrium():
    plant = Pendulum()
    for theta in (np.zeros(5), plant.theta_star, np.full(5, 2.5)):
        xdot = plant.dynamics(np.zeros(2), np.zeros(1), theta)
        assert np.array_equal(xdot, np.zeros(2))


def test_pendulum_reduces_to_frictionless_without_uncertainty():
    plant = Pendulum()
    pp = plant.params
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.normal(0, 1, size=2)
        u = rng.normal(0, 0.01, size=1)
        xdot = plant.dynamics(x, u, np.zeros(5))
        assert xdot[0] == pytest.approx(x[1])
        expected = (pp.gravity / pp.length) * math.sin(x[0]) \
            + u[0] / (pp.mass * pp.length ** 2)
        assert xdot[1] == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("plant_cls,n,m,p,scale", [
    (Pendulum, 2, 1, 5, 1.0),
    (DifferentialDriveRobot, 5, 2, 4, 1.5),
])
def test_regressor_linearity_and_control_affinity(plant_cls, n, m, p, scale):
    plant = plant_cls()
    rng = np.random.default_rng(1)
    for _ in range(50):
        x = rng.normal(0, scale, size=n)
        u = rng.normal(0, 2, size=m)
        ua = rng.normal(0, 2, size=m)
        ta = rng.normal(0, 1, size=p)
        tb = rng.normal(0, 1, size=p)
        _, phi, g = plant.eval(x)
        d_theta = plant.dynamics(x, u, ta) - plant.dynamics(x, u, tb)
        assert np.allclose(d_theta, phi @ (ta - tb), atol=1e-12)
        d_u = plant.dynamics(x, ua, ta) - plant.dynamics(x, u, ta)
        assert np.allclose(d_u, g @ (ua - u), atol=1e-12)


@pytest.mark.parametrize("plant_cls,n,m,p,scale", [
    (Pendulum, 2, 1, 5, 1.0),
    (DifferentialDriveRobot, 5, 2, 4, 1.5),
])
def test_regressor_column_probe(plant_cls, n, m, p, scale):
    # phi columns recovered by probing the dynamics with unit parameters
    plant = plant_cls()
    rng = np.random.default_rng(2)
    for _ in range(50):
        x = rng.normal(0, scale, size=n)
        u = rng.normal(0, 2, size=m)
        _, phi, _ = plant.eval(x)
        base = plant.dynamics(x, u, np.zeros(p))
        for j in range(p):
            e = np.zeros(p)
            e[j] = 1.0
            col = plant.dynamics(x, u, e) - base
            assert np.allclose(col, phi[:, j], atol=1e-12)


def test_pendulum_closed_loop_identity():
    # u_d with the true parameter collapses the loop to
    # gammaddot = gammaddot_d - K1 e - K2 edot
    plant = Pendulum()
    pp = plant.params
    rng = np.random.default_rng(3)
    for _ in range(100):
        x = rng.normal(0, 1, size=2)
        t = float(rng.uniform(0, 20))
        u = plant.u_d(x, plant.theta_star, t)
        xdot = plant.dynamics(x, u, plant.theta_star)
        gam_d, gamdot_d, gamddot_d = plant.desired_trajectory(t)
        expected = gamddot_d - pp.K1 * (x[0] - gam_d) - pp.K2 * (x[1] - gamdot_d)
        assert abs(xdot[1] - expected) <= 1e-9 * max(1.0, abs(expected))


def test_pendulum_on_trajectory_acceleration():
    plant = Pendulum()
    gam_d, gamdot_d, gamddot_d = plant.desired_trajectory(0.0)
    x = np.array([gam_d, gamdot_d])
    u = plant.u_d(x, plant.theta_star, 0.0)
    xdot = plant.dynamics(x, u, plant.theta_star)
    assert xdot[1] == pytest.approx(gamddot_d, rel=1e-12)


def test_pendulum_ud_with_zero_estimate_omits_compensation():
    plant = Pendulum()
    pp = plant.params
    x = np.array([0.4, -0.2])
    t = 1.3
    gam_d, gamdot_d, gamddot_d = plant.desired_trajectory(t)
    ml2 = pp.mass * pp.length ** 2
    expected = ml2 * (-(pp.gravity / pp.length) * math.sin(x[0]) + gamddot_d
                      - pp.K1 * (x[0] - gam_d) - pp.K2 * (x[1] - gamdot_d))
    assert plant.u_d(x, np.zeros(5), t)[0] == pytest.approx(expected, rel=1e-12)


def test_pendulum_safety_values():
    plant = Pendulum()
    spec = plant.safety()
    assert spec.psi0(np.array([0.0, 0.0])) == pytest.approx(QPI ** 2)
    assert spec.psi_dm1(np.array([0.0, 0.0])) == pytest.approx(200 * QPI ** 2)
    # corridor boundary at rest: both chain levels vanish
    assert spec.psi0(np.array([QPI, 0.0])) == pytest.approx(0.0, abs=1e-15)
    assert spec.psi_dm1(np.array([QPI, 0.0])) == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(spec.grad_psi_dm1(np.array([0.1, -0.3])),
                       [0.6 - 40.0, -0.2])


def test_pendulum_params_validation():
    with pytest.raises(ValueError):
        PendulumParams(mass=-1.0)
    with pytest.raises(ValueError):
        PendulumParams(theta_star=(3.0, 0.35, 0.15, 0.5, 0.25))  # outside box


# ---------------------------------------------------------------- robot


def test_robot_rest_is_equilibrium():
    plant = DifferentialDriveRobot()
    xdot = plant.dynamics(np.zeros(5), np.zeros(2), plant.theta_star)
    assert np.array_equal(xdot, np.zeros(5))


def test_robot_equal_voltages_give_no_input_torque():
    plant = DifferentialDriveRobot()
    _, _, g = plant.eval(np.array([0.2, -0.1, 0.7, 0.5, 0.3]))
    u = np.array([3.3, 3.3])
    assert (g @ u)[4] == pytest.approx(0.0, abs=1e-14)
    assert (g @ u)[3] > 0.0


def test_robot_wheel_speeds():
    plant = DifferentialDriveRobot()
    wr, wl = plant.wheel_speeds(1.0, 2.0)
    # (2v + l w) / (2r) and (2v - l w) / (2r)
    assert wr == pytest.approx((2.0 + 0.5 * 2.0) / 0.2)
    assert wl == pytest.approx((2.0 - 0.5 * 2.0) / 0.2)


def test_robot_velocity_loop_identity():
    # u_d with the true parameter gives vdot = vdot_d - K1 (v - v_d)
    plant = DifferentialDriveRobot()
    pp = plant.params
    rng = np.random.default_rng(4)
    for _ in range(100):
        x = rng.normal(0, 1.2, size=5)
        u = plant.u_d(x, plant.theta_star)
        xdot = plant.dynamics(x, u, plant.theta_star)
        e1, e2 = plant.tip_errors(x)
        v_d, w_d = plant.desired_rates(x)
        e1dot = x[3] + x[4] * e2
        e2dot = x[4] * (pp.l_d - e1)
        vdot_d = (-(pp.mu1 + pp.mu2) * xdot[3]
                  - (1 + pp.mu1 * pp.mu2) * e1dot
                  + 2 * pp.mu1 ** 2 / pp.l_d * e2 * e2dot)
        wdot_d = -(pp.mu1 / pp.l_d) * e2dot
        assert abs(xdot[3] - (vdot_d - pp.K1 * (x[3] - v_d))) <= 1e-9
        assert abs(xdot[4] - (wdot_d - pp.K2 * (x[4] - w_d))) <= 1e-9


def test_robot_mixing_identity():
    # (u_dr + u_dl) k_m / (m r R_a) recovers the commanded acceleration channel
    plant = DifferentialDriveRobot()
    pp = plant.params
    rng = np.random.default_rng(5)
    for _ in range(50):
        x = rng.normal(0, 1.0, size=5)
        theta = rng.normal(0, 0.5, size=4)
        u = plant.u_d(x, theta)
        e1, e2 = plant.tip_errors(x)
        v_d, w_d = plant.desired_rates(x)
        e1dot = x[3] + x[4] * e2
        e2dot = x[4] * (pp.l_d - e1)
        _, phi, _ = plant.eval(x)
        ud1 = (-float(phi[3] @ theta)
               + (2 * pp.mu1 ** 2 / pp.l_d * e2 * e2dot
                  - (1 + pp.mu1 * pp.mu2) * e1dot
                  - pp.K1 * (x[3] - v_d)) / (1 + pp.mu1 + pp.mu2))
        got = (u[0] + u[1]) * pp.k_m / (pp.mass * pp.r * pp.R_a)
        assert got == pytest.approx(ud1, rel=1e-10)


def test_robot_goal_at_rest_is_stationary_target():
    plant = DifferentialDriveRobot()
    x = np.array([plant.params.goal[0], plant.params.goal[1], 0.9, 0.0, 0.0])
    e1, e2 = plant.tip_errors(x)
    v_d, w_d = plant.desired_rates(x)
    assert e1 == pytest.approx(0.0, abs=1e-12)
    assert e2 == pytest.approx(0.0, abs=1e-12)
    assert v_d == pytest.approx(0.0, abs=1e-12)
    assert w_d == pytest.approx(0.0, abs=1e-12)


def test_robot_tip_error_derivatives_match_finite_differences():
    # e1dot = v + w e2, e2dot = w (l_d - e1) along any trajectory
    plant = DifferentialDriveRobot()
    pp = plant.params
    rng = np.random.default_rng(6)
    x = np.array([-0.4, 0.3, 0.2, 0.6, 0.4])
    u = np.array([1.0, 0.6])
    h = 1e-3
    traj = [x.copy()]
    for _ in range(400):
        k1 = plant.dynamics(x, u, plant.theta_star)
        k2 = plant.dynamics(x + 0.5 * h * k1, u, plant.theta_star)
        k3 = plant.dynamics(x + 0.5 * h * k2, u, plant.theta_star)
        k4 = plant.dynamics(x + h * k3, u, plant.theta_star)
        x = x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        traj.append(x.copy())
    e1s = [plant.tip_errors(z)[0] for z in traj]
    e2s = [plant.tip_errors(z)[1] for z in traj]
    for i in range(1, len(traj) - 1):
        z = traj[i]
        e1, e2 = e1s[i], e2s[i]
        fd1 = (e1s[i + 1] - e1s[i - 1]) / (2 * h)
        fd2 = (e2s[i + 1] - e2s[i - 1]) / (2 * h)
        assert abs(fd1 - (z[3] + z[4] * e2)) <= 1e-4
        assert abs(fd2 - z[4] * (pp.l_d - e1)) <= 1e-4


def test_robot_safety_boundary_behavior():
    plant = DifferentialDriveRobot()
    spec = plant.safety()
    pp = plant.params
    # exactly on obstacle 1's inflated boundary, far from obstacle 2
    cx, cy, R = pp.obstacles[0]
    x = np.array([cx - (R + pp.l_d), cy, 0.0, 0.0, 0.0])
    h = plant.obstacle_clearances(x)
    assert h[0] == pytest.approx(0.0, abs=1e-12)
    assert h[1] > 1.0
    expected = -math.log(1.0 + math.exp(-pp.rho * h[1])) / pp.rho
    assert spec.psi0(x) == pytest.approx(expected, rel=1e-12)
    assert spec.psi0(x) < 0.0  # softmin sits just below the true minimum


def test_robot_params_validation():
    with pytest.raises(ValueError):
        RobotParams(r=0.0)
    with pytest.raises(ValueError):
        RobotParams(theta_star=(6.0, 0.0487, 0.025, 0.5))


def test_robot_structural_rank_deficiency():
    # viscous friction and back-EMF regressor columns are collinear with
    # ratio R_a / k_m at every state: Omega built from any trajectory is
    # singular and the identifiability null direction is fixed
    plant = DifferentialDriveRobot()
    pp = plant.params
    rng = np.random.default_rng(7)
    ratio = pp.R_a / pp.k_m
    for _ in range(50):
        x = rng.normal(0, 2, size=5)
        _, phi, _ = plant.eval(x)
        assert np.allclose(phi[:, 2], ratio * (phi[:, 0] + phi[:, 1]), atol=1e-12)
    null = np.array([-ratio, -ratio, 1.0, 0.0])
    for _ in range(20):
        x = rng.normal(0, 2, size=5)
        _, phi, _ = plant.eval(x)
        assert np.max(np.abs(phi @ null)) <= 1e-12
