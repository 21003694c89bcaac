import math

import numpy as np
import pytest

from adaptive_cbf import cbf
from adaptive_cbf.plants import DifferentialDriveRobot, Pendulum


# ---------------------------------------------------------------- softmin


def test_softmin_single_value_exact():
    assert cbf.softmin_psi0([0.37], 3.0) == pytest.approx(0.37, abs=1e-15)


def test_softmin_identical_values():
    assert cbf.softmin_psi0([1.2, 1.2], 3.0) == pytest.approx(
        1.2 - math.log(2.0) / 3.0, abs=1e-14)


def test_softmin_hand_value():
    expected = -(1.0 / 3.0) * math.log(math.exp(-1.5) + math.exp(-6.0))
    got = cbf.softmin_psi0([0.5, 2.0], 3.0)
    assert got == pytest.approx(expected, rel=1e-14)
    assert got == pytest.approx(0.4963, abs=5e-5)


def test_softmin_bracketed_by_min():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 6))
        h = rng.normal(0.0, 3.0, size=n)
        rho = float(rng.uniform(0.2, 8.0))
        v = cbf.softmin_psi0(h, rho)
        assert h.min() - math.log(n) / rho - 1e-12 <= v <= h.min() + 1e-12


def test_softmin_extreme_values_stable():
    assert math.isfinite(cbf.softmin_psi0([1e6, 2e6], 3.0))
    assert math.isfinite(cbf.softmin_psi0([-1e6, -2e6], 3.0))
    assert cbf.softmin_psi0([-1e6, 1e6], 3.0) == pytest.approx(-1e6)


def test_softmin_rejects_bad_input():
    with pytest.raises(ValueError):
        cbf.softmin_psi0([], 3.0)
    with pytest.raises(ValueError):
        cbf.softmin_psi0([1.0], 0.0)


# ---------------------------------------------------------------- terms


def test_pendulum_origin_has_zero_lie_terms():
    plant = Pendulum()
    spec = plant.safety()
    t = cbf.terms(spec, plant, np.array([0.0, 0.0]))
    # grad psi1 vanishes at the origin, so every Lie term does
    assert t.Lf == 0.0
    assert np.allclose(t.Lg, 0.0)
    assert np.allclose(t.Lphi, 0.0)
    assert t.psi_dm1_val == pytest.approx(200.0 * (math.pi / 4) ** 2)


def test_pendulum_lg_proportional_to_gamma():
    plant = Pendulum()
    spec = plant.safety()
    x = np.array([0.3, -0.7])
    t = cbf.terms(spec, plant, x)
    ml2 = plant.params.mass * plant.params.length ** 2
    assert t.Lg[0] == pytest.approx(-2.0 * 0.3 / ml2, rel=1e-12)


def test_terms_norm_matches_lphi():
    plant = DifferentialDriveRobot()
    spec = plant.safety()
    rng = np.random.default_rng(1)
    for _ in range(50):
        x = rng.normal(0, 1.2, size=5)
        t = cbf.terms(spec, plant, x)
        assert t.norm_Lphi == pytest.approx(float(np.linalg.norm(t.Lphi)), abs=1e-14)


def test_terms_rejects_non_finite_state():
    plant = Pendulum()
    spec = plant.safety()
    with pytest.raises(FloatingPointError):
        cbf.terms(spec, plant, np.array([np.nan, 0.0]))


# ---------------------------------------------------------------- psi value


def _random_terms(rng, m=2, p=4):
    Lphi = rng.normal(0, 2, size=p)
    return cbf.ConstraintTerms(
        Lf=float(rng.normal(0, 2)),
        Lg=rng.normal(0, 2, size=m),
        Lphi=Lphi,
        norm_Lphi=float(np.linalg.norm(Lphi)),
        psi_dm1_val=float(rng.normal(0, 2)),
    )


def test_psi_equals_ideal_at_true_parameter_and_zero_margin():
    rng = np.random.default_rng(2)
    for _ in range(50):
        t = _random_terms(rng)
        theta_star = rng.normal(0, 1, size=4)
        u = rng.normal(0, 1, size=2)
        delta = float(rng.normal())
        gain = float(rng.uniform(0.5, 5.0))
        assert cbf.psi_value(t, theta_star, 0.0, u, delta, gain) == pytest.approx(
            cbf.psi_star_value(t, theta_star, u, delta, gain), rel=1e-14)


def test_psi_lower_bounds_ideal_under_valid_margin():
    rng = np.random.default_rng(3)
    for _ in range(10000):
        t = _random_terms(rng)
        theta_star = rng.normal(0, 1, size=4)
        theta_hat = theta_star + rng.normal(0, 1, size=4)
        nu = float(np.linalg.norm(theta_hat - theta_star)) * float(rng.uniform(1.0, 3.0))
        u = rng.normal(0, 1, size=2)
        delta = float(rng.normal())
        gain = float(rng.uniform(0.5, 5.0))
        lhs = cbf.psi_value(t, theta_hat, nu, u, delta, gain)
        rhs = cbf.psi_star_value(t, theta_star, u, delta, gain)
        assert lhs <= rhs + 1e-9


def test_psi_linear_in_margin():
    rng = np.random.default_rng(4)
    t = _random_terms(rng)
    theta = rng.normal(0, 1, size=4)
    u = rng.normal(0, 1, size=2)
    base = cbf.psi_value(t, theta, 1.0, u, 0.2, 2.0)
    bumped = cbf.psi_value(t, theta, 1.0 + 0.7, u, 0.2, 2.0)
    assert bumped - base == pytest.approx(-0.7 * t.norm_Lphi, rel=1e-12)


# ---------------------------------------------------------------- gradients


@pytest.mark.parametrize("plant_cls,state_dim,scale", [
    (Pendulum, 2, 1.0),
    (DifferentialDriveRobot, 5, 1.5),
])
def test_grad_psi_dm1_matches_central_differences(plant_cls, state_dim, scale):
    plant = plant_cls()
    spec = plant.safety()
    rng = np.random.default_rng(5)
    h = 1e-6
    for _ in range(100):
        x = rng.normal(0, scale, size=state_dim)
        ana = np.asarray(spec.grad_psi_dm1(x), dtype=float)
        fd = np.zeros(state_dim)
        for j in range(state_dim):
            e = np.zeros(state_dim)
            e[j] = h
            fd[j] = (spec.psi_dm1(x + e) - spec.psi_dm1(x - e)) / (2 * h)
        denom = max(1.0, float(np.max(np.abs(fd))))
        assert np.max(np.abs(ana - fd)) / denom < 1e-5


def test_relative_degree_structure():
    # L_g psi0 and L_phi psi0 vanish identically for both plants (d = 2)
    rng = np.random.default_rng(6)

    pend = Pendulum()
    for _ in range(50):
        x = rng.normal(0, 1, size=2)
        grad0 = np.array([-2.0 * x[0], 0.0])
        _, phi, g = pend.eval(x)
        assert np.max(np.abs(grad0 @ g)) <= 1e-12
        assert np.max(np.abs(grad0 @ phi)) <= 1e-12

    rob = DifferentialDriveRobot()
    for _ in range(50):
        x = rng.normal(0, 1.5, size=5)
        h = rob.obstacle_clearances(x)
        z = -rob.params.rho * h
        w = np.exp(z - z.max())
        w /= w.sum()
        centers = np.array([[c[0], c[1]] for c in rob.params.obstacles])
        grad0 = np.array([
            float(w @ (x[0] - centers[:, 0])),
            float(w @ (x[1] - centers[:, 1])),
            0.0, 0.0, 0.0,
        ])
        _, phi, g = rob.eval(x)
        assert np.max(np.abs(grad0 @ g)) <= 1e-12
        assert np.max(np.abs(grad0 @ phi)) <= 1e-12


def test_robot_far_field_softmin_close_to_min():
    rob = DifferentialDriveRobot()
    spec = rob.safety()
    x = np.array([30.0, -20.0, 0.3, 0.1, 0.0])
    h = rob.obstacle_clearances(x)
    v = spec.psi0(x)
    assert h.min() - math.log(2.0) / rob.params.rho <= v <= h.min()
    assert v == pytest.approx(h.min(), rel=1e-3)
