"""Benchmark systems: an uncertain pendulum and a differential-drive robot.

Both plants have control-affine dynamics with a linearly parameterized
uncertainty,

    dx/dt = f(x) + phi(x) theta_true + g(x) u,

where theta_true lives in a known box.  Each plant supplies the model triple
(f, phi, g), a performance-driven desired control u_d(x, theta, t) that
compensates the uncertainty with the supplied estimate, and a relative-degree-2
safety specification (position corridor for the pendulum, smooth-minimum
obstacle clearance for the robot).

`g` denotes the input matrix throughout; the gravitational acceleration is the
``gravity`` parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cbf import SafetySpec, softmin_psi0
from .controller import ControllerParams

QUARTER_PI = math.pi / 4.0


class Plant:
    """Base control-affine plant; subclasses fill in the model triple."""

    name = "plant"
    n = 0
    m = 0
    p = 0
    state_names: tuple = ()
    control_names: tuple = ()
    ref_names: tuple = ()

    def eval(self, x):
        """Fused (f(x), phi(x), g(x)) evaluation; the hot path of the simulator."""
        raise NotImplementedError

    def f(self, x):
        return self.eval(x)[0]

    def phi(self, x):
        return self.eval(x)[1]

    def g(self, x):
        return self.eval(x)[2]

    def dynamics(self, x, u, theta):
        """dx/dt = f(x) + phi(x) theta + g(x) u."""
        f, phi, g = self.eval(x)
        return f + phi @ np.asarray(theta, dtype=float) + g @ np.asarray(u, dtype=float)

    def u_d(self, x, theta, t):
        raise NotImplementedError

    def references(self, x, t):
        """Reference values paired with ``ref_names``, for logging and plots."""
        raise NotImplementedError


@dataclass(frozen=True)
class PendulumParams:
    """Pendulum physical constants, true parameter and its box."""

    mass: float = 0.01              # kg
    length: float = 0.15            # m
    gravity: float = 9.81           # m/s^2
    eps1: float = 2.0               # coulomb-friction smoothing
    eps2: float = 2.0               # drag smoothing
    theta_star: tuple = (0.5, 0.35, 0.15, 0.5, 0.25)
    K1: float = 50.0
    K2: float = 100.0
    box_lo: tuple = (0.0,) * 5
    box_hi: tuple = (2.5,) * 5

    def __post_init__(self):
        if min(self.mass, self.length, self.gravity, self.eps1, self.eps2) <= 0:
            raise ValueError("pendulum physical constants must be positive")
        ts = np.asarray(self.theta_star, dtype=float)
        lo = np.asarray(self.box_lo, dtype=float)
        hi = np.asarray(self.box_hi, dtype=float)
        if np.any(ts < lo) or np.any(ts > hi):
            raise ValueError("theta_star must lie inside the parameter box")


class Pendulum(Plant):
    """Pendulum with linear/cubic restitution, coulomb and viscous friction, drag.

    State x = (gamma, gammadot).  The uncertain torque basis is

        phi_2(x) = (1/(m L^2)) [ -gamma, -gamma^3, -tanh(gammadot/eps1),
                                 -gammadot, -gammadot^2 tanh(gammadot/eps2) ]

    and the desired control tracks gamma_d(t) = -0.99 (pi/4) cos t by feedback
    linearization with the supplied parameter estimate:

        u_d = m L^2 [ -f_2 - phi_2 theta_hat + gammaddot_d - K1 e - K2 edot ].
    """

    name = "pendulum"
    n = 2
    m = 1
    p = 5
    state_names = ("gamma", "gammadot")
    control_names = ("u",)
    ref_names = ("gamma_d", "gammadot_d")

    def __init__(self, params: PendulumParams | None = None):
        self.params = params if params is not None else PendulumParams()
        pp = self.params
        self._ml2 = pp.mass * pp.length * pp.length
        self._inv_ml2 = 1.0 / self._ml2
        self._g_over_L = pp.gravity / pp.length
        self._g_mat = np.array([[0.0], [self._inv_ml2]])
        self.theta_star = np.asarray(pp.theta_star, dtype=float)

    def eval(self, x):
        gam = float(x[0])
        gd = float(x[1])
        s = self._inv_ml2
        f = np.array([gd, self._g_over_L * math.sin(gam)])
        phi = np.array([
            [0.0, 0.0, 0.0, 0.0, 0.0],
            [-gam * s,
             -gam * gam * gam * s,
             -math.tanh(gd / self.params.eps1) * s,
             -gd * s,
             -gd * gd * math.tanh(gd / self.params.eps2) * s],
        ])
        return f, phi, self._g_mat

    def desired_trajectory(self, t):
        """(gamma_d, gammadot_d, gammaddot_d) of the tracked sinusoid."""
        a = 0.99 * QUARTER_PI
        return -a * math.cos(t), a * math.sin(t), a * math.cos(t)

    def u_d(self, x, theta, t):
        pp = self.params
        gam = float(x[0])
        gd = float(x[1])
        gam_d, gamdot_d, gamddot_d = self.desired_trajectory(t)
        e = gam - gam_d
        edot = gd - gamdot_d
        f2 = self._g_over_L * math.sin(gam)
        phi2_theta = self._inv_ml2 * (
            -gam * theta[0]
            - gam * gam * gam * theta[1]
            - math.tanh(gd / pp.eps1) * theta[2]
            - gd * theta[3]
            - gd * gd * math.tanh(gd / pp.eps2) * theta[4])
        return np.array([self._ml2 * (-f2 - phi2_theta + gamddot_d
                                      - pp.K1 * e - pp.K2 * edot)])

    def references(self, x, t):
        gam_d, gamdot_d, _ = self.desired_trajectory(t)
        return (gam_d, gamdot_d)

    def safety(self, alpha_gains=(200.0, 200.0)) -> SafetySpec:
        """Position corridor |gamma| <= pi/4 as a relative-degree-2 chain.

        psi_0 = (pi/4)^2 - gamma^2
        psi_1 = -2 gamma gammadot + c0 psi_0
        grad psi_1 = (-2 gammadot - 2 c0 gamma, -2 gamma)
        """
        c0 = float(alpha_gains[0])

        def psi0(x):
            gam = float(x[0])
            return QUARTER_PI * QUARTER_PI - gam * gam

        def psi1(x):
            gam = float(x[0])
            gd = float(x[1])
            return -2.0 * gam * gd + c0 * (QUARTER_PI * QUARTER_PI - gam * gam)

        def grad_psi1(x):
            gam = float(x[0])
            gd = float(x[1])
            return np.array([-2.0 * gd - 2.0 * c0 * gam, -2.0 * gam])

        return SafetySpec(d=2, psi0=psi0, psi_dm1=psi1,
                          grad_psi_dm1=grad_psi1, alpha_gains=alpha_gains)

    def controller_params(self, H_diag=(2.0,), beta: float = 200.0) -> ControllerParams:
        H_mat = np.diag(np.asarray(H_diag, dtype=float))
        return ControllerParams(H=lambda x, th: H_mat, beta=beta, u_d=self.u_d)


@dataclass(frozen=True)
class RobotParams:
    """Differential-drive robot constants, obstacles and goal."""

    k_m: float = 0.1                # N*m/A torque constant
    r: float = 0.1                  # m wheel radius
    l: float = 0.5                  # m wheel separation
    l_d: float = 0.25               # m center-of-mass to tip
    R_a: float = 0.27               # ohm armature resistance
    mass: float = 10.0              # kg
    inertia: float = 0.83           # kg*m^2
    gravity: float = 9.81
    theta_star: tuple = (0.0487, 0.0487, 0.025, 0.5)
    mu1: float = 0.08
    mu2: float = 0.08
    K1: float = 10.0
    K2: float = 10.0
    obstacles: tuple = ((0.65, 0.8, 0.5), (1.95, 1.75, 0.35))
    rho: float = 3.0
    goal: tuple = (2.56, 1.8)
    box_lo: tuple = (0.0, 0.0, 0.0, 0.0)
    box_hi: tuple = (5.0, 5.0, 5.0, 1.0)

    def __post_init__(self):
        if min(self.k_m, self.r, self.l, self.l_d, self.R_a,
               self.mass, self.inertia, self.gravity, self.rho) <= 0:
            raise ValueError("robot physical constants must be positive")
        ts = np.asarray(self.theta_star, dtype=float)
        lo = np.asarray(self.box_lo, dtype=float)
        hi = np.asarray(self.box_hi, dtype=float)
        if np.any(ts < lo) or np.any(ts > hi):
            raise ValueError("theta_star must lie inside the parameter box")


class DifferentialDriveRobot(Plant):
    """Nonholonomic differential-drive robot steered by its tip point.

    State x = (qx, qy, gamma, v, omega) with (qx, qy) the tip position, gamma
    the heading, v and omega the linear and angular speed; controls are the
    two motor voltages (u_r, u_l).  The uncertain entries of the acceleration
    rows collect back-EMF constants of both motors, a friction coefficient and
    an incline factor multiplying -gravity * sin(gamma) (kept exactly in that
    form even though gamma is the heading).
    """

    name = "robot"
    n = 5
    m = 2
    p = 4
    state_names = ("qx", "qy", "gamma", "v", "omega")
    control_names = ("u_r", "u_l")
    ref_names = ("qx_d", "qy_d", "v_d", "omega_d")

    def __init__(self, params: RobotParams | None = None):
        self.params = params if params is not None else RobotParams()
        pp = self.params
        self._kv = pp.k_m / (pp.mass * pp.r * pp.R_a)          # row-4 input gain
        self._kw = pp.k_m * pp.l / (pp.inertia * pp.r * pp.R_a)  # row-5 input gain
        self._g_mat = np.array([
            [0.0, 0.0],
            [0.0, 0.0],
            [0.0, 0.0],
            [self._kv, self._kv],
            [self._kw, -self._kw],
        ])
        self.theta_star = np.asarray(pp.theta_star, dtype=float)

    def wheel_speeds(self, v: float, omega: float):
        pp = self.params
        wr = (2.0 * v + pp.l * omega) / (2.0 * pp.r)
        wl = (2.0 * v - pp.l * omega) / (2.0 * pp.r)
        return wr, wl

    def eval(self, x):
        pp = self.params
        gam = float(x[2])
        v = float(x[3])
        om = float(x[4])
        cg = math.cos(gam)
        sg = math.sin(gam)
        wr, wl = self.wheel_speeds(v, om)
        f = np.array([v * cg - pp.l_d * om * sg,
                      v * sg + pp.l_d * om * cg,
                      om, 0.0, 0.0])
        mr = pp.mass * pp.r
        ir = pp.inertia * pp.r
        cvr = pp.k_m / (mr * pp.R_a)
        cwr = pp.k_m * pp.l / (ir * pp.R_a)
        phi = np.array([
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [-cvr * wr, -cvr * wl, -(wr + wl) / mr, -pp.gravity * sg],
            [-cwr * wr, cwr * wl, -(wr - wl) * pp.l / ir, 0.0],
        ])
        return f, phi, self._g_mat

    def tip_errors(self, x):
        """Body-frame tip-position errors (e1 longitudinal, e2 lateral)."""
        pp = self.params
        dx = float(x[0]) - pp.goal[0]
        dy = float(x[1]) - pp.goal[1]
        cg = math.cos(float(x[2]))
        sg = math.sin(float(x[2]))
        return dx * cg + dy * sg, -dx * sg + dy * cg

    def desired_rates(self, x):
        """(v_d, omega_d) steering the tip to the goal."""
        pp = self.params
        e1, e2 = self.tip_errors(x)
        v = float(x[3])
        v_d = (-(pp.mu1 + pp.mu2) * v - (1.0 + pp.mu1 * pp.mu2) * e1
               + (pp.mu1 * pp.mu1 / pp.l_d) * e2 * e2)
        omega_d = -(pp.mu1 / pp.l_d) * e2
        return v_d, omega_d

    def u_d(self, x, theta, t=0.0):
        """Voltage pair that drives v -> v_d and omega -> omega_d.

        Differentiating the error definitions along the tip kinematics gives
        e1dot = v + omega e2 and e2dot = omega (l_d - e1) (the goal is
        static).  Solving the v-loop for the acceleration that yields
        vdot = vdot_d - K1 (v - v_d) produces the (1 + mu1 mu2) coefficient
        on e1dot and the 1 / (1 + mu1 + mu2) prefactor.
        """
        pp = self.params
        gam = float(x[2])
        v = float(x[3])
        om = float(x[4])
        e1, e2 = self.tip_errors(x)
        v_d, omega_d = self.desired_rates(x)
        e1dot = v + om * e2
        e2dot = om * (pp.l_d - e1)
        e_a = v - v_d
        e_b = om - omega_d
        wr, wl = self.wheel_speeds(v, om)
        cvr = self._kv
        cwr = self._kw
        imr = 1.0 / (pp.mass * pp.r)
        ilr = pp.l / (pp.inertia * pp.r)
        phi4_theta = (-cvr * wr * theta[0] - cvr * wl * theta[1]
                      - (wr + wl) * imr * theta[2]
                      - pp.gravity * math.sin(gam) * theta[3])
        phi5_theta = (-cwr * wr * theta[0] + cwr * wl * theta[1]
                      - (wr - wl) * ilr * theta[2])
        ud1 = (-phi4_theta
               + ((2.0 * pp.mu1 * pp.mu1 / pp.l_d) * e2 * e2dot
                  - (1.0 + pp.mu1 * pp.mu2) * e1dot
                  - pp.K1 * e_a) / (1.0 + pp.mu1 + pp.mu2))
        ud2 = (-phi5_theta
               - (pp.mu1 / pp.l_d) * e2dot
               - pp.K2 * e_b)
        cv = pp.mass * pp.r * pp.R_a / (2.0 * pp.k_m)
        cw = pp.inertia * pp.r * pp.R_a / (2.0 * pp.k_m * pp.l)
        return np.array([cv * ud1 + cw * ud2, cv * ud1 - cw * ud2])

    def references(self, x, t):
        v_d, omega_d = self.desired_rates(x)
        return (self.params.goal[0], self.params.goal[1], v_d, omega_d)

    def obstacle_clearances(self, x):
        """h_i = half squared distance to obstacle i minus half inflated radius squared."""
        pp = self.params
        qx = float(x[0])
        qy = float(x[1])
        return np.array([
            0.5 * ((qx - cx) ** 2 + (qy - cy) ** 2 - (R + pp.l_d) ** 2)
            for cx, cy, R in pp.obstacles
        ])

    def safety(self, alpha_gains=(5.0, 2.0)) -> SafetySpec:
        """Smooth-minimum obstacle clearance as a relative-degree-2 chain.

        psi_0 is the softmin of the h_i; psi_1 = L_f psi_0 + c0 psi_0 with the
        gradient propagated analytically through the softmax weights.
        """
        pp = self.params
        c0 = float(alpha_gains[0])
        rho = pp.rho
        centers = np.array([[cx, cy] for cx, cy, _ in pp.obstacles])

        def _weights(h):
            z = -rho * h
            z = z - z.max()
            w = np.exp(z)
            return w / w.sum()

        def psi0(x):
            return softmin_psi0(self.obstacle_clearances(x), rho)

        def _psi1_pieces(x):
            qx, qy, gam, v, om = (float(c) for c in x)
            h = self.obstacle_clearances(x)
            w = _weights(h)
            a = qx - centers[:, 0]
            b = qy - centers[:, 1]
            A = float(w @ a)
            B = float(w @ b)
            cg = math.cos(gam)
            sg = math.sin(gam)
            qxdot = v * cg - pp.l_d * om * sg
            qydot = v * sg + pp.l_d * om * cg
            lf_psi0 = A * qxdot + B * qydot
            return h, w, a, b, A, B, cg, sg, qxdot, qydot, lf_psi0

        def psi1(x):
            _, _, _, _, _, _, _, _, _, _, lf_psi0 = _psi1_pieces(x)
            return lf_psi0 + c0 * psi0(x)

        def grad_psi1(x):
            _, w, a, b, A, B, cg, sg, qxdot, qydot, lf_psi0 = _psi1_pieces(x)
            s = a * qxdot + b * qydot  # per-obstacle approach rate
            wsa = float(w @ (s * a))
            wsb = float(w @ (s * b))
            return np.array([
                rho * (lf_psi0 * A - wsa) + qxdot + c0 * A,
                rho * (lf_psi0 * B - wsb) + qydot + c0 * B,
                -A * qydot + B * qxdot,
                A * cg + B * sg,
                pp.l_d * (-A * sg + B * cg),
            ])

        return SafetySpec(d=2, psi0=psi0, psi_dm1=psi1,
                          grad_psi_dm1=grad_psi1, alpha_gains=alpha_gains)

    def controller_params(self, H_diag=(2.0, 2.0), beta: float = 20.0) -> ControllerParams:
        H_mat = np.diag(np.asarray(H_diag, dtype=float))
        return ControllerParams(H=lambda x, th: H_mat, beta=beta, u_d=self.u_d)
