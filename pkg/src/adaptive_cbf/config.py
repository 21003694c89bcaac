"""Flat-text scenario configuration with per-plant defaults.

A scenario file is a list of ``section.key = value`` lines (``#`` starts a
comment).  Every tunable of the shipped scenarios has a default, so an empty
file resolves to the stock pendulum run.  Unknown keys are rejected rather
than ignored; values are coerced to the type of the corresponding default
(int, float, string, or comma-separated number list).  ``echo`` renders the
resolved configuration back to text in canonical order, and re-parsing that
text reproduces the identical resolved configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controller import ControllerParams
from .estimator import EstimatorConfig
from .plants import DifferentialDriveRobot, Pendulum, PendulumParams, RobotParams
from .sim import SimConfig


class ConfigError(ValueError):
    """Malformed scenario text or out-of-range value."""


PENDULUM_DEFAULTS = {
    "plant": "pendulum",
    "cases": (1,),
    "output_dir": "out",
    "sim.t_end": 60.0,
    "sim.ode_dt": 5e-05,  # friction terms make the plant stiff; 1e-3 under-resolves
    "sim.ctrl_hz": 1000.0,
    "sim.sample_dt": 0.25,
    "sim.x0": (0.1745, 0.0),
    "sim.seed": 0,
    "schedule.eta": 2.0,
    "estimator.sigma": 0.1,
    "estimator.k_n": 30,
    "estimator.theta0": (0.0, 0.0, 0.0, 0.0, 0.0),
    "estimator.theta_box_lo": (0.0, 0.0, 0.0, 0.0, 0.0),
    "estimator.theta_box_hi": (2.5, 2.5, 2.5, 2.5, 2.5),
    "controller.H": (2.0,),
    "controller.beta": 200.0,
    "safety.alpha_gains": (200.0, 200.0),
    "pendulum.mass": 0.01,
    "pendulum.length": 0.15,
    "pendulum.gravity": 9.81,
    "pendulum.eps1": 2.0,
    "pendulum.eps2": 2.0,
    "pendulum.theta_star": (0.5, 0.35, 0.15, 0.5, 0.25),
    "pendulum.K1": 50.0,
    "pendulum.K2": 100.0,
}

ROBOT_DEFAULTS = {
    "plant": "robot",
    "cases": (1,),
    "output_dir": "out",
    "sim.t_end": 120.0,
    "sim.ode_dt": 0.001,
    "sim.ctrl_hz": 200.0,
    "sim.sample_dt": 0.1,
    "sim.x0": (-0.5, 0.5, 0.0, 0.0, 0.0),
    "sim.seed": 0,
    "schedule.eta": 2.0,
    "estimator.sigma": 0.001,
    "estimator.k_n": 10,
    "estimator.theta0": (0.1, 0.1, 0.1, 0.1),
    "estimator.theta_box_lo": (0.0, 0.0, 0.0, 0.0),
    "estimator.theta_box_hi": (5.0, 5.0, 5.0, 1.0),
    "controller.H": (2.0, 2.0),
    "controller.beta": 20.0,
    "safety.alpha_gains": (5.0, 2.0),
    "robot.k_m": 0.1,
    "robot.r": 0.1,
    "robot.l": 0.5,
    "robot.l_d": 0.25,
    "robot.R_a": 0.27,
    "robot.mass": 10.0,
    "robot.inertia": 0.83,
    "robot.gravity": 9.81,
    "robot.theta_star": (0.0487, 0.0487, 0.025, 0.5),
    "robot.mu1": 0.08,
    "robot.mu2": 0.08,
    "robot.K1": 10.0,
    "robot.K2": 10.0,
    "robot.rho": 3.0,
    "robot.obstacles": (0.65, 0.8, 0.5, 1.95, 1.75, 0.35),
    "robot.goal": (2.56, 1.8),
}

DEFAULTS = {"pendulum": PENDULUM_DEFAULTS, "robot": ROBOT_DEFAULTS}


def _coerce(key: str, raw: str, default):
    raw = raw.strip()
    try:
        if isinstance(default, tuple):
            parts = [p for p in raw.split(",") if p.strip()]
            if isinstance(default[0] if default else 0.0, int) and key == "cases":
                return tuple(int(p) for p in parts)
            return tuple(float(p) for p in parts)
        if isinstance(default, bool):  # pragma: no cover - no bool keys yet
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            val = float(raw)
            if val != int(val):
                raise ValueError(raw)
            return int(val)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"cannot parse value for '{key}': {raw!r}") from exc


def _fmt_value(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_fmt_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_pairs(text: str):
    """Raw key/value pairs from scenario text, preserving order."""
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = body.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        pairs[key] = raw
    return pairs


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario: defaults overlaid with the file's overrides."""

    values: dict

    @property
    def plant_name(self) -> str:
        return self.values["plant"]

    @property
    def cases(self) -> tuple:
        return self.values["cases"]

    @property
    def output_dir(self) -> str:
        return self.values["output_dir"]

    def echo(self) -> str:
        lines = [f"{k} = {_fmt_value(v)}" for k, v in self.values.items()]
        return "\n".join(lines) + "\n"

    def __getitem__(self, key):
        return self.values[key]


def resolve(text: str) -> ScenarioConfig:
    """Overlay scenario text on the selected plant's defaults and validate."""
    pairs = parse_pairs(text)
    plant_name = pairs.get("plant", "pendulum").strip()
    if plant_name not in DEFAULTS:
        raise ConfigError(f"unknown plant '{plant_name}' (choose pendulum or robot)")
    defaults = DEFAULTS[plant_name]
    values = dict(defaults)
    for key, raw in pairs.items():
        if key not in defaults:
            raise ConfigError(f"unknown key '{key}' for plant '{plant_name}'")
        values[key] = _coerce(key, raw, defaults[key])
    cfg = ScenarioConfig(values)
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig) -> None:
    v = cfg.values
    if any(c not in (1, 2, 3) for c in v["cases"]) or not v["cases"]:
        raise ConfigError("cases must be a nonempty subset of 1, 2, 3")
    p = len(v["estimator.theta0"])
    for key in ("estimator.theta_box_lo", "estimator.theta_box_hi"):
        if len(v[key]) != p:
            raise ConfigError(f"{key} must have {p} entries")
    expected_p = 5 if cfg.plant_name == "pendulum" else 4
    if p != expected_p:
        raise ConfigError(f"estimator vectors must have {expected_p} entries")
    n = 2 if cfg.plant_name == "pendulum" else 5
    if len(v["sim.x0"]) != n:
        raise ConfigError(f"sim.x0 must have {n} entries")
    m = 1 if cfg.plant_name == "pendulum" else 2
    if len(v["controller.H"]) != m:
        raise ConfigError(f"controller.H must list {m} diagonal entries")
    if len(v["safety.alpha_gains"]) != 2:
        raise ConfigError("safety.alpha_gains must list the two chain gains")
    if cfg.plant_name == "robot":
        if len(v["robot.obstacles"]) % 3 != 0 or not v["robot.obstacles"]:
            raise ConfigError("robot.obstacles must be flat (cx, cy, R) triples")
        if len(v["robot.goal"]) != 2:
            raise ConfigError("robot.goal must have 2 entries")


@dataclass(frozen=True)
class RunBundle:
    """Constructed objects for one scenario, ready to hand to sim.run."""

    plant: object
    safety: object
    controller_params: ControllerParams
    estimator_config: EstimatorConfig
    eta: float
    config: ScenarioConfig

    def sim_config(self, case: int) -> SimConfig:
        v = self.config.values
        return SimConfig(
            t_end=v["sim.t_end"],
            ode_dt=v["sim.ode_dt"],
            ctrl_hz=v["sim.ctrl_hz"],
            sample_dt=v["sim.sample_dt"],
            case=case,
            x0=np.asarray(v["sim.x0"]),
            seed=v["sim.seed"],
        )


def build(cfg: ScenarioConfig) -> RunBundle:
    v = cfg.values
    if cfg.plant_name == "pendulum":
        params = PendulumParams(
            mass=v["pendulum.mass"],
            length=v["pendulum.length"],
            gravity=v["pendulum.gravity"],
            eps1=v["pendulum.eps1"],
            eps2=v["pendulum.eps2"],
            theta_star=v["pendulum.theta_star"],
            K1=v["pendulum.K1"],
            K2=v["pendulum.K2"],
            box_lo=v["estimator.theta_box_lo"],
            box_hi=v["estimator.theta_box_hi"],
        )
        plant = Pendulum(params)
    else:
        obs = v["robot.obstacles"]
        params = RobotParams(
            k_m=v["robot.k_m"],
            r=v["robot.r"],
            l=v["robot.l"],
            l_d=v["robot.l_d"],
            R_a=v["robot.R_a"],
            mass=v["robot.mass"],
            inertia=v["robot.inertia"],
            gravity=v["robot.gravity"],
            theta_star=v["robot.theta_star"],
            mu1=v["robot.mu1"],
            mu2=v["robot.mu2"],
            K1=v["robot.K1"],
            K2=v["robot.K2"],
            obstacles=tuple(tuple(obs[i:i + 3]) for i in range(0, len(obs), 3)),
            rho=v["robot.rho"],
            goal=v["robot.goal"],
            box_lo=v["estimator.theta_box_lo"],
            box_hi=v["estimator.theta_box_hi"],
        )
        plant = DifferentialDriveRobot(params)
    safety = plant.safety(alpha_gains=v["safety.alpha_gains"])
    ctrl = plant.controller_params(H_diag=v["controller.H"],
                                   beta=v["controller.beta"])
    est_cfg = EstimatorConfig(
        p=plant.p,
        k_n=v["estimator.k_n"],
        sigma=v["estimator.sigma"],
        theta0=np.asarray(v["estimator.theta0"]),
        theta_box_lo=np.asarray(v["estimator.theta_box_lo"]),
        theta_box_hi=np.asarray(v["estimator.theta_box_hi"]),
    )
    return RunBundle(plant=plant, safety=safety, controller_params=ctrl,
                     estimator_config=est_cfg, eta=v["schedule.eta"], config=cfg)
