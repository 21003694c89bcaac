import numpy as np
import pytest

from adaptive_cbf import cli
from adaptive_cbf.config import ConfigError, DEFAULTS, ScenarioConfig, build, resolve
from adaptive_cbf.svgplot import Panel, Series, render


# ---------------------------------------------------------------- resolve


def test_empty_text_resolves_to_pendulum_defaults():
    cfg = resolve("")
    assert cfg.plant_name == "pendulum"
    assert cfg["estimator.sigma"] == 0.1
    assert cfg["estimator.k_n"] == 30
    assert cfg["sim.sample_dt"] == 0.25
    assert cfg["controller.H"] == (2.0,)
    assert cfg["controller.beta"] == 200.0
    assert cfg.cases == (1,)


def test_robot_defaults():
    cfg = resolve("plant = robot")
    assert cfg["estimator.sigma"] == 0.001
    assert cfg["estimator.k_n"] == 10
    assert cfg["sim.sample_dt"] == 0.1
    assert cfg["sim.ctrl_hz"] == 200.0
    assert cfg["controller.beta"] == 20.0
    assert cfg["safety.alpha_gains"] == (5.0, 2.0)
    assert cfg["robot.goal"] == (2.56, 1.8)


def test_overrides_and_comments():
    cfg = resolve("""
# scenario tweak
plant = pendulum
cases = 1, 3
sim.t_end = 12.5   # short run
estimator.sigma = 0.2
""")
    assert cfg.cases == (1, 3)
    assert cfg["sim.t_end"] == 12.5
    assert cfg["estimator.sigma"] == 0.2


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        resolve("estimator.sigm = 0.1")
    with pytest.raises(ConfigError):
        resolve("robot.rho = 3.0")  # robot key while plant is pendulum


def test_malformed_lines_rejected():
    with pytest.raises(ConfigError):
        resolve("just words")
    with pytest.raises(ConfigError):
        resolve("sim.t_end = sixty")
    with pytest.raises(ConfigError):
        resolve("sim.t_end = 1\nsim.t_end = 2")
    with pytest.raises(ConfigError):
        resolve("cases = 1, 9")
    with pytest.raises(ConfigError):
        resolve("estimator.theta0 = 1, 2")  # wrong length
    with pytest.raises(ConfigError):
        resolve("plant = quadrotor")


@pytest.mark.parametrize("plant", ["pendulum", "robot"])
def test_echo_round_trip(plant):
    cfg = resolve(f"plant = {plant}\nsim.t_end = 7.25\ncases = 2, 3")
    again = resolve(cfg.echo())
    assert again.values == cfg.values
    # and a second echo is byte-identical
    assert again.echo() == cfg.echo()


def test_build_produces_consistent_bundle():
    bundle = build(resolve("plant = robot"))
    assert bundle.plant.name == "robot"
    assert bundle.estimator_config.p == 4
    sc = bundle.sim_config(2)
    assert sc.case == 2
    assert np.array_equal(sc.x0, np.array([-0.5, 0.5, 0.0, 0.0, 0.0]))


# ---------------------------------------------------------------- svg


def test_svg_single_point_has_axes_but_no_polyline():
    doc = render([Panel("p", [Series("s", [1.0], [2.0])])])
    assert "<svg" in doc and "</svg>" in doc
    assert "polyline" not in doc
    assert "<rect" in doc


def test_svg_two_points_gets_polyline_and_dash():
    doc = render([Panel("p", [
        Series("s", [0.0, 1.0], [0.0, 1.0]),
        Series("ref", [0.0, 1.0], [1.0, 0.0], dashed=True),
    ])])
    assert doc.count("<polyline") == 2
    assert "stroke-dasharray" in doc


def test_svg_decimation_keeps_endpoints():
    n = 60001
    xs = list(np.linspace(0.0, 60.0, n))
    ys = list(np.sin(np.linspace(0.0, 60.0, n)))
    doc = render([Panel("p", [Series("s", xs, ys)])])
    assert doc.count(",") < 40000  # decimated well below the raw count
    assert "polyline" in doc


def test_svg_deterministic():
    panels = [Panel("p", [Series("s", [0, 1, 2], [3.0, -1.0, 0.5])])]
    assert render(panels) == render(panels)


# ---------------------------------------------------------------- cli


def test_cli_defaults_output_parses(capsys):
    assert cli.main(["defaults", "--plant", "pendulum"]) == 0
    text = capsys.readouterr().out
    cfg = resolve(text)
    assert cfg.values == ScenarioConfig(dict(DEFAULTS["pendulum"])).values


def test_cli_defaults_contains_paper_values(capsys):
    cli.main(["defaults", "--plant", "pendulum"])
    out = capsys.readouterr().out
    assert "estimator.sigma = 0.1" in out
    assert "estimator.k_n = 30" in out
    assert "sim.sample_dt = 0.25" in out
    assert "controller.H = 2.0" in out
    assert "controller.beta = 200.0" in out


def test_cli_run_writes_artifacts(tmp_path, capsys):
    cfg_file = tmp_path / "scenario.txt"
    cfg_file.write_text("sim.t_end = 0.5\noutput_dir = unused\n")
    out_dir = tmp_path / "out"
    rc = cli.main(["run", "--config", str(cfg_file), "--case", "1",
                   "--out", str(out_dir)])
    assert rc == 0
    assert (out_dir / "pendulum_case1.csv").exists()
    assert (out_dir / "pendulum_case1_estimator.csv").exists()
    assert (out_dir / "pendulum_case1_states.svg").exists()
    assert (out_dir / "pendulum_case1_safety.svg").exists()
    assert (out_dir / "pendulum_case1_estimates.svg").exists()
    assert (out_dir / "pendulum_case1_bound.svg").exists()
    echoed = (out_dir / "resolved_config.txt").read_text()
    cfg = resolve(echoed)
    assert cfg["sim.t_end"] == 0.5
    assert cfg.cases == (1,)
    assert cfg.output_dir == str(out_dir)
    # the echo itself round-trips
    assert resolve(cfg.echo()).values == cfg.values


def test_cli_run_on_missing_config_is_config_error(tmp_path):
    assert cli.main(["run", "--config", str(tmp_path / "nope.txt")]) == 1


def test_cli_bad_config_exit_code(tmp_path):
    cfg_file = tmp_path / "bad.txt"
    cfg_file.write_text("estimator.sigma = fast\n")
    assert cli.main(["run", "--config", str(cfg_file)]) == 1


def test_cli_unsafe_start_exit_code(tmp_path):
    cfg_file = tmp_path / "unsafe.txt"
    cfg_file.write_text("sim.x0 = 1.0, 0.0\nsim.t_end = 1.0\n")
    assert cli.main(["run", "--config", str(cfg_file),
                     "--out", str(tmp_path / "o")]) == 2


def test_cli_verbose_debug_csv(tmp_path, monkeypatch):
    monkeypatch.setenv("ADAPTIVE_CBF_VERBOSE", "1")
    cfg_file = tmp_path / "scenario.txt"
    cfg_file.write_text("sim.t_end = 0.5\n")
    out_dir = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg_file),
                     "--out", str(out_dir)]) == 0
    assert (out_dir / "pendulum_case1_estimator_debug.csv").exists()
