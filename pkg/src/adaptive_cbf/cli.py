"""Scenario runner: execute cases, write CSV logs and SVG figures, run oracles.

Subcommands:
  run       execute the configured cases; per case writes
            <plant>_case<N>.csv, <plant>_case<N>_estimator.csv and the SVG
            figure set, plus resolved_config.txt for reproducibility
  defaults  print the paper-default configuration for a plant
  oracle    run the verification batteries and report residuals

Exit codes: 0 success, 1 configuration error, 2 runtime abort (unsafe initial
state, degenerate constraint, non-finite state), 3 oracle failure.  Setting
ADAPTIVE_CBF_VERBOSE in the environment additionally writes an estimator
debug CSV per case.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import oracle as oracle_mod
from . import svgplot
from .config import ConfigError, build, resolve, DEFAULTS, ScenarioConfig
from .controller import DegenerateConstraintError
from .sim import SimulationAbort, UnsafeInitialStateError, run


def _cmd_defaults(args) -> int:
    cfg = ScenarioConfig(dict(DEFAULTS[args.plant]))
    sys.stdout.write(cfg.echo())
    return 0


def _cmd_run(args) -> int:
    if args.config is not None:
        with open(args.config) as f:
            text = f.read()
    else:
        text = ""
    cfg = resolve(text)
    values = dict(cfg.values)
    if args.case is not None:
        values["cases"] = (args.case,)
    if args.out is not None:
        values["output_dir"] = args.out
    cfg = ScenarioConfig(values)
    bundle = build(cfg)
    out_dir = cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "resolved_config.txt"), "w") as f:
        f.write(cfg.echo())

    debug_dir = out_dir if os.environ.get("ADAPTIVE_CBF_VERBOSE") else None
    for case in cfg.cases:
        t0 = time.perf_counter()
        log = run(bundle.plant, bundle.safety, bundle.controller_params,
                  bundle.estimator_config, bundle.sim_config(case),
                  eta=bundle.eta, debug_dir=debug_dir)
        elapsed = time.perf_counter() - t0
        prefix = f"{bundle.plant.name}_case{case}"
        with open(os.path.join(out_dir, f"{prefix}.csv"), "w") as f:
            log.write_csv(f)
        with open(os.path.join(out_dir, f"{prefix}_estimator.csv"), "w") as f:
            log.write_est_csv(f)
        svgplot.standard_plots(log, bundle.plant.theta_star, out_dir, prefix)
        print(f"{prefix}: {len(log)} rows in {elapsed:.1f}s, "
              f"min psi0={min(log.psi0):.3e}, final nu={log.nu_t[-1]:.3e}, "
              f"final theta_err={log.theta_err[-1]:.3e}")
    return 0


def _cmd_oracle(args) -> int:
    results, elapsed = oracle_mod.run_all(quick=args.quick)
    for r in results:
        print(r.line())
    print(f"oracle batteries finished in {elapsed:.1f}s")
    return 0 if all(r.passed for r in results) else 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="adaptive-cbf",
        description="Adaptive control-barrier-function scenario runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run configured scenario cases")
    p_run.add_argument("--config", help="scenario file (defaults when omitted)")
    p_run.add_argument("--case", type=int, choices=(1, 2, 3),
                       help="run a single case instead of the configured list")
    p_run.add_argument("--out", help="output directory override")

    p_def = sub.add_parser("defaults", help="print the default configuration")
    p_def.add_argument("--plant", choices=sorted(DEFAULTS), required=True)

    p_or = sub.add_parser("oracle", help="run the verification batteries")
    p_or.add_argument("--quick", action="store_true",
                      help="reduced battery sizes for a fast smoke check")

    args = parser.parse_args(argv)
    try:
        if args.command == "defaults":
            return _cmd_defaults(args)
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_oracle(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (SimulationAbort, UnsafeInitialStateError,
            DegenerateConstraintError, FloatingPointError) as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
