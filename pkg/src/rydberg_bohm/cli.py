"""Command-line entry point.

Settings are resolved in this order, later ones winning: built-in defaults,
the preset (``run`` only), ``--config FILE``, the subcommand's own flags,
then ``--set section.key=value`` in the order given.

Exit status is 0 on success, 2 for configuration errors (nothing is
written) and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, ScenarioConfig, load_config
from .scenarios import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    PRESETS,
    NumericalFailure,
    preset_config,
    run_scenario,
)

PROG = "rydberg-bohm"

# flag destination -> config key
_SCENARIO_FLAGS = {
    "seed": "scenario.seed",
    "out_dir": "scenario.out_dir",
    "n0": "scenario.n0",
    "delta_n": "scenario.delta_n",
    "l": "scenario.l",
    "weight_mode": "scenario.weight_mode",
    "pulse_mode": "pulse.mode",
    "tau_p": "pulse.tau_p",
    "r_max": "grid.r_max",
    "points": "grid.point_count",
    "mapping": "grid.mapping",
    "t_start": "time.t_start",
    "t_stop": "time.t_stop",
    "samples": "time.samples",
    "rel_tol": "integrator.rel_tol",
    "abs_tol": "integrator.abs_tol",
    "max_step": "integrator.max_step",
    "density_floor": "integrator.density_floor",
    "max_step_near_node": "integrator.max_step_near_node",
}

_TASK_FLAGS = {
    "eigen": {"n": "eigen.n"},
    "autocorr": {},
    "snapshot": {"times": "snapshot.times"},
    "bohm": {"r0": "bohm.r0"},
    "classical": {"r0": "classical.r0", "l_squared": "classical.l_squared", "direction": "classical.direction"},
    "ensemble": {"count": "ensemble.count", "method": "ensemble.method", "check_times": "ensemble.check_times"},
    "run": {},
}

_TASK_OF = {
    "eigen": "eigen",
    "autocorr": "autocorr",
    "snapshot": "snapshot",
    "bohm": "bohm",
    "classical": "classical",
    "ensemble": "ensemble",
}


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common")
    g.add_argument("--config", metavar="FILE", help="sectioned key=value configuration file")
    g.add_argument("--seed", type=int, help="ensemble sampling seed")
    g.add_argument("--out-dir", dest="out_dir", metavar="DIR", help="output directory")
    g.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override any configuration key (repeatable)")
    g.add_argument("--no-plots", dest="no_plots", action="store_true", help="skip PNG figures")
    g.add_argument("--print-config", action="store_true", help="print the resolved configuration and exit")

    s = p.add_argument_group("scenario")
    s.add_argument("--n0", type=int)
    s.add_argument("--delta-n", dest="delta_n", type=float)
    s.add_argument("--l", type=int)
    s.add_argument("--weight-mode", dest="weight_mode")
    s.add_argument("--pulse-mode", dest="pulse_mode")
    s.add_argument("--tau-p", dest="tau_p", type=float, help="pulse duration in au (0: Fourier limited)")
    s.add_argument("--r-max", dest="r_max", type=float, help="grid extent in au (0: automatic)")
    s.add_argument("--points", type=int, help="grid point count")
    s.add_argument("--mapping", help="grid mapping: sqrt or uniform")
    s.add_argument("--t-start", dest="t_start", type=float, help="start time in units of T_cl")
    s.add_argument("--t-stop", dest="t_stop", type=float, help="stop time in units of T_cl")
    s.add_argument("--samples", type=int, help="number of output times")
    s.add_argument("--rel-tol", dest="rel_tol", type=float)
    s.add_argument("--abs-tol", dest="abs_tol", type=float)
    s.add_argument("--max-step", dest="max_step", type=float)
    s.add_argument("--density-floor", dest="density_floor", type=float)
    s.add_argument("--max-step-near-node", dest="max_step_near_node", type=float)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Radial Rydberg wavepackets, de Broglie-Bohm and classical trajectories.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("eigen", parents=[common], help="dump radial eigenstates (r, u)")
    p.add_argument("--n", type=int, nargs="+")

    sub.add_parser("autocorr", parents=[common], help="autocorrelation series C(t)")

    p = sub.add_parser("snapshot", parents=[common], help="density snapshots |psi|^2")
    p.add_argument("--times", type=float, nargs="+", help="snapshot times in units of T_cl")

    p = sub.add_parser("bohm", parents=[common], help="de Broglie-Bohm trajectories")
    p.add_argument("--r0", type=float, nargs="+", help="initial radii in au")

    p = sub.add_parser("classical", parents=[common], help="classical radial Kepler trajectory")
    p.add_argument("--r0", type=float, help="initial radius in au")
    p.add_argument("--l-squared", dest="l_squared", type=float)
    p.add_argument("--direction", choices=["outward", "inward"])

    p = sub.add_parser("ensemble", parents=[common], help="equivariance check on a sampled ensemble")
    p.add_argument("--count", type=int)
    p.add_argument("--method", choices=["stratified", "iid"])
    p.add_argument("--check-times", dest="check_times", type=float, nargs="+",
                   help="comparison times in units of T_cl")

    p = sub.add_parser("run", parents=[common], help="run a preset scenario")
    p.add_argument("preset", choices=sorted(PRESETS))
    return parser


def resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    """Assemble the configuration for parsed arguments (see module docstring)."""
    if args.command == "run":
        cfg = preset_config(args.preset)
    else:
        cfg = ScenarioConfig()
    if args.config:
        cfg = load_config(args.config, base=cfg)
    if args.command in _TASK_OF:
        cfg.set("scenario.task", _TASK_OF[args.command])
        if cfg.scenario.name == "custom":
            cfg.set("scenario.name", args.command)
    flags = dict(_SCENARIO_FLAGS)
    flags.update(_TASK_FLAGS[args.command])
    for dest, key in flags.items():
        val = getattr(args, dest, None)
        if val is not None:
            cfg.set(key, val)
    if args.no_plots:
        cfg.set("scenario.plots", False)
    for item in args.overrides:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        cfg.set(key.strip(), val.strip())
    return cfg


def _error(kind: str, msg: str) -> None:
    print(f"{PROG}: {kind}: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args).validate()
    except ConfigError as exc:
        _error("config error", str(exc))
        return EXIT_CONFIG
    if args.print_config:
        print(json.dumps(cfg.resolved(), indent=2, sort_keys=True))
        return EXIT_OK
    try:
        result = run_scenario(cfg)
    except ConfigError as exc:
        _error("config error", str(exc))
        return EXIT_CONFIG
    except NumericalFailure as exc:
        _error("numerical failure", str(exc))
        return EXIT_NUMERICAL
    for line in result.diagnostics:
        _error("numerical failure", line)
    print(f"{cfg.scenario.name}: {len(result.files)} data files, {len(result.figures)} figures, "
          f"manifest {result.manifest}")
    return result.status


if __name__ == "__main__":
    sys.exit(main())
