"""Command-line surface: wiring JSON configs to computations and CSV/JSON
artifacts.

Commands
--------
simulate        one trajectory (optionally with fluctuations/correlations)
sweep           parameter-grid phase scan
battery         stored energy and charging efficiency vs time
oracle          finite-N exact evolution and convergence tables
multistability  variance of time-averaged magnetization over random starts

Every command takes ``--config <json>`` and writes its artifacts plus a
``manifest.json`` (config hash, seed, code version) under ``--out``.  Exit
codes: 0 success, 2 config error, 3 numerical failure, 4 resource cap.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .gaussian import REPORT_COLUMNS, PhysicalityError, correlation_report
from .meanfield import IntegrationError, integrate
from .model import ConfigError, MeanFieldState, ModelParams, SimGrid
from .oracle import ResourceCapError
from .output import manifest, write_csv, write_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_RESOURCE = 4

TRAJECTORY_COLUMNS = ["t", "mx1", "my1", "mz1", "mx2", "my2", "mz2"]
THERMO_COLUMNS = ["qdot1", "qdot2", "wdot", "E", "eta", "phidot"]

_UPPER = [(i, j) for i in range(6) for j in range(i, 6)]
_AXES6 = ["x1", "y1", "z1", "x2", "y2", "z2"]
COV_COLUMNS = [f"G_{_AXES6[i]}{_AXES6[j]}" for i, j in _UPPER]
_BOS4 = ["x1", "p1", "x2", "p2"]
BOS_COLUMNS = [f"GB_{_BOS4[i]}{_BOS4[j]}" for i in range(4) for j in range(i, 4)]


def _check_keys(block: dict, allowed: set, where: str):
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")


def _initial_state(cfg) -> MeanFieldState:
    init = cfg.get("initial_state", "ground")
    if init == "ground":
        return MeanFieldState.ground()
    try:
        return MeanFieldState(np.asarray(init, float))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad initial_state: {exc}")


def _params_grid(cfg) -> tuple[ModelParams, SimGrid]:
    if "params" not in cfg:
        raise ConfigError("config needs a 'params' block")
    p = ModelParams.from_dict(cfg["params"])
    grid = SimGrid.from_dict(cfg.get("grid", {}))
    return p, grid


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: dict, out_dir: str, seed: int, threads: int,
                 with_fluctuations: bool) -> int:
    _check_keys(cfg, {"params", "grid", "initial_state", "stored_energy_ensembles"},
                "simulate config")
    p, grid = _params_grid(cfg)
    m0 = _initial_state(cfg)
    h_ref = tuple(cfg.get("stored_energy_ensembles", (1, 2)))
    if not set(h_ref) <= {1, 2} or not h_ref:
        raise ConfigError("stored_energy_ensembles must be a nonempty subset of [1, 2]")

    from .thermo import thermo_series

    if with_fluctuations:
        from .fluctuations import (bosonic_series, initial_covariance_ground,
                                   integrate_joint, vacuum_covariance)
        g0 = vacuum_covariance(m0)
        joint = integrate_joint(m0, g0, p, grid, with_rotation=True)
        traj = joint.trajectory
        sig = bosonic_series(joint)
    else:
        joint = None
        traj = integrate(m0, p, grid)

    series = thermo_series(traj, h_ref)
    header = list(TRAJECTORY_COLUMNS)
    cols = [traj.times] + [traj.states[:, i] for i in range(6)]
    if joint is not None:
        header += COV_COLUMNS + BOS_COLUMNS + REPORT_COLUMNS
        for (i, j) in _UPPER:
            cols.append(joint.covariances[:, i, j])
        for i in range(4):
            for j in range(i, 4):
                cols.append(sig[:, i, j])
        reports = [correlation_report(sig[k]) for k in range(sig.shape[0])]
        for c in range(len(REPORT_COLUMNS)):
            cols.append(np.array([r.as_row()[c] for r in reports]))
    header += THERMO_COLUMNS
    phidot = series.phidot1 + series.phidot2
    cols += [series.qdot1, series.qdot2, series.wdot, series.stored,
             series.efficiency, phidot]

    rows = zip(*[np.asarray(c) for c in cols])
    write_csv(os.path.join(out_dir, "trajectory.csv"), header, rows)
    write_json(os.path.join(out_dir, "manifest.json"),
               manifest(cfg, seed, {"command": "simulate",
                                    "rows": int(traj.times.size),
                                    "with_fluctuations": bool(with_fluctuations)}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _axis_values(block: dict, name: str) -> np.ndarray:
    _check_keys(block, {"name", "values", "start", "stop", "num"}, f"axis {name}")
    if "values" in block:
        return np.asarray(block["values"], float)
    try:
        return np.linspace(float(block["start"]), float(block["stop"]),
                           int(block["num"]))
    except KeyError as exc:
        raise ConfigError(f"axis {name} needs 'values' or 'start'/'stop'/'num' ({exc})")


def cmd_sweep(cfg: dict, out_dir: str, seed: int, threads: int) -> int:
    from .phasescan import SweepSpec, sweep

    _check_keys(cfg, {"params", "setup", "axes", "zip_axes", "t1", "dt_out",
                      "rtol", "atol", "tail_fraction", "with_correlations",
                      "correlation_t1", "correlation_dt", "correlation_rtol",
                      "dump_trajectories"}, "sweep config")
    if "params" not in cfg or "axes" not in cfg:
        raise ConfigError("sweep config needs 'params' and 'axes'")
    p = ModelParams.from_dict(cfg["params"])
    axes = []
    for blk in cfg["axes"]:
        if "name" not in blk:
            raise ConfigError("every sweep axis needs a 'name'")
        axes.append((blk["name"], _axis_values(blk, blk["name"])))
    if len(axes) not in (1, 2):
        raise ConfigError("sweep supports one or two axes")
    spec = SweepSpec(
        params=p,
        setup=int(cfg.get("setup", 1)),
        axes=tuple(axes),
        t1=float(cfg.get("t1", 1000.0)),
        dt_out=float(cfg.get("dt_out", 0.1)),
        rtol=float(cfg.get("rtol", 1e-8)),
        atol=float(cfg.get("atol", 1e-10)),
        tail_fraction=float(cfg.get("tail_fraction", 0.5)),
        seed=seed,
        zipped=bool(cfg.get("zip_axes", False)),
        with_correlations=bool(cfg.get("with_correlations", False)),
        correlation_t1=float(cfg.get("correlation_t1", 200.0)),
        correlation_dt=float(cfg.get("correlation_dt", 0.05)),
        correlation_rtol=float(cfg.get("correlation_rtol", 1e-10)),
    )
    result = sweep(spec, threads=threads)
    write_csv(os.path.join(out_dir, "sweep.csv"), result.header(), result.rows())
    if cfg.get("dump_trajectories", False):
        _dump_sweep_trajectories(spec, out_dir)
    write_json(os.path.join(out_dir, "manifest.json"),
               manifest(cfg, seed, {
                   "command": "sweep",
                   "grid_shape": list(spec.shape()),
                   "errors": [{"idx": list(i), "message": m} for i, m in result.errors],
               }))
    return EXIT_OK


def _dump_sweep_trajectories(spec, out_dir: str):
    """Per-point magnetization series (behind the dump_trajectories flag)."""
    from . import _fast
    from .meanfield import setup2_phases_to_state

    sub = os.path.join(out_dir, "trajectories")
    for idx in np.ndindex(spec.shape()):
        p = spec.point_params(idx)
        if spec.setup == 1:
            ground3 = MeanFieldState.ground().m[:3]
            _, ys = _fast.integrate_fast("sym3", ground3, p, 0.0, spec.t1,
                                         spec.dt_out, spec.rtol, spec.atol)
            states = np.hstack([ys, ys])
        else:
            _, fs = _fast.integrate_fast("phase2", np.zeros(2), p, 0.0, spec.t1,
                                         spec.dt_out, spec.rtol, spec.atol)
            states = np.array([setup2_phases_to_state(f) for f in fs])
        times = np.arange(states.shape[0]) * spec.dt_out
        tag = "_".join(str(i) for i in idx)
        write_csv(os.path.join(sub, f"point_{tag}.csv"), TRAJECTORY_COLUMNS,
                  zip(times, *[states[:, i] for i in range(6)]))


# ---------------------------------------------------------------------------
# battery
# ---------------------------------------------------------------------------

def cmd_battery(cfg: dict, out_dir: str, seed: int, threads: int) -> int:
    from .thermo import thermo_series

    _check_keys(cfg, {"params", "grid", "setup", "couplings", "initial_state",
                      "allow_non_ground"}, "battery config")
    p, grid = _params_grid(cfg)
    setup = int(cfg.get("setup", 1))
    if setup not in (1, 2):
        raise ConfigError("battery setup must be 1 or 2")
    m0 = _initial_state(cfg)
    ground = MeanFieldState.ground()
    if not np.allclose(m0.m, ground.m) and not cfg.get("allow_non_ground", False):
        raise ConfigError("battery runs start from the ground state; "
                          "set allow_non_ground to override")
    couplings = [float(x) for x in cfg.get("couplings", [p.j_xy])]
    h_ref = (1, 2) if setup == 1 else (1,)

    header = ["t"]
    cols = None
    summary = {}
    undefined = {}
    for j in couplings:
        pj = p.replace(j_xy=j)
        traj = integrate(m0, pj, grid)
        series = thermo_series(traj, h_ref)
        if cols is None:
            cols = [traj.times]
        tag = f"{j:g}"
        header += [f"E_{tag}", f"eta_{tag}"]
        cols += [series.stored, series.efficiency]
        summary[tag] = series.summary()
        undefined[tag] = int(np.sum(~series.eta_defined))

    rows = zip(*[np.asarray(c) for c in cols])
    write_csv(os.path.join(out_dir, "battery.csv"), header, rows)
    write_json(os.path.join(out_dir, "summary.json"), summary)
    write_json(os.path.join(out_dir, "manifest.json"),
               manifest(cfg, seed, {"command": "battery", "setup": setup,
                                    "undefined_eta_samples": undefined}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

def cmd_oracle(cfg: dict, out_dir: str, seed: int, threads: int) -> int:
    from .oracle import (N_CAP, convergence_report, evolve, ground_state,
                         observable_series)

    _check_keys(cfg, {"params", "grid", "n_list", "n_cap"}, "oracle config")
    p, grid = _params_grid(cfg)
    n_list = [int(n) for n in cfg.get("n_list", [4, 8, 12])]
    n_cap = int(cfg.get("n_cap", N_CAP))

    report = convergence_report(p, n_list, grid, n_cap=n_cap)
    write_csv(os.path.join(out_dir, "convergence.csv"),
              ["N", "mz_err", "cov_err"],
              [[n, float(report.mz_errors[i]), float(report.cov_errors[i])]
               for i, n in enumerate(n_list)])

    rows = []
    for n in n_list:
        tr = evolve(ground_state(n), p, n, grid, n_cap=n_cap)
        ms, _, _ = observable_series(tr)
        for k in range(tr.times.size):
            rows.append([tr.times[k], *ms[k], n])
    write_csv(os.path.join(out_dir, "oracle_trajectories.csv"),
              TRAJECTORY_COLUMNS + ["N"], rows)
    write_json(os.path.join(out_dir, "manifest.json"),
               manifest(cfg, seed, {
                   "command": "oracle",
                   "monotone": report.monotone,
                   "fit_coefficient": report.fit_coefficient,
                   "fit_offset": report.fit_offset,
                   "fit_r2": report.fit_r2,
               }))
    return EXIT_OK


# ---------------------------------------------------------------------------
# multistability
# ---------------------------------------------------------------------------

def cmd_multistability(cfg: dict, out_dir: str, seed: int, threads: int) -> int:
    from .phasescan import multistability_scan

    _check_keys(cfg, {"params", "points", "n_trials", "t1", "window", "dt_out",
                      "rtol"}, "multistability config")
    if "params" not in cfg or "points" not in cfg:
        raise ConfigError("multistability config needs 'params' and 'points'")
    base = ModelParams.from_dict(cfg["params"])
    n_trials = int(cfg.get("n_trials", 20))
    t1 = float(cfg.get("t1", 200.0))
    window = tuple(float(x) for x in cfg.get("window", (180.0, 200.0)))
    dt_out = float(cfg.get("dt_out", 0.05))
    rtol = float(cfg.get("rtol", 1e-8))

    rows = []
    for k, pt in enumerate(cfg["points"]):
        _check_keys(pt, {"j_xy", "j_z", "omega1", "omega2", "n1", "n2"},
                    f"multistability point {k}")
        pk = base.replace(**{key: float(v) for key, v in pt.items()})
        res = multistability_scan(pk, n_trials=n_trials, seed=seed + k,
                                  t1=t1, window=window, dt_out=dt_out, rtol=rtol)
        rows.append([pk.j_xy, pk.omega2, res.variance,
                     float(res.trial_averages.min()), float(res.trial_averages.max())])
    write_csv(os.path.join(out_dir, "multistability.csv"),
              ["j_xy", "omega2", "sigma", "avg_min", "avg_max"], rows)
    write_json(os.path.join(out_dir, "manifest.json"),
               manifest(cfg, seed, {"command": "multistability",
                                    "n_trials": n_trials, "window": list(window)}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tcforge",
        description="Coupled driven-dissipative collective-spin simulations",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=fn.__doc__)
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=None,
                        help="worker count (default: TCFORGE_THREADS or 1)")
        if name == "simulate":
            sp.add_argument("--with-fluctuations", action="store_true",
                            help="co-integrate covariances; adds covariance, "
                                 "bosonic-frame, and correlation columns")
    return ap


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "battery": cmd_battery,
    "oracle": cmd_oracle,
    "multistability": cmd_multistability,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("TCFORGE_THREADS", "1"))
    try:
        cfg = _load_config(args.config)
        if not isinstance(cfg, dict):
            raise ConfigError("config root must be a JSON object")
        kwargs = {}
        if args.command == "simulate":
            kwargs["with_fluctuations"] = args.with_fluctuations
        return COMMANDS[args.command](cfg, args.out, args.seed, threads, **kwargs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (IntegrationError, PhysicalityError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
