"""Command-line entry point ``hmhd``.

Exit status: 0 on success or a passing verdict, 1 on a failing verdict,
2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .dynamics import HallState
from .field_core import Grid, SpectralField, read_snapshot, write_snapshot
from .littlewood_paley import BesovIndex, besov_norm, build_partition
from .time_integration import IntegratorConfig, evolve, norm_series, picard_solve

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
FIELD_SLICES = {"u": slice(0, 3), "b": slice(3, 6), "J": slice(6, 9), "all": slice(None)}


class UsageError(Exception):
    pass


def _overrides(args):
    ov = {}
    for name in ("n", "L", "mu", "nu", "eps", "seed", "amplitude", "dt", "t_end", "family"):
        v = getattr(args, name, None)
        if v is not None:
            ov[name] = v
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        ov[k.strip()] = v.strip()
    if getattr(args, "out", None):
        ov["output.dir"] = args.out
    return ov


def _run_config(args, base=None):
    return load_config(args.config, _overrides(args), base)


def _add_common(p, out_help="output directory for the JSON report and CSV series"):
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key (repeatable)")
    p.add_argument("--out", help=out_help)
    p.add_argument("--n", type=int)
    p.add_argument("--L", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--amplitude", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)


def _emit_report(report, rc, args):
    from .experiments.report import write_report

    report.config = dict(report.config)
    report.config["resolved"] = rc.resolved() if rc is not None else None
    print(report.summary())
    if rc is not None and rc.out_dir:
        paths = write_report(report, rc.out_dir, getattr(args, "timestamp", None))
        print(f"wrote {paths[0]} and {paths[1]}")
    return EXIT_OK if report.passed else EXIT_FAIL


# --------------------------------------------------------------------------
# subcommands


def cmd_fields(args):
    rc = _run_config(args)
    cfg = rc.experiment
    grid = cfg.grid()
    u0, b0, J0 = cfg.data(grid)
    path = args.file or os.path.join(rc.out_dir or ".", "fields.hmh")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    write_snapshot(path, [u0, b0, J0], 0.0)
    print(f"wrote {path} (n={grid.n}, L={grid.L!r}, family={cfg.family}, amplitude={cfg.amplitude!r})")
    return EXIT_OK


def cmd_besov(args):
    grid, t, f = read_snapshot(args.snapshot)
    c = f.coeffs[FIELD_SLICES[args.field]]
    if c.shape[0] == 0:
        raise UsageError(f"snapshot has no {args.field!r} components")
    u = SpectralField(grid, c)
    val = besov_norm(u, BesovIndex(args.s, args.p, args.r), build_partition(grid), warn_mean=False)
    out = {"value": val.value, "s": args.s, "p": args.p, "r": args.r, "t": t}
    if args.per_shell:
        out["shells"] = [{"j": j, "contribution": c} for j, c in val.shells]
    text = json.dumps(out, sort_keys=True, indent=2)
    print(text)
    return EXIT_OK


def _initial_state(args, rc):
    cfg = rc.experiment
    params = cfg.params()
    if getattr(args, "snapshot", None):
        grid, t, f = read_snapshot(args.snapshot)
        c = f.coeffs
        if c.shape[0] != 9:
            raise UsageError("state snapshots must hold 9 components (u, b, J)")
        return HallState.from_stacked(grid, c, params, t)
    u0, b0, J0 = cfg.data(cfg.grid())
    return HallState(u0, b0, J0, params, 0.0)


def cmd_evolve(args):
    rc = _run_config(args)
    cfg = rc.experiment
    state = _initial_state(args, rc)
    icfg = IntegratorConfig(
        dt=cfg.dt, t_end=cfg.t_end, scheme=cfg.scheme, snapshot_stride=cfg.stride, formulation=args.formulation
    )
    out = rc.out_dir or "trajectory"
    os.makedirs(out, exist_ok=True)
    grid = state.grid
    part = build_partition(grid)
    manifest = {"params": rc.resolved(), "cfg": _plain_cfg(icfg), "times": [], "files": [], "norms": []}

    def monitor(t, s):
        k = len(manifest["times"])
        name = f"snap_{k:05d}.hmh"
        write_snapshot(os.path.join(out, name), [s.u, s.b, s.J], t)
        lo, hi = norm_series([s.stacked()], grid, cfg.p, cfg.q, part)
        manifest["times"].append(t)
        manifest["files"].append(name)
        manifest["norms"].append({"critical": lo[0].tolist(), "critical_plus_2": hi[0].tolist()})

    traj = evolve(state, icfg, monitor=monitor, keep_states=False)
    manifest["diverged"] = traj.diverged
    manifest["last_valid_time"] = traj.last_valid_time
    manifest["max_projection"] = traj.max_projection
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
    print(f"{len(manifest['times'])} snapshots in {out}; diverged={traj.diverged}")
    return EXIT_FAIL if traj.diverged else EXIT_OK


def _plain_cfg(icfg):
    from dataclasses import asdict

    return asdict(icfg)


def cmd_picard(args):
    rc = _run_config(args)
    cfg = rc.experiment
    s = _initial_state(args, rc)
    _, rep = picard_solve(s.u, s.b, s.J, s.params, cfg.picard_T, cfg.picard_dt, cfg.picard_n_max, cfg.picard_tol, cfg.p, cfg.q)
    payload = {"config": rc.resolved(), "picard": rep.as_dict()}
    text = json.dumps(payload, sort_keys=True, indent=2, default=float)
    if rc.out_dir:
        os.makedirs(rc.out_dir, exist_ok=True)
        with open(os.path.join(rc.out_dir, "picard.json"), "w") as fh:
            fh.write(text + "\n")
    print(f"iterates={rep.iterates} converged={rep.converged} worst_ratio={rep.worst_ratio:.6g}")
    return EXIT_OK if rep.converged else EXIT_FAIL


def cmd_bound(args):
    from .experiments import run_global_bound

    rc = _run_config(args)
    return _emit_report(run_global_bound(rc.experiment, nonlinear=not args.heat), rc, args)


def cmd_decay(args):
    from .experiments import decay_defaults, run_decay

    rc = _run_config(args, decay_defaults())
    return _emit_report(run_decay(rc.experiment, nonlinear=not args.heat), rc, args)


def cmd_stability(args):
    from .experiments import run_stability, stability_defaults

    rc = _run_config(args, stability_defaults())
    return _emit_report(run_stability(rc.experiment), rc, args)


def cmd_scaling(args):
    from .experiments import ExperimentConfig, run_scaling

    rc = _run_config(args, ExperimentConfig(n=64))
    return _emit_report(run_scaling(rc.experiment, lam=args.lam), rc, args)


def _read_gronwall_series(path, prefix=None):
    """Wide CSV with columns t, X, D, Omega, or a long-format report series file."""
    with open(path, newline="") as fh:
        first = fh.readline()
    if first.startswith("#"):
        from .experiments.report import read_series_csv

        series = read_series_csv(path)
        cols = {}
        for key in ("X", "D", "Omega"):
            names = [k for k in series if k == key or k.endswith("_" + key)]
            if prefix:
                names = [k for k in names if k.startswith(prefix)]
            if len(names) != 1:
                raise UsageError(f"expected exactly one {key} series, found {names}; use --prefix")
            cols[key] = series[names[0]]
        t = np.asarray(cols["X"][0])
        return t, np.asarray(cols["X"][1]), np.asarray(cols["D"][1]), np.asarray(cols["Omega"][1])
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        arr = {k: np.asarray([float(r[k]) for r in rows]) for k in ("t", "X", "D", "Omega")}
    except KeyError as e:
        raise UsageError(f"missing column {e} in {path}") from None
    return arr["t"], arr["X"], arr["D"], arr["Omega"]


def cmd_gronwall(args):
    from .experiments import gronwall_check

    t, X, D, W = _read_gronwall_series(args.series, args.prefix)
    try:
        v = gronwall_check(t, X, D, W, args.C, args.mu)
    except ValueError as e:
        raise UsageError(str(e)) from None
    print(json.dumps(v.as_dict(), sort_keys=True, indent=2))
    return EXIT_OK if v.passed else EXIT_FAIL


def cmd_verify(args):
    from .experiments import run_suite, write_report

    reports = run_suite(quick=args.quick)
    ok = True
    for r in reports:
        print(r.summary())
        ok &= r.passed
        if args.out:
            write_report(r, args.out, args.timestamp)
    print("suite:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="hmhd", description="Hall-MHD pseudo-spectral solver and verification suite")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fields", help="generate initial data and write a snapshot")
    _add_common(p)
    p.add_argument("--family", choices=("random", "taylor_green", "single_shell"))
    p.add_argument("--file", help="snapshot path (default <out>/fields.hmh)")
    p.set_defaults(func=cmd_fields)

    p = sub.add_parser("besov", help="Besov norm of a snapshot")
    p.add_argument("snapshot")
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--field", choices=tuple(FIELD_SLICES), default="all")
    p.add_argument("--per-shell", action="store_true")
    p.set_defaults(func=cmd_besov)

    p = sub.add_parser("evolve", help="time-march and write a trajectory directory")
    _add_common(p, "trajectory directory")
    p.add_argument("--snapshot", help="start from a 9-component state snapshot")
    p.add_argument("--formulation", choices=("extended", "original"), default="extended")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("picard", help="Picard iteration with contraction report")
    _add_common(p)
    p.add_argument("--snapshot", help="start from a 9-component state snapshot")
    p.set_defaults(func=cmd_picard)

    for name, func, helptext in (
        ("bound", cmd_bound, "uniform bound of the combined functional"),
        ("decay", cmd_decay, "windowed decay-rate fits"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        p.add_argument("--heat", action="store_true", help="switch the nonlinearity off")
        p.add_argument("--timestamp", help=argparse.SUPPRESS)
        p.set_defaults(func=func)

    p = sub.add_parser("stability", help="perturbation stability with calibrated constant")
    _add_common(p)
    p.add_argument("--timestamp", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("scaling", help="operator scaling equivariance")
    _add_common(p)
    p.add_argument("--lam", type=int, default=2)
    p.add_argument("--timestamp", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("gronwall", help="bootstrap-lemma checker on a CSV of X, D, Omega")
    p.add_argument("series")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--prefix", help="series-name prefix when the file holds several runs")
    p.set_defaults(func=cmd_gronwall)

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--quick", action="store_true", help="reduced sizes (smoke level)")
    p.add_argument("--out")
    p.add_argument("--timestamp", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError, FileNotFoundError) as e:
        print(f"hmhd: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
