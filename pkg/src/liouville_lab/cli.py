"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 failed mathematical certificate.
"""
import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, build_candidates, build_system, load_config
from .equivalence import (geodesic_equivalence_check, random_initial_conditions, riemannianize,
                          screen_integrals, superintegrability_rank)
from .errors import (CertificateError, DegenerateMetricError, LiouvilleLabError, OrderingError,
                     SignatureError)
from .flow import StepControl, Trajectory, fmt17, integrate_batch, write_trajectory_csv
from .geometry import gauss_curvature_at
from .integrals import classify_grid, null_frame_coefficients, poisson_bracket_residual

EXIT_OK, EXIT_INPUT, EXIT_CERT = 0, 1, 2
FLOW_CHUNK = 16


class _Failure(Exception):
    def __init__(self, report):
        self.report = report


def worker_count():
    cap = os.environ.get("LIOUVILLE_LAB_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = max(1, min(n, int(cap)))
        except ValueError:
            raise ConfigError(f"LIOUVILLE_LAB_THREADS must be an integer, got {cap!r}") from None
    return n


def _summary(values):
    v = np.abs(np.asarray(values, float)).ravel()
    return {"max": float(v.max()), "mean": float(v.mean())}


def _build(cfg):
    """Construct the family; certificate problems become a failure report."""
    try:
        return build_system(cfg)
    except CertificateError as e:
        raise _Failure({"status": "fail", "error": type(e).__name__, "message": str(e),
                        "certificates": [c.to_dict() for c in e.certificates],
                        "failed": e.failed})
    except (SignatureError, DegenerateMetricError) as e:
        raise _Failure({"status": "fail", "error": type(e).__name__, "message": str(e),
                        "certificates": [], "failed": [type(e).__name__]})


def cmd_build(cfg, args):
    system = _build(cfg)
    tol = args.tol if args.tol is not None else cfg.tol("bracket", 1e-8)
    grid = system.grid(args.grid or cfg.grid)
    res = poisson_bracket_residual(system.metric, system.integral, grid)
    certs = system.certificate_dict()
    certs.append({"name": "bracket_grid", "passed": res <= tol, "value": res, "threshold": tol,
                  "detail": f"{grid[0].shape[0]}x{grid[0].shape[1]} grid, 8 directions"})
    failed = [c["name"] for c in certs if not c["passed"]]
    return {"status": "pass" if not failed else "fail", "certificates": certs, "failed": failed,
            "residuals": {"bracket": {"max": res}}}


def cmd_classify(cfg, args):
    system = _build(cfg)
    n = args.grid or cfg.grid
    grid = system.grid(n)
    rep = classify_grid(system.integral, system.metric, grid, cfg.tol("classify", 1e-7))
    a, _, c = null_frame_coefficients(system.integral, system.metric, grid)
    labels = rep.label_grid()
    path = Path(args.out) / f"{cfg.name}_classification.csv"
    with open(path, "w") as fh:
        fh.write("x,y,label,a_null,c_null\n")
        for xv, yv, lab, av, cv in zip(grid[0].ravel(), grid[1].ravel(), labels.ravel(),
                                       a.ravel(), c.ravel()):
            fh.write(f"{fmt17(xv)},{fmt17(yv)},{lab},{fmt17(av)},{fmt17(cv)}\n")
    out = {"status": "pass", "classification": rep.to_dict(), "grid_csv": path.name}
    return out


def _initial_conditions(cfg, args, system):
    fl = cfg.flow
    if args.ic:
        try:
            ic = json.loads(Path(args.ic).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"--ic {args.ic}: {e}") from None
    elif args.random is not None or "random" in fl:
        n = args.random if args.random is not None else int(fl["random"])
        seed = args.seed if args.seed is not None else cfg.seed
        rng = np.random.default_rng(seed)
        energy = float(fl.get("energy", 0.5))
        return random_initial_conditions(system.metric, n, rng, system.random_points, energy)
    elif "ic" in fl:
        ic = fl["ic"]
    else:
        raise ConfigError("no initial conditions: use --ic FILE, --random N or flow.ic")
    arr = np.asarray(ic, float)
    if arr.ndim != 2 or arr.shape[1] != 4 or not np.all(np.isfinite(arr)):
        raise ConfigError("initial conditions must be a list of [x, y, px, py] rows")
    return arr


def cmd_flow(cfg, args):
    system = _build(cfg)
    fl = cfg.flow
    T = float(args.T if args.T is not None else fl.get("T", 1.0))
    t0 = float(args.t0 if args.t0 is not None else fl.get("t0", 0.0))
    z0 = _initial_conditions(cfg, args, system)
    control = StepControl(h=float(args.h or fl.get("h", 1e-2)),
                          tol=args.tol if args.tol is not None else cfg.tol("drift", 1e-8),
                          h_min=float(args.h_min or fl.get("h_min", 1e-6)),
                          order=int(fl.get("order", 6)), error_estimate=True,
                          store_every=int(fl.get("store_every", 1)))
    integrals = {system.integral.name or "F": system.integral}
    if system.linear_integral is not None:
        integrals[system.linear_integral.name or "I"] = system.linear_integral
    chunks = [z0[i:i + FLOW_CHUNK] for i in range(0, len(z0), FLOW_CHUNK)]
    with ThreadPoolExecutor(max_workers=min(worker_count(), len(chunks))) as ex:
        parts = list(ex.map(lambda c: integrate_batch(system.metric, c, T, control, integrals),
                            chunks))
    results = [tr for part in parts for tr in part]
    rows, h_drifts, f_drifts = [], [], {k: [] for k in integrals}
    for k, tr in enumerate(results):
        if isinstance(tr, Trajectory):
            name = f"{cfg.name}_traj_{k:03d}.csv"
            tr.times = tr.times + t0
            write_trajectory_csv(Path(args.out) / name, tr, integrals, system.metric)
            rx, ry = tr.reduced_positions()
            h_drifts.append(tr.h_drift)
            for key, val in tr.integral_drifts.items():
                f_drifts[key].append(val)
            rows.append({"index": k, "status": "ok", "csv": name, "h": tr.step,
                         "h_drift": tr.h_drift, "integral_drifts": tr.integral_drifts,
                         "error_estimate": tr.error_estimate,
                         "final_state": [float(v) for v in tr.states[-1]],
                         "final_position_reduced": [float(rx[-1]), float(ry[-1])]})
        else:
            rows.append({"index": k, "status": "step_underflow", "message": str(tr),
                         "t_reached": tr.t_reached, "h": tr.h})
    ok = all(r["status"] == "ok" for r in rows)
    return {"status": "pass" if ok else "fail", "T": T, "t0": t0,
            "max_h_drift": max(h_drifts) if h_drifts else None,
            "max_integral_drift": {k: (max(v) if v else None) for k, v in f_drifts.items()},
            "trajectories": rows}


def cmd_equivalent(cfg, args):
    system = _build(cfg)
    if cfg.family not in ("global_liouville", "klein_liouville"):
        raise ConfigError("equivalent needs a global_liouville or klein_liouville family")
    tol = args.tol if args.tol is not None else cfg.tol("equivalence", 1e-4)
    try:
        rp = riemannianize(system, n=args.grid or cfg.grid)
    except OrderingError as e:
        raise _Failure({"status": "fail", "error": "OrderingError", "message": str(e),
                        "failed": ["ordering"]})
    seed = args.seed if args.seed is not None else cfg.seed
    res = geodesic_equivalence_check(rp.pair, n_samples=10, T=5.0, seed=seed)
    certs = [
        {"name": "integral_positive_definite", "passed": rp.min_integral_eigenvalue > 0,
         "value": rp.min_integral_eigenvalue, "threshold": 0.0},
        {"name": "partner_positive_definite", "passed": rp.min_metric_eigenvalue > 0,
         "value": rp.min_metric_eigenvalue, "threshold": 0.0},
        {"name": "geodesic_equivalence", "passed": res <= tol, "value": res, "threshold": tol},
    ]
    failed = [c["name"] for c in certs if not c["passed"]]
    return {"status": "pass" if not failed else "fail", "partner": rp.to_dict(),
            "certificates": certs, "failed": failed, "equivalence_residual": res}


def cmd_super(cfg, args):
    system = _build(cfg)
    tol = args.tol if args.tol is not None else cfg.tol("bracket", 1e-8)
    grid = system.grid(args.grid or cfg.grid)
    cands = build_candidates(cfg, system)
    good, bad, residuals = screen_integrals(system.metric, cands, grid, tol)
    rank = superintegrability_rank(system.metric, good, grid, tol, cfg.tol("rank", 1e-8))
    K = gauss_curvature_at(system.metric, grid)
    out = {"status": "pass" if not bad else "fail", "candidates": [F.name for F in cands],
           "bracket_residuals": residuals, "non_integrals": bad, "rank": rank,
           "curvature": {"max_abs": float(np.max(np.abs(K))),
                         "max_deviation_from_mean": float(np.max(np.abs(K - K.mean()))),
                         "mean": float(K.mean())}}
    return out


COMMANDS = {"build": cmd_build, "classify": cmd_classify, "flow": cmd_flow,
            "equivalent": cmd_equivalent, "super": cmd_super}


def _common_flags(parser, suppress):
    # the subcommand copies must not reset values given before the subcommand
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--tol", type=float, default=d(None),
                        help="override the command's main tolerance")
    parser.add_argument("--grid", type=int, default=d(None), help="grid points per side")
    parser.add_argument("--seed", type=int, default=d(None), help="random seed")
    parser.add_argument("--out", default=d("."), help="output directory")
    parser.add_argument("--no-timestamp", action="store_true", default=d(False),
                        help="omit timing data so reports are byte-identical across runs")
    return parser


def make_parser():
    common = _common_flags(argparse.ArgumentParser(add_help=False), suppress=True)
    p = _common_flags(argparse.ArgumentParser(prog="liouville-lab",
                                              description="Integrable geodesic flows on surfaces."),
                      suppress=False)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("config", help="configuration file or preset name")
        if name == "flow":
            sp.add_argument("--T", type=float, default=None, help="integration time")
            sp.add_argument("--t0", type=float, default=None, help="initial time label")
            g = sp.add_mutually_exclusive_group()
            g.add_argument("--ic", default=None, help="JSON file with [x, y, px, py] rows")
            g.add_argument("--random", type=int, default=None, help="number of random ICs")
            sp.add_argument("--h", type=float, default=None, help="initial step")
            sp.add_argument("--h-min", dest="h_min", type=float, default=None)
    return p


def _write(report, out_dir, name):
    path = Path(out_dir) / name
    path.write_text(json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    start = time.perf_counter()
    report = {"command": args.command, "config": str(args.config)}
    code = EXIT_OK
    try:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        cfg = load_config(args.config)
        report["family"] = cfg.name
        report["config_echo"] = cfg.raw
        if args.grid is not None and args.grid < 2:
            raise ConfigError("--grid must be at least 2")
        result = COMMANDS[args.command](cfg, args)
        report.update(result)
        code = EXIT_OK if result.get("status") == "pass" else EXIT_CERT
    except _Failure as f:
        report.update(f.report)
        code = EXIT_CERT
    except ConfigError as e:
        report.update({"status": "input_error", "message": str(e)})
        code = EXIT_INPUT
    except LiouvilleLabError as e:
        report.update({"status": "fail", "error": type(e).__name__, "message": str(e)})
        code = EXIT_CERT
    report["exit_code"] = code
    if not args.no_timestamp:
        report["timing"] = {"seconds": time.perf_counter() - start,
                            "finished": datetime.now(timezone.utc).isoformat()}
    try:
        path = _write(report, args.out, f"{args.command}_report.json")
        print(f"{args.command}: {report.get('status')} (exit {code}); report: {path}")
    except OSError as e:
        print(f"cannot write report: {e}", file=sys.stderr)
        return EXIT_INPUT
    if code == EXIT_INPUT:
        print(f"error: {report.get('message')}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
