"""Command-line entry point.

    ptstab run <config> [--out DIR] [--plots] [--dtau V]
    ptstab sweep <config> --set section.key=v1,v2 [--set ...] [--workers N]
    ptstab verify-cert <config>
    ptstab check-assumptions <config>

Exit code 0 means every check passed; 1 a monitor or check failure or a
runtime error; 2 an invalid config; 3 a certificate rejected on load.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, load_config
from .lyapunov import kappa, verify_certificate
from .plant import check_assumptions
from .sim import SimulationError, run


EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_CERT = 3


def split_values(text):
    """Split ``v1,v2,...`` on commas outside brackets."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur).strip())
    return [v for v in out if v]


def parse_set(items):
    """``["sim.x0=[4,1,1],[8,2,2]", ...]`` -> ``[("sim.x0", ["[4,1,1]", "[8,2,2]"]), ...]``."""
    pairs = []
    for item in items or []:
        if "=" not in item:
            raise ValueError(f"--set expects section.key=values, got {item!r}")
        key, vals = item.split("=", 1)
        values = split_values(vals)
        if not values:
            raise ValueError(f"--set {key} has no values")
        pairs.append((key.strip(), values))
    return pairs


def _base_overrides(args):
    ov = {}
    if getattr(args, "dtau", None) is not None:
        ov["sim.d_tau"] = repr(args.dtau)
    return ov


def _load(path, overrides):
    try:
        return load_config(path, overrides)
    except ConfigError as exc:
        print(f"invalid config {path}:", file=sys.stderr)
        for e in exc.errors:
            print(f"  - {e}", file=sys.stderr)
        return None


def _write_record(path, record):
    with open(path, "w") as fh:
        for k, v in record.items():
            fh.write(f"{k}={v}\n")


def execute_run(config_path, overrides, out_dir, plots, engine=None):
    """Load, verify, simulate and write outputs; return ``(exit_code, summary)``."""
    cfg = _load(config_path, overrides)
    if cfg is None:
        return EXIT_CONFIG, {"status": "config-error"}
    out_dir = Path(out_dir) if out_dir is not None else cfg.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {"kappa": kappa(cfg.cert, cfg.controller.zeta0, cfg.plant.bounds.sigma)}

    rep = verify_certificate(cfg.cert, cfg.plant.bounds, cfg.samples())
    if not rep.passed:
        print(rep.to_text(), file=sys.stderr)
        summary["status"] = "cert-rejected"
        return EXIT_CERT, summary

    record = {"config": str(config_path)}
    record.update({f"override.{k}": v for k, v in (overrides or {}).items()})
    try:
        traj, report = run(cfg.sim, cfg.plant, cfg.controller, engine=engine or cfg.engine,
                           probe_t=cfg.probe_t, x_threshold=cfg.x_threshold)
    except SimulationError as exc:
        record["status"] = "error"
        record["error"] = str(exc)
        record["error.tau"] = format(exc.tau, ".17g")
        record["error.component"] = exc.component
        if exc.trajectory is not None:
            exc.trajectory.to_csv(out_dir / "trajectory.csv")
            record.update(exc.trajectory.metadata)
        _write_record(out_dir / "report.txt", record)
        print(f"simulation failed: {exc}", file=sys.stderr)
        summary.update(status="error", error=str(exc))
        return EXIT_FAIL, summary

    traj.to_csv(out_dir / "trajectory.csv")
    record["status"] = "ok"
    record.update(traj.metadata)
    _write_record(out_dir / "report.txt", record)
    if plots:
        from .plots import plot_trajectory
        plot_trajectory(traj, out_dir / "trajectory.png", title=cfg.name)
    summary.update(status="ok", x_probe=report.x_norm_at_probe, sup_u=report.sup_u,
                   passed=report.passed)
    print(report.to_text())
    return (EXIT_OK if report.passed else EXIT_FAIL), summary


def cmd_run(args):
    code, _ = execute_run(args.config, _base_overrides(args), args.out, args.plots, args.engine)
    return code


def _sweep_job(job):
    idx, config_path, overrides, out_dir, plots, engine = job
    logging.disable(logging.CRITICAL)
    import contextlib
    import io
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(buf):
        try:
            code, summary = execute_run(config_path, overrides, out_dir, plots, engine)
        except Exception as exc:  # reported per row, the sweep continues
            code, summary = EXIT_FAIL, {"status": "error", "error": repr(exc)}
    return idx, code, summary


def cmd_sweep(args):
    try:
        pairs = parse_set(args.set)
    except ValueError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    base = _base_overrides(args)
    if _load(args.config, {**base, **{k: v[0] for k, v in pairs}}) is None:
        return EXIT_CONFIG
    keys = [k for k, _ in pairs]
    combos = list(itertools.product(*[v for _, v in pairs])) if pairs else [()]
    cfg0 = load_config(args.config, base)
    root = Path(args.out) if args.out else cfg0.out_dir
    root.mkdir(parents=True, exist_ok=True)
    jobs = []
    for i, combo in enumerate(combos):
        ov = dict(base)
        ov.update(zip(keys, combo))
        jobs.append((i, str(args.config), ov, str(root / f"run_{i:03d}"), args.plots, args.engine))

    workers = args.workers or min(len(jobs), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    results.sort()

    header = ["run"] + keys + ["status", "x_at_probe", "sup_u", "kappa", "monitors_pass"]
    rows = []
    worst = EXIT_OK
    for (i, code, s), combo in zip(results, combos):
        rows.append([f"{i:03d}"] + list(combo) + [
            s.get("status", ""),
            format(s["x_probe"], ".17g") if "x_probe" in s else "",
            format(s["sup_u"], ".17g") if "sup_u" in s else "",
            format(s["kappa"], ".17g") if "kappa" in s else "",
            "true" if s.get("passed") else "false",
        ])
        if code != EXIT_OK:
            worst = EXIT_FAIL
    with open(root / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    widths = [max(len(str(r[j])) for r in [header] + rows) for j in range(len(header))]
    for r in [header] + rows:
        print("  ".join(str(c).ljust(wd) for c, wd in zip(r, widths)))
    return worst


def cmd_verify_cert(args):
    cfg = _load(args.config, _base_overrides(args))
    if cfg is None:
        return EXIT_CONFIG
    rep = verify_certificate(cfg.cert, cfg.plant.bounds, cfg.samples())
    print(rep.to_text())
    print()
    for k, v in rep.to_record().items():
        print(f"{k}={v}")
    print(f"kappa={kappa(cfg.cert, cfg.controller.zeta0, cfg.plant.bounds.sigma):.17g}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_check_assumptions(args):
    cfg = _load(args.config, _base_overrides(args))
    if cfg is None:
        return EXIT_CONFIG
    rep = check_assumptions(cfg.plant, cfg.samples())
    print(rep.to_text())
    z = cfg.plant.z_matrix()
    if z is not None:
        import numpy as np
        eig = np.linalg.eigvals(z)
        ok = bool(np.all(eig.real < 0))
        note = "strictly negative" if ok else "not all strictly negative"
        print(f"  A6         {'PASS' if ok else 'CHECK'}  linear appended dynamics, eigenvalue real parts "
              f"{np.array2string(eig.real, precision=4)} ({note})")
    return EXIT_OK if rep.passed else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="ptstab", description="Prescribed-time adaptive stabilization toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", type=Path)
        sp.add_argument("--dtau", type=float, default=None, help="override sim.d_tau")
        sp.add_argument("--seed", type=int, default=None, help="reserved; runs are deterministic")

    sp = sub.add_parser("run", help="simulate one config")
    common(sp)
    sp.add_argument("--out", type=Path, default=None)
    sp.add_argument("--plots", action="store_true")
    sp.add_argument("--engine", choices=("auto", "kernel", "python"), default=None)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="Cartesian sweep over config overrides")
    common(sp)
    sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=V1,V2")
    sp.add_argument("--out", type=Path, default=None)
    sp.add_argument("--plots", action="store_true")
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--engine", choices=("auto", "kernel", "python"), default=None)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify-cert", help="sampled check of the Lyapunov certificate")
    common(sp)
    sp.set_defaults(func=cmd_verify_cert)

    sp = sub.add_parser("check-assumptions", help="sampled check of the plant assumptions")
    common(sp)
    sp.set_defaults(func=cmd_check_assumptions)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
