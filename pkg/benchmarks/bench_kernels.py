"""Compiled kernels vs the pure-numpy fallback.

Each mode runs in its own interpreter because PTSTAB_DISABLE_NUMBA is read at
import time.  Timed workloads:

  core   controller_core evaluated at many random states
  run    a full closed-loop RK4 integration of the second-order demo

    python benchmarks/bench_kernels.py [--steps N] [--evals N]
"""

import argparse
import json
import os
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

WORKER = r"""
import json, sys, time
import numpy as np
from ptstab import _jit, kernels
from ptstab.config import load_config
from ptstab.controller import Controller, ControllerState
from ptstab.sim import run

evals, tau_max = int(sys.argv[2]), float(sys.argv[3])
cfg = load_config(sys.argv[1], {"sim.tau_max": repr(tau_max), "sim.record_stride": "100"})
cc = cfg.controller
ctl = Controller(cc)
rng = np.random.default_rng(0)
xs = rng.uniform(-3, 3, size=(evals, cfg.plant.n))
bv = np.empty(kernels.NBOUND)
out = np.empty(kernels.NOUT)
eta = np.empty(cfg.plant.n - 1)
bfn, bp = cc.bounds.kernel()

def core_loop():
    for x in xs:
        bfn(x, 0.0, bp, bv)
        kernels.controller_core(x, 2.0, 3.0, 0.1, 1.0, 1.3, bv, ctl.P, ctl.coeffs, ctl.c, out, eta)

t0 = time.perf_counter(); core_loop(); first_core = time.perf_counter() - t0
t0 = time.perf_counter(); core_loop(); core = time.perf_counter() - t0

t0 = time.perf_counter(); run(cfg.sim, cfg.plant, cc); first_run = time.perf_counter() - t0
t0 = time.perf_counter(); traj, _ = run(cfg.sim, cfg.plant, cc); run_t = time.perf_counter() - t0
print(json.dumps({"numba": _jit.NUMBA_ENABLED, "core": core, "core_first": first_core,
                  "run": run_t, "run_first": first_run, "steps": traj.metadata["steps"],
                  "x_final": traj.x[-1].tolist()}))
"""


def measure(disable, config, evals, tau_max):
    env = dict(os.environ, PTSTAB_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, "-c", WORKER, str(config), str(evals), str(tau_max)],
                         capture_output=True, text=True, env=env, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default=ROOT / "configs" / "second_order_demo.ini")
    ap.add_argument("--evals", type=int, default=20000)
    ap.add_argument("--tau-max", type=float, default=0.5, help="integration horizon in tau (d_tau from config)")
    args = ap.parse_args()

    fast = measure(False, args.config, args.evals, args.tau_max)
    slow = measure(True, args.config, args.evals, args.tau_max)
    if not fast["numba"]:
        print("numba unavailable: both runs used the fallback")

    print(f"{'workload':<28}{'numba [s]':>12}{'fallback [s]':>14}{'speedup':>10}")
    print(f"{'core x ' + str(args.evals):<28}{fast['core']:>12.4f}{slow['core']:>14.4f}"
          f"{slow['core'] / fast['core']:>10.1f}")
    print(f"{'run, ' + fast['steps'] + ' RK4 steps':<28}{fast['run']:>12.4f}{slow['run']:>14.4f}"
          f"{slow['run'] / fast['run']:>10.1f}")
    print(f"first-call overhead (compile): core {fast['core_first'] - fast['core']:.2f} s, "
          f"run {fast['run_first'] - fast['run']:.2f} s")
    diff = max(abs(a - b) for a, b in zip(fast["x_final"], slow["x_final"]))
    print(f"max |x_final(numba) - x_final(fallback)| = {diff:.3e}")


if __name__ == "__main__":
    main()
