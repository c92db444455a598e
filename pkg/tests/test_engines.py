"""Compiled kernels against the pure-numpy fallback selected by PTSTAB_DISABLE_NUMBA."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from ptstab import _jit, kernels
from ptstab.config import load_config
from ptstab.sim import SimConfig, run

from conftest import CONFIGS

SCRIPT = """
import json, sys
from ptstab import _jit
from ptstab.config import load_config
from ptstab.sim import run
cfg = load_config(sys.argv[1], {"sim.tau_max": "0.05", "sim.record_stride": "1"})
traj, _ = run(cfg.sim, cfg.plant, cfg.controller)
print(json.dumps({"numba": _jit.NUMBA_ENABLED, "engine": traj.metadata["engine"],
                  "x": traj.x[-1].tolist(), "r": float(traj.r[-1]), "u": traj.u.tolist()}))
"""


def _run_subprocess(disable):
    env = dict(os.environ)
    env["PTSTAB_DISABLE_NUMBA"] = "1" if disable else "0"
    res = subprocess.run([sys.executable, "-c", SCRIPT, str(CONFIGS / "second_order_demo.ini")],
                         capture_output=True, text=True, env=env, timeout=300)
    assert res.returncode == 0, res.stderr
    return json.loads(res.stdout.strip().splitlines()[-1])


@pytest.mark.skipif(not _jit.NUMBA_ENABLED, reason="numba not available")
def test_env_flag_selects_fallback_and_results_agree():
    fast = _run_subprocess(False)
    slow = _run_subprocess(True)
    assert fast["numba"] and fast["engine"] == "numba"
    assert not slow["numba"] and slow["engine"] == "python"
    np.testing.assert_allclose(fast["x"], slow["x"], rtol=1e-11, atol=1e-14)
    assert fast["r"] == pytest.approx(slow["r"], rel=1e-12)
    np.testing.assert_allclose(fast["u"], slow["u"], rtol=1e-10, atol=1e-10)


@pytest.mark.skipif(not _jit.NUMBA_ENABLED, reason="numba not available")
def test_scalar_kernels_match_python():
    args = (2.0, 0.3, 1.1, 73.0, 0.5, 0.17, 0.25)
    assert kernels.w1_value(*args) == kernels.w1_value.py_func(*args)
    assert kernels.gate_value(-0.3, 1.0) == kernels.gate_value.py_func(-0.3, 1.0)
    assert kernels.alpha_of_tau(0.05, 0.205, 0.3) == kernels.alpha_of_tau.py_func(0.05, 0.205, 0.3)


def test_in_process_engines_on_ex_first_step():
    cfg = load_config(CONFIGS / "example_sec5.ini")
    scfg = SimConfig(x0=cfg.sim.x0, z0=cfg.sim.z0, d_tau=1e-4, tau_max=1e-4)
    a, _ = run(scfg, cfg.plant, cfg.controller, engine="auto")
    b, _ = run(scfg, cfg.plant, cfg.controller, engine="python")
    np.testing.assert_allclose(a.x, b.x, rtol=1e-12)
    np.testing.assert_allclose(a.r, b.r, rtol=1e-12)


def test_kernel_engine_requires_numba_or_raises():
    from conftest import second_order_setup
    plant, cc = second_order_setup()
    scfg = SimConfig(x0=(1.0, 0.0), z0=(0.0,), tau_max=1e-3)
    if _jit.NUMBA_ENABLED:
        traj, _ = run(scfg, plant, cc, engine="kernel")
        assert traj.metadata["engine"] == "numba"
    else:
        with pytest.raises(ValueError):
            run(scfg, plant, cc, engine="kernel")
