"""Acceptance criteria, one test each, each printing a single PASS/FAIL line.

The line goes straight to the terminal (capture disabled) so it appears in
``pytest -v`` output whether or not the test passes.  Tolerances are exactly
the stated ones; nothing here is loosened to make a criterion green.
"""

import math
import time

import numpy as np
import pytest

from conftest import CONFIGS, chain_setup
from ptstab.bounds import ExampleBounds
from ptstab.config import load_config
from ptstab.lyapunov import box_grid, build_Ac, example_certificate, kappa, kappa_terms
from ptstab.plant import ExamplePlant, check_assumptions, default_grid
from ptstab.sim import SimConfig, SimulationError, run

EXAMPLE_CFG = CONFIGS / "example_sec5.ini"


def _report(capsys, cid, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {cid}: {'PASS' if ok else 'FAIL'} | {detail}")


def _golden_run(d_tau, x0=None, probe=True, x_threshold=None):
    """Run the shipped example config; returns (traj, report) or the SimulationError."""
    ov = {"sim.d_tau": repr(d_tau)}
    if x0 is not None:
        ov["sim.x0"] = "[" + ", ".join(repr(float(v)) for v in x0) + "]"
    cfg = load_config(EXAMPLE_CFG, ov)
    try:
        return cfg, run(cfg.sim, cfg.plant, cfg.controller, probe_t=cfg.probe_t if probe else None,
                        x_threshold=x_threshold)
    except SimulationError as exc:
        return cfg, exc


def test_criterion_1_certificate_reproduction(capsys):
    t0 = time.perf_counter()
    c = example_certificate(1.0)
    Dt = c.D_tilde
    spec2 = np.linalg.eigvalsh(c.P @ Dt + Dt @ c.P)
    spectrum_ok = bool(np.allclose(spec2, [1.0, 5.0], rtol=0, atol=1e-12))
    b = ExampleBounds()
    worst = -math.inf
    for x, t in box_grid(-5, 5, 21, 3):
        phi23 = b.phi23(x, t)
        A = build_Ac(c, [b.phi_upper(2, x, t)], c.gains(x, t, b))
        worst = max(worst, np.linalg.eigvalsh(c.P @ A + A.T @ c.P).max() / phi23)
    elapsed = time.perf_counter() - t0
    nu_ok = (c.nu_c, c.nu_lower, c.nu_upper) == (1.675, 1.0, 5.0)
    ratio_ok = abs(worst - (-1.675)) <= 1e-9
    ok = spectrum_ok and nu_ok and ratio_ok and elapsed < 1.0
    _report(capsys, "1 certificate", ok,
            f"eig(PD+DP)={spec2.round(15).tolist()}, max eig(PA+A'P)/phi23={worst:.12f} "
            f"(target -1.675 +- 1e-9, |diff|={abs(worst + 1.675):.3e}), nu={nu_ok}, {elapsed:.2f}s")
    assert ok


def test_criterion_2_kappa(capsys):
    t0 = time.perf_counter()
    c = example_certificate(0.05)
    k = kappa(c, 0.25, 1.0)
    first, second = kappa_terms(c, 0.25, 1.0)
    elapsed = time.perf_counter() - t0
    lam = 0.05 * (2 + math.sqrt(2))
    ok = (abs(k - 0.245297) <= 1e-5 and first == pytest.approx(0.375, abs=1e-15)
          and abs(c.lambda_max - lam) <= 1e-15 and elapsed < 1.0)
    _report(capsys, "2 kappa", ok, f"kappa={k:.9f} (target 0.245297 +- 1e-5), competing term={first}, "
                                   f"lambda_max={c.lambda_max:.9f}, {elapsed:.3f}s")
    assert ok


def _criterion3_checks(cfg, res, x_threshold):
    if isinstance(res, SimulationError):
        return False, f"run failed: {res} (component {res.component})"
    traj, rep = res
    w = cfg.warp
    target = w.warp(w.T_prescribed * (1 - 1e-6))
    complete = abs(traj.tau[-1] - target) <= 1e-9 * target
    ok = complete and rep.monotone and rep.floors and rep.vbar_monotone and rep.v_decay_found and rep.bounded
    ok = ok and x_threshold is not None and rep.x_norm_at_probe <= x_threshold
    return ok, (f"tau_end={traj.tau[-1]:.6g}/{target:.6g}, monotone={rep.monotone}, floors={rep.floors}, "
                f"Vbar={rep.vbar_monotone}, tau0={rep.v_decay_tau0:.4g}, sup|u|={rep.sup_u:.4g}, "
                f"|x(0.195)|={rep.x_norm_at_probe:.4g} vs {x_threshold}")


def _golden_threshold():
    """2x |x(0.195)| from the d_tau/10 reference run, or None if that run fails."""
    _, ref = _golden_run(1e-5)
    if isinstance(ref, SimulationError):
        return None, f"reference run at d_tau=1e-5 failed: {ref}"
    return 2.0 * ref[1].x_norm_at_probe, "reference ok"


def test_criterion_3_golden_run(capsys):
    t0 = time.perf_counter()
    cfg, res = _golden_run(1e-4)
    elapsed = time.perf_counter() - t0
    thr, note = _golden_threshold()
    ok, detail = _criterion3_checks(cfg, res, thr)
    ok = ok and elapsed < 30.0
    _report(capsys, "3 golden run", ok, f"{detail}; threshold: {note}; {elapsed:.1f}s")
    assert ok


def test_criterion_4_initial_condition_sweep(capsys):
    t0 = time.perf_counter()
    thr, note = _golden_threshold()
    ics = [(x1, 1.0, 1.0) for x1 in (-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0)] + [(0.5, -1.0, 0.5)]
    passed, first_fail = 0, None
    for x0 in ics:
        cfg, res = _golden_run(1e-4, x0=x0)
        ok, detail = _criterion3_checks(cfg, res, thr)
        passed += ok
        if not ok and first_fail is None:
            first_fail = f"x0={x0}: {detail}"
    elapsed = time.perf_counter() - t0
    ok = passed == len(ics) and len(ics) >= 9 and elapsed < 300
    _report(capsys, "4 IC sweep", ok, f"{passed}/{len(ics)} runs pass; first failure: {first_fail}; "
                                      f"threshold: {note}; {elapsed:.1f}s")
    assert ok


def test_criterion_5a_integrator_order(capsys):
    finals, errors = [], []
    for h in (2e-4, 1e-4, 5e-5):
        _, res = _golden_run(h, probe=False)
        if isinstance(res, SimulationError):
            errors.append(f"d_tau={h:g}: {res}")
            finals.append(None)
        else:
            traj = res[0]
            finals.append(np.concatenate([traj.x[-1], traj.z[-1]]))
    if errors:
        ok, detail = False, "; ".join(errors)
    else:
        d1 = np.linalg.norm(finals[0] - finals[1])
        d2 = np.linalg.norm(finals[1] - finals[2])
        ratio = d1 / d2 if d2 > 0 else math.inf
        ok = ratio >= 8.0
        detail = f"|x(2e-4)-x(1e-4)|={d1:.3e}, |x(1e-4)-x(5e-5)|={d2:.3e}, ratio={ratio:.2f} (need >= 8)"
    _report(capsys, "5a integrator order", ok, detail)
    assert ok


def test_criterion_5b_zero_dynamics_drift(capsys):
    plant, cc = chain_setup()
    worst = 0.0
    for x0 in ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-2.0, 0.5)):
        scfg = SimConfig(x0=x0, z0=(3.0,), d_tau=1e-4, tau_max=2.0, zero_control=True)
        traj, _ = run(scfg, plant, cc)
        exact = np.array([[x0[0] + x0[1] * cc.warp.unwarp(v), x0[1]] for v in traj.tau])
        drift_x = np.max(np.abs(traj.x - exact))
        drift_z = np.max(np.abs(traj.z - 3.0))
        worst = max(worst, max(drift_x, drift_z) / traj.tau[-1])
    ok = worst <= 1e-12
    _report(capsys, "5b zero-dynamics drift", ok, f"worst drift per unit tau={worst:.3e} (need <= 1e-12)")
    assert ok


def test_criterion_6_assumption_checker(capsys):
    t0 = time.perf_counter()
    good = check_assumptions(ExamplePlant(), default_grid(3))
    bad = check_assumptions(ExamplePlant(sigma=2.0), default_grid(3))
    elapsed = time.perf_counter() - t0
    a1 = bad["A1"]
    # the minimum of phi_(i,i+1) over the grid is 1, attained at x1 = 0
    sample_ok = a1.worst_sample is not None and a1.worst_sample[0][0] == 0.0 and a1.worst_margin == -1.0
    ok = good.passed and not bad.passed and not a1.passed and sample_ok and elapsed < 5.0
    _report(capsys, "6 assumption checker", ok,
            f"example passes={good.passed}, sigma=2 detected={not bad.passed} "
            f"(A1 worst {a1.worst_margin} at x={a1.worst_sample[0].tolist()}), {elapsed:.2f}s")
    assert ok


def test_criterion_7_firewall(capsys):
    import test_firewall as fw
    reach = fw._closure("controller")
    leaked_modules = reach & fw.FORBIDDEN_MODULES
    leaked_names = {m: sorted(fw._names(m) & fw.FORBIDDEN_NAMES) for m in reach}
    leaked_names = {m: v for m, v in leaked_names.items() if v}
    ok = not leaked_modules and not leaked_names
    _report(capsys, "7 firewall", ok, f"controller import closure={sorted(reach)}, "
                                      f"forbidden modules={sorted(leaked_modules)}, names={leaked_names}")
    assert ok
