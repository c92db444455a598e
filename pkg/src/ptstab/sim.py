"""Fixed-step RK4 simulation of plant plus controller in the warped time.

Integration runs in tau with dx/dtau = f(x, z, u, t)/alpha(tau), so the
finite-time blow-up of the gains near the terminal time becomes polynomial
growth in tau.  The same kernels run either compiled (numba) or as plain
Python; :func:`run` picks the compiled path when every piece has a kernel.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from ._jit import NUMBA_ENABLED
from .controller import ControllerConfig
from .lyapunov import kappa
from .timewarp import TimeWarp

STATE_NAMES_TAIL = ("r", "theta_hat", "theta1_hat")


class SimulationError(RuntimeError):
    """Integration failure at warped time ``tau`` in state component ``component``."""

    def __init__(self, message, tau, component, trajectory=None):
        super().__init__(message)
        self.tau = tau
        self.component = component
        self.trajectory = trajectory


@dataclass
class SimConfig:
    x0: tuple
    z0: tuple
    d_tau: float = 1e-4
    tau_max: float = None
    r0: float = 1.0
    theta_hat0: float = 1.0
    theta1_hat0: float = 0.0
    dead_zone: float = 0.0
    r_cap: float = None
    record_stride: int = 1
    zero_control: bool = False

    def horizon(self, warp):
        return warp.default_tau_max() if self.tau_max is None else float(self.tau_max)

    def validate(self, warp, n=None, nz=None):
        errors = []
        a0 = warp.alpha(0.0)
        if not self.d_tau > 0:
            errors.append(f"d_tau must be > 0 (got {self.d_tau!r})")
        if self.tau_max is not None and not self.tau_max >= 0:
            errors.append(f"tau_max must be >= 0 (got {self.tau_max!r})")
        floor = max(1.0, a0)
        if not self.r0 >= floor:
            errors.append(f"r0 must be >= max(1, alpha(0)) = {floor!r} (got {self.r0!r})")
        if not self.theta_hat0 >= floor:
            errors.append(f"theta_hat0 must be >= max(1, alpha(0)) = {floor!r} (got {self.theta_hat0!r})")
        if not self.theta1_hat0 >= 0:
            errors.append(f"theta1_hat0 must be >= 0 (got {self.theta1_hat0!r})")
        if not self.dead_zone >= 0:
            errors.append(f"dead_zone must be >= 0 (got {self.dead_zone!r})")
        if self.r_cap is not None and not self.r_cap >= 1:
            errors.append(f"r_cap must be >= 1 (got {self.r_cap!r})")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            errors.append(f"record_stride must be an integer >= 1 (got {self.record_stride!r})")
        if n is not None and len(self.x0) != n:
            errors.append(f"x0 has {len(self.x0)} entries, plant order is {n}")
        if nz is not None and len(self.z0) != nz:
            errors.append(f"z0 has {len(self.z0)} entries, appended order is {nz}")
        return errors


# ---------------------------------------------------------------------------
# engine assembly
# ---------------------------------------------------------------------------

def _py(f):
    return getattr(f, "py_func", f)


def _nan_on_error(fn, *out_args):
    """Python-path wrapper: math domain or overflow errors fill outputs with NaN,
    which the integrator then reports as a non-finite state, as numba does."""
    def wrapped(*args):
        try:
            fn(*args)
        except (ValueError, OverflowError, ZeroDivisionError):
            for i in out_args:
                args[i][:] = np.nan
    return wrapped


class _Engine:
    """Kernels, parameter vectors and work arrays for one closed loop."""

    def __init__(self, scfg: SimConfig, plant, ccfg: ControllerConfig, engine="auto"):
        if plant.n != ccfg.n:
            raise ValueError(f"plant order {plant.n} does not match controller order {ccfg.n}")
        if plant.bounds is not ccfg.bounds and type(plant.bounds) is not type(ccfg.bounds):
            raise ValueError("controller bounds do not belong to this plant")
        self.n = plant.n
        self.nz = plant.nz
        self.dim = self.n + self.nz + 3
        r_cap = math.inf if scfg.r_cap is None else float(scfg.r_cap)
        self.c = ccfg.consts(scfg.dead_zone, r_cap, scfg.zero_control)
        self.P = np.ascontiguousarray(ccfg.cert.P, dtype=float)
        self.coeffs = np.ascontiguousarray(ccfg.cert.gain_coeffs, dtype=float)
        self.pp = np.ascontiguousarray(plant.params(), dtype=float)

        bk = ccfg.bounds.kernel()
        pk = plant.kernel()
        compiled = NUMBA_ENABLED and bk is not None and pk is not None and isinstance(ccfg.warp, TimeWarp)
        if engine == "kernel" and not compiled:
            raise ValueError("compiled engine needs numba, a bounds kernel, a plant kernel and the rational warp")
        if engine not in ("auto", "kernel", "python"):
            raise ValueError(f"unknown engine {engine!r}")
        self.compiled = compiled and engine != "python"
        self.bp = np.ascontiguousarray(bk[1] if bk is not None else np.zeros(1), dtype=float)

        if self.compiled:
            self.warp_fn = kernels.rational_warp
            self.bounds_fn = bk[0]
            self.plant_fn = pk
            self.cl = kernels.closed_loop
            self.step_fn = kernels.rk4_step
            self.integrate = kernels.rk4_integrate
        else:
            w = ccfg.warp
            if isinstance(w, TimeWarp):
                self.warp_fn = _py(kernels.rational_warp)
            else:
                def warp_fn(tau, c, out):
                    out[kernels.W_T] = w.unwarp(tau)
                    out[kernels.W_ALPHA] = w.alpha(tau)
                    out[kernels.W_DALPHA] = w.alpha_prime(tau)
                self.warp_fn = warp_fn
            if bk is not None:
                self.bounds_fn = _py(bk[0])
            else:
                b = ccfg.bounds

                def bounds_fn(x, t, bp, bv):
                    b.values(x, t, bv)
                self.bounds_fn = bounds_fn
            if pk is not None:
                self.plant_fn = _py(pk)
            else:
                def plant_fn(x, z, u, t, pp, dx, dz):
                    fx, fz = plant.rhs(x, z, u, t)
                    dx[:] = fx
                    dz[:] = fz
                self.plant_fn = plant_fn
            self.bounds_fn = _nan_on_error(self.bounds_fn, 3)
            self.plant_fn = _nan_on_error(self.plant_fn, 5, 6)
            self.cl = _py(kernels.closed_loop)
            self.step_fn = _py(kernels.rk4_step)
            self.integrate = _py(kernels.rk4_integrate)
        self.work = kernels.make_work(self.dim, self.n)

    def component_name(self, i):
        if i < 0:
            return ""
        if i < self.n:
            return f"x{i + 1}"
        if i < self.n + self.nz:
            return f"z{i - self.n + 1}"
        return STATE_NAMES_TAIL[i - self.n - self.nz]

    def step(self, tau, s, h):
        snew = np.empty(self.dim)
        status, comp = self.step_fn(self.cl, self.warp_fn, self.bounds_fn, self.plant_fn, tau, s, h,
                                    self.n, self.nz, self.bp, self.pp, self.c, self.P, self.coeffs,
                                    snew, self.work)
        return int(status), int(comp), snew

    def integrate_from(self, s0, tau0, h, nsteps, stride):
        nrec_max = nsteps // stride + 2
        rec_tau = np.empty(nrec_max)
        rec_s = np.empty((nrec_max, self.dim))
        rec_out = np.empty((nrec_max, kernels.NOUT))
        res = self.integrate(self.step_fn, self.cl, self.warp_fn, self.bounds_fn, self.plant_fn,
                             np.ascontiguousarray(s0, dtype=float), float(tau0), float(h), int(nsteps),
                             int(stride), self.n, self.nz, self.bp, self.pp, self.c, self.P,
                             self.coeffs, rec_tau, rec_s, rec_out, self.work)
        status, failed, comp, nrec, dz_steps, rcap_steps = (int(v) for v in res)
        return status, failed, comp, rec_tau[:nrec], rec_s[:nrec], rec_out[:nrec], dz_steps, rcap_steps


def initial_state(scfg: SimConfig):
    return np.concatenate([np.asarray(scfg.x0, dtype=float), np.asarray(scfg.z0, dtype=float),
                           [scfg.r0, scfg.theta_hat0, scfg.theta1_hat0]])


def step(scfg: SimConfig, plant, ccfg: ControllerConfig, s, tau, engine="auto"):
    """One RK4 step of the packed state ``[x, z, r, theta_hat, theta1_hat]``."""
    eng = _Engine(scfg, plant, ccfg, engine)
    with np.errstate(all="ignore"):
        status, comp, snew = eng.step(float(tau), np.asarray(s, dtype=float), scfg.d_tau)
    _raise_on_status(eng, status, comp, tau)
    return snew


def _raise_on_status(eng, status, comp, tau, trajectory=None):
    if status == kernels.OK:
        return
    name = eng.component_name(comp)
    if status == kernels.NONFINITE:
        msg = f"non-finite state component {name} after the step from tau={tau:.17g}"
    else:
        msg = f"{name} fell below alpha(tau) beyond the clamp tolerance after the step from tau={tau:.17g}"
    raise SimulationError(msg, tau, name, trajectory)


# ---------------------------------------------------------------------------
# trajectory
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Trajectory:
    n: int
    nz: int
    t: np.ndarray
    tau: np.ndarray
    x: np.ndarray
    z: np.ndarray
    eta: np.ndarray
    u: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    r: np.ndarray
    theta_hat: np.ndarray
    theta1_hat: np.ndarray
    V: np.ndarray
    Vbar: np.ndarray
    alpha: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return self.t.shape[0]

    @property
    def x_norm(self):
        return np.linalg.norm(self.x, axis=1)

    def columns(self):
        return (["t", "tau"] + [f"x{i + 1}" for i in range(self.n)] + [f"z{i + 1}" for i in range(self.nz)]
                + ["u", "u1", "u2", "r", "theta_hat", "theta1_hat", "V", "Vbar", "alpha"])

    def table(self):
        return np.column_stack([self.t, self.tau, self.x, self.z, self.u, self.u1, self.u2, self.r,
                                self.theta_hat, self.theta1_hat, self.V, self.Vbar, self.alpha])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns())
            for row in self.table():
                w.writerow([format(float(v), ".17g") for v in row])


def lyapunov_V(x1, r, eta, P):
    return 0.5 * x1 * x1 + r * np.einsum("ki,ij,kj->k", eta, P, eta)


def lyapunov_Vbar(V, theta_hat, theta1_hat, alpha, c_theta, c_theta1, th_star, th1_star, h_lower):
    return (V + (theta_hat - alpha - th_star) ** 2 / (2.0 * c_theta)
            + h_lower / (2.0 * c_theta1) * (theta1_hat - th1_star) ** 2)


def truth_for(plant):
    """(theta*, theta1*, h_lower) if the plant has known ground truth, else None."""
    from . import truth
    try:
        theta, phi_n0, h_lower = truth.true_disturbance_constants(plant)
    except TypeError:
        return None
    return truth.theta_star(theta), truth.theta1_star(phi_n0, h_lower), h_lower


def build_trajectory(eng, ccfg, plant, rec_tau, rec_s, rec_out, metadata):
    n, nz = eng.n, eng.nz
    w = ccfg.warp
    tau = rec_tau.copy()
    t = np.array([w.unwarp(v) for v in tau])
    alpha = np.array([w.alpha(v) for v in tau])
    x = rec_s[:, :n].copy()
    z = rec_s[:, n:n + nz].copy()
    r = rec_s[:, n + nz].copy()
    th = rec_s[:, n + nz + 1].copy()
    th1 = rec_s[:, n + nz + 2].copy()
    zeta = th * x[:, 0] * rec_out[:, kernels.ZETA1]
    eta = np.empty((len(tau), n - 1))
    for k in range(len(tau)):
        kernels.scale_state(x[k], r[k], zeta[k], eta[k])
    V = lyapunov_V(x[:, 0], r, eta, ccfg.cert.P)
    tr = truth_for(plant)
    if tr is None:
        Vbar = np.full_like(V, np.nan)
    else:
        Vbar = lyapunov_Vbar(V, th, th1, alpha, ccfg.c_theta, ccfg.c_theta1, *tr)
    return Trajectory(n=n, nz=nz, t=t, tau=tau, x=x, z=z, eta=eta,
                      u=rec_out[:, kernels.U].copy(), u1=rec_out[:, kernels.U1].copy(),
                      u2=rec_out[:, kernels.U2].copy(), r=r, theta_hat=th, theta1_hat=th1,
                      V=V, Vbar=Vbar, alpha=alpha, metadata=metadata)


def run(scfg: SimConfig, plant, ccfg: ControllerConfig, engine="auto", probe_t=None, x_threshold=None):
    """Integrate from tau = 0 to the horizon and evaluate the monitors.

    Returns ``(trajectory, report)``.  On a step failure raises
    :class:`SimulationError` carrying the partial trajectory.
    """
    errors = scfg.validate(ccfg.warp, plant.n, plant.nz)
    if errors:
        raise ValueError("; ".join(errors))
    eng = _Engine(scfg, plant, ccfg, engine)
    tau_max = scfg.horizon(ccfg.warp)
    h = float(scfg.d_tau)
    stride = int(scfg.record_stride)
    nsteps = int(math.floor(tau_max / h + 1e-9))
    rem = tau_max - nsteps * h
    if rem <= 1e-9 * h:
        rem = 0.0

    s0 = initial_state(scfg)
    with np.errstate(all="ignore"):
        status, failed, comp, rt, rs, ro, dz_steps, rcap_steps = eng.integrate_from(s0, 0.0, h, nsteps, stride)
    if status == kernels.OK and rem > 0.0:
        # the last record is always the final state; finish with one short step
        with np.errstate(all="ignore"):
            status2, _, comp2, rt2, rs2, ro2, dz2, rc2 = eng.integrate_from(rs[-1], nsteps * h, rem, 1, 1)
        if status2 != kernels.OK:
            status, failed, comp = status2, nsteps, comp2
        else:
            rt = np.concatenate([rt, rt2[1:]])
            rs = np.concatenate([rs, rs2[1:]])
            ro = np.concatenate([ro, ro2[1:]])
        dz_steps += dz2
        rcap_steps += rc2

    metadata = {
        "engine": "numba" if eng.compiled else "python",
        "d_tau": repr(h),
        "tau_max": repr(tau_max),
        "steps": str(nsteps + (1 if rem > 0 else 0)),
        "record_stride": str(stride),
        "sign_smoothing": repr(ccfg.sign_smoothing),
        "dead_zone": repr(scfg.dead_zone),
        "dead_zone_active_steps": str(dz_steps),
        "r_cap": "off" if scfg.r_cap is None else repr(scfg.r_cap),
        "r_cap_active_steps": str(rcap_steps),
        "zero_control": str(bool(scfg.zero_control)).lower(),
    }
    with np.errstate(all="ignore"):
        traj = build_trajectory(eng, ccfg, plant, rt, rs, ro, metadata)
    if status != kernels.OK:
        traj.metadata["failed_step"] = str(failed)
        _raise_on_status(eng, status, comp, failed * h, traj)
    if probe_t is None:
        probe_t = 0.975 * ccfg.warp.T_prescribed
    report = lyapunov_monitors(traj, ccfg, scfg, probe_t=probe_t, x_threshold=x_threshold)
    traj.metadata.update(report.to_record())
    return traj, report


# ---------------------------------------------------------------------------
# monitors
# ---------------------------------------------------------------------------

@dataclass
class MonitorReport:
    samples: int
    monotone: bool
    worst_decrease: float
    worst_decrease_state: str
    floors: bool
    worst_floor_deficit_r: float
    worst_floor_deficit_theta: float
    vbar_monotone: bool
    vbar_worst_increment: float
    vbar_worst_index: int
    tol_mono: float
    kappa: float
    v_decay_found: bool
    v_decay_tau0: float
    v_decay_worst_slack: float
    sup_u: float
    sup_z: float
    final_x_norm: float
    probe_t: float
    x_norm_at_probe: float
    x_threshold: float = None
    notes: list = field(default_factory=list)

    @property
    def bounded(self):
        return math.isfinite(self.sup_u) and math.isfinite(self.sup_z)

    @property
    def terminal_ok(self):
        if self.x_threshold is None:
            return True
        return bool(self.x_norm_at_probe <= self.x_threshold)

    @property
    def passed(self):
        return bool(self.monotone and self.floors and self.vbar_monotone and self.v_decay_found
                    and self.bounded and self.terminal_ok)

    def to_record(self):
        rec = {}
        for k, v in asdict(self).items():
            if k == "notes":
                continue
            if isinstance(v, bool):
                rec[f"monitor.{k}"] = "true" if v else "false"
            elif isinstance(v, float):
                rec[f"monitor.{k}"] = format(v, ".17g")
            elif v is None:
                rec[f"monitor.{k}"] = "none"
            else:
                rec[f"monitor.{k}"] = str(v)
        rec["monitor.pass"] = "true" if self.passed else "false"
        return rec

    def to_text(self):
        return "\n".join(f"{k}={v}" for k, v in self.to_record().items())


def lyapunov_monitors(traj: Trajectory, ccfg: ControllerConfig, scfg: SimConfig = None,
                      probe_t=None, x_threshold=None) -> MonitorReport:
    """Evaluate the closed-loop trajectory properties on recorded samples."""
    N = len(traj)
    d_tau = scfg.d_tau if scfg is not None else (float(traj.tau[1] - traj.tau[0]) if N > 1 else 0.0)
    notes = []

    worst_dec, worst_name = 0.0, ""
    for name in STATE_NAMES_TAIL:
        d = np.diff(getattr(traj, name))
        if d.size and d.min() < worst_dec:
            worst_dec, worst_name = float(d.min()), name
    monotone = worst_dec >= 0.0

    def deficit(v):
        return float(np.max((traj.alpha - v) / traj.alpha)) if N else 0.0

    def_r = deficit(traj.r)
    def_th = deficit(traj.theta_hat)
    floors = def_r <= 1e-9 and def_th <= 1e-9

    vbar = traj.Vbar
    if np.all(np.isnan(vbar)):
        notes.append("no ground truth for this plant; Vbar monitor skipped")
        tol_mono = 10.0 * d_tau ** 2
        vbar_ok, vbar_inc, vbar_idx = True, 0.0, -1
    else:
        tol_mono = 1e-6 * abs(float(vbar[0])) + 10.0 * d_tau ** 2
        dv = np.diff(vbar)
        if dv.size:
            vbar_idx = int(np.argmax(dv))
            vbar_inc = float(dv[vbar_idx])
            vbar_ok = bool(np.all(dv <= tol_mono)) and bool(np.all(np.isfinite(vbar)))
            vbar_idx += 1
        else:
            vbar_ok, vbar_inc, vbar_idx = True, 0.0, -1

    kap = kappa(ccfg.cert, ccfg.zeta0, ccfg.bounds.sigma)
    V = traj.V
    tol_v = 1e-6 * abs(float(V[0])) + 10.0 * d_tau ** 2 if N else 0.0
    if N < 2:
        found, tau0, slack = True, float(traj.tau[0]) if N else 0.0, 0.0
    else:
        dtau = np.diff(traj.tau)
        lhs = np.diff(V) + kap * dtau * 0.5 * (V[:-1] + V[1:])
        bad = np.nonzero(~(lhs <= tol_v))[0]
        if bad.size == 0:
            found, k0 = True, 0
        elif bad[-1] + 1 < N - 1:
            found, k0 = True, int(bad[-1]) + 1
        else:
            found, k0 = False, N - 1
        tau0 = float(traj.tau[k0]) if found else math.inf
        slack = float(np.max(lhs[k0:])) if found and k0 < N - 1 else 0.0

    sup_u = float(np.max(np.abs(traj.u))) if N else 0.0
    sup_z = float(np.max(np.abs(traj.z))) if N and traj.z.size else 0.0
    xn = traj.x_norm
    final_x = float(xn[-1]) if N else 0.0
    if probe_t is None:
        probe_t = float(traj.t[-1]) if N else 0.0
    if N and traj.t[0] <= probe_t <= traj.t[-1]:
        x_probe = float(np.interp(probe_t, traj.t, xn))
    else:
        x_probe = math.nan
        notes.append(f"probe time {probe_t!r} outside the simulated range")

    return MonitorReport(
        samples=N, monotone=monotone, worst_decrease=worst_dec, worst_decrease_state=worst_name or "none",
        floors=floors, worst_floor_deficit_r=def_r, worst_floor_deficit_theta=def_th,
        vbar_monotone=vbar_ok, vbar_worst_increment=vbar_inc, vbar_worst_index=vbar_idx, tol_mono=tol_mono,
        kappa=kap, v_decay_found=found, v_decay_tau0=tau0, v_decay_worst_slack=slack,
        sup_u=sup_u, sup_z=sup_z, final_x_norm=final_x, probe_t=float(probe_t), x_norm_at_probe=x_probe,
        x_threshold=x_threshold, notes=notes,
    )
