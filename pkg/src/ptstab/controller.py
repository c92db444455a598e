"""Adaptive dynamic high-gain controller in the warped time tau.

The controller sees the plant only through its known bounds
(:class:`ptstab.bounds.PlantBounds`).  Each public function below is a thin
wrapper over the numeric kernel of the same quantity, so the simulator's fast
path and these reference functions evaluate identical arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .bounds import PlantBounds
from .lyapunov import LyapunovCertificate
from .timewarp import ForcingConfig, TimeWarp, Warp


@dataclass(frozen=True, eq=False)
class ControllerConfig:
    cert: LyapunovCertificate
    warp: Warp
    forcing: ForcingConfig
    bounds: PlantBounds
    zeta0: float
    zeta_floor: float
    c_theta: float
    c_theta1: float
    epsilon_r: float
    sign_smoothing: float = 0.0

    def __post_init__(self):
        errors = validate_controller_constants(
            self.zeta0, self.zeta_floor, self.c_theta, self.c_theta1,
            self.epsilon_r, self.sign_smoothing)
        if self.bounds.n != self.cert.n:
            errors.append(f"plant order {self.bounds.n} does not match certificate order {self.cert.n}")
        if self.cert.gains_fn is not None:
            errors.append("controller needs gains of the form coeff * phi_(2,3); gains_fn is verify-only")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def n(self):
        return self.cert.n

    def consts(self, dead_zone=0.0, r_cap=math.inf, zero_control=False) -> np.ndarray:
        """Packed constant vector consumed by the kernels."""
        b = self.bounds
        w = self.warp
        if not isinstance(w, TimeWarp):
            raise TypeError("the packed kernels implement the rational warp only")
        c = np.zeros(kernels.NCONST)
        c[kernels.A0] = w.a0
        c[kernels.TBAR] = w.T_effective
        c[kernels.CG1] = self.forcing.c_gamma1
        c[kernels.CTG1] = self.forcing.c_tilde_gamma1
        c[kernels.CG2] = self.forcing.c_gamma2
        c[kernels.CTG2] = self.forcing.c_tilde_gamma2
        c[kernels.ZETA0] = self.zeta0
        c[kernels.ZFLOOR] = self.zeta_floor
        c[kernels.CTH] = self.c_theta
        c[kernels.CTH1] = self.c_theta1
        c[kernels.EPSR] = self.epsilon_r
        c[kernels.SWIDTH] = self.sign_smoothing
        c[kernels.NUC] = self.cert.nu_c
        c[kernels.NULOW] = self.cert.nu_lower
        c[kernels.LMAX] = self.cert.lambda_max
        c[kernels.SEPS1] = b.eps_col1_norm
        c[kernels.SEPST2] = b.eps_tilde_norm
        c[kernels.SEPSIJ] = b.eps_inner_norm
        c[kernels.EPS11] = b.eps11
        c[kernels.DEADZONE] = dead_zone
        c[kernels.RCAP] = r_cap
        c[kernels.ZEROU] = 1.0 if zero_control else 0.0
        return c


def validate_controller_constants(zeta0, zeta_floor, c_theta, c_theta1, epsilon_r, sign_smoothing):
    errors = []
    for name, v in (("zeta0", zeta0), ("zeta_floor", zeta_floor), ("c_theta", c_theta),
                    ("c_theta1", c_theta1), ("epsilon_r", epsilon_r)):
        if not v > 0:
            errors.append(f"{name} must be > 0 (got {v!r})")
    if not sign_smoothing >= 0:
        errors.append(f"sign_smoothing must be >= 0 (got {sign_smoothing!r})")
    return errors


@dataclass(frozen=True)
class ControllerState:
    r: float
    theta_hat: float
    theta1_hat: float

    def check(self, alpha, rtol=1e-9):
        """Names of violated floor invariants at warp rate ``alpha``."""
        bad = []
        floor = max(1.0, alpha) * (1.0 - rtol)
        if self.r < floor:
            bad.append("r")
        if self.theta_hat < floor:
            bad.append("theta_hat")
        if self.theta1_hat < 0:
            bad.append("theta1_hat")
        return bad


@dataclass(frozen=True, eq=False)
class ScaledState:
    eta: np.ndarray

    def reconstruct(self, r, zeta):
        """Invert the scaling: x2..xn from eta, r and zeta(x1, theta_hat)."""
        m = self.eta.shape[0]
        xs = np.empty(m)
        xs[0] = r * self.eta[0] - zeta
        for i in range(1, m):
            xs[i] = self.eta[i] * r ** (i + 1)
        return xs


# -- design functions ---------------------------------------------------------

def q1(cfg: ControllerConfig, bounds: PlantBounds, x1):
    return kernels.q1_value(bounds.phibar12(x1), cfg.cert.nu_c, cfg.zeta0)


def q2(bounds: PlantBounds, x1):
    return kernels.q2_value(bounds.Gamma(x1), bounds.eps11)


def zeta1_pair(cfg: ControllerConfig, bounds: PlantBounds, x1):
    """(zeta1, d zeta1 / d x1) from the active branch of the max."""
    vals = (bounds.phibar12(x1), bounds.dphibar12(x1), bounds.Gamma(x1), bounds.dGamma(x1))
    if not all(math.isfinite(v) for v in vals):
        raise ValueError(f"non-finite bound function value at x1={x1!r}")
    return kernels.zeta1_value(vals[0], vals[1], vals[2], vals[3], cfg.cert.nu_c,
                               cfg.zeta0, cfg.zeta_floor, bounds.eps11)


def zeta1(cfg: ControllerConfig, bounds: PlantBounds, x1):
    return zeta1_pair(cfg, bounds, x1)[0]


def w1(cfg: ControllerConfig, x1, theta_hat, ratio, bounds: PlantBounds = None):
    """w1(x1, theta_hat, theta_hat_dot / phi_(1,2))."""
    b = cfg.bounds if bounds is None else bounds
    z, dz = zeta1_pair(cfg, b, x1)
    return kernels.w1_value(theta_hat, ratio, x1, z, dz, cfg.cert.lambda_max, cfg.zeta0)


def w2(cfg: ControllerConfig, bounds: PlantBounds, x1, theta_hat):
    z, dz = zeta1_pair(cfg, bounds, x1)
    return kernels.w2_value(theta_hat, x1, z, dz, bounds.Gamma(x1), bounds.phibar12(x1),
                            cfg.cert.lambda_max, cfg.zeta0, bounds.eps_col1_norm,
                            bounds.eps_tilde_norm, bounds.eps_inner_norm, bounds.eps11)


def scaled_eta(x, st: ControllerState, zeta) -> ScaledState:
    x = np.asarray(x, dtype=float)
    eta = np.empty(x.shape[0] - 1)
    kernels.scale_state(x, st.r, zeta, eta)
    return ScaledState(eta)


def big_R(cfg: ControllerConfig, bounds: PlantBounds, x1, theta_hat, ratio):
    return kernels.big_r_value(w1(cfg, x1, theta_hat, ratio, bounds), w2(cfg, bounds, x1, theta_hat),
                               theta_hat, bounds.phibar12(x1), cfg.cert.nu_c)


def omega(cfg: ControllerConfig, bounds: PlantBounds, r, x, t, theta_hat, theta_hat_dot):
    x1 = float(x[0])
    ratio = theta_hat_dot / bounds.phi_upper(1, x, t)
    return kernels.omega_value(r, w1(cfg, x1, theta_hat, ratio, bounds), w2(cfg, bounds, x1, theta_hat),
                               theta_hat, bounds.phi_upper(1, x, t), bounds.phi23(x, t),
                               cfg.cert.nu_lower, cfg.warp.a0)


def gate_lambda(cfg: ControllerConfig, s):
    return kernels.gate_value(s, cfg.epsilon_r)


def chi(cfg: ControllerConfig, bounds: PlantBounds, r, x, t, theta_hat, eta):
    x1 = float(x[0])
    eta = np.asarray(eta, dtype=float)
    return (bounds.phi_upper(1, x, t) * q2(bounds, x1) * x1 * x1
            + r * w2(cfg, bounds, x1, theta_hat) * bounds.phi23(x, t) * float(eta @ eta))


def chi1(cert: LyapunovCertificate, r, eta, gains, gamma_value, n):
    eta = np.asarray(eta, dtype=float)
    pb = float(eta @ cert.P[:, -1])
    keta = float(np.asarray(gains, dtype=float) @ eta)
    return 2.0 * r * r * abs(pb * keta) + 2.0 * abs(pb) * gamma_value / r ** (n - 2)


def u1(cfg: ControllerConfig, st: ControllerState, eta, gains, t):
    n = cfg.n
    alpha = cfg.warp.alpha(cfg.warp.warp(t))
    inv_g1 = cfg.forcing.c_gamma1 * alpha + cfg.forcing.c_tilde_gamma1
    return -st.r ** n * inv_g1 * float(np.asarray(gains, dtype=float) @ np.asarray(eta, dtype=float))


def u2(cfg: ControllerConfig, st: ControllerState, eta, gains, gamma_value, t, n=None):
    n = cfg.n if n is None else n
    alpha = cfg.warp.alpha(cfg.warp.warp(t))
    f = cfg.forcing
    inv_g1 = f.c_gamma1 * alpha + f.c_tilde_gamma1
    g2_over_g1 = f.c_gamma2 * alpha + f.c_tilde_gamma2
    eta = np.asarray(eta, dtype=float)
    pb = float(eta @ cfg.cert.P[:, -1])
    keta = float(np.asarray(gains, dtype=float) @ eta)
    mag = abs(keta) * st.r ** n * (inv_g1 + st.theta1_hat) + gamma_value * (g2_over_g1 + st.theta1_hat)
    return -kernels.sign_value(pb, cfg.sign_smoothing) * mag


class Controller:
    """Evaluates the full control law at one (x, t) through the shared kernel."""

    def __init__(self, cfg: ControllerConfig, dead_zone=0.0, r_cap=math.inf, zero_control=False):
        self.cfg = cfg
        self.c = cfg.consts(dead_zone, r_cap, zero_control)
        self.P = np.ascontiguousarray(cfg.cert.P)
        self.coeffs = np.ascontiguousarray(cfg.cert.gain_coeffs)

    def evaluate(self, x, st: ControllerState, tau):
        """Return ``(out, eta)``; ``out`` is indexed by the kernels output constants."""
        w = self.cfg.warp
        t = w.unwarp(tau)
        x = np.asarray(x, dtype=float)
        bv = self.cfg.bounds.values(x, t)
        bad = [name for name, v in zip(("phi12", "phi23", "Gamma", "dGamma", "phibar12", "dphibar12"), bv)
               if not math.isfinite(v)]
        if bad:
            raise ValueError(f"non-finite bound value(s) {bad} at t={t!r}")
        out = np.empty(kernels.NOUT)
        eta = np.empty(x.shape[0] - 1)
        kernels.controller_core(x, st.r, st.theta_hat, st.theta1_hat, w.alpha(tau), w.alpha_prime(tau),
                                bv, self.P, self.coeffs, self.c, out, eta)
        return out, eta


def controller_rates(cfg: ControllerConfig, bounds: PlantBounds, st: ControllerState, x, t, tau):
    """(dr/dtau, dtheta_hat/dtau, dtheta1_hat/dtau) at one state."""
    if bounds is not cfg.bounds:
        cfg = ControllerConfig(cfg.cert, cfg.warp, cfg.forcing, bounds, cfg.zeta0, cfg.zeta_floor,
                               cfg.c_theta, cfg.c_theta1, cfg.epsilon_r, cfg.sign_smoothing)
    out, _ = Controller(cfg).evaluate(x, st, tau)
    names = {kernels.DR: "dr/dtau", kernels.DTH: "dtheta_hat/dtau", kernels.DTH1: "dtheta1_hat/dtau",
             kernels.W1: "w1", kernels.W2: "w2", kernels.RBIG: "R", kernels.OMEGA: "Omega",
             kernels.CHI: "chi", kernels.CHI1: "chi1"}
    for k, name in names.items():
        if not math.isfinite(out[k]):
            raise ValueError(f"non-finite {name} at tau={tau!r}")
    return float(out[kernels.DR]), float(out[kernels.DTH]), float(out[kernels.DTH1])
