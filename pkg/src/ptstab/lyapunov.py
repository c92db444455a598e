"""Coupled Lyapunov certificates for the scaled closed loop.

A certificate is a constant symmetric positive-definite ``P_c`` of size
``(n-1) x (n-1)``, a gain row ``K_c = [k_2, ..., k_n]`` and constants
``nu_c, nu_lower, nu_upper`` such that, with ``D~ = diag(1..n-1) - I/2``,

    P_c A_c + A_c^T P_c <= -nu_c phi_(2,3) I
    nu_lower I <= P_c D~ + D~ P_c <= nu_upper I.

The first inequality depends on the state through ``A_c``; it is checked on a
caller-supplied sample set, so a passing report is a sampled check, not a
proof.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class LyapunovCertificate:
    """Certificate (P_c, K_c, nu_c, nu_lower, nu_upper) for a plant of order n.

    Gains default to the form ``k_(j+1)(x, t) = gain_coeffs[j] * phi_(2,3)(x, t)``;
    ``gains_fn(x, t, bounds)`` overrides that for generic gain rows (such
    certificates run on the Python path only).
    """

    n: int
    P: np.ndarray
    gain_coeffs: np.ndarray
    nu_c: float
    nu_lower: float
    nu_upper: float
    gains_fn: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        k = np.asarray(self.gain_coeffs, dtype=float).ravel()
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "gain_coeffs", k)
        m = self.n - 1
        if self.n < 2:
            raise ValueError("certificate order n must be >= 2")
        if P.shape != (m, m):
            raise ValueError(f"P_c must be {m}x{m}, got {P.shape}")
        if k.shape != (m,):
            raise ValueError(f"need {m} gain coefficients, got {k.shape[0]}")
        if not np.allclose(P, P.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(P).max())):
            raise ValueError("P_c must be symmetric")
        if np.linalg.eigvalsh(P).min() <= 0:
            raise ValueError("P_c must be positive definite")
        if not (self.nu_c > 0 and self.nu_lower > 0 and self.nu_upper >= self.nu_lower):
            raise ValueError("need nu_c > 0 and 0 < nu_lower <= nu_upper")

    @property
    def lambda_max(self) -> float:
        return float(np.linalg.eigvalsh(self.P).max())

    @property
    def D_tilde(self) -> np.ndarray:
        return np.diag(np.arange(1, self.n, dtype=float)) - 0.5 * np.eye(self.n - 1)

    def gains(self, x, t, bounds) -> np.ndarray:
        if self.gains_fn is not None:
            return np.asarray(self.gains_fn(x, t, bounds), dtype=float)
        return self.gain_coeffs * bounds.phi23(x, t)

    def to_dict(self):
        return {
            "n": self.n,
            "P": self.P.tolist(),
            "gain_coeffs": self.gain_coeffs.tolist(),
            "nu_c": self.nu_c,
            "nu_lower": self.nu_lower,
            "nu_upper": self.nu_upper,
        }


def example_certificate(a_tilde_c: float) -> LyapunovCertificate:
    """The n = 3 certificate P_c = a~[[3, 1], [1, 1]], k2 = 5 phi23, k3 = 4 phi23."""
    if not a_tilde_c > 0:
        raise ValueError("a_tilde_c must be > 0")
    return LyapunovCertificate(
        n=3,
        P=a_tilde_c * np.array([[3.0, 1.0], [1.0, 1.0]]),
        gain_coeffs=np.array([5.0, 4.0]),
        nu_c=1.675 * a_tilde_c,
        nu_lower=a_tilde_c,
        nu_upper=5.0 * a_tilde_c,
    )


def certificate_from_dict(d) -> LyapunovCertificate:
    P = np.asarray(d["P"], dtype=float)
    return LyapunovCertificate(
        n=int(d.get("n", P.shape[0] + 1)),
        P=P,
        gain_coeffs=np.asarray(d["gain_coeffs"], dtype=float),
        nu_c=float(d["nu_c"]),
        nu_lower=float(d["nu_lower"]),
        nu_upper=float(d["nu_upper"]),
    )


def load_certificate(path) -> LyapunovCertificate:
    return certificate_from_dict(json.loads(Path(path).read_text()))


def save_certificate(cert: LyapunovCertificate, path) -> None:
    Path(path).write_text(json.dumps(cert.to_dict(), indent=2) + "\n")


def build_Ac(cert: LyapunovCertificate, phi_super: Sequence[float], gains: Sequence[float]) -> np.ndarray:
    """A_c with superdiagonal phi_(i+1,i+2), last row -k, zeros elsewhere."""
    m = cert.n - 1
    phi_super = np.asarray(phi_super, dtype=float).ravel()
    gains = np.asarray(gains, dtype=float).ravel()
    if phi_super.shape != (m - 1,) or gains.shape != (m,):
        raise ValueError(
            f"need {m - 1} superdiagonal values and {m} gains for n={cert.n}, "
            f"got {phi_super.shape[0]} and {gains.shape[0]}"
        )
    A = np.zeros((m, m))
    A[np.arange(m - 1), np.arange(1, m)] = phi_super
    A[m - 1, :] -= gains
    return A


@dataclass
class CertReport:
    sampled_points: int
    worst_margin_first_ineq: float
    worst_sample: tuple
    second_ineq_eigs: tuple
    nu_lower: float
    nu_upper: float
    tol: float
    passed: bool

    def to_record(self) -> dict:
        x, t = self.worst_sample
        return {
            "sampled_points": str(self.sampled_points),
            "worst_margin_first_ineq": f"{self.worst_margin_first_ineq:.17g}",
            "worst_sample_x": " ".join(f"{v:.17g}" for v in x),
            "worst_sample_t": f"{t:.17g}",
            "second_ineq_eig_min": f"{self.second_ineq_eigs[0]:.17g}",
            "second_ineq_eig_max": f"{self.second_ineq_eigs[1]:.17g}",
            "nu_lower": f"{self.nu_lower:.17g}",
            "nu_upper": f"{self.nu_upper:.17g}",
            "tol": f"{self.tol:.17g}",
            "pass": "true" if self.passed else "false",
        }

    def to_text(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        x, t = self.worst_sample
        lo, hi = self.second_ineq_eigs
        return "\n".join([
            f"certificate check: {verdict} (sampled over {self.sampled_points} points, not a proof)",
            f"  max eig(P A + A^T P + nu_c phi23 I): {self.worst_margin_first_ineq:.6e}"
            f"  at x={np.array2string(np.asarray(x), precision=4)}, t={t:.4g}",
            f"  eig(P D~ + D~ P) in [{lo:.6g}, {hi:.6g}], required [{self.nu_lower:.6g}, {self.nu_upper:.6g}]",
            f"  tolerance {self.tol:.3e}",
        ])


def box_grid(lo, hi, points, dim, t_values=(0.0,)):
    """Uniform grid of (x, t) samples over the box [lo, hi]^dim."""
    axis = np.linspace(lo, hi, points)
    return [(np.array(p), float(t)) for t in t_values for p in itertools.product(axis, repeat=dim)]


def verify_certificate(cert: LyapunovCertificate, bounds, samples, tol=None) -> CertReport:
    """Check both coupled inequalities; the first one at every sample."""
    if bounds.n != cert.n:
        raise ValueError(f"plant order {bounds.n} does not match certificate order {cert.n}")
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sample")
    if tol is None:
        tol = 1e-9 * float(np.linalg.norm(cert.P))
    m = cert.n - 1
    mats = np.empty((len(samples), m, m))
    for k, (x, t) in enumerate(samples):
        phi_super = [bounds.phi_upper(i + 1, x, t) for i in range(1, m)]
        gains = cert.gains(x, t, bounds)
        phi23 = bounds.phi23(x, t)
        vals = np.concatenate([np.atleast_1d(phi_super), gains, [phi23]])
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"non-finite bound or gain value at sample x={x}, t={t}")
        A = build_Ac(cert, phi_super, gains)
        mats[k] = cert.P @ A + A.T @ cert.P + cert.nu_c * phi23 * np.eye(m)
    margins = np.linalg.eigvalsh(mats)[:, -1]
    worst = int(np.argmax(margins))
    Dt = cert.D_tilde
    eigs = np.linalg.eigvalsh(cert.P @ Dt + Dt @ cert.P)
    lo, hi = float(eigs[0]), float(eigs[-1])
    passed = bool(margins[worst] <= tol and lo >= cert.nu_lower - tol and hi <= cert.nu_upper + tol)
    x, t = samples[worst]
    return CertReport(
        sampled_points=len(samples),
        worst_margin_first_ineq=float(margins[worst]),
        worst_sample=(np.asarray(x, dtype=float), float(t)),
        second_ineq_eigs=(lo, hi),
        nu_lower=cert.nu_lower,
        nu_upper=cert.nu_upper,
        tol=tol,
        passed=passed,
    )


def kappa_terms(cert: LyapunovCertificate, zeta0: float, sigma: float):
    return 1.5 * zeta0 * sigma, cert.nu_c * sigma / (2.0 * cert.lambda_max)


def kappa(cert: LyapunovCertificate, zeta0: float, sigma: float) -> float:
    """Guaranteed decay rate min(3 zeta0 sigma / 2, nu_c sigma / (2 lambda_max(P_c)))."""
    if not (zeta0 > 0 and sigma > 0):
        raise ValueError("zeta0 and sigma must be > 0")
    return min(kappa_terms(cert, zeta0, sigma))
