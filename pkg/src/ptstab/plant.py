"""Plants of the strict-feedback form with appended dynamics, and assumption checks.

A :class:`Plant` couples its known bounds (``plant.bounds``, the only part the
controller sees) with the true right-hand side used by the simulator.  The
true parameters stay on the plant object; the constants derived from them
live in :mod:`ptstab.truth`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import plant_kernels
from .bounds import ExampleBounds, PlantBounds, SecondOrderBounds


class Plant:
    """Interface: ``n``, ``nz``, ``bounds``, ``rhs`` and optionally ``kernel``."""

    n: int
    nz: int
    bounds: PlantBounds

    def rhs(self, x, z, u, t):
        """Return ``(dx, dz)``."""
        raise NotImplementedError

    def input_gain(self, x, z, t):
        raise NotImplementedError

    def params(self) -> np.ndarray:
        return np.zeros(1)

    def kernel(self):
        """Jitted rhs with signature ``(x, z, u, t, params, dx, dz)``, or None."""
        return None

    def z_matrix(self):
        """System matrix of the appended dynamics when it is linear, else None."""
        return None

    def _rhs_via_kernel(self, x, z, u, t):
        dx = np.empty(self.n)
        dz = np.empty(self.nz)
        self.kernel()(np.asarray(x, dtype=float), np.asarray(z, dtype=float), float(u), float(t),
                      self.params(), dx, dz)
        return dx, dz


class ExamplePlant(Plant):
    """The fifth-order example: three nominal states, two appended states.

    x1' = (1 + x1^2) x2
    x2' = (1 + x1^4) x3 + ta cos(x2 z1) x2 + tb (1 + cos(t u)) e^x1 x1^2 sin z2
    x3' = h u + tc x1^2 cos(x3 z1) x2 + td (1 + x1^2)
    z1' = -100 z1 + z2
    z2' = -100 z2 + x3^2 + u
    with h = 1 + sin(t) cos(z2) / 2 + x1^4 (1 + e^-|z1|).
    """

    n = 3
    nz = 2

    def __init__(self, theta_a=2.0, theta_b=2.0, theta_c=2.0, theta_d=2.0, c_beta=1e-4, sigma=1.0):
        self.theta_a = float(theta_a)
        self.theta_b = float(theta_b)
        self.theta_c = float(theta_c)
        self.theta_d = float(theta_d)
        self.bounds = ExampleBounds(c_beta=c_beta, sigma=sigma)

    def params(self):
        return np.array([self.theta_a, self.theta_b, self.theta_c, self.theta_d])

    def rhs(self, x, z, u, t):
        return self._rhs_via_kernel(x, z, u, t)

    def input_gain(self, x, z, t):
        return plant_kernels.example_input_gain(np.asarray(x, dtype=float), np.asarray(z, dtype=float), float(t))

    def kernel(self):
        return plant_kernels.example_rhs

    def z_matrix(self):
        return np.array([[-100.0, 1.0], [0.0, -100.0]])


class SecondOrderPlant(Plant):
    """Second-order demonstration plant with one appended state.

    x1' = x2
    x2' = tb x1 cos z1 + td (1 + sin(z1) / 2) + (1 + sin(t + z1) / 2) u
    z1' = -z1 + x1
    """

    n = 2
    nz = 1

    def __init__(self, theta_b=1.0, theta_d=0.5, c_beta=1.0, sigma=1.0):
        self.theta_b = float(theta_b)
        self.theta_d = float(theta_d)
        self.bounds = SecondOrderBounds(c_beta=c_beta, sigma=sigma)

    def params(self):
        return np.array([self.theta_b, self.theta_d])

    def rhs(self, x, z, u, t):
        return self._rhs_via_kernel(x, z, u, t)

    def input_gain(self, x, z, t):
        return plant_kernels.second_order_input_gain(np.asarray(x, dtype=float), np.asarray(z, dtype=float), float(t))

    def kernel(self):
        return plant_kernels.second_order_rhs

    def z_matrix(self):
        return np.array([[-1.0]])


class ChainPlant(Plant):
    """Disturbance-free double integrator x1' = x2, x2' = u with a frozen z.

    Used as an integrator sanity check; its bounds are those of the
    second-order plant.
    """

    n = 2
    nz = 1

    def __init__(self, c_beta=1.0, sigma=1.0):
        self.bounds = SecondOrderBounds(c_beta=c_beta, sigma=sigma)

    def rhs(self, x, z, u, t):
        return self._rhs_via_kernel(x, z, u, t)

    def input_gain(self, x, z, t):
        return 1.0

    def kernel(self):
        return plant_kernels.chain_rhs

    def z_matrix(self):
        return np.zeros((1, 1))


PLANTS = {
    "example": ExamplePlant,
    "second_order": SecondOrderPlant,
    "chain": ChainPlant,
}


# ---------------------------------------------------------------------------
# assumption checks
# ---------------------------------------------------------------------------

@dataclass
class AssumptionResult:
    name: str
    passed: bool
    worst_margin: float
    worst_sample: tuple = None
    note: str = ""


@dataclass
class AssumptionReport:
    results: list = field(default_factory=list)
    sampled_points: int = 0

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def __getitem__(self, name):
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_text(self):
        lines = [f"assumption checks over {self.sampled_points} samples (sampled, not proven)"]
        for r in self.results:
            verdict = "PASS" if r.passed else "FAIL"
            where = ""
            if r.worst_sample is not None:
                x, t = r.worst_sample
                where = f" at x={np.array2string(np.asarray(x), precision=4)}, t={t:.4g}"
            extra = f" ({r.note})" if r.note else ""
            lines.append(f"  {r.name:<10} {verdict}  worst margin {r.worst_margin:.6g}{where}{extra}")
        return "\n".join(lines)

    def to_record(self):
        rec = {"sampled_points": str(self.sampled_points), "pass": "true" if self.passed else "false"}
        for r in self.results:
            rec[f"{r.name}.pass"] = "true" if r.passed else "false"
            rec[f"{r.name}.worst_margin"] = f"{r.worst_margin:.17g}"
        return rec


class _Worst:
    """Tracks the smallest margin and where it occurred."""

    def __init__(self):
        self.margin = math.inf
        self.sample = None

    def update(self, margin, x, t):
        if margin < self.margin or (not math.isfinite(margin) and self.sample is None):
            self.margin = margin
            self.sample = (np.asarray(x, dtype=float), float(t))


def default_grid(n, points=21, lo=-5.0, hi=5.0):
    from .lyapunov import box_grid
    return box_grid(lo, hi, points, n)


def check_assumptions(plant, samples, tol=1e-12) -> AssumptionReport:
    """Check A1, A4, A5 and the epsilon ratio bounds at every sample.

    Margins are ``bound - value`` (or ``value - bound``) so that a negative
    margin marks a violation.  ``plant`` may be a :class:`Plant` or its
    :class:`PlantBounds`.
    """
    b = plant.bounds if isinstance(plant, Plant) else plant
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sample")
    n = b.n
    for x, _ in samples:
        if np.asarray(x).shape != (n,):
            raise ValueError(f"sample of shape {np.asarray(x).shape} for a plant of order {n}")

    a1, a4, a5lo, a5hi, e1, e2, e3 = (_Worst() for _ in range(7))
    for x, t in samples:
        x1 = float(x[0])
        ups = [b.phi_upper(i, x, t) for i in range(1, n)]
        for v in ups:
            a1.update(v - b.sigma, x, t)
        for i in range(3, n):
            a4.update(ups[i - 1] - b.rho_upper[i - 1] * ups[i - 2], x, t)
        phi12 = ups[0]
        phi23 = b.phi23(x, t)
        ratio = phi12 / phi23
        a5lo.update(ratio - b.phitilde12(x1), x, t)
        a5hi.update(b.phibar12(x1) - ratio, x, t)
        for i in range(1, n + 1):
            e1.update(b.eps[i - 1, 0] - b.phi_bound(i, 1, x, t) / phi12, x, t)
        root = math.sqrt(phi12 * phi23)
        for i in range(2, n + 1):
            e2.update(b.eps_tilde[i - 1] - b.phi_bound(i, 2, x, t) / root, x, t)
        for i in range(2, n):
            for j in range(2, i + 1):
                e3.update(b.eps[i - 1, j - 1] - b.phi_bound(i, j, x, t) / phi23, x, t)

    def result(name, w, note=""):
        if w.sample is None:
            return AssumptionResult(name, True, math.inf, None, note or "vacuously satisfied")
        return AssumptionResult(name, bool(w.margin >= -tol), w.margin, w.sample, note)

    report = AssumptionReport(sampled_points=len(samples))
    report.results = [
        result("A1", a1),
        result("A4", a4, "" if n > 3 else "vacuously satisfied"),
        result("A5.lower", a5lo),
        result("A5.upper", a5hi),
        result("eps_i1", e1),
        result("eps~_i2", e2),
        result("eps_ij", e3),
    ]
    return report
