"""Time-scale transformation tau = a(t) and the temporal forcing functions.

The shipped warp is ``a(t) = a0 t / (1 - t/T_eff)``, built on the effective
terminal time ``T_eff >= T`` so that the warp rate stays finite at the
prescribed time.  Any other admissible warp can be used by subclassing
:class:`Warp` and supplying ``warp``, ``unwarp``, ``alpha`` and
``alpha_prime``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels


class DomainError(ValueError):
    """Raised when a time or warped time lies outside the warp domain."""


class Warp:
    """Interface for admissible time warps.

    Requirements: ``warp(0) == 0``, strictly increasing on
    ``[0, T_effective)``, and ``alpha(tau) >= a0 > 0``.
    """

    a0: float
    T_prescribed: float
    T_effective: float

    def warp(self, t: float) -> float:
        raise NotImplementedError

    def unwarp(self, tau: float) -> float:
        raise NotImplementedError

    def alpha(self, tau: float) -> float:
        raise NotImplementedError

    def alpha_prime(self, tau: float) -> float:
        raise NotImplementedError

    def check_t(self, t: float) -> None:
        if not (0.0 <= t < self.T_effective):
            raise DomainError(f"t={t!r} outside [0, T_effective={self.T_effective!r})")

    def check_tau(self, tau: float) -> None:
        if not tau >= 0.0:
            raise DomainError(f"tau={tau!r} must be >= 0")

    def tau_at(self, t: float) -> float:
        """Warped time of an original time, alias of :meth:`warp`."""
        return self.warp(t)

    def default_tau_max(self) -> float:
        """Horizon used by the simulator: warp(T * (1 - 1e-6))."""
        return self.warp(self.T_prescribed * (1.0 - 1e-6))


@dataclass(frozen=True)
class TimeWarp(Warp):
    """The rational warp a(t) = a0 t / (1 - t / T_effective)."""

    T_prescribed: float
    T_effective: float
    a0: float

    def __post_init__(self):
        errors = validate_warp(self.T_prescribed, self.T_effective, self.a0)
        if errors:
            raise ValueError("; ".join(errors))

    def warp(self, t):
        self.check_t(t)
        return kernels.warp_tau(self.a0, self.T_effective, t)

    def unwarp(self, tau):
        if tau == np.inf:
            return self.T_effective
        self.check_tau(tau)
        return kernels.unwarp_t(self.a0, self.T_effective, tau)

    def alpha(self, tau):
        self.check_tau(tau)
        return kernels.alpha_of_tau(self.a0, self.T_effective, tau)

    def alpha_prime(self, tau):
        self.check_tau(tau)
        return kernels.dalpha_of_tau(self.a0, self.T_effective, tau)


def validate_warp(T_prescribed, T_effective, a0):
    errors = []
    if not T_prescribed > 0:
        errors.append(f"T_prescribed must be > 0 (got {T_prescribed!r})")
    if not T_effective >= T_prescribed:
        errors.append(f"T_effective must be >= T_prescribed (got {T_effective!r} < {T_prescribed!r})")
    if not a0 > 0:
        errors.append(f"a0 must be > 0 (got {a0!r})")
    return errors


@dataclass(frozen=True)
class ForcingConfig:
    """Constants of the temporal forcing functions gamma1 and gamma2.

    ``validate=False`` admits the degenerate constant cases (e.g.
    ``c_gamma1 = 0``) for analysis; controllers built from experiment
    configs are always validated.
    """

    c_gamma1: float
    c_tilde_gamma1: float
    c_gamma2: float
    c_tilde_gamma2: float
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if not self.validate:
            return
        errors = validate_forcing(self.c_gamma1, self.c_tilde_gamma1,
                                  self.c_gamma2, self.c_tilde_gamma2)
        if errors:
            raise ValueError("; ".join(errors))


def validate_forcing(c_gamma1, c_tilde_gamma1, c_gamma2, c_tilde_gamma2):
    errors = []
    if not c_gamma1 > 0:
        errors.append(f"c_gamma1 must be > 0 (got {c_gamma1!r})")
    if not c_gamma2 > 0:
        errors.append(f"c_gamma2 must be > 0 (got {c_gamma2!r})")
    if not c_tilde_gamma1 >= 0:
        errors.append(f"c_tilde_gamma1 must be >= 0 (got {c_tilde_gamma1!r})")
    if not c_tilde_gamma2 >= 0:
        errors.append(f"c_tilde_gamma2 must be >= 0 (got {c_tilde_gamma2!r})")
    return errors


def gamma1(w: Warp, f: ForcingConfig, t: float) -> float:
    """gamma1(t) = 1 / (c_gamma1 alpha(a(t)) + c~_gamma1)."""
    w.check_t(t)
    return kernels.gamma1_from_alpha(w.alpha(w.warp(t)), f.c_gamma1, f.c_tilde_gamma1)


def gamma2(w: Warp, f: ForcingConfig, t: float) -> float:
    """gamma2(t) = (c_gamma2 alpha(a(t)) + c~_gamma2) gamma1(t)."""
    w.check_t(t)
    return kernels.gamma2_from_alpha(w.alpha(w.warp(t)), f.c_gamma1, f.c_tilde_gamma1,
                                     f.c_gamma2, f.c_tilde_gamma2)
