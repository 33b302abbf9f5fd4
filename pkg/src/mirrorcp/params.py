"""Immutable parameter records shared by the physics modules.

All quantities are in natural units (hbar = c = 1). Infinite inverse
temperatures are written as ``math.inf``.
"""
import math
from dataclasses import dataclass, field

from .errors import DomainError

__all__ = ["AtomParams", "ThermalConfig", "TrapConfig", "TimeGrid", "VACUUM"]


def _positive(name, value, allow_inf=False):
    value = float(value)
    if math.isnan(value) or value <= 0.0 or (math.isinf(value) and not allow_inf):
        kind = "> 0 or inf" if allow_inf else "finite and > 0"
        raise DomainError(f"{name} must be {kind}, got {value!r}")
    return value


@dataclass(frozen=True)
class AtomParams:
    """Atom modelled as a charged harmonic oscillator with a center-of-mass mass.

    Attributes
    ----------
    q : float
        Coupling charge.
    m : float
        Reduced mass of the internal oscillator.
    Omega : float
        Internal oscillator frequency.
    M : float
        Center-of-mass mass.
    """

    q: float = 1.0
    m: float = 1.0
    Omega: float = 1.0
    M: float = 1.0

    def __post_init__(self):
        for name in ("q", "m", "Omega", "M"):
            object.__setattr__(self, name, _positive(name, getattr(self, name)))

    @property
    def polarizability(self):
        return self.q**2 / (4.0 * math.pi * self.m * self.Omega**2)


@dataclass(frozen=True)
class ThermalConfig:
    """Field and oscillator temperatures plus image-sum controls.

    Attributes
    ----------
    beta : float
        Field inverse temperature (``inf`` for the vacuum).
    beta_bar : float
        Internal-oscillator inverse temperature (``inf`` for the ground state).
    k_max : int
        Number of imaginary-time images kept on each side in explicit sums.
    sum_tol : float
        Largest acceptable estimate of the neglected image-sum tail.
    """

    beta: float = math.inf
    beta_bar: float = math.inf
    k_max: int = 64
    sum_tol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "beta", _positive("beta", self.beta, allow_inf=True))
        object.__setattr__(self, "beta_bar", _positive("beta_bar", self.beta_bar, allow_inf=True))
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise DomainError(f"k_max must be an integer >= 1, got {self.k_max!r}")
        object.__setattr__(self, "k_max", int(self.k_max))
        object.__setattr__(self, "sum_tol", _positive("sum_tol", self.sum_tol))

    @property
    def is_vacuum(self):
        return math.isinf(self.beta) and math.isinf(self.beta_bar)


VACUUM = ThermalConfig()


@dataclass(frozen=True)
class TrapConfig:
    """Harmonic trap holding the atom at mean height ``z_bar``.

    ``gamma`` is an optional weak damping used only to help the ensemble reach
    a stationary state; keep it much smaller than the trap frequencies.
    """

    omega_trap: tuple = (2.0, 2.0, 2.0)
    z_bar: float = 5.0
    include_cp_shift: bool = True
    gamma: float = 0.0

    def __post_init__(self):
        om = tuple(float(w) for w in self.omega_trap)
        if len(om) != 3:
            raise DomainError("omega_trap needs three frequencies")
        om = tuple(_positive("omega_trap", w) for w in om)
        object.__setattr__(self, "omega_trap", om)
        object.__setattr__(self, "z_bar", _positive("z_bar", self.z_bar))
        object.__setattr__(self, "include_cp_shift", bool(self.include_cp_shift))
        gamma = float(self.gamma)
        if not math.isfinite(gamma) or gamma < 0.0:
            raise DomainError(f"gamma must be finite and >= 0, got {gamma!r}")
        object.__setattr__(self, "gamma", gamma)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t0 + k*dt`` for ``k = 0..n-1``.

    ``eps`` is the width used to regularize the light-bounce pole of the noise
    kernel; ``None`` means ``dt / 2``.
    """

    t0: float = 0.0
    dt: float = 0.04
    n: int = 1000
    eps: float = field(default=None)

    def __post_init__(self):
        t0 = float(self.t0)
        if not math.isfinite(t0):
            raise DomainError("t0 must be finite")
        object.__setattr__(self, "t0", t0)
        object.__setattr__(self, "dt", _positive("dt", self.dt))
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if self.eps is not None:
            object.__setattr__(self, "eps", _positive("eps", self.eps))

    @property
    def width(self):
        return 0.5 * self.dt if self.eps is None else self.eps

    @property
    def span(self):
        return self.dt * (self.n - 1)

    def times(self):
        import numpy as np

        return self.t0 + self.dt * np.arange(self.n)

    def resolves(self, Omega, z):
        """True when ``dt <= min(2 pi / Omega, 2 z) / 20``."""
        return self.dt <= min(2.0 * math.pi / Omega, 2.0 * z) / 20.0
