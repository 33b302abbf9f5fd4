"""Geometry, field Hadamard functions with mirror images, oscillator kernels.

Conventions
-----------
Metric signature (-,+,+,+). The worldfunction is half the squared interval,
``sigma = (-dt**2 + dx**2 + dy**2 + dz**2) / 2``, and the image worldfunction
adds ``2 z z'``. The mirror is the plane ``z = 0``.

The massless Hadamard function in the vacuum is
``G(dt, r) = 1 / (2 pi**2 (r**2 - dt**2))``. Written as a function of the
separation ``R`` at fixed lag ``s`` it splits into two simple poles,

    G(s, R) = [1/(R - s) + 1/(R + s)] / (4 pi**2 R),

and the thermal version replaces each pole by ``(pi/beta) coth(pi x/beta)``.
All radial derivatives used by the force and noise modules are taken from this
representation through :func:`hadamard_radial_derivatives`.
"""
import math
from collections import namedtuple

import numpy as np
from scipy.special import zeta

from . import _kernels
from .errors import DomainError, PoleError, TruncationError
from .params import VACUUM, ThermalConfig
from .specfun import coth_derivatives, thermal_coth_factor

__all__ = [
    "SpacetimePoint",
    "worldfunction",
    "image_worldfunction",
    "hadamard_vacuum",
    "hadamard_thermal",
    "hadamard_thermal_resummed",
    "hadamard_radial_derivatives",
    "oscillator_g_ret",
    "oscillator_g_h",
    "efield_image_correlator",
]

INV_2PI2 = 1.0 / (2.0 * math.pi**2)
INV_4PI2 = 1.0 / (4.0 * math.pi**2)

SpacetimePoint = namedtuple("SpacetimePoint", ["t", "x", "y", "z"])


def _ret(val, scalar):
    return float(val) if scalar else val


def worldfunction(a, b):
    """Half the squared geodesic interval between two events."""
    dt = a[0] - b[0]
    dx = a[1] - b[1]
    dy = a[2] - b[2]
    dz = a[3] - b[3]
    return 0.5 * (-dt * dt + dx * dx + dy * dy + dz * dz)


def image_worldfunction(a, b):
    """Worldfunction between ``a`` and the mirror image of ``b``: ``sigma + 2 z_a z_b``."""
    return worldfunction(a, b) + 2.0 * a[3] * b[3]


def _on_cone(dt, r):
    return np.abs(r) == np.abs(dt)


def hadamard_vacuum(dt, r):
    """Vacuum Hadamard function ``1 / (2 pi**2 (r**2 - dt**2))``.

    Raises
    ------
    PoleError
        If ``|dt| == r`` for any element.
    """
    dt_a = np.asarray(dt, dtype=float)
    r_a = np.asarray(r, dtype=float)
    scalar = dt_a.ndim == 0 and r_a.ndim == 0
    if np.any(_on_cone(dt_a, r_a)):
        raise PoleError("hadamard_vacuum evaluated on the light cone")
    return _ret(INV_2PI2 / (r_a * r_a - dt_a * dt_a), scalar)


def hadamard_thermal_resummed(dt, r, beta):
    """Thermal Hadamard function from the coth resummation of the image sum.

    ``G = [coth(pi (r - dt)/beta) + coth(pi (r + dt)/beta)] / (4 pi beta r)``.
    """
    dt_a = np.asarray(dt, dtype=float)
    r_a = np.asarray(r, dtype=float)
    scalar = dt_a.ndim == 0 and r_a.ndim == 0
    if math.isinf(beta):
        return hadamard_vacuum(dt, r)
    if np.any(_on_cone(dt_a, r_a)):
        raise PoleError("hadamard_thermal_resummed evaluated on the light cone")
    a = math.pi / beta
    y1 = coth_derivatives(a * (r_a - dt_a), 0)[0]
    y2 = coth_derivatives(a * (r_a + dt_a), 0)[0]
    return _ret((y1 + y2) / (4.0 * math.pi * beta * r_a), scalar)


def hadamard_thermal(dt, r, beta, cfg=VACUUM):
    """Thermal Hadamard function as an explicit imaginary-time image sum.

    Sums ``G_vac(dt + i k beta, r)`` over ``|k| <= cfg.k_max`` and adds the
    large-``k`` tail from its asymptotic series in ``1/k**2`` using Hurwitz
    zeta values.

    Parameters
    ----------
    dt, r : float or array_like
        Time lag and spatial distance (broadcast together).
    beta : float
        Inverse temperature, ``> 0`` or ``inf``. ``inf`` returns the vacuum
        value.
    cfg : ThermalConfig
        Supplies ``k_max`` and ``sum_tol``.

    Raises
    ------
    TruncationError
        If the estimate of the part of the tail not captured by the series
        exceeds ``cfg.sum_tol``, or the series is outside its validity range.
    """
    if isinstance(beta, ThermalConfig):
        raise TypeError("pass beta as a number and the ThermalConfig as cfg")
    beta = float(beta)
    if math.isnan(beta) or beta <= 0.0:
        raise DomainError(f"beta must be > 0 or inf, got {beta!r}")
    if math.isinf(beta):
        return hadamard_vacuum(dt, r)
    dt_a, r_a = np.broadcast_arrays(np.asarray(dt, dtype=float), np.asarray(r, dtype=float))
    scalar = dt_a.ndim == 0
    if np.any(_on_cone(dt_a, r_a)):
        raise PoleError("hadamard_thermal evaluated on the light cone")
    flat_dt = np.ascontiguousarray(dt_a.ravel())
    flat_r = np.ascontiguousarray(r_a.ravel())
    K = cfg.k_max
    head = _kernels.image_sum_hadamard(flat_dt, flat_r, beta, K)

    a = (flat_r**2 - flat_dt**2) / beta**2
    b2 = (2.0 * flat_dt / beta) ** 2
    size = np.abs(a) + b2
    if np.any(size > 0.25 * K * K):
        raise TruncationError(
            f"image sum needs k_max >> (r, |dt|)/beta; max ratio {math.sqrt(size.max()):.3g}"
            f" with k_max={K}. Increase k_max or use hadamard_thermal_resummed."
        )
    c1 = -(a + b2)
    c2 = a * a + 3.0 * a * b2 + b2 * b2
    c3 = -(a**3 + 6.0 * a * a * b2 + 5.0 * a * b2 * b2 + b2**3)
    q = K + 1
    pref = 1.0 / (math.pi**2 * beta**2)
    tail = pref * (zeta(2, q) + c1 * zeta(4, q) + c2 * zeta(6, q) + c3 * zeta(8, q))
    resid = pref * 3.0 * size**4 * zeta(10, q)
    worst = float(resid.max())
    if worst > cfg.sum_tol:
        raise TruncationError(
            f"image-sum tail estimate {worst:.3e} exceeds sum_tol={cfg.sum_tol:.1e} at k_max={K}"
        )
    out = (head + tail).reshape(dt_a.shape)
    return _ret(out, scalar)


def hadamard_radial_derivatives(s, R, beta=math.inf, nmax=4):
    """Radial derivatives ``d^n/dR^n G(s, R)`` for ``n = 0..nmax`` at fixed lag.

    ``s`` may be complex, which is how the regularized and rotated lags used
    by the force and noise modules are passed in. The result is complex in
    that case; for a pair ``s``, ``conj(s)`` the imaginary parts cancel.

    Returns
    -------
    list of ndarray
    """
    if nmax > 5:
        raise ValueError("nmax must be <= 5")
    s = np.asarray(s)
    R = np.asarray(R, dtype=float)
    m = R - s
    p = R + s
    if math.isinf(beta):
        psi = []
        fact = 1.0
        for k in range(nmax + 1):
            if k:
                fact *= -k
            psi.append(fact * (m ** (-k - 1) + p ** (-k - 1)))
    else:
        a = math.pi / beta
        dm = coth_derivatives(a * m, nmax)
        dp = coth_derivatives(a * p, nmax)
        psi = [a ** (k + 1) * (dm[k] + dp[k]) for k in range(nmax + 1)]
    # d^j/dR^j (1/R) = (-1)^j j! / R^{j+1}
    inv = [None] * (nmax + 1)
    fact = 1.0
    for j in range(nmax + 1):
        if j:
            fact *= -j
        inv[j] = fact / R ** (j + 1)
    out = []
    for n in range(nmax + 1):
        acc = 0.0
        for k in range(n + 1):
            acc = acc + math.comb(n, k) * psi[k] * inv[n - k]
        out.append(INV_4PI2 * acc)
    return out


def oscillator_g_ret(s, p):
    """Retarded oscillator kernel ``theta(s) sin(Omega s) / (m Omega)``."""
    s_a = np.asarray(s, dtype=float)
    val = np.where(s_a > 0.0, np.sin(p.Omega * s_a) / (p.m * p.Omega), 0.0)
    return _ret(val, s_a.ndim == 0)


def oscillator_g_h(s, p, beta_bar=math.inf):
    """Hadamard oscillator kernel ``coth(beta_bar Omega/2) cos(Omega s) / (m Omega)``."""
    s_a = np.asarray(s, dtype=float)
    val = thermal_coth_factor(beta_bar, p.Omega) * np.cos(p.Omega * s_a) / (p.m * p.Omega)
    return _ret(val, s_a.ndim == 0)


def efield_image_correlator(z, s, beta=math.inf, cfg=VACUUM):
    """Mirror-image part of the symmetric electric-field two-point tensor.

    Both points sit on the static trajectory at height ``z``, separated in time
    by ``s``. With ``R = 2 z`` and primes for ``d/dR``,

        K_xx = K_yy = G'' + G'/R,    K_zz = -2 G'/R,

    and all mixed components vanish.

    Parameters
    ----------
    z : float or array_like
        Height above the mirror, ``> 0``.
    s : float or array_like
        Time lag; ``|s| == 2 z`` is the light-bounce pole.
    beta : float
        Field inverse temperature. Finite values use the resummed thermal
        function, so ``cfg`` is only consulted for validation.

    Returns
    -------
    ndarray
        Shape ``broadcast(z, s).shape + (3, 3)``.
    """
    z_a, s_a = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(s, dtype=float))
    if np.any(z_a <= 0.0):
        raise DomainError("efield_image_correlator needs z > 0")
    R = 2.0 * z_a
    if np.any(np.abs(s_a) == R):
        raise PoleError("efield_image_correlator evaluated at the light-bounce lag s = 2z")
    d = hadamard_radial_derivatives(s_a, R, beta, nmax=2)
    g1, g2 = d[1], d[2]
    kxx = g2 + g1 / R
    kzz = -2.0 * g1 / R
    out = np.zeros(z_a.shape + (3, 3))
    out[..., 0, 0] = kxx
    out[..., 1, 1] = kxx
    out[..., 2, 2] = kzz
    return out
