"""Casimir-Polder force on a static harmonic atom in front of a perfect mirror.

Only the z-component is nonzero. With ``R = 2 z`` the long-time force is the
sum of a retarded piece, driven by the light signal bounced off the mirror,

    F1 = q**2 / (4 pi m Omega) * d^3/dR^3 [cos(Omega R) / R],

and a dispersive piece from the field Hadamard function. Their sum is the
smooth function

    F = q**2 / (2 pi**2 m Omega) * d^3/dR^3 [f(Omega R) / R],

which behaves as ``-3 q**2 / (32 pi m Omega z**4)`` close to the mirror and as
``-3 q**2 / (8 pi**2 m Omega**2 z**5)`` far from it. The dispersive piece is
written with the principal-value auxiliary pair (see :mod:`mirrorcp.specfun`),
which makes ``F1 + F2`` reproduce the smooth total.

Thermal effects enter through ``coth(beta_bar Omega/2)`` on the retarded piece
and through the thermal field Hadamard function in the dispersive piece. The
latter is evaluated by rotating the lag integral onto the imaginary axis,
which leaves a resonant term ``-coth(beta Omega/2) F1`` and a smooth integral.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, IntegrationError, PoleError
from .greens import hadamard_radial_derivatives
from .params import VACUUM, AtomParams
from .specfun import aux_fg, aux_fg_pv, thermal_coth_factor

__all__ = [
    "ForceBreakdown",
    "static_polarizability",
    "cp_force_retarded",
    "cp_force_dispersive",
    "dispersive_bracket",
    "cp_force_total",
    "cp_force_near_asymptote",
    "cp_force_far_asymptote",
    "cp_force_thermal_retarded",
    "cp_force_thermal_dispersive",
    "cp_force_thermal_total",
    "cp_force_high_temperature_asymptote",
    "cp_force_gradient",
    "cp_force_quadrature_oracle",
]


@dataclass(frozen=True)
class ForceBreakdown:
    """Pieces of the z-force at a single height.

    ``total`` is always the plain sum of the four parts.
    """

    z: float
    f_cp1: float
    f_cp2: float
    f_thermal_osc: float = 0.0
    f_thermal_field: float = 0.0

    @property
    def total(self):
        return self.f_cp1 + self.f_cp2 + self.f_thermal_osc + self.f_thermal_field

    def as_dict(self):
        return {
            "z": self.z,
            "f_cp1": self.f_cp1,
            "f_cp2": self.f_cp2,
            "f_thermal_osc": self.f_thermal_osc,
            "f_thermal_field": self.f_thermal_field,
            "total": self.total,
        }


def _check_z(z):
    z_a = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z_a)) or np.any(z_a <= 0.0):
        raise DomainError("mirror distance z must be finite and > 0")
    return z_a, z_a.ndim == 0


def _ret(val, scalar):
    return float(val) if scalar else val


def static_polarizability(p):
    """Static polarizability ``q**2 / (4 pi m Omega**2)``."""
    return p.q**2 / (4.0 * math.pi * p.m * p.Omega**2)


def cp_force_retarded(z, p):
    """Retarded (light-bounce) part of the force in the long-time limit.

    ``q**2/(128 pi m Omega) * [16 W**3 sin/z + 24 W**2 cos/z**2 - 24 W sin/z**3
    - 12 cos/z**4]`` with ``W = Omega`` and trigonometric argument ``2 Omega z``.
    """
    z, scalar = _check_z(z)
    W = p.Omega
    x = 2.0 * W * z
    s, c = np.sin(x), np.cos(x)
    br = 16 * W**3 * s / z + 24 * W**2 * c / z**2 - 24 * W * s / z**3 - 12 * c / z**4
    return _ret(p.q**2 / (128.0 * math.pi * p.m * W) * br, scalar)


def dispersive_bracket(w, convention="pv"):
    """Bracket ``8w + 6(1 - 2w**2) f(2w) - 4w(2w**2 - 3) g(2w)`` with ``w = Omega z``.

    Parameters
    ----------
    w : float or array_like
        ``Omega * z``, positive.
    convention : {"pv", "standard"}
        Which auxiliary pair to use. ``"standard"`` tends to ``24/(2w)`` and is
        the smooth total force in disguise; ``"pv"`` gives the dispersive piece
        that complements the retarded one.
    """
    w_a, scalar = _check_z(w)
    if convention == "pv":
        f, g = aux_fg_pv(2.0 * w_a)
    elif convention == "standard":
        f, g = aux_fg(2.0 * w_a)
    else:
        raise ValueError("convention must be 'pv' or 'standard'")
    br = 8.0 * w_a + 6.0 * (1.0 - 2.0 * w_a**2) * f - 4.0 * w_a * (2.0 * w_a**2 - 3.0) * g
    return _ret(br, scalar)


def cp_force_dispersive(z, p, convention="pv"):
    """Dispersive part ``-q**2 / (32 pi**2 m Omega z**4) * bracket(Omega z)``."""
    z, scalar = _check_z(z)
    br = dispersive_bracket(p.Omega * z, convention)
    return _ret(-p.q**2 / (32.0 * math.pi**2 * p.m * p.Omega * z**4) * br, scalar)


def cp_force_total(z, p):
    """Vacuum long-time force split into retarded and dispersive parts.

    Returns
    -------
    ForceBreakdown or list of ForceBreakdown
    """
    z_a, scalar = _check_z(z)
    f1 = np.atleast_1d(cp_force_retarded(z_a, p))
    f2 = np.atleast_1d(cp_force_dispersive(z_a, p))
    rows = [ForceBreakdown(float(zz), float(a), float(b)) for zz, a, b in zip(np.atleast_1d(z_a), f1, f2)]
    return rows[0] if scalar else rows


def cp_force_near_asymptote(z, p):
    """Short-distance law ``-3 q**2 / (32 pi m Omega z**4)``."""
    z, scalar = _check_z(z)
    return _ret(-3.0 * p.q**2 / (32.0 * math.pi * p.m * p.Omega * z**4), scalar)


def cp_force_far_asymptote(z, p):
    """Long-distance law ``-3 q**2 / (8 pi**2 m Omega**2 z**5)``."""
    z, scalar = _check_z(z)
    return _ret(-3.0 * p.q**2 / (8.0 * math.pi**2 * p.m * p.Omega**2 * z**5), scalar)


def cp_force_high_temperature_asymptote(z, p, beta):
    """Classical far-field law ``-(3/4) alpha / (beta z**4)``."""
    z, scalar = _check_z(z)
    return _ret(-0.75 * static_polarizability(p) / (beta * z**4), scalar)


def cp_force_thermal_retarded(z, p, beta_bar):
    """Retarded part weighted by the oscillator occupation ``coth(beta_bar Omega/2)``."""
    return thermal_coth_factor(beta_bar, p.Omega) * cp_force_retarded(z, p)


# --- smooth (non-resonant) part --------------------------------------------

def _smooth_vacuum(z, p, order):
    """``q**2/(2 pi**2 m Omega) d^n/dR^n [f(Omega R)/R]`` times ``2**(order-3)``.

    ``order = 3`` gives the vacuum force, ``order = 4`` its z-gradient.
    """
    W = p.Omega
    R = 2.0 * z
    x = W * R
    f, g = aux_fg(x)
    # derivatives of f with respect to x
    fd = [f, -g, -f + 1.0 / x, g - 1.0 / x**2, f - 1.0 / x + 2.0 / x**3]
    acc = 0.0
    fact = 1.0
    inv = []
    for j in range(order + 1):
        if j:
            fact *= -j
        inv.append(fact / R ** (j + 1))
    for k in range(order + 1):
        acc = acc + math.comb(order, k) * W**k * fd[k] * inv[order - k]
    return p.q**2 / (2.0 * math.pi**2 * p.m * W) * 2.0 ** (order - 3) * acc


def _rotated_integral(z, p, beta, order, subtract_vacuum=False):
    """``q**2/(m Omega) int_0^inf e^{-Omega u} Re d^n/dR^n G(iu, R) du`` (times 2 for n=4).

    With ``subtract_vacuum`` the vacuum Hadamard function is removed from the
    integrand, which keeps the thermal correction accurate when it is small.
    """
    R = 2.0 * z
    W = p.Omega
    scale = 2.0 if order == 4 else 1.0
    pref = p.q**2 / (p.m * W) * scale
    # absolute floor: a thermal correction far below the vacuum force needs
    # no more than a fixed fraction of the vacuum scale
    floor = 1e-13 * abs(float(_smooth_vacuum(z, p, order))) / pref

    def integrand(u):
        val = hadamard_radial_derivatives(1j * u, R, beta, order)[order].real
        if subtract_vacuum:
            val = val - hadamard_radial_derivatives(1j * u, R, math.inf, order)[order].real
        return math.exp(-W * u) * float(val)

    edges = [0.0, R, 4.0 * R]
    u_end = 45.0 / W
    edges = sorted({e for e in edges if e < u_end} | {u_end})
    total = 0.0
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(integrand, a, b, epsabs=floor, epsrel=1e-12, limit=2000)
        total += val
        err += e
    val, e = integrate.quad(integrand, u_end, np.inf, epsabs=floor, epsrel=1e-10, limit=200)
    total += val
    err += e
    if not math.isfinite(total) or err > 1e-8 * abs(total) + 10.0 * floor:
        raise IntegrationError(f"rotated lag integral: estimate {total!r}, error {err!r}")
    return pref * total


def _thermal_field_correction(z, p, beta, order=3):
    """Difference between the thermal and vacuum dispersive parts (or gradients)."""
    if math.isinf(beta):
        return 0.0
    cb = thermal_coth_factor(beta, p.Omega)
    if order == 3:
        resonant = -(cb - 1.0) * cp_force_retarded(z, p)
    else:
        resonant = -(cb - 1.0) * _retarded_gradient(z, p)
    smooth = _rotated_integral(z, p, beta, order, subtract_vacuum=True)
    return resonant + smooth


def cp_force_thermal_dispersive(z, p, beta, cfg=VACUUM):
    """Dispersive part with the field at inverse temperature ``beta``.

    Returns ``-coth(beta Omega/2) F1 + S(beta)``, where ``S`` is the lag
    integral rotated to imaginary lag. At ``beta = inf`` this equals
    :func:`cp_force_dispersive`.

    Parameters
    ----------
    cfg : ThermalConfig
        Accepted for interface symmetry; the resummed thermal function needs
        no truncation.
    """
    z_a, scalar = _check_z(z)
    if not scalar:
        return np.array([cp_force_thermal_dispersive(float(v), p, beta, cfg) for v in z_a])
    z = float(z_a)
    beta = float(beta)
    if math.isnan(beta) or beta <= 0.0:
        raise DomainError("beta must be > 0 or inf")
    return cp_force_dispersive(z, p) + _thermal_field_correction(z, p, beta)


def cp_force_thermal_total(z, p, thermal=VACUUM):
    """Full force at the temperatures in ``thermal``.

    Returns
    -------
    ForceBreakdown
        ``f_cp1``/``f_cp2`` are the vacuum pieces; the thermal fields hold the
        corrections from the oscillator and field temperatures.
    """
    z_a, scalar = _check_z(z)
    if not scalar:
        return [cp_force_thermal_total(float(v), p, thermal) for v in z_a]
    z = float(z_a)
    f1 = cp_force_retarded(z, p)
    f2 = cp_force_dispersive(z, p)
    osc = (thermal_coth_factor(thermal.beta_bar, p.Omega) - 1.0) * f1
    field = _thermal_field_correction(z, p, thermal.beta)
    return ForceBreakdown(z, f1, f2, osc, field)


def _retarded_gradient(z, p):
    """``d F1/dz = q**2/(2 pi m Omega) d^4/dR^4 [cos(Omega R)/R]``."""
    W = p.Omega
    R = 2.0 * z
    c, s = math.cos(W * R), math.sin(W * R)
    cd = [c, -W * s, -W**2 * c, W**3 * s, W**4 * c]
    acc = 0.0
    fact = 1.0
    for k in range(5):
        j = 4 - k
        fact = math.factorial(j) * (-1) ** j
        acc += math.comb(4, k) * cd[k] * fact / R ** (j + 1)
    return p.q**2 / (2.0 * math.pi * p.m * W) * acc


def cp_force_gradient(z, p, thermal=VACUUM):
    """``dF/dz`` of the full force, used to renormalize the trap along z.

    Vacuum part from the closed form; thermal corrections by differentiating
    the resonant and rotated-integral pieces under the integral sign.
    """
    z_a, scalar = _check_z(z)
    if not scalar:
        return np.array([cp_force_gradient(float(v), p, thermal) for v in z_a])
    z = float(z_a)
    grad = float(_smooth_vacuum(z, p, 4))
    cbb = thermal_coth_factor(thermal.beta_bar, p.Omega)
    if cbb != 1.0:
        grad += (cbb - 1.0) * _retarded_gradient(z, p)
    grad += _thermal_field_correction(z, p, thermal.beta, order=4)
    return grad


# --- independent real-axis quadrature --------------------------------------

def _leibniz_cos_over_R(R, W, n):
    c, s = math.cos(W * R), math.sin(W * R)
    cd = [c, -W * s, -W**2 * c, W**3 * s, W**4 * c]
    acc = 0.0
    for k in range(n + 1):
        j = n - k
        acc += math.comb(n, k) * cd[k] * math.factorial(j) * (-1) ** j / R ** (j + 1)
    return acc


def _real_lag_integrand(R, beta):
    def h(s):
        return float(np.real(hadamard_radial_derivatives(s, R, beta, 3)[3]))

    return h


_GL_HI = np.polynomial.legendre.leggauss(160)
_GL_LO = np.polynomial.legendre.leggauss(120)


def _hadamard_lag_integral(R, W, beta, tau):
    """Finite-part integral ``int_0^tau sin(W s) d^3/dR^3 G(s, R) ds``.

    The pole at ``s = R`` is passed above along the two sides of a triangle
    through ``R + i rho``; the real part equals the average of the passages
    above and below, which is the finite-part prescription.
    """
    h = _real_lag_integrand(R, beta)
    rho = min(0.5 * R, 1.0 / W)
    if math.isfinite(beta):
        rho = min(rho, 0.5 * beta)
    opts = dict(epsabs=0.0, epsrel=1e-12, limit=2000)
    if tau <= R:
        if tau == R:
            raise PoleError("tau coincides with the light-bounce time 2z")
        if R - tau < rho:
            rho = 0.5 * (R - tau)
        val, err = integrate.quad(h, 0.0, tau, weight="sin", wvar=W, **opts)
        return val, err
    if tau - R < rho:
        rho = 0.5 * (tau - R)
    left = R - rho
    right = R + rho
    total, err = integrate.quad(h, 0.0, left, weight="sin", wvar=W, **opts)

    def seg(a, b):
        # the path stays at least rho/sqrt(2) from the pole, so Gauss-Legendre
        # converges geometrically; compare two orders for the error estimate
        d = b - a
        vals = []
        for nodes, weights in (_GL_HI, _GL_LO):
            sc = a + 0.5 * (nodes + 1.0) * d
            v = hadamard_radial_derivatives(sc, R, beta, 3)[3]
            vals.append(float(np.real(0.5 * d * np.sum(weights * np.sin(W * sc) * v))))
        return vals[0], abs(vals[0] - vals[1])

    top = R + 1j * rho
    for a, b in ((left + 0j, top), (top, right + 0j)):
        v, e = seg(a, b)
        total += v
        err += e
    if math.isinf(tau):
        if math.isinf(beta):
            # the integrand decays as 12 R / (pi**2 s**6); integrate far enough
            # that the remainder, bounded by 12 R / (5 pi**2 L**5), is negligible
            end = right + 50.0 * max(R, 1.0 / W)
            while 12.0 * R / (5.0 * math.pi**2 * end**5) > 1e-17 * max(abs(total), 1e-300):
                end *= 2.0
            v, e = integrate.quad(h, right, end, weight="sin", wvar=W, epsabs=0.0, epsrel=1e-12,
                                  limit=20000)
        else:
            # exponential decay on the scale beta / (2 pi) past the pole
            end = right + 60.0 * beta / (2.0 * math.pi) + 10.0 * R
            v, e = integrate.quad(h, right, end, weight="sin", wvar=W, **opts)
    else:
        v, e = integrate.quad(h, right, tau, weight="sin", wvar=W, **opts)
    total += v
    err += e
    return total, err


def cp_force_quadrature_oracle(z, tau, p, thermal=VACUUM):
    """Force from direct numerical integration over the real lag axis.

    The retarded image term is supported on the light bounce ``s = 2z`` and
    reduces to derivatives of ``cos(Omega R)/R`` at that point; it is absent
    for ``tau < 2z``. The Hadamard term is the finite-part lag integral with
    the pole passed by a complex detour, the oscillatory tail being handled by
    QUADPACK's Fourier-weight routine.

    Parameters
    ----------
    z : float
    tau : float
        Elapsed time since the coupling was switched on; ``inf`` for the
        long-time limit.
    p : AtomParams
    thermal : ThermalConfig

    Returns
    -------
    ForceBreakdown
        ``f_cp1`` holds the retarded part with its oscillator occupation
        factor, ``f_cp2`` the Hadamard lag integral at field temperature.
    """
    z_a, _ = _check_z(z)
    z = float(z_a)
    tau = float(tau)
    if math.isnan(tau) or tau < 0.0:
        raise DomainError("tau must be >= 0")
    R = 2.0 * z
    W = p.Omega
    pref = p.q**2 / (p.m * W)
    if tau > R:
        f1 = thermal_coth_factor(thermal.beta_bar, W) * pref / (4.0 * math.pi) * _leibniz_cos_over_R(R, W, 3)
    else:
        f1 = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = _hadamard_lag_integral(R, W, thermal.beta, tau)
        except integrate.IntegrationWarning as exc:
            raise IntegrationError(f"oracle quadrature did not converge at z={z}: {exc}") from exc
    return ForceBreakdown(z, f1, pref * val)
