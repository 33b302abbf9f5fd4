"""Sine and cosine integrals, their auxiliary functions, and coth helpers.

The auxiliary functions follow the usual convention

    f(x) = Ci(x) sin x + (pi/2 - Si(x)) cos x
    g(x) = -Ci(x) cos x + (pi/2 - Si(x)) sin x

so that ``f' = -g`` and ``g' = f - 1/x``. A principal-value variant with the
``pi/2`` stripped out,

    fhat(x) = f(x) - (pi/2) cos x = Ci(x) sin x - Si(x) cos x
    ghat(x) = g(x) - (pi/2) sin x = -Ci(x) cos x - Si(x) sin x,

obeys the same differential relations and is what the dispersive force uses.

Evaluation uses a power series for ``x <= 4`` and a continued fraction for
``e^{ix} E1(ix) = g(x) - i f(x)`` above it. Both branches are accurate to a few
ulp of the result; see ``tests/test_specfun.py`` for the mpmath comparison.
"""
import math

import numpy as np

from . import _kernels
from .errors import DomainError

__all__ = [
    "sine_integral",
    "cosine_integral",
    "aux_f",
    "aux_g",
    "aux_fg",
    "aux_fg_pv",
    "thermal_coth_factor",
    "coth",
    "coth_derivatives",
]


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _require_positive(arr, name):
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: argument must be finite")
    if np.any(arr <= 0.0):
        raise DomainError(f"{name}: argument must be > 0, got min {arr.min()!r}")


def _table(arr):
    flat = np.ascontiguousarray(arr.ravel())
    return _kernels.sici_aux(flat).reshape((4,) + arr.shape)


def _out(val, scalar):
    return float(val) if scalar else val


def sine_integral(x):
    """Sine integral ``Si(x) = int_0^x sin(t)/t dt``.

    Parameters
    ----------
    x : float or array_like
        Finite real argument. Negative values use ``Si(-x) = -Si(x)``.

    Returns
    -------
    float or ndarray
    """
    arr, scalar = _as_array(x)
    if not np.all(np.isfinite(arr)):
        raise DomainError("sine_integral: argument must be finite")
    mag = np.abs(arr)
    out = np.zeros_like(mag)
    nz = mag > 0
    if np.any(nz):
        out[nz] = _table(mag[nz])[0]
    return _out(np.sign(arr) * out, scalar)


def cosine_integral(x):
    """Cosine integral ``Ci(x) = gamma + ln x + int_0^x (cos t - 1)/t dt``.

    Raises
    ------
    DomainError
        If any ``x <= 0``.
    """
    arr, scalar = _as_array(x)
    _require_positive(arr, "cosine_integral")
    return _out(_table(arr)[1], scalar)


def aux_f(x):
    """Auxiliary function ``f(x)``; positive and below ``1/x`` for ``x > 0``."""
    arr, scalar = _as_array(x)
    _require_positive(arr, "aux_f")
    return _out(_table(arr)[2], scalar)


def aux_g(x):
    """Auxiliary function ``g(x)``; log-divergent at 0, ~``1/x**2`` at large x."""
    arr, scalar = _as_array(x)
    _require_positive(arr, "aux_g")
    return _out(_table(arr)[3], scalar)


def aux_fg(x):
    """Return ``(f(x), g(x))`` from a single evaluation."""
    arr, scalar = _as_array(x)
    _require_positive(arr, "aux_fg")
    tab = _table(arr)
    return _out(tab[2], scalar), _out(tab[3], scalar)


def aux_fg_pv(x):
    """Return ``(fhat(x), ghat(x))``, the auxiliary pair without the pi/2 terms.

    ``fhat = Ci sin - Si cos`` and ``ghat = -Ci cos - Si sin``. They satisfy
    ``fhat' = -ghat`` and ``ghat' = fhat - 1/x`` but oscillate at large x.
    """
    arr, scalar = _as_array(x)
    _require_positive(arr, "aux_fg_pv")
    tab = _table(arr)
    fh = tab[2] - 0.5 * math.pi * np.cos(arr)
    gh = tab[3] - 0.5 * math.pi * np.sin(arr)
    return _out(fh, scalar), _out(gh, scalar)


def thermal_coth_factor(beta_bar, Omega):
    """Occupation factor ``coth(beta_bar * Omega / 2)``.

    Parameters
    ----------
    beta_bar : float
        Inverse temperature, ``> 0`` or ``math.inf``.
    Omega : float
        Frequency, ``> 0``.

    Returns
    -------
    float
        Exactly ``1.0`` when ``beta_bar`` is infinite, otherwise ``>= 1``.
    """
    beta_bar = float(beta_bar)
    Omega = float(Omega)
    if math.isnan(beta_bar) or beta_bar <= 0.0:
        raise DomainError(f"inverse temperature must be > 0, got {beta_bar!r}")
    if not math.isfinite(Omega) or Omega <= 0.0:
        raise DomainError(f"frequency must be finite and > 0, got {Omega!r}")
    if math.isinf(beta_bar):
        return 1.0
    x = 0.5 * beta_bar * Omega
    if x > 350.0:
        # 2 e^{-2x} is far below one ulp of 1
        return 1.0
    # coth x = 1 + 2/(e^{2x} - 1), accurate for both small and large x
    return 1.0 + 2.0 / math.expm1(2.0 * x)


def _coth_and_csch2(w):
    """Return ``(coth w, 1 - coth(w)**2)`` for real or complex ``w`` with no
    overflow. Uses ``e^{-2w}`` on the half plane ``Re w >= 0`` and oddness
    elsewhere."""
    w = np.asarray(w)
    sign = np.where(np.real(w) < 0, -1.0, 1.0)
    wp = w * sign
    e = np.exp(-2.0 * wp)
    den = -np.expm1(-2.0 * wp)  # 1 - e
    y = (1.0 + e) / den
    q = -4.0 * e / (den * den)
    return y * sign, q


def coth(w):
    """Hyperbolic cotangent, stable for large ``|Re w|``; complex allowed."""
    return _coth_and_csch2(w)[0]


def coth_derivatives(w, nmax):
    """Derivatives ``d^n/dw^n coth(w)`` for ``n = 0..nmax`` (``nmax <= 5``).

    Written as polynomials in ``y = coth w`` and ``q = 1 - y**2`` so that the
    exponentially small derivatives at large ``Re w`` never come from a
    difference of O(1) numbers.

    Returns
    -------
    list of ndarray
        ``[coth w, coth' w, ..., coth^(nmax) w]``.
    """
    if not 0 <= nmax <= 5:
        raise ValueError("nmax must be in 0..5")
    y, q = _coth_and_csch2(w)
    y2 = y * y
    polys = [
        y,
        q,
        -2.0 * y * q,
        -2.0 * q * q + 4.0 * y2 * q,
        16.0 * y * q * q - 8.0 * y2 * y * q,
        16.0 * q * q * q - 88.0 * y2 * q * q + 16.0 * y2 * y2 * q,
    ]
    return polys[: nmax + 1]
