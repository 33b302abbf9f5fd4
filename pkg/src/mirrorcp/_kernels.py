"""Hot numeric loops, each with a numba and a pure-numpy implementation.

The public names at the bottom (``sici_aux``, ``image_sum_hadamard``,
``propagate_ensemble``, ``propagate_single``) point at the numba versions when
:data:`mirrorcp._accel.NUMBA_AVAILABLE` is true and at the numpy versions
otherwise. Both flavours are importable under their explicit names so the
benchmark and the tests can compare them.
"""
import math

import numpy as np

from ._accel import NUMBA_AVAILABLE, njit, prange

EULER_GAMMA = 0.57721566490153286061
HALF_PI = 0.5 * math.pi
# series below, continued fraction above; both agree to ~1e-15 here
SERIES_CUTOFF = 4.0
_CF_EPS = 1e-16
_CF_MAXITER = 500
_FPMIN = 1e-300


# ----------------------------------------------------------------------------
# sine / cosine integrals and auxiliary functions
# ----------------------------------------------------------------------------

def _sici_aux_scalar(x):
    """Return (Si, Ci, f, g) for a single x > 0."""
    if x <= SERIES_CUTOFF:
        x2 = x * x
        # Si
        term = x
        si = x
        k = 0
        while True:
            k += 1
            term *= -x2 / ((2 * k) * (2 * k + 1))
            add = term / (2 * k + 1)
            si += add
            # <= so that an underflowed term ends the loop for subnormal x
            if abs(add) <= 1e-17 * abs(si) or k > 60:
                break
        # Ci
        term = 1.0
        acc = 0.0
        k = 0
        while True:
            k += 1
            term *= -x2 / ((2 * k - 1) * (2 * k))
            add = term / (2 * k)
            acc += add
            if abs(add) <= 1e-17 * abs(acc) or k > 60:
                break
        ci = EULER_GAMMA + math.log(x) + acc
        s = math.sin(x)
        c = math.cos(x)
        rest = HALF_PI - si
        f = ci * s + rest * c
        g = -ci * c + rest * s
        return si, ci, f, g
    # modified Lentz for e^{ix} E1(ix) = g - i f
    b = complex(1.0, x)
    cc = complex(1.0 / _FPMIN, 0.0)
    d = 1.0 / b
    h = d
    for i in range(2, _CF_MAXITER):
        a = -float((i - 1) * (i - 1))
        b += 2.0
        d = 1.0 / (a * d + b)
        cc = b + a / cc
        delta = cc * d
        h *= delta
        if abs(delta.real - 1.0) + abs(delta.imag) < _CF_EPS:
            break
    g = h.real
    f = -h.imag
    s = math.sin(x)
    c = math.cos(x)
    ci = f * s - g * c
    si = HALF_PI - (f * c + g * s)
    return si, ci, f, g


_sici_aux_scalar_jit = njit(cache=True)(_sici_aux_scalar) if NUMBA_AVAILABLE else None


def _make_sici_loop(scalar):
    def loop(x):
        n = x.shape[0]
        out = np.empty((4, n))
        for i in range(n):
            si, ci, f, g = scalar(x[i])
            out[0, i] = si
            out[1, i] = ci
            out[2, i] = f
            out[3, i] = g
        return out

    return loop


if NUMBA_AVAILABLE:
    sici_aux_numba = njit(cache=True)(_make_sici_loop(_sici_aux_scalar_jit))
else:
    sici_aux_numba = None


def sici_aux_numpy(x):
    """Vectorized (Si, Ci, f, g) for a 1-d array of positive x."""
    x = np.asarray(x, dtype=float)
    out = np.empty((4, x.size))
    small = x <= SERIES_CUTOFF
    if small.any():
        xs = x[small]
        x2 = xs * xs
        term = xs.copy()
        si = xs.copy()
        k = 0
        while True:
            k += 1
            term = term * (-x2 / ((2 * k) * (2 * k + 1)))
            add = term / (2 * k + 1)
            si += add
            if np.all(np.abs(add) <= 1e-17 * np.abs(si)) or k > 60:
                break
        term = np.ones_like(xs)
        acc = np.zeros_like(xs)
        k = 0
        while k < 60:
            k += 1
            term = term * (-x2 / ((2 * k - 1) * (2 * k)))
            add = term / (2 * k)
            acc += add
            if np.all(np.abs(add) < 1e-17 * (np.abs(acc) + 1e-300)):
                break
        ci = EULER_GAMMA + np.log(xs) + acc
        s, c = np.sin(xs), np.cos(xs)
        rest = HALF_PI - si
        out[0, small] = si
        out[1, small] = ci
        out[2, small] = ci * s + rest * c
        out[3, small] = -ci * c + rest * s
    big = ~small
    if big.any():
        xb = x[big]
        b = 1.0 + 1j * xb
        cc = np.full(xb.shape, 1.0 / _FPMIN, dtype=complex)
        d = 1.0 / b
        h = d.copy()
        active = np.ones(xb.shape, dtype=bool)
        for i in range(2, _CF_MAXITER):
            a = -float((i - 1) * (i - 1))
            b = b + 2.0
            d = np.where(active, 1.0 / (a * d + b), d)
            cc = np.where(active, b + a / cc, cc)
            delta = np.where(active, cc * d, 1.0)
            h = h * delta
            active &= np.abs(delta.real - 1.0) + np.abs(delta.imag) >= _CF_EPS
            if not active.any():
                break
        g = h.real
        f = -h.imag
        s, c = np.sin(xb), np.cos(xb)
        out[0, big] = HALF_PI - (f * c + g * s)
        out[1, big] = f * s - g * c
        out[2, big] = f
        out[3, big] = g
    return out


# ----------------------------------------------------------------------------
# imaginary-time image sum of the vacuum Hadamard function
# ----------------------------------------------------------------------------

_INV_2PI2 = 1.0 / (2.0 * math.pi * math.pi)


def _image_sum_loop(dt, r, beta, kmax):
    n = dt.shape[0]
    out = np.empty(n)
    for i in range(n):
        a = r[i] * r[i] - dt[i] * dt[i]
        acc = 0.0
        for k in range(kmax, 0, -1):
            kb = k * beta
            re = a + kb * kb
            im = 2.0 * kb * dt[i]
            # pair k, -k: 2 Re[1/(re - i im)]
            acc += 2.0 * re / (re * re + im * im)
        out[i] = _INV_2PI2 * (acc + 1.0 / a)
    return out


image_sum_numba = njit(cache=True)(_image_sum_loop) if NUMBA_AVAILABLE else None


def image_sum_numpy(dt, r, beta, kmax):
    dt = np.asarray(dt, dtype=float)[:, None]
    r = np.asarray(r, dtype=float)[:, None]
    kb = np.arange(kmax, 0, -1, dtype=float)[None, :] * beta
    a = r * r - dt * dt
    re = a + kb * kb
    im = 2.0 * kb * dt
    acc = np.sum(2.0 * re / (re * re + im * im), axis=1)
    return _INV_2PI2 * (acc + 1.0 / a[:, 0])


# ----------------------------------------------------------------------------
# exact propagation of driven damped oscillators
# ----------------------------------------------------------------------------

def propagator_coefficients(omega, gamma, dt):
    """Homogeneous transfer matrix entries (p11, p12, p21, p22) for one step."""
    omega = float(omega)
    wd2 = omega * omega - 0.25 * gamma * gamma
    if wd2 <= 0.0:
        raise ValueError("overdamped oscillator not supported")
    wd = math.sqrt(wd2)
    e = math.exp(-0.5 * gamma * dt)
    c = math.cos(wd * dt)
    s = math.sin(wd * dt)
    k = 0.5 * gamma / wd
    return (e * (c + k * s), e * s / wd, -e * omega * omega * s / wd, e * (c - k * s))


def _step(x, v, f0, f1, p11, p12, p21, p22, w2, gamma, inv_m, inv_dt):
    # forcing linear over the step: x'' + gamma x' + w2 x = a + b tau
    a = f0 * inv_m
    b = (f1 - f0) * inv_m * inv_dt
    bb = b / w2
    aa = a / w2 - gamma * bb / w2
    y = x - aa
    u = v - bb
    # particular solution at tau = dt is aa + bb*dt, velocity bb
    xn = aa + bb / inv_dt + p11 * y + p12 * u
    vn = bb + p21 * y + p22 * u
    return xn, vn


_step_jit = njit(cache=True, inline="always")(_step) if NUMBA_AVAILABLE else None


def _make_single(step):
    def single(x0, v0, force, coef, w2, gamma, inv_m, dt):
        n = force.shape[0]
        xs = np.empty(n)
        vs = np.empty(n)
        x = x0
        v = v0
        xs[0] = x
        vs[0] = v
        inv_dt = 1.0 / dt
        for i in range(n - 1):
            x, v = step(x, v, force[i], force[i + 1], coef[0], coef[1], coef[2], coef[3],
                        w2, gamma, inv_m, inv_dt)
            xs[i + 1] = x
            vs[i + 1] = v
        return xs, vs

    return single


def _make_ensemble(step, prange_):
    def ensemble(factor, weights, coef, w2, gamma, inv_m, dt, i_burn, i_half):
        """Integrate every trajectory and accumulate z^2 over two windows.

        factor : (3, n, r) per-axis noise factor; weights : (count, 3, r).
        Returns (count, 3, 2) sums of x^2 over [i_burn, i_half) and [i_half, n).
        """
        count = weights.shape[0]
        n = factor.shape[1]
        r = factor.shape[2]
        out = np.zeros((count, 3, 2))
        inv_dt = 1.0 / dt
        for c in prange_(count):
            for ax in range(3):
                x = 0.0
                v = 0.0
                f_prev = 0.0
                for j in range(r):
                    f_prev += factor[ax, 0, j] * weights[c, ax, j]
                s0 = 0.0
                s1 = 0.0
                if i_burn == 0:
                    s0 += x * x
                for i in range(n - 1):
                    f_next = 0.0
                    for j in range(r):
                        f_next += factor[ax, i + 1, j] * weights[c, ax, j]
                    x, v = step(x, v, f_prev, f_next, coef[ax, 0], coef[ax, 1], coef[ax, 2],
                                coef[ax, 3], w2[ax], gamma, inv_m, inv_dt)
                    f_prev = f_next
                    k = i + 1
                    if k >= i_half:
                        s1 += x * x
                    elif k >= i_burn:
                        s0 += x * x
                out[c, ax, 0] = s0
                out[c, ax, 1] = s1
        return out

    return ensemble


propagate_single_numpy = _make_single(_step)
if NUMBA_AVAILABLE:
    propagate_single_numba = njit(cache=True)(_make_single(_step_jit))
    propagate_ensemble_numba = njit(cache=True, parallel=True)(_make_ensemble(_step_jit, prange))
else:
    propagate_single_numba = None
    propagate_ensemble_numba = None


def propagate_ensemble_numpy(factor, weights, coef, w2, gamma, inv_m, dt, i_burn, i_half):
    count = weights.shape[0]
    n = factor.shape[1]
    coef = np.asarray(coef)
    p11, p12, p21, p22 = (coef[:, j][None, :] for j in range(4))
    w2 = np.asarray(w2)[None, :]
    inv_dt = 1.0 / dt
    x = np.zeros((count, 3))
    v = np.zeros((count, 3))
    out = np.zeros((count, 3, 2))
    f_prev = np.einsum("car,ar->ca", weights, factor[:, 0, :])
    if i_burn == 0:
        out[:, :, 0] += x * x
    for i in range(n - 1):
        f_next = np.einsum("car,ar->ca", weights, factor[:, i + 1, :])
        a = f_prev * inv_m
        b = (f_next - f_prev) * (inv_m * inv_dt)
        bb = b / w2
        aa = a / w2 - gamma * bb / w2
        y = x - aa
        u = v - bb
        x = aa + bb * dt + p11 * y + p12 * u
        v = bb + p21 * y + p22 * u
        f_prev = f_next
        k = i + 1
        if k >= i_half:
            out[:, :, 1] += x * x
        elif k >= i_burn:
            out[:, :, 0] += x * x
    return out


if NUMBA_AVAILABLE:
    sici_aux = sici_aux_numba
    image_sum_hadamard = image_sum_numba
    propagate_single = propagate_single_numba
    propagate_ensemble = propagate_ensemble_numba
else:
    sici_aux = sici_aux_numpy
    image_sum_hadamard = image_sum_numpy
    propagate_single = propagate_single_numpy
    propagate_ensemble = propagate_ensemble_numpy
