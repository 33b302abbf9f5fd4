"""Colored noise felt by a static atom near the mirror.

The stochastic force has the two-point function

    C_kj(s) = (q**2 / 2) g_H(s) N_kj(s),

where ``g_H`` is the oscillator Hadamard kernel and ``N_kj`` is two spatial
derivatives of the summed electric-field correlator. For the mirror image at
height ``z`` (``R = 2z``, primes are ``d/dR`` at fixed lag)

    N_zz = 2 G''''(s, R),
    N_xx = N_yy = -2 d^2/dR^2 [G'(s, R) / R],

and every mixed component vanishes. In the vacuum at zero lag these are
``15 / (8 pi**2 z**6)`` and ``5 / (8 pi**2 z**6)``.

Two kernels are offered:

``"full"``
    The lag dependence of ``N`` is kept. The pole at ``s = 2z`` is softened
    by evaluating at the complex lag ``s - i eps`` and taking the real part.
``"frozen"``
    ``N`` is held at its zero-lag value. ``C(s) = A cos(Omega s)`` is then an
    exact rank-two kernel, the form that governs the far-field, long-time
    dispersion of a trapped atom (its spectrum sits at the internal
    frequency). The ensemble simulations use this kernel.

The free-space part of the field correlator is isotropic and diverges at
zero lag. It is available behind ``include_free`` with ``eps`` acting as the
UV cutoff.
"""
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.special import zeta

from .errors import DomainError, IllConditionedError, NumericalError, PoleError
from .greens import hadamard_radial_derivatives, oscillator_g_h
from .params import VACUUM

__all__ = [
    "KERNELS",
    "image_field_factor",
    "free_field_factor",
    "noise_correlation",
    "NoiseCovariance",
    "build_covariance",
    "sample_noise",
    "trajectory_rng",
    "draw_weights",
    "write_matrix_csv",
]

KERNELS = ("full", "frozen")
CLIP_LIMIT = 1e-2


def image_field_factor(z, s, beta=math.inf, eps=0.0):
    """Diagonal of ``N_kj`` for the image term, shape ``broadcast + (3,)``.

    ``eps > 0`` evaluates at the lag ``s - i eps`` and keeps the real part.
    """
    z_a, s_a = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(s, dtype=float))
    if np.any(z_a <= 0.0):
        raise DomainError("noise kernel needs z > 0")
    R = 2.0 * z_a
    if eps < 0.0:
        raise DomainError("eps must be >= 0")
    if eps == 0.0:
        if np.any(np.abs(s_a) == R):
            raise PoleError("noise kernel evaluated at the light-bounce lag s = 2z")
        lag = s_a
    else:
        if math.isfinite(beta) and eps >= beta:
            raise DomainError("eps must be smaller than beta")
        lag = s_a - 1j * eps
    d = hadamard_radial_derivatives(lag, R, beta, nmax=4)
    zz = np.real(2.0 * d[4])
    xx = np.real(-2.0 * (d[3] / R - 2.0 * d[2] / R**2 + 2.0 * d[1] / R**3))
    return np.stack([xx, xx, zz], axis=-1)


def free_field_factor(s, eps, beta=math.inf, k_max=256):
    """Isotropic free-space factor ``Re[-40 / (pi**2 (s - i eps)**6)]``.

    At finite ``beta`` the imaginary-time images ``s - i eps + i k beta`` are
    added explicitly, since the thermal change is many orders of magnitude
    below the cutoff-dominated vacuum value and a closed form would lose it
    to cancellation. The images beyond ``k_max`` contribute
    ``80 zeta(6, k_max + 1) / (pi**2 beta**6)`` to leading order.
    """
    if not eps > 0.0:
        raise DomainError("the free-space part needs a UV cutoff eps > 0")
    T = np.asarray(s, dtype=float) - 1j * eps
    val = np.real(-40.0 / (math.pi**2 * T**6))
    if math.isfinite(beta):
        if eps >= beta:
            raise DomainError("eps must be smaller than beta")
        k = np.arange(k_max, 0, -1) * beta
        Te = T[..., None]
        img = (Te + 1j * k) ** -6 + (Te - 1j * k) ** -6
        corr = np.real(np.sum(img, axis=-1)) - 2.0 * zeta(6, k_max + 1) / beta**6
        val = val - 40.0 / math.pi**2 * corr
    return val


def noise_correlation(z, s, p, thermal=VACUUM, *, kernel="full", eps=0.0, include_free=False,
                      free_eps=None):
    """Mirror-induced noise correlation matrix at height ``z`` and lag ``s``.

    Parameters
    ----------
    z : float or array_like
        Height above the mirror.
    s : float or array_like
        Lag ``lambda - lambda'``.
    p : AtomParams
    thermal : ThermalConfig
        ``beta`` sets the field temperature, ``beta_bar`` the oscillator one.
    kernel : {"full", "frozen"}
        See the module docstring.
    eps : float
        Width used to soften the light-bounce pole (``"full"``) or the
        zero-lag evaluation point (``"frozen"``).
    include_free : bool
        Add the free-space part with cutoff ``free_eps`` (defaults to ``eps``).

    Returns
    -------
    ndarray
        Shape ``broadcast(z, s).shape + (3, 3)``; diagonal.
    """
    if kernel not in KERNELS:
        raise ValueError(f"kernel must be one of {KERNELS}")
    z_a, s_a = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(s, dtype=float))
    field_lag = s_a if kernel == "full" else np.zeros_like(s_a)
    diag = image_field_factor(z_a, field_lag, thermal.beta, eps)
    if include_free:
        fe = eps if free_eps is None else free_eps
        diag = diag + free_field_factor(field_lag, fe, thermal.beta)[..., None]
    gh = np.asarray(oscillator_g_h(s_a, p, thermal.beta_bar))
    diag = 0.5 * p.q**2 * gh[..., None] * diag
    out = np.zeros(s_a.shape + (3, 3))
    idx = np.arange(3)
    out[..., idx, idx] = diag
    return out


@dataclass
class NoiseCovariance:
    """Stationary covariance on a time grid plus its symmetric factor.

    Attributes
    ----------
    grid : TimeGrid
    z : float
    kernel : str
    eps : float
        Regularization width actually used.
    blocks : ndarray, shape (n, 3, 3)
        Correlation at lags ``0, dt, ..., (n-1) dt``.
    factor : ndarray, shape (3, n, r)
        Per-axis factor ``L`` with ``L @ L.T`` equal to the projected
        covariance of that axis. Padded with zeros to a common rank.
    matrix : ndarray or None
        Assembled ``(3n, 3n)`` covariance, ordered time-major
        (index ``3*i + axis``); ``None`` when not assembled.
    eig_floor : float
        Relative threshold below which eigenvalues are treated as zero.
    min_eig : float
        Smallest eigenvalue before projection, relative to the largest.
    clipped_mass : float
        Sum of the clipped negative eigenvalues divided by the trace.
    """

    grid: object
    z: float
    kernel: str
    eps: float
    blocks: np.ndarray
    factor: np.ndarray
    matrix: np.ndarray = None
    eig_floor: float = 1e-12
    min_eig: float = 0.0
    clipped_mass: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def rank(self):
        return self.factor.shape[2]

    def axis_matrix(self, axis):
        """Projected covariance of one axis, ``L @ L.T``."""
        f = self.factor[axis]
        return f @ f.T


def _toeplitz_from_lags(c):
    return linalg.toeplitz(c)


def build_covariance(z, grid, p, thermal=VACUUM, *, kernel="frozen", eps=None, include_free=False,
                     free_eps=None, eig_floor=1e-12, assemble=None, clip_limit=CLIP_LIMIT):
    """Sample the stationary correlation on ``grid`` and factor it.

    Parameters
    ----------
    z : float
        Height above the mirror.
    grid : TimeGrid
        Lags are ``k * grid.dt``. ``grid.width`` is the default ``eps``.
    p, thermal
        Atom and temperatures.
    kernel : {"frozen", "full"}
        ``"frozen"`` is factored analytically (rank two per axis). ``"full"``
        goes through a per-axis eigendecomposition of the Toeplitz matrix with
        negative eigenvalues clipped to zero.
    eig_floor : float
        Eigenvalues below ``eig_floor * max`` are dropped from the factor.
    assemble : bool or None
        Build the dense ``(3n, 3n)`` matrix. Default: only when ``n <= 2000``.
    clip_limit : float
        Largest tolerated clipped mass.

    Raises
    ------
    IllConditionedError
        When the clipped mass exceeds ``clip_limit``.
    """
    if kernel not in KERNELS:
        raise ValueError(f"kernel must be one of {KERNELS}")
    z = float(z)
    if z <= 0.0:
        raise DomainError("z must be > 0")
    eps = grid.width if eps is None else float(eps)
    n = grid.n
    lags = grid.dt * np.arange(n)
    blocks = noise_correlation(z, lags, p, thermal, kernel=kernel, eps=eps,
                               include_free=include_free, free_eps=free_eps)
    if assemble is None:
        assemble = n <= 2000

    factors = []
    clipped = 0.0
    trace = 0.0
    min_rel = np.inf
    if kernel == "frozen":
        t = grid.times()
        cos_t = np.cos(p.Omega * t)
        sin_t = np.sin(p.Omega * t)
        for ax in range(3):
            amp = blocks[0, ax, ax]
            trace += n * abs(amp)
            if amp < 0.0:
                clipped += n * abs(amp)
                factors.append(np.zeros((n, 2)))
                min_rel = min(min_rel, -1.0)
            else:
                root = math.sqrt(amp)
                factors.append(np.column_stack([root * cos_t, root * sin_t]))
                min_rel = min(min_rel, 0.0)
    else:
        for ax in range(3):
            tm = _toeplitz_from_lags(blocks[:, ax, ax])
            w, v = linalg.eigh(tm)
            top = np.max(np.abs(w))
            trace += float(np.sum(np.diag(tm)))
            if top == 0.0:
                factors.append(np.zeros((n, 1)))
                continue
            neg = w[w < 0.0]
            clipped += float(-neg.sum())
            min_rel = min(min_rel, float(w.min() / top))
            keep = w > eig_floor * top
            factors.append(v[:, keep] * np.sqrt(w[keep]))
    rank = max(f.shape[1] for f in factors)
    factor = np.zeros((3, n, rank))
    for ax, f in enumerate(factors):
        factor[ax, :, : f.shape[1]] = f
    mass = clipped / trace if trace > 0.0 else 0.0
    if mass > clip_limit:
        raise IllConditionedError(
            f"covariance clipped mass {mass:.3e} exceeds {clip_limit:.1e} (min eigenvalue ratio "
            f"{min_rel:.3e}); change the grid, eps, or kernel"
        )
    matrix = None
    if assemble:
        matrix = np.zeros((3 * n, 3 * n))
        for ax in range(3):
            matrix[ax::3, ax::3] = _toeplitz_from_lags(blocks[:, ax, ax])
    return NoiseCovariance(
        grid=grid,
        z=z,
        kernel=kernel,
        eps=eps,
        blocks=blocks,
        factor=factor,
        matrix=matrix,
        eig_floor=eig_floor,
        min_eig=float(min_rel),
        clipped_mass=float(mass),
        meta={"include_free": bool(include_free)},
    )


def trajectory_rng(seed, index, stream=0):
    """Independent, reproducible stream for trajectory ``index`` of run ``stream``."""
    return np.random.default_rng([int(seed), int(stream), int(index)])


def draw_weights(cov, seed, count, start=0, stream=0):
    """Standard normal weights, shape ``(count, 3, rank)``, one stream per trajectory."""
    r = cov.rank
    out = np.empty((count, 3, r))
    for i in range(count):
        out[i] = trajectory_rng(seed, start + i, stream).standard_normal((3, r))
    return out


def sample_noise(cov, seed, count):
    """Draw ``count`` zero-mean Gaussian series with covariance ``cov``.

    Returns
    -------
    ndarray, shape (count, n, 3)
        ``out[c, i, a]`` is the force on axis ``a`` at time step ``i``.

    Raises
    ------
    NumericalError
        If the factor contains non-finite values.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    if not np.all(np.isfinite(cov.factor)):
        raise NumericalError("covariance factor has non-finite entries")
    w = draw_weights(cov, seed, count)
    return np.einsum("anr,car->cna", cov.factor, w)


def write_matrix_csv(matrix, fh, meta=None):
    """Write a matrix as row-major CSV with ``#`` metadata lines."""
    buf = io.StringIO()
    for key, val in (meta or {}).items():
        buf.write(f"# {key}: {val}\n")
    np.savetxt(buf, np.atleast_2d(matrix), delimiter=",", fmt="%.17g")
    fh.write(buf.getvalue())
