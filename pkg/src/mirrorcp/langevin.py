"""Linearized Langevin dynamics of a trapped atom and its dispersion.

The deviation ``x = z - z_bar`` of each axis obeys

    M x'' + M gamma x' + M Omega_eff**2 x = xi(t),

where ``Omega_eff`` includes the mirror's force gradient along z and ``xi`` is
the mirror-induced noise from :mod:`mirrorcp.noise`. The forcing is linear
between grid points, for which the discrete propagator below is exact, so
energy is conserved to rounding error when ``gamma = 0``.
"""
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .cpforce import cp_force_gradient
from .errors import BurnInError, DomainError, RegimeWarning, StepSizeError, UnstableTrapError
from .noise import build_covariance, draw_weights
from .params import VACUUM, TimeGrid, TrapConfig

__all__ = [
    "effective_trap_frequencies",
    "matched_trap",
    "validity_margin",
    "Trajectory",
    "integrate_trajectory",
    "EnsembleStats",
    "run_ensemble",
    "DispersionPrediction",
    "dispersion_analytic",
    "dispersion_kernel_prediction",
    "DispersionScan",
    "dispersion_scan",
    "loglog_slope",
]

MAX_PHASE_STEP = 0.1
VALIDITY_MARGIN = 100.0
AXES = ("x", "y", "z")


def effective_trap_frequencies(trap, p, thermal=VACUUM):
    """Trap frequencies renormalized by the mirror force gradient.

    ``Omega_eff_z**2 = Omega_z**2 - F'(z_bar) / M``; the transverse axes are
    unchanged.

    Raises
    ------
    UnstableTrapError
        If the renormalized z curvature is not positive.
    """
    om = np.array(trap.omega_trap, dtype=float)
    if not trap.include_cp_shift:
        return om
    grad = cp_force_gradient(trap.z_bar, p, thermal)
    wz2 = om[2] ** 2 - grad / p.M
    if not wz2 > 0.0:
        raise UnstableTrapError(
            f"trap too weak at z_bar={trap.z_bar}: Omega_z**2={om[2]**2:.4g} but F'/M={grad / p.M:.4g}"
        )
    om[2] = math.sqrt(wz2)
    return om


def matched_trap(trap, p, thermal=VACUUM):
    """Copy of ``trap`` whose z frequency gives ``Omega_eff_z == Omega_x``."""
    if not trap.include_cp_shift:
        w = trap.omega_trap
        return replace(trap, omega_trap=(w[0], w[1], w[0]))
    grad = cp_force_gradient(trap.z_bar, p, thermal)
    wx = trap.omega_trap[0]
    wz = math.sqrt(wx * wx + grad / p.M)
    return replace(trap, omega_trap=(wx, trap.omega_trap[1], wz))


def validity_margin(trap, p, thermal=VACUUM):
    """Smallest ``|Omega_eff_k**2 - Omega**2| / (q**2 / (m Omega**3 M z_bar**6))``."""
    om = effective_trap_frequencies(trap, p, thermal)
    scale = p.q**2 / (p.m * p.Omega**3 * p.M * trap.z_bar**6)
    return float(np.min(np.abs(om**2 - p.Omega**2)) / scale)


def _check_step(grid, omega_eff):
    worst = float(np.max(omega_eff)) * grid.dt
    if worst > MAX_PHASE_STEP * (1.0 + 1e-12):
        raise StepSizeError(f"dt * Omega_eff = {worst:.3g} exceeds {MAX_PHASE_STEP}; reduce dt")


def _coefficients(omega_eff, gamma, dt):
    return np.array([_kernels.propagator_coefficients(w, gamma, dt) for w in omega_eff])


@dataclass(frozen=True)
class Trajectory:
    """Deviation trajectory on a grid; ``x`` and ``v`` have shape ``(n, 3)``."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    omega_eff: np.ndarray

    def energy(self, M):
        """Per-axis oscillator energy, shape ``(n, 3)``."""
        return 0.5 * M * (self.v**2 + (self.omega_eff**2)[None, :] * self.x**2)


def integrate_trajectory(ic, noise, trap, p, grid, thermal=VACUUM):
    """Propagate one realization of the linearized Langevin equation.

    Parameters
    ----------
    ic : tuple of array_like
        ``(x0, v0)``, each of length 3.
    noise : array_like, shape (n, 3)
        Force samples on ``grid``; linearly interpolated between points.
    trap, p, grid, thermal
        Configuration records.

    Returns
    -------
    Trajectory

    Raises
    ------
    StepSizeError
        If ``dt * Omega_eff > 0.1`` on any axis.
    """
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (grid.n, 3):
        raise DomainError(f"noise must have shape ({grid.n}, 3), got {noise.shape}")
    x0, v0 = (np.asarray(a, dtype=float).reshape(3) for a in ic)
    om = effective_trap_frequencies(trap, p, thermal)
    _check_step(grid, om)
    coef = _coefficients(om, trap.gamma, grid.dt)
    xs = np.empty((grid.n, 3))
    vs = np.empty((grid.n, 3))
    for ax in range(3):
        force = np.ascontiguousarray(noise[:, ax])
        xa, va = _kernels.propagate_single(float(x0[ax]), float(v0[ax]), force, coef[ax],
                                           float(om[ax] ** 2), trap.gamma, 1.0 / p.M, grid.dt)
        xs[:, ax] = xa
        vs[:, ax] = va
    return Trajectory(grid.times(), xs, vs, om)


@dataclass(frozen=True)
class EnsembleStats:
    """Stationary per-axis variance of the deviations.

    ``variance`` is the ensemble mean of each trajectory's time-averaged
    ``x**2`` after burn-in, ``stderr`` its standard error across trajectories.
    ``drift`` is the mean change between the two halves of the window and
    ``drift_stderr`` its standard error.
    """

    z_bar: float
    variance: np.ndarray
    stderr: np.ndarray
    count: int
    burn_in_span: float
    drift: np.ndarray
    drift_stderr: np.ndarray
    seed: int
    omega_eff: np.ndarray
    meta: dict = field(default_factory=dict)


def run_ensemble(count, seed, z_bar, trap, p, thermal=VACUUM, grid=None, *, kernel="frozen", eps=None,
                 burn_in=0.2, stream=0, chunk=4096, check_stationary=True):
    """Monte Carlo estimate of the mirror-induced position variance.

    Parameters
    ----------
    count : int
        Number of trajectories, at least 100.
    seed : int
        Base seed. Trajectory ``i`` draws from ``default_rng([seed, stream, i])``.
    z_bar : float
        Mean height; overrides ``trap.z_bar``.
    trap, p, thermal, grid
        Configuration records. ``grid`` defaults to ``TimeGrid(dt=0.04, n=17501)``.
    kernel : {"frozen", "full"}
        Noise kernel (see :mod:`mirrorcp.noise`).
    eps : float, optional
        Regularization width; defaults to ``grid.width``.
    burn_in : float
        Fraction of the grid discarded before averaging.
    stream : int
        Extra key separating independent runs that share ``seed``.

    Raises
    ------
    BurnInError
        If the two halves of the averaging window differ by more than three
        standard errors on any axis.
    """
    if count < 100:
        raise DomainError("run_ensemble needs count >= 100")
    if not 0.0 <= burn_in < 0.9:
        raise DomainError("burn_in must be in [0, 0.9)")
    grid = grid or TimeGrid(dt=0.04, n=17501)
    trap = replace(trap, z_bar=float(z_bar))
    om = effective_trap_frequencies(trap, p, thermal)
    _check_step(grid, om)
    margin = validity_margin(trap, p, thermal)
    if margin < VALIDITY_MARGIN:
        warnings.warn(f"trap validity margin {margin:.3g} < {VALIDITY_MARGIN}", RegimeWarning, stacklevel=2)
    cov = build_covariance(trap.z_bar, grid, p, thermal, kernel=kernel, eps=eps, assemble=False)
    coef = _coefficients(om, trap.gamma, grid.dt)
    factor = np.ascontiguousarray(cov.factor)
    n = grid.n
    i_burn = int(round(burn_in * (n - 1)))
    i_half = i_burn + (n - i_burn) // 2
    sums = np.empty((count, 3, 2))
    for start in range(0, count, chunk):
        stop = min(count, start + chunk)
        w = np.ascontiguousarray(draw_weights(cov, seed, stop - start, start, stream))
        sums[start:stop] = _kernels.propagate_ensemble(factor, w, coef, om**2, trap.gamma, 1.0 / p.M,
                                                       grid.dt, i_burn, i_half)
    n0 = i_half - i_burn
    n1 = n - i_half
    first = sums[:, :, 0] / n0
    second = sums[:, :, 1] / n1
    per_traj = (sums[:, :, 0] + sums[:, :, 1]) / (n0 + n1)
    var = per_traj.mean(axis=0)
    se = per_traj.std(axis=0, ddof=1) / math.sqrt(count)
    diff = second - first
    drift = diff.mean(axis=0)
    drift_se = diff.std(axis=0, ddof=1) / math.sqrt(count)
    stats = EnsembleStats(
        z_bar=trap.z_bar,
        variance=var,
        stderr=se,
        count=count,
        burn_in_span=i_burn * grid.dt,
        drift=drift,
        drift_stderr=drift_se,
        seed=int(seed),
        omega_eff=om,
        meta={"kernel": kernel, "eps": cov.eps, "dt": grid.dt, "n": n, "gamma": trap.gamma,
              "stream": stream, "validity_margin": margin, "backend": _kernels_backend()},
    )
    if check_stationary:
        bad = np.abs(drift) > 3.0 * drift_se
        if np.any(bad):
            axes = ",".join(a for a, b in zip(AXES, bad) if b)
            raise BurnInError(
                f"variance still drifting on axis {axes} (drift {drift[bad]}, 3 se {3 * drift_se[bad]}); "
                "use a longer grid, more damping, or a longer burn-in"
            )
    return stats


def _kernels_backend():
    from ._accel import BACKEND

    return BACKEND


@dataclass(frozen=True)
class DispersionPrediction:
    """Per-axis variance change with a flag for the far-field regime."""

    z_bar: float
    variance: np.ndarray
    regime_ok: bool
    notes: tuple = ()


def dispersion_analytic(z_bar, trap, p, thermal=VACUUM):
    """Closed-form far-field dispersion law.

    ``z``: ``-15 q**2 / (16 pi**2 m Omega M**2 (Omega_eff_z**2 - Omega**2)**2 z_bar**6)``;
    ``x, y``: the same with ``-15`` replaced by ``+1`` and the transverse
    frequencies.

    A :class:`RegimeWarning` is emitted, and ``regime_ok`` is false, when
    ``Omega z_bar < 1`` or the trap validity margin is below 100.
    """
    trap = replace(trap, z_bar=float(z_bar))
    om = effective_trap_frequencies(trap, p, thermal)
    base = p.q**2 / (16.0 * math.pi**2 * p.m * p.Omega * p.M**2 * trap.z_bar**6)
    det = (om**2 - p.Omega**2) ** 2
    var = base / det * np.array([1.0, 1.0, -15.0])
    notes = []
    if p.Omega * trap.z_bar < 1.0:
        notes.append(f"Omega*z_bar = {p.Omega * trap.z_bar:.3g} is not in the far field")
    margin = validity_margin(trap, p, thermal)
    if margin < VALIDITY_MARGIN:
        notes.append(f"trap validity margin {margin:.3g} < {VALIDITY_MARGIN}")
    for msg in notes:
        warnings.warn(msg, RegimeWarning, stacklevel=2)
    return DispersionPrediction(trap.z_bar, var, not notes, tuple(notes))


def dispersion_kernel_prediction(z_bar, trap, p, thermal=VACUUM, eps=0.0):
    """Stationary variance implied by the frozen noise kernel.

    For ``C(s) = A cos(Omega s)`` driving a damped oscillator the stationary
    variance is ``A / (M**2 ((Omega_eff**2 - Omega**2)**2 + gamma**2 Omega**2))``.
    """
    from .noise import noise_correlation

    trap = replace(trap, z_bar=float(z_bar))
    om = effective_trap_frequencies(trap, p, thermal)
    amp = np.diag(noise_correlation(trap.z_bar, 0.0, p, thermal, kernel="frozen", eps=eps))
    det = (om**2 - p.Omega**2) ** 2 + (trap.gamma * p.Omega) ** 2
    return amp / (p.M**2 * det)


def loglog_slope(z, y, y_err=None):
    """Weighted least-squares slope of ``log|y|`` against ``log z``.

    Returns
    -------
    slope, stderr : float
    """
    z = np.asarray(z, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    lx = np.log(z)
    ly = np.log(y)
    if y_err is None:
        coeffs, cov = (np.polyfit(lx, ly, 1, cov=True) if len(z) > 3 else (np.polyfit(lx, ly, 1), np.zeros((2, 2))))
        return float(coeffs[0]), float(math.sqrt(max(cov[0, 0], 0.0)))
    # Weighted fit with known errors: sigma(log y) = y_err / y.
    sig = np.asarray(y_err, dtype=float) / y
    w = 1.0 / np.maximum(sig, 1e-300) ** 2
    xm = np.sum(w * lx) / np.sum(w)
    sxx = np.sum(w * (lx - xm) ** 2)
    slope = np.sum(w * (lx - xm) * ly) / sxx
    return float(slope), float(math.sqrt(1.0 / sxx))


@dataclass(frozen=True)
class DispersionScan:
    """Rows of Monte Carlo and analytic dispersion against height."""

    z_values: np.ndarray
    stats: tuple
    analytic: tuple
    kernel_prediction: np.ndarray
    slope: np.ndarray
    slope_stderr: np.ndarray

    def rows(self):
        """Yield dicts with keys ``z_bar, axis, variance, stderr, analytic, kernel, count, seed, regime_ok``."""
        for st, an, kp in zip(self.stats, self.analytic, self.kernel_prediction):
            for ax in range(3):
                yield {
                    "z_bar": st.z_bar,
                    "axis": AXES[ax],
                    "variance": float(st.variance[ax]),
                    "stderr": float(st.stderr[ax]),
                    "analytic": float(an.variance[ax]),
                    "kernel": float(kp[ax]),
                    "count": st.count,
                    "seed": st.seed,
                    "regime_ok": an.regime_ok,
                }


def dispersion_scan(z_values, count, seed, trap, p, thermal=VACUUM, grid=None, *, kernel="frozen",
                    eps=None, burn_in=0.2, check_stationary=True):
    """Run :func:`run_ensemble` at each height and fit the distance scaling.

    Each height uses its own random stream (``stream = index``). The slope is
    fitted per axis to ``log|variance|`` against ``log z``.
    """
    z_values = np.asarray(z_values, dtype=float)
    if z_values.size == 0:
        raise DomainError("empty list of heights")
    stats = []
    analytic = []
    kpred = []
    for k, z in enumerate(z_values):
        st = run_ensemble(count, seed, z, trap, p, thermal, grid, kernel=kernel, eps=eps, burn_in=burn_in,
                          stream=k, check_stationary=check_stationary)
        stats.append(st)
        with warnings.catch_warnings(record=True):
            warnings.simplefilter("always", RegimeWarning)
            analytic.append(dispersion_analytic(z, trap, p, thermal))
        kpred.append(dispersion_kernel_prediction(z, trap, p, thermal, eps=st.meta["eps"]))
    slopes = np.zeros(3)
    slope_se = np.zeros(3)
    if z_values.size >= 2:
        var = np.array([s.variance for s in stats])
        se = np.array([s.stderr for s in stats])
        for ax in range(3):
            slopes[ax], slope_se[ax] = loglog_slope(z_values, var[:, ax], se[:, ax])
    return DispersionScan(z_values, tuple(stats), tuple(analytic), np.array(kpred), slopes, slope_se)
