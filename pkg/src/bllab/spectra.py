"""Shell-summed spectra and analyticity-strip fits.

The distance of the nearest complex singularity from the real domain shows
up as the exponential decay rate of the solution's spectral amplitudes.
Coefficients c_kj of the Fourier x Chebyshev expansion are binned into
integer shells by the Euclidean index norm, and the model

    log A_K = log C - (alpha + 1) log K - delta K

is fitted over an automatically chosen window.  delta is the strip width
(zero at a real singularity), alpha characterizes the singularity type.

Everything here is a pure function of arrays; run loops feed snapshots in
and CSV writers consume the fitted records.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import chebyshev as cheb
from .field import Field2D, to_spectral
from .grid import Grid2D, make_grid


@dataclass
class ShellSpectrum:
    """Shell sums A_K of one snapshot, plus the estimated round-off floor."""

    t: float
    A: np.ndarray
    K_max: int
    floor: float
    complete_through: int  # last shell fully inside the coefficient rectangle


@dataclass
class StripFit:
    """One fitted decay model and its audit trail."""

    t: float
    delta: float
    alpha: float
    logC: float
    K1: int
    K2: int
    rms_residual: float
    stable: bool
    delta_resolved: bool
    delta_raw: float


def make_shell_spectrum(t: float, amplitudes: np.ndarray, complete_through: int | None = None) -> ShellSpectrum:
    """Wrap a shell-amplitude array, estimating the floor from the tail.

    The floor is the median of the top 10% of shells by index, where a
    genuinely resolved spectrum has flattened into round-off."""
    a = np.asarray(amplitudes, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("amplitudes must be a non-empty 1-d array")
    if np.any(a < 0):
        raise ValueError("shell amplitudes cannot be negative")
    k_max = a.size - 1
    n_tail = max(1, a.size // 10)
    floor = float(np.median(a[-n_tail:]))
    if complete_through is None:
        complete_through = k_max
    return ShellSpectrum(t=t, A=a, K_max=k_max, floor=floor, complete_through=complete_through)


def shell_sum(field: Field2D, t: float = 0.0) -> ShellSpectrum:
    """Bin |c_kj| into integer shells K <= sqrt(k^2 + j^2) < K+1.

    Every coefficient lands in exactly one shell, so the shell sums add up
    to the total l1 coefficient mass.  Shells beyond min(|k|_max, j_max)
    are clipped by the rectangle; the complete_through marker records
    where that starts so fits can stay inside."""
    grid = field.grid
    c = to_spectral(field).data
    k = grid.kx_full.astype(float)
    j = np.arange(grid.ny, dtype=float)
    norm = np.sqrt(k[:, None] ** 2 + j[None, :] ** 2)
    shell = np.floor(norm).astype(int)
    amplitudes = np.bincount(shell.ravel(), weights=np.abs(c).ravel())
    complete = int(min(np.abs(k).max(), grid.ny - 1))
    return make_shell_spectrum(t, amplitudes, complete_through=complete)


def subbox_spectrum(u: Field2D, y_bl: float, t: float = 0.0) -> ShellSpectrum:
    """Shell sums of u re-expanded on a fresh Chebyshev grid over [0, y_bl].

    The near-wall region is a thin slice of the native normal domain; the
    field is evaluated spectrally (no filtering) on the slice's own nodes
    so the Chebyshev indices measure structure relative to the slice."""
    grid = u.grid
    if not 0.0 < y_bl <= grid.y_max:
        raise ValueError(f"y_bl must lie in (0, {grid.y_max}], got {y_bl}")
    sub = make_grid(grid.nx, grid.ny, y_bl)
    eta_parent = grid.eta_of_y(sub.y)
    ev = cheb.evaluation_matrix(grid.ny, eta_parent)
    coeffs = cheb.coeffs_from_values(u.data, axis=1)
    values_sub = coeffs @ ev.T
    return shell_sum(Field2D(sub, values_sub), t=t)


def _window_fit(logA: np.ndarray, k1: int, k2: int) -> tuple[float, float, float, float]:
    ks = np.arange(k1, k2 + 1, dtype=float)
    y = logA[k1 : k2 + 1]
    design = np.column_stack([np.ones_like(ks), -np.log(ks), -ks])
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    logc, alpha_plus_1, delta = beta
    rms = float(np.sqrt(np.mean((design @ beta - y) ** 2)))
    return float(logc), float(alpha_plus_1 - 1.0), float(delta), rms


def fit_strip(
    spec: ShellSpectrum,
    min_shells_above_floor: int = 20,
    min_window: int = 10,
    stability_tolerances: tuple[float, float] = (0.02, 0.1),
) -> StripFit | None:
    """Least-squares decay fit over an automatic window, or None if refused.

    The window starts past the low-shell hump (never below K=8) and ends at
    the last shell still a decade above the floor, capped at the last
    complete shell.  Stability slides the window a fifth of its width each
    way and flags the fit when delta or alpha moves more than the given
    tolerances.  A delta below 4/K2 cannot be told from zero at this
    resolution: the reported delta clamps to zero and the resolved flag
    drops."""
    a = spec.A
    cap = min(spec.K_max, spec.complete_through)
    positive = a[: cap + 1] > 0
    above = np.nonzero((a[: cap + 1] > 10.0 * spec.floor) & positive)[0]
    if above.size < min_shells_above_floor:
        return None
    hump = int(np.argmax(a[: cap + 1]))
    k1 = max(8, hump + 1)
    k2 = int(above.max())
    if k2 - k1 < min_window:
        return None
    if not np.all(positive[k1 : k2 + 1]):
        return None

    with np.errstate(divide="ignore"):
        log_a = np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), -np.inf)
    logc, alpha, delta, rms = _window_fit(log_a, k1, k2)

    shift = max(1, round(0.2 * (k2 - k1)))
    drift_delta = 0.0
    drift_alpha = 0.0
    for s in (-shift, shift):
        w1 = max(max(8, hump + 1), k1 + s)
        w2 = min(cap, k2 + s)
        if w2 - w1 < min_window or not np.all(positive[w1 : w2 + 1]):
            continue
        _, alpha_s, delta_s, _ = _window_fit(log_a, w1, w2)
        drift_delta = max(drift_delta, abs(delta_s - delta))
        drift_alpha = max(drift_alpha, abs(alpha_s - alpha))
    stable = drift_delta < stability_tolerances[0] and drift_alpha < stability_tolerances[1]

    resolved = delta >= 4.0 / k2
    return StripFit(
        t=spec.t,
        delta=delta if resolved else 0.0,
        alpha=alpha,
        logC=logc,
        K1=k1,
        K2=k2,
        rms_residual=rms,
        stable=stable,
        delta_resolved=resolved,
        delta_raw=delta,
    )


def track(spectra: list) -> list:
    """Fit every snapshot in a time-ordered series; refusals become None."""
    return [fit_strip(s) for s in spectra]


def _usable(fits: list) -> tuple[list, float]:
    present = [f for f in fits if f is not None]
    good = [f for f in present if f.stable]
    frac_bad = 1.0 - len(good) / len(fits) if fits else 1.0
    return good, frac_bad


def singularity_time_from_decay(fits: list) -> float | None:
    """Extrapolated zero of delta(t) from its final decreasing segment.

    Works on stable, resolution-trusted fits only; returns None when fewer
    than half the fits are usable or no decreasing tail exists."""
    good, frac_bad = _usable(fits)
    if frac_bad > 0.5:
        return None
    pts = [(f.t, f.delta_raw) for f in good if f.delta_resolved]
    if len(pts) < 2:
        return None
    start = len(pts) - 1
    while start > 0 and pts[start - 1][1] > pts[start][1]:
        start -= 1
    segment = pts[start:]
    if len(segment) < 2:
        return None
    ts = np.array([p[0] for p in segment])
    ds = np.array([p[1] for p in segment])
    slope, intercept = np.polyfit(ts, ds, 1)
    if slope >= 0:
        return None
    return float(-intercept / slope)


def delta_minimum(fits: list) -> tuple[float, float] | None:
    """(t, delta) at the smallest stable strip width, or None if unusable."""
    good, frac_bad = _usable(fits)
    if frac_bad > 0.5 or not good:
        return None
    best = min(good, key=lambda f: f.delta)
    return best.t, best.delta
