"""Wall and integral diagnostics for boundary-layer runs.

Everything here is a pure function of field snapshots; nothing mutates
solver state.  Integrals over the near-wall box [0, 2*pi] x [0, y_bl] use
exact x-Parseval sums plus Chebyshev re-evaluation of the wall-normal
profiles on a fresh Gauss-Lobatto grid of the sub-interval, so no
interpolation error enters the budget terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RectBivariateSpline

from . import chebyshev as cheb
from .field import Field2D, to_physical
from .grid import Grid2D


@dataclass
class DiagnosticsRecord:
    """One time sample of the near-wall budget quantities."""

    t: float
    enstrophy: float
    dissipation: float
    ip_term: float
    nt_term: float
    energy: float
    wall_dpdx: np.ndarray
    wall_omega: np.ndarray
    y_bl: float


def wall_pressure_gradient(omega: Field2D, reynolds: float) -> np.ndarray:
    """Streamwise wall pressure gradient -(1/Re) d(omega)/dy at y=0.

    The x-mean is projected out: a single-valued periodic pressure has a
    mean-free gradient, while the raw wall trace carries the mean wall
    vorticity flux, which is a time-discretization artifact here.
    """
    from .field import differentiate

    doy = differentiate(omega, axis=1)
    trace = -to_physical(doy).data[:, 0] / reynolds
    return trace - trace.mean()


def _halfspec_weights(nx: int) -> np.ndarray:
    """Parseval weights for rfft/nx-normalized coefficients of a real field."""
    m = nx // 2 + 1
    w = np.full(m, 2.0)
    w[0] = 1.0
    if nx % 2 == 0:
        w[-1] = 1.0
    return w


def _subbox_nodes(grid: Grid2D, y_top: float, m: int):
    """Gauss-Lobatto nodes of [0, y_top] with their Clenshaw-Curtis setup."""
    xi = cheb.gauss_lobatto(m)
    y_new = y_top * (1.0 - xi) / 2.0
    eta_new = grid.eta_of_y(y_new)
    ev = cheb.evaluation_matrix(grid.ny, eta_new)
    return ev, m


def _subbox_sq_integral(grid: Grid2D, hats: np.ndarray, y_top: float) -> float:
    """Integral of sum_k w_k |f_k(y)|^2 over the box, exactly in x.

    hats: (m, ny) physical-y values of the rfft/nx mode profiles.  The
    profiles are degree ny-1 polynomials of eta, so re-evaluating them on
    2*ny+1 Gauss-Lobatto nodes of [0, y_top] makes the squared integrand a
    polynomial the Clenshaw-Curtis rule integrates exactly (affine maps).
    """
    nx = grid.nx
    coeffs = cheb.coeffs_from_values(hats, axis=1)
    m = 2 * grid.ny + 1
    ev, _ = _subbox_nodes(grid, y_top, m)
    prof = coeffs @ ev.T  # (modes, m)
    wk = _halfspec_weights(nx)
    integrand = wk @ (prof.real**2 + prof.imag**2)  # (m,)
    moments = cheb.quad_moments(m)
    c = cheb.coeffs_from_values(integrand)
    return 2.0 * np.pi * (y_top / 2.0) * float(c @ moments)


def _wall_row_at(grid: Grid2D, values: np.ndarray, y0: float) -> np.ndarray:
    """Evaluate a physical (nx, ny) field on the line y = y0."""
    coeffs = cheb.coeffs_from_values(values, axis=1)
    row = cheb.evaluation_matrix(grid.ny, grid.eta_of_y(np.array([y0])))[0]
    return coeffs @ row


def _line_integral(grid: Grid2D, f: np.ndarray, g: np.ndarray) -> float:
    """Periodic trapezoid of f*g over one period (exact for band-limited)."""
    return 2.0 * np.pi / grid.nx * float(np.dot(f, g))


def enstrophy_budget(
    t: float,
    omega: Field2D,
    u: Field2D,
    v: Field2D,
    reynolds: float,
    y_bl: float = 0.5,
) -> DiagnosticsRecord:
    """All near-wall budget integrals for one snapshot.

    The budget identity these feed is
        dOmega/dt = -dissipation + 2*ip_term + nt_term
    which holds exactly when vorticity advection through the box top is
    negligible (the same smallness that makes nt_term negligible).
    """
    grid = omega.grid
    if y_bl > grid.y_max:
        raise ValueError(f"y_bl={y_bl} exceeds the domain height {grid.y_max}")
    from .field import differentiate

    om_phys = to_physical(omega).data
    doy_phys = to_physical(differentiate(omega, axis=1)).data
    om_hat = np.fft.rfft(om_phys, axis=0) / grid.nx
    dox_hat = np.fft.rfft(to_physical(differentiate(omega, axis=0)).data, axis=0) / grid.nx
    doy_hat = np.fft.rfft(doy_phys, axis=0) / grid.nx

    enstrophy = _subbox_sq_integral(grid, om_hat, y_bl)
    grad_sq = _subbox_sq_integral(grid, dox_hat, y_bl) + _subbox_sq_integral(
        grid, doy_hat, y_bl
    )
    dissipation = 2.0 / reynolds * grad_sq

    wall_omega = om_phys[:, 0].copy()
    wall_dpdx = wall_pressure_gradient(omega, reynolds)
    ip_term = _line_integral(grid, wall_omega, wall_dpdx)

    om_top = _wall_row_at(grid, om_phys, y_bl)
    doy_top = _wall_row_at(grid, doy_phys, y_bl)
    nt_term = 2.0 / reynolds * _line_integral(grid, om_top, doy_top)

    u_hat = np.fft.rfft(to_physical(u).data, axis=0) / grid.nx
    v_hat = np.fft.rfft(to_physical(v).data, axis=0) / grid.nx
    energy = 0.5 * (
        _subbox_sq_integral(grid, u_hat, y_bl) + _subbox_sq_integral(grid, v_hat, y_bl)
    )

    return DiagnosticsRecord(
        t=float(t),
        enstrophy=enstrophy,
        dissipation=dissipation,
        ip_term=ip_term,
        nt_term=nt_term,
        energy=energy,
        wall_dpdx=wall_dpdx,
        wall_omega=wall_omega,
        y_bl=float(y_bl),
    )


def budget_residual_series(records: list[DiagnosticsRecord]):
    """Budget residual from a uniformly sampled record series.

    dOmega/dt comes from centered 4th-order differences, so the result
    covers the interior samples records[2:-2].  Returns (times, residual,
    bound) with bound = 0.01 * max(|terms|) per sample.
    """
    t = np.array([r.t for r in records])
    if len(records) < 5:
        raise ValueError("need at least 5 samples for the 4th-order derivative")
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-6):
        raise ValueError("budget residual needs uniform sampling")
    om = np.array([r.enstrophy for r in records])
    rhs = np.array([-r.dissipation + 2.0 * r.ip_term + r.nt_term for r in records])
    dom = (om[:-4] - 8.0 * om[1:-3] + 8.0 * om[3:-1] - om[4:]) / (12.0 * dt[0])
    terms = np.stack(
        [
            np.array([r.dissipation for r in records]),
            np.abs([2.0 * r.ip_term for r in records]),
            np.abs([r.nt_term for r in records]),
        ]
    )
    bound = 0.01 * terms.max(axis=0)[2:-2]
    return t[2:-2], dom - rhs[2:-2], bound


def _periodic_curvature(f: np.ndarray, dx: float) -> np.ndarray:
    """Fourth-order centered second derivative with periodic wrap."""
    return (
        -np.roll(f, 2)
        + 16.0 * np.roll(f, 1)
        - 30.0 * f
        + 16.0 * np.roll(f, -1)
        - np.roll(f, -2)
    ) / (12.0 * dx * dx)


def detect_ls(
    times: np.ndarray,
    dpdx_series: np.ndarray,
    x: np.ndarray,
    window: float = 0.5,
    persistence: int = 3,
):
    """Earliest time an inflection of dp/dx forms near its maximum.

    Scans each sample for a sign change of the x-curvature of the wall
    pressure gradient within +-window of the instantaneous argmax, and
    returns the start of the first run of `persistence` consecutive
    positive detections.  Returns None when no such run exists.
    """
    times = np.asarray(times, dtype=float)
    dpdx_series = np.atleast_2d(np.asarray(dpdx_series, dtype=float))
    if dpdx_series.shape[0] != times.size:
        raise ValueError("one dp/dx trace per time sample required")
    if times.size < persistence:
        return None
    nx = x.size
    dx = x[1] - x[0]
    half = int(round(window / dx))
    offsets = np.arange(-half, half + 1)
    flags = np.zeros(times.size, dtype=bool)
    for i, trace in enumerate(dpdx_series):
        curv = _periodic_curvature(trace, dx)
        idx = (np.argmax(trace) + offsets) % nx
        g = curv[idx]
        flags[i] = bool(np.any(g[:-1] * g[1:] < 0.0))
    run = 0
    for i, f in enumerate(flags):
        run = run + 1 if f else 0
        if run >= persistence:
            return float(times[i - persistence + 1])
    return None


def rescaled_enstrophy_compare(
    ns_times: np.ndarray,
    ns_enstrophy: np.ndarray,
    p_times: np.ndarray,
    p_enstrophy: np.ndarray,
    reynolds: float,
    window: tuple[float, float],
) -> float:
    """Sup over the window of the relative gap between the rescaled
    full-equation enstrophy and the boundary-layer one.

    The full-equation series is divided by sqrt(Re); the boundary-layer
    series is linearly interpolated onto the full-equation sample times.
    """
    lo, hi = window
    lo = max(lo, p_times[0], ns_times[0])
    hi = min(hi, p_times[-1], ns_times[-1])
    if hi <= lo:
        raise ValueError("series time windows do not overlap")
    mask = (ns_times >= lo) & (ns_times <= hi)
    t = ns_times[mask]
    ns_rescaled = ns_enstrophy[mask] / np.sqrt(reynolds)
    p_interp = np.interp(t, p_times, p_enstrophy)
    return float(np.max(np.abs(ns_rescaled - p_interp) / p_interp))


@dataclass
class Pathline:
    """One particle trace; x is unwrapped (continuous across the seam)."""

    seed: tuple[float, float]
    times: np.ndarray
    positions: np.ndarray  # (n, 2)
    exited: bool

    @property
    def wraps(self) -> int:
        """Net number of full periods traversed in x."""
        return int(np.trunc((self.positions[-1, 0] - self.positions[0, 0]) / (2 * np.pi)))


class _SnapshotInterpolant:
    """Bicubic-in-space, linear-in-time velocity sampler over snapshots."""

    def __init__(self, snapshots):
        self.times = np.array([s[0] for s in snapshots], dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshots must be strictly increasing in time")
        self.grid = snapshots[0][1].grid
        grid = self.grid
        pad = 3
        x_ext = np.concatenate(
            [grid.x[-pad:] - 2 * np.pi, grid.x, grid.x[:pad] + 2 * np.pi]
        )
        y_asc = grid.y  # ascending already (wall first)
        self._splines = []
        for t, u, v in snapshots:
            su = self._build(x_ext, y_asc, to_physical(u).data, pad)
            sv = self._build(x_ext, y_asc, to_physical(v).data, pad)
            self._splines.append((su, sv))

    @staticmethod
    def _build(x_ext, y, data, pad):
        ext = np.concatenate([data[-pad:], data, data[:pad]], axis=0)
        return RectBivariateSpline(x_ext, y, ext, kx=3, ky=3)

    def __call__(self, t, pos):
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        i = min(max(i, 0), len(self.times) - 2)
        th = (t - self.times[i]) / (self.times[i + 1] - self.times[i])
        th = min(max(th, 0.0), 1.0)
        xq = np.mod(pos[:, 0], 2 * np.pi)
        yq = pos[:, 1]
        out = np.empty_like(pos)
        for comp in range(2):
            a = self._splines[i][comp].ev(xq, yq)
            b = self._splines[i + 1][comp].ev(xq, yq)
            out[:, comp] = (1.0 - th) * a + th * b
        return out


def trace_pathlines(
    snapshots,
    seeds,
    t_start: float,
    t_end: float,
    dt_path: float | None = None,
) -> list[Pathline]:
    """Integrate particle paths through a sequence of velocity snapshots.

    snapshots: sequence of (t, u: Field2D, v: Field2D), sorted in t and
    covering [t_start, t_end].  Classical 4-stage Runge-Kutta with bicubic
    space interpolation and linear time interpolation.  Particles leaving
    0 <= y <= y_max are frozen and marked exited.
    """
    interp = _SnapshotInterpolant(snapshots)
    if t_start < interp.times[0] - 1e-12 or t_end > interp.times[-1] + 1e-12:
        raise ValueError("snapshots do not cover the requested interval")
    spacing = float(np.min(np.diff(interp.times)))
    if dt_path is None:
        dt_path = min(1e-3, spacing / 10.0)
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    n_steps = int(np.ceil((t_end - t_start) / dt_path))
    times = t_start + np.arange(n_steps + 1) * dt_path
    times[-1] = t_end
    y_max = interp.grid.y_max
    pos = seeds.copy()
    alive = np.ones(len(seeds), dtype=bool)
    history = np.empty((n_steps + 1, len(seeds), 2))
    history[0] = pos
    for n in range(n_steps):
        h = times[n + 1] - times[n]
        t = times[n]
        k1 = interp(t, pos)
        k2 = interp(t + h / 2, pos + h / 2 * k1)
        k3 = interp(t + h / 2, pos + h / 2 * k2)
        k4 = interp(t + h, pos + h * k3)
        step = h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        pos = np.where(alive[:, None], pos + step, pos)
        inside = (pos[:, 1] >= 0.0) & (pos[:, 1] <= y_max)
        alive &= inside
        history[n + 1] = pos
    out = []
    for j, seed in enumerate(seeds):
        out.append(
            Pathline(
                seed=(float(seed[0]), float(seed[1])),
                times=times.copy(),
                positions=history[:, j, :].copy(),
                exited=not bool(alive[j]),
            )
        )
    return out
