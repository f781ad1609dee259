"""Boundary-layer solver: streamwise momentum with recovered normal velocity.

The prognostic variable is the streamwise velocity u(x, Y) in layer
coordinates, driven by the outer slip profile through the steady forcing
U dU/dx and diffused only in the normal direction.  The normal velocity
V is not stepped; it is rebuilt each step from continuity,

    V(x, Y) = -int_0^Y du/dx dY',

with a Chebyshev antiderivative under the grid map.  Time stepping is the
same two-step IMEX family as the full-equation solver, but the implicit
operator is identical for every x column, so one factorization covers the
whole field and the solves stay in physical x space.

The solution is expected to lose regularity in finite time; the run loop
watches the streamwise gradient and stops gracefully once it grows by a
configured factor, keeping the last snapshots for spectrum fitting.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.special import erfc

from . import chebyshev as cheb
from .field import Field2D, l2_norm_sq
from .flow import OuterFlow, PhysicalParams, outer_flow
from .grid import Grid2D, make_grid
from .helmholtz import HelmholtzSolver
from .ns import BlowUpError


@dataclass
class PrandtlState:
    """One time level of the layer solution."""

    t: float
    u: Field2D
    V: Field2D
    wall_shear: np.ndarray
    step_index: int = 0
    u_prev: Field2D | None = None
    adv_prev: np.ndarray | None = None

    @property
    def Y_max_P(self) -> float:
        return self.u.grid.y_max


@dataclass
class PrandtlMachinery:
    """Prebuilt operators for one (grid, outer flow, dt) combination."""

    grid: Grid2D
    outer: OuterFlow
    dt: float
    wall_velocity: float
    helm_first: HelmholtzSolver
    helm_main: HelmholtzSolver
    forcing: np.ndarray  # U_inf * dU_inf/dx, one value per x node
    dealias: bool = True
    cfl_threshold: float = 0.9
    _cfl_warned: bool = field(default=False, repr=False)


def build_prandtl_machinery(
    grid: Grid2D,
    params: PhysicalParams,
    dt: float,
    outer: OuterFlow | None = None,
    wall_velocity: float | None = None,
    dealias: bool = True,
) -> PrandtlMachinery:
    """Factor the implicit operators and freeze the outer-flow forcing.

    The implicit shift is uniform across x, so the per-mode machinery of
    the Helmholtz solver is fed a constant shift vector of length nx and
    the solves run directly on physical columns.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if outer is None:
        outer = outer_flow(grid, params)
    if wall_velocity is None:
        wall_velocity = -params.comoving_speed
    ones = np.ones(grid.nx)
    return PrandtlMachinery(
        grid=grid,
        outer=outer,
        dt=dt,
        wall_velocity=float(wall_velocity),
        helm_first=HelmholtzSolver(grid, ones / dt),
        helm_main=HelmholtzSolver(grid, 1.5 * ones / dt),
        forcing=outer.u * outer.dudx,
        dealias=dealias,
    )


def _dudx(grid: Grid2D, values: np.ndarray) -> np.ndarray:
    c = np.fft.rfft(values, axis=0)
    ik = 1j * grid.kx_half.astype(float)
    if grid.nx % 2 == 0:
        ik[-1] = 0.0
    return np.fft.irfft(ik[:, None] * c, n=grid.nx, axis=0)


def _dealias_x(grid: Grid2D, values: np.ndarray) -> np.ndarray:
    c = np.fft.rfft(values, axis=0)
    c[~grid.dealias_keep, :] = 0.0
    return np.fft.irfft(c, n=grid.nx, axis=0)


def normal_velocity(grid: Grid2D, dudx: np.ndarray) -> np.ndarray:
    """Continuity closure: minus the wall-anchored antiderivative of du/dx.

    The antiderivative convention zeroes the series at the wall end, so the
    impermeability value drops out exactly; it is still pinned afterwards
    to keep the invariant bitwise."""
    integrand = dudx * grid.dy_deta[None, :]
    coeffs = cheb.coeffs_from_values(integrand, axis=1)
    v = -cheb.values_from_coeffs(cheb.antiderivative_coeffs(coeffs, axis=1), axis=1)
    v[:, 0] = 0.0
    return v


def _advection(machinery: PrandtlMachinery, u_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Explicit tendency u du/dx + V du/dY - U dU/dx, and V itself."""
    grid = machinery.grid
    dudx = _dudx(grid, u_values)
    v = normal_velocity(grid, dudx)
    dudy = grid.ddy(u_values, axis=1)
    if machinery.dealias:
        ua = _dealias_x(grid, u_values)
        dxa = _dealias_x(grid, dudx)
        va = _dealias_x(grid, v)
        dya = _dealias_x(grid, dudy)
        n = _dealias_x(grid, ua * dxa + va * dya) - machinery.forcing[:, None]
    else:
        n = u_values * dudx + v * dudy - machinery.forcing[:, None]
    return n, v


def prandtl_init(
    grid: Grid2D,
    outer: OuterFlow,
    wall_velocity: float,
    t0: float = 1.0e-4,
) -> PrandtlState:
    """Impulsive-start layer regularized by a short diffusion time.

    The outer datum and the wall value are incompatible at t=0, so the
    state starts at t0 from the self-similar flat-wall diffusion profile,
    which satisfies both boundary values exactly.
    """
    if t0 <= 0:
        raise ValueError(f"t0 must be positive, got {t0}")
    profile = erfc(grid.y / (2.0 * np.sqrt(t0)))
    u = outer.u[:, None] + (wall_velocity - outer.u)[:, None] * profile[None, :]
    dudx = _dudx(grid, u)
    return PrandtlState(
        t=t0,
        u=Field2D(grid, u),
        V=Field2D(grid, normal_velocity(grid, dudx)),
        wall_shear=grid.ddy(u, axis=1)[:, 0].copy(),
    )


def prandtl_step(state: PrandtlState, dt: float, machinery: PrandtlMachinery) -> PrandtlState:
    """One IMEX step; first step after init runs the backward-Euler pair."""
    if abs(dt - machinery.dt) > 1e-15 * max(dt, machinery.dt):
        raise ValueError(f"machinery was factored for dt={machinery.dt}, got {dt}")
    grid = machinery.grid
    u = state.u.data
    adv, _ = _advection(machinery, u)

    first = state.u_prev is None or state.adv_prev is None
    if first:
        rhs = u / dt - adv
        solver = machinery.helm_first
    else:
        rhs = (4.0 * u - state.u_prev.data) / (2.0 * dt) - 2.0 * adv + state.adv_prev
        solver = machinery.helm_main

    u_new = solver.solve(
        rhs,
        bc_bottom=np.full(grid.nx, machinery.wall_velocity),
        bc_top=machinery.outer.u.astype(float),
    )
    if not np.all(np.isfinite(u_new)):
        raise BlowUpError(state.t, "streamwise velocity")

    dudx_new = _dudx(grid, u_new)
    v_new = normal_velocity(grid, dudx_new)
    t_new = state.t + dt

    u_max = np.abs(u_new).max()
    cfl = u_max * dt / (2.0 * np.pi / grid.nx)
    if cfl > machinery.cfl_threshold and not machinery._cfl_warned:
        machinery._cfl_warned = True
        warnings.warn(
            f"advective CFL number {cfl:.2f} exceeds {machinery.cfl_threshold} "
            f"at t={t_new:.4f}; results may be unstable"
        )

    return PrandtlState(
        t=t_new,
        u=Field2D(grid, u_new),
        V=Field2D(grid, v_new),
        wall_shear=grid.ddy(u_new, axis=1)[:, 0].copy(),
        step_index=state.step_index + 1,
        u_prev=state.u,
        adv_prev=adv,
    )


def continuity_residual(state: PrandtlState) -> float:
    """Max-norm of du/dx + dV/dY, which the V recovery should null out."""
    grid = state.u.grid
    dudx = _dudx(grid, state.u.data)
    dvdy = grid.ddy(state.V.data, axis=1)
    return float(np.abs(dudx + dvdy).max())


def layer_vorticity(state: PrandtlState) -> np.ndarray:
    """Layer vorticity, minus the normal shear of the streamwise velocity."""
    return -state.u.grid.ddy(state.u.data, axis=1)


def layer_enstrophy(state: PrandtlState) -> float:
    """Squared L2 norm of the layer vorticity over the whole strip."""
    return l2_norm_sq(Field2D(state.u.grid, layer_vorticity(state)))


def _positive_components(grid: Grid2D, omega: np.ndarray, threshold_frac: float = 1.0e-6):
    """Label connected regions of positive layer vorticity, x-periodic."""
    mask = omega > threshold_frac * np.abs(omega).max()
    labels, count = ndimage.label(mask)
    if count == 0:
        return labels, []
    # merge labels across the periodic seam
    merged = {}
    for j in range(grid.ny):
        a, b = labels[0, j], labels[-1, j]
        if a > 0 and b > 0 and a != b:
            ra, rb = merged.get(a, a), merged.get(b, b)
            lo, hi = min(ra, rb), max(ra, rb)
            for key, val in list(merged.items()):
                if val == hi:
                    merged[key] = lo
            merged[hi] = lo
    if merged:
        for src in sorted(merged, reverse=True):
            labels[labels == src] = merged[src]
    ids = [i for i in np.unique(labels) if i > 0]
    return labels, ids


def detached_recirculation(state: PrandtlState) -> bool:
    """Whether a positive-vorticity region exists that never touches the wall."""
    omega = layer_vorticity(state)
    labels, ids = _positive_components(state.u.grid, omega)
    for i in ids:
        rows = np.nonzero(labels == i)[1]
        if rows.min() >= 1:
            return True
    return False


def spike_width_cells(state: PrandtlState) -> int | None:
    """Streamwise cell count of the detached lobe near its top.

    The detached positive-vorticity lobe starts wide and flat; close to the
    singularity it grows a tall thin tongue.  The width is counted on the
    grid row nearest 80% of the lobe's own vertical extent, so the tongue
    dominates once it forms.  Returns None while no detached lobe exists.
    """
    grid = state.u.grid
    omega = layer_vorticity(state)
    labels, ids = _positive_components(grid, omega)
    best = None
    best_size = 0
    for i in ids:
        cells = labels == i
        rows = np.nonzero(cells)[1]
        if rows.min() >= 1 and cells.sum() > best_size:
            best, best_size = cells, int(cells.sum())
    if best is None:
        return None
    heights = grid.y[np.nonzero(best)[1]]
    y_lo, y_hi = heights.min(), heights.max()
    y_star = y_lo + 0.8 * (y_hi - y_lo)
    j_star = int(np.argmin(np.abs(grid.y - y_star)))
    return int(best[:, j_star].sum())


@dataclass
class PrandtlRecord:
    """Scalar diagnostics sampled along a run."""

    t: float
    enstrophy: float
    min_wall_shear: float
    max_dudx: float
    recirculating: bool
    spike_cells: int | None


@dataclass
class PrandtlRunConfig:
    """Knobs of a layer run."""

    nx: int = 512
    ny: int = 129
    y_max: float = 20.0
    cluster_height: float = 3.0
    dt: float = 2.0e-4
    t0: float = 1.0e-4
    t_end: float = 1.05
    snapshot_every: float = 0.01
    sample_every: float = 2.0e-3
    dealias: bool = True
    gradient_growth_limit: float = 1.0e3
    keep_last: int = 10

    def validate(self):
        problems = []
        if self.dt <= 0:
            problems.append("dt must be positive")
        if self.t0 <= 0:
            problems.append("t0 must be positive")
        if self.t_end <= self.t0:
            problems.append("t_end must exceed t0")
        for name in ("snapshot_every", "sample_every"):
            if getattr(self, name) <= 0:
                problems.append(f"{name} must be positive")
        if self.gradient_growth_limit <= 1:
            problems.append("gradient_growth_limit must exceed 1")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass
class PrandtlRunResult:
    """Sampled series, final (or last valid) state, and stop provenance."""

    config: PrandtlRunConfig
    records: list
    final_state: PrandtlState
    last_states: list
    completed: bool
    stop_reason: str | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    @property
    def enstrophy_series(self) -> np.ndarray:
        return np.array([r.enstrophy for r in self.records])


def prandtl_run(
    config: PrandtlRunConfig,
    on_snapshot=None,
    initial_state: PrandtlState | None = None,
    machinery: PrandtlMachinery | None = None,
) -> PrandtlRunResult:
    """March the layer to t_end or to controlled gradient blow-up.

    The streamwise gradient is the singularity proxy: once its maximum
    exceeds gradient_growth_limit times the initial value, the run stops
    and reports the event instead of erroring.  The most recent states are
    retained for spectrum fitting regardless of how the run ends.
    """
    config.validate()
    if machinery is None:
        grid = make_grid(config.nx, config.ny, config.y_max, cluster_height=config.cluster_height)
        params = PhysicalParams()
        machinery = build_prandtl_machinery(grid, params, config.dt, dealias=config.dealias)
    grid = machinery.grid
    if initial_state is None:
        state = prandtl_init(grid, machinery.outer, machinery.wall_velocity, t0=config.t0)
    else:
        state = initial_state

    every_sample = max(1, round(config.sample_every / config.dt))
    every_snapshot = max(1, round(config.snapshot_every / config.dt))
    n_steps = int(round((config.t_end - state.t) / config.dt))
    gradient_floor = np.abs(_dudx(grid, state.u.data)).max()
    tail: deque = deque(maxlen=config.keep_last)

    def sample(s: PrandtlState, max_dudx: float) -> PrandtlRecord:
        return PrandtlRecord(
            t=s.t,
            enstrophy=layer_enstrophy(s),
            min_wall_shear=float(s.wall_shear.min()),
            max_dudx=max_dudx,
            recirculating=detached_recirculation(s),
            spike_cells=spike_width_cells(s),
        )

    records = [sample(state, gradient_floor)]
    tail.append(state)
    if on_snapshot is not None:
        on_snapshot(state)

    completed = True
    stop_reason = None
    for n in range(1, n_steps + 1):
        try:
            state = prandtl_step(state, config.dt, machinery)
        except BlowUpError as err:
            completed = False
            stop_reason = str(err)
            break
        max_dudx = float(np.abs(_dudx(grid, state.u.data)).max())
        tail.append(state)
        if n % every_sample == 0 or n == n_steps:
            records.append(sample(state, max_dudx))
        if on_snapshot is not None and n % every_snapshot == 0:
            on_snapshot(state)
        if max_dudx > config.gradient_growth_limit * gradient_floor:
            completed = False
            stop_reason = (
                f"streamwise gradient grew {max_dudx / gradient_floor:.1f}x "
                f"past the configured limit at t={state.t:.6f}"
            )
            break

    return PrandtlRunResult(
        config=config,
        records=records,
        final_state=state,
        last_states=list(tail),
        completed=completed,
        stop_reason=stop_reason,
    )
