"""Full-equation solver: vorticity transport + streamfunction coupling.

The fields live on a Fourier x Chebyshev grid; time stepping is IMEX with
explicit 2-step extrapolation of advection and implicit 2-step backward
differentiation of diffusion (first step: explicit/implicit Euler pair).
Each step solves, per streamwise mode,

    (3 Re / (2 dt) + k^2 - d2/dy2) w = Re [ (4 w_n - w_{n-1}) / (2 dt)
                                            - 2 N_n + N_{n-1} ]

with the wall value of w closed through the influence matrix so the
reconstructed velocity satisfies no-slip in the comoving frame, where the
wall moves with -U_c.  The streamfunction solve (k^2 - d2/dy2) psi = w
pins psi = 0 at the wall and the steady outer streamfunction value at the
top, where vorticity is held at zero.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import chebyshev as cheb
from .field import Field2D
from .flow import PhysicalParams, euler_streamfunction, mollified_vorticity
from .grid import Grid2D, make_grid
from .helmholtz import HelmholtzSolver
from .influence import InfluenceMatrix, build_influence_matrix

log = logging.getLogger(__name__)


class BlowUpError(RuntimeError):
    """A field stopped being finite; carries the time it happened."""

    def __init__(self, t: float, detail: str = ""):
        self.t = t
        super().__init__(f"solution lost finiteness at t={t:.6f}" + (f" ({detail})" if detail else ""))


@dataclass
class NsState:
    """One time level of the coupled vorticity/streamfunction system."""

    t: float
    omega: Field2D
    psi: Field2D
    u: Field2D
    v: Field2D
    step_index: int = 0
    omega_prev: Field2D | None = None
    adv_prev: Field2D | None = None


@dataclass
class NsMachinery:
    """Prebuilt solvers for one (grid, Re, dt) combination."""

    grid: Grid2D
    params: PhysicalParams
    reynolds: float
    dt: float
    helm_first: HelmholtzSolver
    helm_main: HelmholtzSolver
    helm_psi: HelmholtzSolver
    infl_first: InfluenceMatrix
    infl_main: InfluenceMatrix
    psi_top_hat: np.ndarray
    advection: bool = True
    dealias: bool = True
    cfl_threshold: float = 0.9
    omega_wall_hat: np.ndarray | None = None
    _cfl_warned: bool = field(default=False, repr=False)

    @property
    def wall_velocity(self) -> float:
        return self.infl_main.wall_velocity


def build_ns_machinery(
    grid: Grid2D,
    params: PhysicalParams,
    reynolds: float,
    dt: float,
    advection: bool = True,
    dealias: bool = True,
    wall_velocity: float | None = None,
) -> NsMachinery:
    """Assemble the per-(grid, Re, dt) solver battery.

    wall_velocity defaults to the comoving-frame wall speed -U_c; tests
    exercising symmetry classes may override it.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if reynolds <= 0:
        raise ValueError(f"Reynolds number must be positive, got {reynolds}")
    k2 = grid.kx_half.astype(float) ** 2
    sigma_first = reynolds / dt
    sigma_main = 1.5 * reynolds / dt
    if wall_velocity is None:
        wall_velocity = -params.comoving_speed
    psi_top = euler_streamfunction(params, grid.x, grid.y_max)
    return NsMachinery(
        grid=grid,
        params=params,
        reynolds=float(reynolds),
        dt=float(dt),
        helm_first=HelmholtzSolver(grid, k2 + sigma_first),
        helm_main=HelmholtzSolver(grid, k2 + sigma_main),
        helm_psi=HelmholtzSolver(grid, k2),
        infl_first=build_influence_matrix(grid, sigma_first, wall_velocity),
        infl_main=build_influence_matrix(grid, sigma_main, wall_velocity),
        psi_top_hat=np.fft.rfft(psi_top) / grid.nx,
        advection=advection,
        dealias=dealias,
    )


def _rfft(data: np.ndarray, nx: int) -> np.ndarray:
    return np.fft.rfft(data, axis=0) / nx


def _irfft(hat: np.ndarray, nx: int) -> np.ndarray:
    return np.fft.irfft(hat * nx, n=nx, axis=0)


def _ddx_hat(grid: Grid2D, hat: np.ndarray) -> np.ndarray:
    ik = 1j * grid.kx_half.astype(float)
    out = ik[:, None] * hat
    if grid.nx % 2 == 0:
        out[-1] = 0.0  # odd derivative has no consistent Nyquist signal
    return out


def _velocity_hats(machinery: NsMachinery, psi_hat: np.ndarray):
    u_hat = machinery.grid.ddy(psi_hat, axis=1)
    v_hat = -_ddx_hat(machinery.grid, psi_hat)
    return u_hat, v_hat


def _advection_hat(machinery: NsMachinery, om_hat, u_hat, v_hat) -> np.ndarray:
    """Convective term u d(omega)/dx + v d(omega)/dy, 2/3-rule dealiased in x."""
    grid = machinery.grid
    mask = grid.dealias_keep[:, None] if machinery.dealias else 1.0
    dox_hat = _ddx_hat(grid, om_hat)
    doy_hat = grid.ddy(om_hat, axis=1)
    u = _irfft(u_hat * mask, grid.nx)
    v = _irfft(v_hat * mask, grid.nx)
    dox = _irfft(dox_hat * mask, grid.nx)
    doy = _irfft(doy_hat * mask, grid.nx)
    n_hat = _rfft(u * dox + v * doy, grid.nx)
    if machinery.dealias:
        n_hat *= mask
    return n_hat


def _check_poisson(machinery: NsMachinery, psi_hat, om_hat):
    """Abort when the streamfunction stops satisfying its own equation.

    The threshold is 1e-9*|omega| with a floor at the roundoff level of
    evaluating the collocation operator (eps*|d2|*|psi|), below which the
    residual is not measurable in double precision.
    """
    grid = machinery.grid
    d2 = grid.d2_matrix()
    k2 = grid.kx_half.astype(float) ** 2
    res = k2[:, None] * psi_hat - psi_hat @ d2.T - om_hat
    resid = np.abs(res[:, 1:-1]).max()
    floor = 50.0 * np.finfo(float).eps * np.abs(d2).max() * np.abs(psi_hat).max()
    thresh = max(1e-9 * np.abs(om_hat).max(), floor)
    if resid > thresh:
        raise ArithmeticError(
            f"streamfunction solve residual {resid:.3e} exceeds {thresh:.3e} "
            f"(|omega|={np.abs(om_hat).max():.3e})"
        )


def _reconstruct(machinery: NsMachinery, t, om_hat, psi_hat, step_index, omega_prev, adv_prev):
    grid = machinery.grid
    u_hat, v_hat = _velocity_hats(machinery, psi_hat)
    omega = Field2D(grid, _irfft(om_hat, grid.nx))
    psi = Field2D(grid, _irfft(psi_hat, grid.nx))
    u = Field2D(grid, _irfft(u_hat, grid.nx))
    v = Field2D(grid, _irfft(v_hat, grid.nx))
    if not np.isfinite(omega.data).all():
        raise BlowUpError(t, "vorticity")
    return NsState(
        t=t,
        omega=omega,
        psi=psi,
        u=u,
        v=v,
        step_index=step_index,
        omega_prev=omega_prev,
        adv_prev=adv_prev,
    )


def _rfft_1d(values: np.ndarray, nx: int) -> np.ndarray:
    return np.fft.rfft(values) / nx


def state_from_vorticity(
    grid: Grid2D,
    params: PhysicalParams,
    omega_values: np.ndarray,
    t: float = 0.0,
    step_index: int = 0,
    psi_top: np.ndarray | float | None = None,
) -> NsState:
    """State with streamfunction and velocity induced by a vorticity field.

    The streamfunction solve pins zero at the wall and, by default, the
    steady outer value at the top; pass ``psi_top`` (scalar or length-nx
    row) to override the top value, e.g. for controlled experiments with
    a quiescent far field.  History is left empty; restarts attach it
    separately.
    """
    solver = HelmholtzSolver(grid, grid.kx_half.astype(float) ** 2)
    om_hat = _rfft(omega_values, grid.nx)
    if psi_top is None:
        top_row = euler_streamfunction(params, grid.x, grid.y_max)
    else:
        top_row = np.broadcast_to(np.asarray(psi_top, dtype=float), (grid.nx,))
    psi_hat = solver.solve(
        om_hat,
        bc_bottom=np.zeros(om_hat.shape[0], complex),
        bc_top=_rfft_1d(top_row, grid.nx),
    )
    d2 = grid.d2_matrix()
    k2 = grid.kx_half.astype(float) ** 2
    res = np.abs((k2[:, None] * psi_hat - psi_hat @ d2.T - om_hat)[:, 1:-1]).max()
    floor = 50.0 * np.finfo(float).eps * np.abs(d2).max() * max(np.abs(psi_hat).max(), 1.0)
    if res > max(1e-9 * np.abs(om_hat).max(), floor):
        raise ArithmeticError(f"streamfunction residual {res:.3e} at t={t}")
    u_hat = grid.ddy(psi_hat, axis=1)
    v_hat = -_ddx_hat(grid, psi_hat)
    return NsState(
        t=t,
        omega=Field2D(grid, np.asarray(omega_values, dtype=float)),
        psi=Field2D(grid, _irfft(psi_hat, grid.nx)),
        u=Field2D(grid, _irfft(u_hat, grid.nx)),
        v=Field2D(grid, _irfft(v_hat, grid.nx)),
        step_index=step_index,
    )


def ns_init(grid: Grid2D, params: PhysicalParams) -> NsState:
    """Mollified vortex-row vorticity with its induced streamfunction.

    The initial velocity does not satisfy no-slip (impulsive start); the
    first accepted step generates the compensating wall vorticity.
    """
    return state_from_vorticity(grid, params, mollified_vorticity(grid, params))


def ns_step(state: NsState, dt: float, machinery: NsMachinery) -> NsState:
    """Advance one time level; returns a new state, input untouched."""
    if abs(dt - machinery.dt) > 1e-15 * machinery.dt:
        raise ValueError("dt differs from the one the machinery was built for")
    grid = machinery.grid
    re = machinery.reynolds
    nx = grid.nx

    om_hat = _rfft(state.omega.data, nx)
    psi_hat = _rfft(state.psi.data, nx)
    u_hat, v_hat = _velocity_hats(machinery, psi_hat)

    first = state.omega_prev is None or state.adv_prev is None
    if machinery.advection:
        n_hat = _advection_hat(machinery, om_hat, u_hat, v_hat)
    else:
        n_hat = np.zeros_like(om_hat)

    if first:
        helm, infl = machinery.helm_first, machinery.infl_first
        rhs = re * (om_hat / dt - n_hat)
    else:
        helm, infl = machinery.helm_main, machinery.infl_main
        om_prev_hat = _rfft(state.omega_prev.data, nx)
        n_prev_hat = _rfft(state.adv_prev.data, nx)
        rhs = re * ((4.0 * om_hat - om_prev_hat) / (2.0 * dt) - 2.0 * n_hat + n_prev_hat)

    zero_bc = np.zeros(om_hat.shape[0], dtype=complex)
    if machinery.advection:
        om_new = helm.solve(rhs, bc_bottom=zero_bc, bc_top=zero_bc)
        psi_new = machinery.helm_psi.solve(
            om_new, bc_bottom=zero_bc, bc_top=machinery.psi_top_hat
        )
        d1_wall = grid.d1_matrix()[0]
        slip = psi_new @ d1_wall
        corr = infl.corrections(slip)
        om_new = om_new + corr[:, None] * infl.omega_response
        psi_new = psi_new + corr[:, None] * infl.psi_response
    else:
        # diffusion-only mode: hold the wall vorticity trace of the first
        # stepped state instead of running the no-slip closure
        if machinery.omega_wall_hat is None:
            machinery.omega_wall_hat = om_hat[:, 0].copy()
        om_new = helm.solve(rhs, bc_bottom=machinery.omega_wall_hat, bc_top=zero_bc)
        psi_new = machinery.helm_psi.solve(
            om_new, bc_bottom=zero_bc, bc_top=machinery.psi_top_hat
        )

    _check_poisson(machinery, psi_new, om_new)

    t_new = state.t + dt
    new_state = _reconstruct(
        machinery,
        t_new,
        om_new,
        psi_new,
        state.step_index + 1,
        omega_prev=state.omega,
        adv_prev=Field2D(grid, _irfft(n_hat, nx)),
    )

    if machinery.advection:
        u_max = float(np.abs(new_state.u.data).max())
        cfl = u_max * dt / (2.0 * np.pi / nx)
        if cfl > machinery.cfl_threshold and not machinery._cfl_warned:
            machinery._cfl_warned = True
            warnings.warn(
                f"advective CFL number {cfl:.2f} exceeds {machinery.cfl_threshold}"
                f" at t={t_new:.4f}; results may be unstable",
                stacklevel=2,
            )
    return new_state


@dataclass
class NsRunConfig:
    """Knobs of a full-equation run."""

    nx: int = 256
    ny: int = 129
    reynolds: float = 1.0e3
    dt: float = 2.5e-4
    t_end: float = 3.0
    y_max: float = 6.0
    snapshot_every: float = 0.01
    sample_every: float = 2.5e-3
    checkpoint_every: float = 0.25
    y_bl: float = 0.5
    dealias: bool = True
    advection: bool = True
    uc_formula: str = "coth"

    def validate(self):
        problems = []
        if self.dt <= 0:
            problems.append("dt must be positive")
        if self.t_end <= 0:
            problems.append("t_end must be positive")
        for name in ("snapshot_every", "sample_every", "checkpoint_every"):
            if getattr(self, name) <= 0:
                problems.append(f"{name} must be positive")
        if self.y_bl > self.y_max:
            problems.append("y_bl cannot exceed y_max")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass
class NsRunResult:
    """Scalar series plus the final state of one run."""

    config: NsRunConfig
    records: list
    final_state: NsState
    x: np.ndarray
    completed: bool
    error: str | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    @property
    def dpdx_series(self) -> np.ndarray:
        return np.stack([r.wall_dpdx for r in self.records])


def ns_run(
    config: NsRunConfig,
    on_snapshot=None,
    on_checkpoint=None,
    initial_state: NsState | None = None,
    machinery: NsMachinery | None = None,
) -> NsRunResult:
    """March to t_end, sampling diagnostics and handing out snapshots.

    on_snapshot / on_checkpoint are called with the current NsState at the
    configured cadences.  A blow-up ends the run early; the partial series
    is returned with completed=False and the error recorded.
    """
    from .diagnostics import enstrophy_budget

    config.validate()
    if machinery is None:
        grid = make_grid(config.nx, config.ny, config.y_max)
        params = PhysicalParams(reynolds=config.reynolds, uc_formula=config.uc_formula)
        machinery = build_ns_machinery(
            grid,
            params,
            config.reynolds,
            config.dt,
            advection=config.advection,
            dealias=config.dealias,
        )
    grid = machinery.grid
    state = ns_init(grid, machinery.params) if initial_state is None else initial_state

    every_sample = max(1, round(config.sample_every / config.dt))
    every_snap = max(1, round(config.snapshot_every / config.dt))
    every_ckpt = max(1, round(config.checkpoint_every / config.dt))
    n_steps = int(round((config.t_end - state.t) / config.dt))

    def sample(s: NsState):
        records.append(
            enstrophy_budget(s.t, s.omega, s.u, s.v, machinery.reynolds, config.y_bl)
        )

    records: list = []
    sample(state)
    if on_snapshot is not None:
        on_snapshot(state)
    completed = True
    error = None
    try:
        for n in range(1, n_steps + 1):
            state = ns_step(state, config.dt, machinery)
            if n % every_sample == 0:
                sample(state)
            if on_snapshot is not None and n % every_snap == 0:
                on_snapshot(state)
            if on_checkpoint is not None and n % every_ckpt == 0:
                on_checkpoint(state)
    except BlowUpError as exc:
        completed = False
        error = str(exc)
        log.warning("run stopped early: %s", error)
    return NsRunResult(
        config=config,
        records=records,
        final_state=state,
        x=grid.x.copy(),
        completed=completed,
        error=error,
    )
