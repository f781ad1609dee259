"""Wall-vorticity closure for the coupled vorticity/streamfunction step.

The viscous step gives one Helmholtz problem per mode for vorticity and
one Poisson problem for the streamfunction, but the wall carries two
conditions on psi (no-penetration and no-slip) and none on omega.  The
standard remedy: solve once, per mode, the homogeneous problem

    (lam_k - d2/dy2) w = 0,  w(0) = 1, w(y_max) = 0
    (k^2   - d2/dy2) p = w,  p(0) = 0, p(y_max) = 0

and store the wall-slip response dp/dy|_0.  At every step the provisional
solve (wall vorticity guessed as zero) leaves a slip deficit; dividing by
the response gives the wall-vorticity correction per mode.  With the
far-field vorticity pinned to zero the per-mode system is scalar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid2D
from .helmholtz import HelmholtzSolver


class ConditioningError(ArithmeticError):
    """A per-mode influence entry is too small to invert reliably."""

    def __init__(self, mode: int, value: float):
        self.mode = mode
        self.value = value
        super().__init__(
            f"influence entry for mode {mode} is {value:.3e}; "
            "closure would amplify roundoff beyond 1e12"
        )


@dataclass
class InfluenceMatrix:
    """Per-mode wall responses for one (grid, time-shift) pair."""

    grid: Grid2D
    sigma_t: float
    wall_velocity: float
    omega_response: np.ndarray  # (m, ny) homogeneous vorticity solutions
    psi_response: np.ndarray  # (m, ny) induced streamfunctions
    slip_response: np.ndarray  # (m,) wall derivative of psi_response

    def corrections(self, slip_hat: np.ndarray) -> np.ndarray:
        """Wall-vorticity coefficients from the per-mode slip deficit."""
        scale = np.abs(self.slip_response).max()
        if scale == 0.0:
            raise ConditioningError(0, 0.0)
        bad = np.abs(self.slip_response) < scale / 1e12
        if np.any(bad):
            mode = int(np.argmax(bad))
            raise ConditioningError(mode, float(self.slip_response[mode]))
        target = np.zeros_like(slip_hat)
        target[0] = self.wall_velocity
        return (target - slip_hat) / self.slip_response


def build_influence_matrix(
    grid: Grid2D, sigma_t: float, wall_velocity: float
) -> InfluenceMatrix:
    """Precompute the closure for the half-spectrum mode set of `grid`.

    sigma_t is the time-discretization shift of the vorticity operator
    (lam_k = k^2 + sigma_t); wall_velocity is the uniform wall speed the
    closure enforces through the k=0 slip target.
    """
    if sigma_t <= 0:
        raise ValueError(f"sigma_t must be positive, got {sigma_t}")
    k = grid.kx_half
    helm_omega = HelmholtzSolver(grid, k * k + sigma_t)
    helm_psi = HelmholtzSolver(grid, k * k)
    m = k.size
    zeros = np.zeros((m, grid.ny))
    w = helm_omega.solve(zeros, bc_bottom=1.0, bc_top=0.0)
    p = helm_psi.solve(w, bc_bottom=0.0, bc_top=0.0)
    d1_wall = grid.d1_matrix()[0]
    slip = p @ d1_wall
    scale = np.abs(slip).max()
    bad = np.abs(slip) < scale / 1e12
    if np.any(bad):
        mode = int(np.argmax(bad))
        raise ConditioningError(mode, float(slip[mode]))
    return InfluenceMatrix(
        grid=grid,
        sigma_t=float(sigma_t),
        wall_velocity=float(wall_velocity),
        omega_response=w,
        psi_response=p,
        slip_response=slip,
    )
