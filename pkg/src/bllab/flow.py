"""Problem setup: periodic vortex row above a wall, in the comoving frame.

A row of point vortices of circulation `circulation` sits at height
`vortex_height` above a no-slip wall, spaced `row_spacing` apart in x;
image vortices below the wall make y=0 a streamline.  The frame moves
with the row, adding the uniform term -U_c * y to the streamfunction.
Lengths are normalized so one period is [0, 2*pi) and the row centers sit
at x = pi.

The initial Navier-Stokes vorticity replaces each point vortex with a
Gaussian bump of squared width `mollifier_width_sq`, carrying the same
circulation.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .grid import Grid2D

log = logging.getLogger(__name__)

UC_COTH = "coth"
UC_PAPER_LITERAL = "paper_literal"


@dataclass
class PhysicalParams:
    """Physical constants of the vortex-row problem (code units)."""

    row_spacing: float = 2.0 * np.pi
    circulation: float = 4.0 * np.pi
    vortex_height: float = 1.0
    mollifier_width_sq: float = 5.0e-3
    reynolds: float | None = None
    uc_formula: str = UC_COTH

    @property
    def comoving_speed(self) -> float:
        """Translation speed U_c of the vortex row induced by its images.

        The default is (k/2a)*coth(2*pi*b/a), the speed that makes the row
        steady in the comoving frame; the alternative hyperbolic-cosine
        form is kept selectable for comparison runs.
        """
        a, k, b = self.row_spacing, self.circulation, self.vortex_height
        if self.uc_formula == UC_COTH:
            return k / (2.0 * a) / np.tanh(2.0 * np.pi * b / a)
        if self.uc_formula == UC_PAPER_LITERAL:
            return k / (2.0 * a) * np.cosh(np.pi * b / a)
        raise ValueError(f"unknown uc_formula {self.uc_formula!r}")


def euler_streamfunction(params: PhysicalParams, x, y) -> np.ndarray:
    """Streamfunction of the comoving row with wall images.

    Broadcasts over x and y; singular (log) at the vortex centers.
    """
    a, k, b = params.row_spacing, params.circulation, params.vortex_height
    uc = params.comoving_speed
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xs = 2.0 * np.pi * (x - np.pi) / a
    num = np.cosh(2.0 * np.pi * (y - b) / a) - np.cos(xs)
    den = np.cosh(2.0 * np.pi * (y + b) / a) - np.cos(xs)
    return -uc * y - k / (4.0 * np.pi) * np.log(num / den)


def euler_velocity(params: PhysicalParams, x, y) -> tuple[np.ndarray, np.ndarray]:
    """(u, v) of the Euler datum from the closed-form derivatives."""
    a, k, b = params.row_spacing, params.circulation, params.vortex_height
    uc = params.comoving_speed
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xs = 2.0 * np.pi * (x - np.pi) / a
    s = 2.0 * np.pi / a
    cm = np.cosh(s * (y - b)) - np.cos(xs)
    cp = np.cosh(s * (y + b)) - np.cos(xs)
    u = -uc - k / (4.0 * np.pi) * s * (
        np.sinh(s * (y - b)) / cm - np.sinh(s * (y + b)) / cp
    )
    v = k / (4.0 * np.pi) * s * (np.sin(xs) / cm - np.sin(xs) / cp)
    return u, v


def initial_velocity(grid: Grid2D, params: PhysicalParams) -> tuple[np.ndarray, np.ndarray]:
    """Euler velocity sampled on the grid (singular near the row centers)."""
    return euler_velocity(params, grid.x[:, None], grid.y[None, :])


@dataclass
class OuterFlow:
    """Wall-slip profile of the Euler datum, driving the boundary layer."""

    x: np.ndarray
    u: np.ndarray  # U_inf(x)
    dudx: np.ndarray
    mean: float


def outer_flow(grid: Grid2D, params: PhysicalParams) -> OuterFlow:
    """Closed-form U_inf and its x-derivative on the grid's x nodes.

    U_inf(x) = -U_c + (k/a) * sinh(2 pi b/a) / (cosh(2 pi b/a) - cos(x - pi))
    whose period mean is k/a - U_c.
    """
    a, k, b = params.row_spacing, params.circulation, params.vortex_height
    uc = params.comoving_speed
    xs = 2.0 * np.pi * (grid.x - np.pi) / a
    sh = np.sinh(2.0 * np.pi * b / a)
    ch = np.cosh(2.0 * np.pi * b / a)
    u = -uc + (k / a) * sh / (ch - np.cos(xs))
    dudx = -(k / a) * sh * np.sin(xs) * (2.0 * np.pi / a) / (ch - np.cos(xs)) ** 2
    return OuterFlow(x=grid.x.copy(), u=u, dudx=dudx, mean=k / a - uc)


def mollified_vorticity(grid: Grid2D, params: PhysicalParams) -> np.ndarray:
    """Gaussian replacement of the point-vortex row on the grid.

    omega(x, y) = k/(sigma^2 pi) * exp(-((x-pi)^2 + (y-b)^2)/sigma^2),
    total integral k, peak k/(sigma^2 pi).  Warns when fewer than 4 nodes
    fall inside the 2*sigma core radius in either direction.
    """
    k, b = params.circulation, params.vortex_height
    s2 = params.mollifier_width_sq
    sigma = np.sqrt(s2)
    r2 = (grid.x[:, None] - np.pi) ** 2 + (grid.y[None, :] - b) ** 2
    omega = k / (s2 * np.pi) * np.exp(-r2 / s2)
    nx_core = int(np.sum(np.abs(grid.x - np.pi) <= 2.0 * sigma))
    ny_core = int(np.sum(np.abs(grid.y - b) <= 2.0 * sigma))
    if min(nx_core, ny_core) < 4:
        warnings.warn(
            f"mollified core resolved by only {nx_core}x{ny_core} nodes "
            f"inside radius 2*sigma = {2 * sigma:.4f}; expect spectral ringing",
            stacklevel=2,
        )
    return omega
