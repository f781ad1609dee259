"""Scalar fields on a Grid2D and the spectral operators acting on them.

Physical data is a real (nx, ny) array; spectral data is the complex
(nx, ny) array of Fourier(x) x Chebyshev(y) coefficients,

    f(x_i, y_j) = sum_k sum_m  c[k, m] * exp(i k x_i) * T_m(eta_j),

with k in FFT order.  The forward x-transform is fft/nx so c[0, :] carries
the x-mean.  Solvers keep their own half-spectrum working arrays; Field2D
is the boundary type handed to diagnostics and the singularity tracker.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import chebyshev as cheb
from .grid import Grid2D

PHYSICAL = "physical"
SPECTRAL = "spectral"


@dataclass
class Field2D:
    grid: Grid2D
    data: np.ndarray
    space: str = PHYSICAL

    def __post_init__(self):
        if self.space not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown space {self.space!r}")
        if self.data.shape != (self.grid.nx, self.grid.ny):
            raise ValueError(
                f"data shape {self.data.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.ny})"
            )


def to_spectral(f: Field2D) -> Field2D:
    if f.space == SPECTRAL:
        return f
    c = np.fft.fft(f.data, axis=0) / f.grid.nx
    c = cheb.coeffs_from_values(c, axis=1)
    return Field2D(f.grid, c, SPECTRAL)


def to_physical(f: Field2D) -> Field2D:
    if f.space == PHYSICAL:
        return f
    v = cheb.values_from_coeffs(f.data, axis=1)
    v = np.fft.ifft(v * f.grid.nx, axis=0)
    return Field2D(f.grid, v.real, PHYSICAL)


def differentiate(f: Field2D, axis: int, order: int = 1) -> Field2D:
    """Spectral derivative along x (axis 0) or y (axis 1), same space as input.

    x uses ik multiplication with the Nyquist line zeroed on odd orders;
    y applies the Chebyshev recurrence plus the map chain rule, `order`
    times.
    """
    if axis not in (0, 1):
        raise ValueError(f"axis must be 0 or 1, got {axis}")
    if order < 1:
        raise ValueError(f"order must be positive, got {order}")
    grid = f.grid
    if axis == 0:
        c = to_spectral(f).data.copy()
        ik = 1j * grid.kx_full
        if grid.nx % 2 == 0 and order % 2 == 1:
            ik[grid.nx // 2] = 0.0
        c *= ik[:, None] ** order
        out = Field2D(grid, c, SPECTRAL)
    else:
        phys = to_physical(f)
        v = phys.data
        for _ in range(order):
            v = grid.ddy(v, axis=1)
        out = Field2D(grid, v, PHYSICAL)
    return to_physical(out) if f.space == PHYSICAL else to_spectral(out)


def l2_norm_sq(f: Field2D) -> float:
    """Discrete L2 norm squared, 2*pi/nx in x and Clenshaw-Curtis in y."""
    v = to_physical(f).data
    return f.grid.integrate(v * v)


def parseval_pair(f: Field2D) -> tuple[float, float]:
    """The two sides of the documented discrete Parseval identity.

    Left: mean_x with trapezoid-in-theta weights of f^2 (ends halved).
    Right: the weighted coefficient norm, x-Fourier modes summed with
    |c|^2 and Chebyshev end coefficients doubled.  Both equal
    (2/(ny-1)) * mean_i sum''_j f_ij^2.
    """
    v = to_physical(f).data
    ny = f.grid.ny
    w = np.ones(ny)
    w[0] = w[-1] = 0.5
    left = float(np.mean((v * v) @ w)) * 2.0 / (ny - 1)
    c = to_spectral(f).data
    wj = np.ones(ny)
    wj[0] = wj[-1] = 2.0
    right = float(np.sum(np.abs(c) ** 2 @ wj))
    return left, right
