"""Tensor-product grids: uniform-periodic in x, mapped Gauss-Lobatto in y.

Two wall-normal maps are supported, both with the wall at node index 0:

  affine     y(eta) = y_max * (1 - eta) / 2
  stretched  y(eta) = y_max * s * (1 - eta) / (2s + 1 + eta)

The stretched map clusters nodes near the wall; `s` is derived from a
requested cluster height h so that the median node lands at y = h
(s = h / (y_max - 2h)).  Both maps keep dy/deta < 0 because eta descends
while y ascends.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import chebyshev as cheb

log = logging.getLogger(__name__)


@dataclass
class Grid2D:
    """Collocation grid for one solver run.

    x is uniform on [0, 2*pi) with nx points; y holds ny mapped
    Gauss-Lobatto nodes ascending from 0 to y_max.
    """

    nx: int
    ny: int
    y_max: float
    x: np.ndarray
    y: np.ndarray
    eta: np.ndarray
    dy_deta: np.ndarray
    cluster_height: float | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # ---- wavenumbers and masks -------------------------------------------

    @property
    def kx_full(self) -> np.ndarray:
        """Integer wavenumbers in FFT order (length nx)."""
        if "kx_full" not in self._cache:
            self._cache["kx_full"] = np.fft.fftfreq(self.nx, d=1.0 / self.nx)
        return self._cache["kx_full"]

    @property
    def kx_half(self) -> np.ndarray:
        """Integer wavenumbers 0..nx/2 for the real-input FFT layout."""
        if "kx_half" not in self._cache:
            self._cache["kx_half"] = np.arange(self.nx // 2 + 1, dtype=float)
        return self._cache["kx_half"]

    @property
    def dealias_keep(self) -> np.ndarray:
        """Boolean 2/3-rule mask in the half-spectrum layout (|k| <= nx//3)."""
        if "dealias" not in self._cache:
            self._cache["dealias"] = self.kx_half <= self.nx // 3
        return self._cache["dealias"]

    # ---- wall-normal derivative operators --------------------------------

    def ddy(self, values: np.ndarray, axis: int = 1) -> np.ndarray:
        """d/dy of nodal data along `axis` (DCT route, spectrally exact)."""
        c = cheb.coeffs_from_values(values, axis=axis)
        dc = cheb.derivative_coeffs(c, axis=axis)
        out = cheb.values_from_coeffs(dc, axis=axis)
        shape = [1] * out.ndim
        shape[axis] = self.ny
        return out / self.dy_deta.reshape(shape)

    def d1_matrix(self) -> np.ndarray:
        """Dense first-derivative matrix in y (map included)."""
        if "d1" not in self._cache:
            de = cheb.differentiation_matrix(self.ny)
            self._cache["d1"] = de / self.dy_deta[:, None]
        return self._cache["d1"]

    def d2_matrix(self) -> np.ndarray:
        """Dense second-derivative matrix in y (first derivative squared)."""
        if "d2" not in self._cache:
            d1 = self.d1_matrix()
            self._cache["d2"] = d1 @ d1
        return self._cache["d2"]

    # ---- quadrature -------------------------------------------------------

    def quad_y(self, values: np.ndarray, axis: int = 1) -> np.ndarray:
        """Integral over y in [0, y_max] along `axis` (Clenshaw-Curtis).

        The map Jacobian |dy/deta| is folded into the integrand before the
        coefficient transform, so stretched grids integrate exactly as
        accurately as affine ones.
        """
        shape = [1] * values.ndim
        shape[axis] = self.ny
        g = values * np.abs(self.dy_deta).reshape(shape)
        return cheb.integrate_coeffs(cheb.coeffs_from_values(g, axis=axis), axis=axis)

    def integrate(self, values: np.ndarray) -> float:
        """Integral over the full domain of physical nodal data (nx, ny)."""
        return float(np.sum(self.quad_y(values, axis=1)) * (2.0 * np.pi / self.nx))

    def y_row(self, y0: float) -> np.ndarray:
        """Row vector r with r @ coeffs = series value at height y0."""
        eta0 = self.eta_of_y(np.asarray([y0]))
        return cheb.evaluation_matrix(self.ny, eta0)[0]

    def eta_of_y(self, y: np.ndarray) -> np.ndarray:
        """Inverse wall-normal map."""
        y = np.asarray(y, dtype=float)
        if self.cluster_height is None:
            return 1.0 - 2.0 * y / self.y_max
        s = self._stretch
        return (self.y_max * s - (2 * s + 1) * y) / (y + self.y_max * s)

    @property
    def _stretch(self) -> float:
        h = self.cluster_height
        if h is None:
            raise ValueError("affine grid has no stretch parameter")
        return h / (self.y_max - 2.0 * h)


def make_grid(
    nx: int, ny: int, y_max: float, cluster_height: float | None = None
) -> Grid2D:
    """Build a solver grid.

    Parameters
    ----------
    nx, ny : resolution; nx must be even (powers of two recommended for nx,
        2^m + 1 for ny), ny at least 3.
    y_max : top of the computational box.
    cluster_height : if given, use the stretched map placing the median
        node at this height (boundary-layer grids); None gives the affine map.
    """
    if nx < 4 or nx % 2 != 0:
        raise ValueError(f"nx must be even and at least 4, got {nx}")
    if ny < 3:
        raise ValueError(f"ny must be at least 3, got {ny}")
    if y_max <= 0:
        raise ValueError(f"y_max must be positive, got {y_max}")
    x = 2.0 * np.pi * np.arange(nx) / nx
    eta = cheb.gauss_lobatto(ny)
    if cluster_height is None:
        y = y_max * (1.0 - eta) / 2.0
        dy_deta = np.full(ny, -y_max / 2.0)
    else:
        if not 0.0 < 2.0 * cluster_height < y_max:
            raise ValueError(
                f"cluster_height must lie in (0, y_max/2), got {cluster_height}"
            )
        s = cluster_height / (y_max - 2.0 * cluster_height)
        y = y_max * s * (1.0 - eta) / (2.0 * s + 1.0 + eta)
        dy_deta = -2.0 * y_max * s * (s + 1.0) / (2.0 * s + 1.0 + eta) ** 2
    y[0] = 0.0
    y[-1] = y_max
    return Grid2D(
        nx=nx,
        ny=ny,
        y_max=float(y_max),
        x=x,
        y=y,
        eta=eta,
        dy_deta=dy_deta,
        cluster_height=cluster_height,
    )
