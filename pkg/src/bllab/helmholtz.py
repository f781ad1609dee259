"""Per-mode wall-normal Helmholtz solves: (lam_k - d^2/dy^2) u_k = f_k.

One grid-wide eigendecomposition of the interior second-derivative block
serves the whole family of shifts lam_k (time-stepping shift + k^2), so a
solver instance costs O(ny^3) once and each solve is two dense GEMMs over
all modes.  Dirichlet data only; the far-field value is always pinned by
the callers, so no Neumann branch exists.

The decomposition route leaves a residual of order cond(S)*eps; one
iterative-refinement pass with the true collocation operator restores it
to the 1e-10 contract even at large ny.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid2D


def _interior_eig(grid: Grid2D):
    """Eigendecomposition of the Dirichlet interior block, cached per grid."""
    if "helm_eig" not in grid._cache:
        d2 = grid.d2_matrix()
        a_ii = d2[1:-1, 1:-1]
        w, s = np.linalg.eig(a_ii)
        if np.abs(w.imag).max() > 1e-8 * np.abs(w).max():
            raise ArithmeticError("interior second-derivative block has complex spectrum")
        w = w.real
        s = s.real
        sinv = np.linalg.inv(s)
        grid._cache["helm_eig"] = (
            np.asfortranarray(s),
            np.asfortranarray(sinv),
            w,
            d2[1:-1, [0, -1]].copy(),
            d2,
        )
    return grid._cache["helm_eig"]


class HelmholtzSolver:
    """Factored family of (lam_k - d2/dy2) operators with Dirichlet rows.

    Parameters
    ----------
    grid : the wall-normal discretization (map included via d2_matrix).
    lam : non-negative shift per mode, shape (m,).  Solves act on (m, ny)
        right-hand sides laid out mode-major.
    refine : iterative-refinement passes per solve (default 1).
    """

    def __init__(self, grid: Grid2D, lam: np.ndarray, refine: int = 1):
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        if np.any(lam < 0):
            raise ValueError("negative Helmholtz shift; operator would be indefinite")
        self.grid = grid
        self.lam = lam
        self.refine = int(refine)
        s, sinv, w, lift, d2 = _interior_eig(grid)
        self._s = s
        self._sinv = sinv
        self._w = w
        self._lift = lift
        self._d2 = d2
        # lam - w > 0 always: w < 0 for the Dirichlet block, lam >= 0
        self._denom = lam[None, :] - w[:, None]

    def _diag_apply(self, f_int: np.ndarray) -> np.ndarray:
        """S diag(1/(lam-w)) S^-1 applied to (ny-2, m) columns."""
        if np.iscomplexobj(f_int):
            g = self._sinv @ np.concatenate([f_int.real, f_int.imag], axis=1)
            g /= np.concatenate([self._denom, self._denom], axis=1)
            u = self._s @ g
            m = f_int.shape[1]
            return u[:, :m] + 1j * u[:, m:]
        g = self._sinv @ f_int
        g /= self._denom
        return self._s @ g

    def solve(
        self,
        rhs: np.ndarray,
        bc_bottom: np.ndarray | float,
        bc_top: np.ndarray | float,
    ) -> np.ndarray:
        """Solve for all modes at once.

        rhs has shape (m, ny); bc_bottom / bc_top are scalars or (m,)
        arrays of Dirichlet values at y=0 and y=y_max.
        """
        m, ny = rhs.shape
        if m != self.lam.size or ny != self.grid.ny:
            raise ValueError(f"rhs shape {rhs.shape} does not match solver layout")
        complex_in = (
            np.iscomplexobj(rhs) or np.iscomplexobj(bc_bottom) or np.iscomplexobj(bc_top)
        )
        dtype = complex if complex_in else float
        bb = np.broadcast_to(np.asarray(bc_bottom, dtype=dtype), (m,))
        bt = np.broadcast_to(np.asarray(bc_top, dtype=dtype), (m,))
        ub = np.stack([bb, bt], axis=0)  # (2, m)
        f_int = rhs[:, 1:-1].T + self._lift @ ub
        u_int = self._diag_apply(f_int)
        for _ in range(self.refine):
            res = rhs[:, 1:-1].T - (
                self.lam[None, :] * u_int
                - (self._d2[1:-1, 1:-1] @ u_int + self._lift @ ub)
            )
            u_int = u_int + self._diag_apply(res)
        u = np.empty((m, ny), dtype=dtype)
        u[:, 0] = bb
        u[:, -1] = bt
        u[:, 1:-1] = u_int.T
        return u


def solve_helmholtz(solver: HelmholtzSolver, rhs_field, bc_bottom=0.0, bc_top=0.0):
    """Field2D wrapper around HelmholtzSolver.solve.

    Takes/returns physical-space fields.  Boundary data is physical too:
    scalars or (nx,) arrays of wall / top values, transformed here into
    the per-mode layout (the solver's lam must be laid out in full FFT
    order for this wrapper).
    """
    from . import field as fld

    grid = rhs_field.grid
    rhs_phys = fld.to_physical(rhs_field).data
    rhs_hat = np.fft.fft(rhs_phys, axis=0) / grid.nx
    bb = np.fft.fft(np.broadcast_to(np.asarray(bc_bottom, float), (grid.nx,))) / grid.nx
    bt = np.fft.fft(np.broadcast_to(np.asarray(bc_top, float), (grid.nx,))) / grid.nx
    u_hat = solver.solve(rhs_hat, bb, bt)
    u = np.fft.ifft(u_hat * grid.nx, axis=0).real
    return fld.Field2D(grid, u, fld.PHYSICAL)
