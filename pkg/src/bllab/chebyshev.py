"""Chebyshev-Gauss-Lobatto machinery on the reference interval [-1, 1].

Nodes are eta_i = cos(pi*i/(n-1)), i = 0..n-1, so they run from +1 down
to -1.  Wall-normal grids map eta onto [0, y_max] with eta=+1 at the wall,
which keeps index 0 at the wall for every grid in the package.

Coefficient transforms use the type-I DCT.  With values f_i = f(eta_i) and
f = sum_j c_j T_j(eta), the exact relations are

    c_j = dct1(f)_j / (n-1),   with c_0 and c_{n-1} halved,
    f_i = dct1(c')_i / 2,      where c' doubles the two end coefficients.

Discrete Parseval identity (used by the norm helpers and their tests):

    (2/(n-1)) * sum''_i f_i^2 = sum°_j c_j^2

where sum'' halves the first/last terms and sum° doubles them.
"""

from __future__ import annotations

import numpy as np
from scipy.fft import dct


def gauss_lobatto(n: int) -> np.ndarray:
    """Gauss-Lobatto points cos(pi*i/(n-1)), descending from +1 to -1."""
    if n < 3:
        raise ValueError(f"need at least 3 Gauss-Lobatto points, got {n}")
    return np.cos(np.pi * np.arange(n) / (n - 1))


def coeffs_from_values(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Chebyshev coefficients of nodal values along `axis`."""
    n = values.shape[axis]
    c = dct(values, type=1, axis=axis) / (n - 1)
    sl = [slice(None)] * c.ndim
    for edge in (0, n - 1):
        sl[axis] = edge
        c[tuple(sl)] /= 2.0
    return c


def values_from_coeffs(coeffs: np.ndarray, axis: int = -1) -> np.ndarray:
    """Nodal values on the Gauss-Lobatto grid from Chebyshev coefficients."""
    n = coeffs.shape[axis]
    c = np.copy(coeffs)
    sl = [slice(None)] * c.ndim
    for edge in (0, n - 1):
        sl[axis] = edge
        c[tuple(sl)] *= 2.0
    return dct(c, type=1, axis=axis) / 2.0


def derivative_coeffs(coeffs: np.ndarray, axis: int = -1) -> np.ndarray:
    """Coefficients of d/deta of the series, via the tail-sum recurrence.

    b_j = 2 * sum_{p >= j+1, p-j odd} p*c_p, with b_0 halved.  The parity
    classes are handled with two reversed cumulative sums, so the cost is
    O(n) per line.
    """
    c = np.moveaxis(coeffs, axis, -1)
    n = c.shape[-1]
    g = c * np.arange(n)
    b = np.zeros_like(c)
    for parity in (0, 1):
        gp = g[..., parity::2]
        tail = np.flip(np.cumsum(np.flip(gp, -1), -1), -1)
        # b_j draws on class `parity` starting at p = j+1
        if parity == 1:
            # j even: j = 2m  ->  tail entry m
            m = tail.shape[-1]
            b[..., 0 : 2 * m : 2] = 2.0 * tail
        else:
            # j odd: j = 2m-1, m >= 1  ->  tail entry m
            m = tail.shape[-1]
            if m > 1:
                b[..., 1 : 2 * m - 1 : 2] = 2.0 * tail[..., 1:]
    b[..., 0] /= 2.0
    return np.moveaxis(b, -1, axis)


def antiderivative_coeffs(coeffs: np.ndarray, axis: int = -1) -> np.ndarray:
    """Coefficients of the eta-antiderivative vanishing at eta = +1.

    For a plain series sum_j c_j T_j the antiderivative coefficients are
    F_1 = c_0 - c_2/2 and F_j = (c_{j-1} - c_{j+1}) / (2j) for j >= 2; the
    would-be degree-n term is truncated, which costs |c_{n-1}|/(2n) and is
    negligible for resolved data.  F_0 fixes F(+1) = 0 (the wall side of
    every mapped grid).
    """
    c = np.moveaxis(coeffs, axis, -1)
    n = c.shape[-1]
    F = np.zeros_like(c)
    j = np.arange(1, n)
    lower = c[..., :-1].copy()
    lower[..., 0] *= 2.0
    upper = np.zeros_like(c)
    upper[..., : n - 2] = c[..., 2:]
    F[..., 1:] = (lower - upper[..., : n - 1]) / (2.0 * j)
    F[..., 0] = -np.sum(F[..., 1:], axis=-1)
    return np.moveaxis(F, -1, axis)


def differentiation_matrix(n: int) -> np.ndarray:
    """Dense collocation derivative on the Gauss-Lobatto nodes.

    Standard construction with the negative-sum trick on the diagonal for
    roundoff control.
    """
    eta = gauss_lobatto(n)
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** np.arange(n)
    diff = eta[:, None] - eta[None, :] + np.eye(n)
    D = np.outer(c, 1.0 / c) / diff
    D -= np.diag(D.sum(axis=1))
    return D


def quad_moments(n: int) -> np.ndarray:
    """Integrals of T_j over [-1, 1]: 2/(1-j^2) for even j, else 0."""
    j = np.arange(n)
    m = np.zeros(n)
    even = j % 2 == 0
    m[even] = 2.0 / (1.0 - j[even].astype(float) ** 2)
    return m


def integrate_coeffs(coeffs: np.ndarray, axis: int = -1) -> np.ndarray:
    """Clenshaw-Curtis value of integral over [-1, 1] from coefficients."""
    n = coeffs.shape[axis]
    m = quad_moments(n)
    c = np.moveaxis(coeffs, axis, -1)
    return c @ m


def evaluation_matrix(n: int, eta_new: np.ndarray) -> np.ndarray:
    """Matrix E with E @ coeffs = series values at arbitrary points eta_new."""
    j = np.arange(n)
    theta = np.arccos(np.clip(eta_new, -1.0, 1.0))
    return np.cos(np.outer(theta, j))
