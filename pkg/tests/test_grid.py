from __future__ import annotations

import numpy as np
import pytest

from bllab.grid import make_grid


def test_affine_grid_basics():
    g = make_grid(16, 9, 6.0)
    assert g.x[0] == 0.0
    assert np.allclose(np.diff(g.x), 2.0 * np.pi / 16)
    assert g.y[0] == 0.0 and g.y[-1] == 6.0
    assert np.all(np.diff(g.y) > 0)


@pytest.mark.parametrize("nx,ny", [(15, 9), (2, 9), (16, 2)])
def test_grid_rejects_bad_sizes(nx, ny):
    with pytest.raises(ValueError):
        make_grid(nx, ny, 6.0)


def test_stretched_grid_clusters_near_wall():
    g = make_grid(16, 129, 20.0, cluster_height=3.0)
    assert g.y[0] == 0.0 and g.y[-1] == 20.0
    assert np.all(np.diff(g.y) > 0)
    # median node at the cluster height, so about half the nodes sit below
    below = np.sum(g.y < 3.0)
    assert abs(below - 64) <= 1
    # inverse map round-trips
    assert np.max(np.abs(g.eta_of_y(g.y) - g.eta)) < 1e-12


@pytest.mark.parametrize("cluster", [None, 2.0])
def test_ddy_analytic(cluster):
    y_max = 6.0 if cluster is None else 20.0
    g = make_grid(8, 65, y_max, cluster_height=cluster)
    f = np.exp(-g.y) * np.sin(g.y)
    df = np.exp(-g.y) * (np.cos(g.y) - np.sin(g.y))
    got = g.ddy(f[None, :], axis=1)[0]
    assert np.max(np.abs(got - df)) < 1e-8


def test_quad_y_both_maps():
    for cluster, y_max in ((None, 6.0), (3.0, 20.0)):
        g = make_grid(8, 129, y_max, cluster_height=cluster)
        vals = np.exp(-g.y)[None, :]
        got = g.quad_y(vals, axis=1)[0]
        assert abs(got - (1.0 - np.exp(-y_max))) < 1e-10


def test_integrate_separable():
    g = make_grid(32, 33, 6.0)
    f = (1.0 + np.cos(g.x))[:, None] * (g.y * (6.0 - g.y))[None, :]
    # integral = 2*pi * 36
    assert abs(g.integrate(f) - 2.0 * np.pi * 36.0) < 1e-9


def test_dealias_mask():
    g = make_grid(24, 9, 6.0)
    keep = g.dealias_keep
    assert keep.shape == (13,)
    assert np.all(keep[: 24 // 3 + 1])
    assert not np.any(keep[24 // 3 + 1 :])


def test_d2_matrix_second_derivative():
    g = make_grid(8, 49, 6.0)
    f = np.cos(g.y)
    got = g.d2_matrix() @ f
    assert np.max(np.abs(got + np.cos(g.y))) < 1e-7
