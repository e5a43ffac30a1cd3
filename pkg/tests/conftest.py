import numpy as np
import pytest

from msconstrain.core import BilinearForm, Grid
from msconstrain.constraints import QuadricConstraint
from msconstrain.wavemap import start_from_velocity, zero_potential


def smooth_periodic_field(grid, rng, d=3, scale=0.3, modes=3):
    """Random low-wavenumber field on a 1D or 2D periodic grid."""
    thetas = [2 * np.pi * grid.axis_coords(a) / grid.lengths[a] for a in range(grid.dim)]
    if grid.dim == 2:
        thetas = np.meshgrid(*thetas, indexing="ij")
    f = np.zeros(grid.shape + (d,))
    for k in range(1, modes + 1):
        for c in range(d):
            for th in thetas:
                f[..., c] += rng.normal(scale=scale / k) * np.cos(k * th) \
                    + rng.normal(scale=scale / k) * np.sin(k * th)
    return f


def random_sphere_state(grid, rng, dt, d=3, vel_scale=0.3):
    """Smooth random sphere-valued data with a tangent velocity, started."""
    th = 2 * np.pi * grid.axis_coords(0) / grid.lengths[0]
    base = np.stack([np.cos(th), np.sin(th)] + [np.zeros_like(th)] * (d - 2), axis=-1)
    u = base + smooth_periodic_field(grid, rng, d=d)
    u = u / np.linalg.norm(u, axis=-1, keepdims=True)
    v = vel_scale * smooth_periodic_field(grid, rng, d=d)
    v = v - np.sum(v * u, axis=-1, keepdims=True) * u
    constraint = QuadricConstraint(BilinearForm.euclidean(d))
    return start_from_velocity(u, v, zero_potential(), constraint, dt, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
