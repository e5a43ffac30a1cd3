import math

import numpy as np
import pytest

from msconstrain.core import (
    BilinearForm,
    Grid,
    SimState,
    backward_difference,
    forward_difference,
    laplacian,
)

from conftest import smooth_periodic_field


class TestGrid:
    def test_periodic_spacing(self):
        g = Grid.circle(64)
        assert g.spacings[0] == pytest.approx(2 * math.pi / 64)

    def test_neumann_spacing_includes_endpoints(self):
        g = Grid.neumann_box(129)
        assert g.spacings[0] == pytest.approx(1.0 / 128)
        x = g.axis_coords(0)
        assert x[0] == pytest.approx(-0.5) and x[-1] == pytest.approx(0.5)

    def test_neumann_needs_three_nodes(self):
        with pytest.raises(ValueError):
            Grid((2,), (1.0,), ("neumann",))

    def test_unknown_boundary_rejected(self):
        with pytest.raises(ValueError):
            Grid((8,), (1.0,), ("dirichlet",))

    def test_cell_volume(self):
        g = Grid.torus(16, 32)
        assert g.cell_volume == pytest.approx((2 * math.pi / 16) * (2 * math.pi / 32))


class TestLaplacian:
    def test_annihilates_constants_periodic(self):
        g = Grid.circle(32)
        f = np.full((32, 3), 1.7)
        assert np.max(np.abs(laplacian(f, g))) == 0.0

    def test_annihilates_constants_neumann(self):
        g = Grid.neumann_box(17, 9)
        f = np.full((17, 9, 3), -0.4)
        assert np.max(np.abs(laplacian(f, g))) == 0.0

    def test_cosine_eigenfunction(self):
        # second differences of cos(2 pi x) reproduce the discrete symbol
        n = 64
        g = Grid((n,), (1.0,), ("periodic",))
        x = g.axis_coords(0)
        f = np.cos(2 * np.pi * x)[:, None]
        dx = g.spacings[0]
        symbol = -(2.0 - 2.0 * math.cos(2 * math.pi * dx)) / dx**2
        assert np.allclose(laplacian(f, g), symbol * f, rtol=0, atol=1e-11)

    def test_neumann_mirror_ghost_by_hand(self):
        # u = (1, 2, 4), dx = 1: left boundary is u1 - 2 u0 + u1 = 2
        g = Grid((3,), (2.0,), ("neumann",))
        f = np.array([[1.0], [2.0], [4.0]])
        out = laplacian(f, g)
        assert out[0, 0] == pytest.approx(2.0)
        assert out[1, 0] == pytest.approx(1.0)   # 1 - 4 + 4
        assert out[2, 0] == pytest.approx(-4.0)  # mirror: 2*2 - 2*4

    def test_self_adjoint_periodic(self, rng):
        for g in (Grid.circle(32), Grid.torus(12, 20)):
            f = smooth_periodic_field(g, rng)
            h = smooth_periodic_field(g, rng)
            lhs = np.sum(laplacian(f, g) * h)
            rhs = np.sum(f * laplacian(h, g))
            assert lhs == pytest.approx(rhs, abs=1e-12 * max(1.0, abs(lhs)))

    def test_shape_mismatch_rejected(self):
        g = Grid.circle(16)
        with pytest.raises(ValueError):
            laplacian(np.zeros((8, 3)), g)

    def test_forward_backward_are_adjoint_up_to_sign(self, rng):
        # periodic summation by parts: sum f * d+ g = -sum (d- f) * g
        g = Grid.circle(48)
        f = smooth_periodic_field(g, rng)
        h = smooth_periodic_field(g, rng)
        lhs = np.sum(f * forward_difference(h, g, 0))
        rhs = -np.sum(backward_difference(f, g, 0) * h)
        assert lhs == pytest.approx(rhs, abs=1e-10)


class TestBilinearForm:
    def test_euclidean_unit(self):
        B = BilinearForm.euclidean(3)
        assert B.dot(np.array([1.0, 0, 0]), np.array([1.0, 0, 0])) == 1.0

    def test_hyperboloid_sheet_normalization(self):
        B = BilinearForm.minkowski()
        e3 = np.array([0.0, 0.0, 1.0])
        assert B.dot(e3, e3) == 1.0

    def test_null_vector(self):
        B = BilinearForm.minkowski()
        v = np.array([1.0, 0.0, 1.0])
        assert B.dot(v, v) == 0.0

    def test_symmetry_and_bilinearity(self, rng):
        B = BilinearForm((-1, 1, -1, 1))
        for _ in range(20):
            a, b, c = rng.standard_normal((3, 4))
            alpha = rng.standard_normal()
            assert B.dot(a, b) == pytest.approx(B.dot(b, a), rel=1e-15, abs=1e-15)
            assert B.dot(a + alpha * c, b) == pytest.approx(
                B.dot(a, b) + alpha * B.dot(c, b), rel=1e-12, abs=1e-12
            )

    def test_length_mismatch(self):
        B = BilinearForm.euclidean(3)
        with pytest.raises(ValueError):
            B.dot(np.zeros(2), np.zeros(3))

    def test_broadcasts_over_nodes(self):
        B = BilinearForm.euclidean(2)
        a = np.ones((5, 2))
        assert B.dot(a, a).shape == (5,)


class TestSimState:
    def test_time_and_courant(self):
        g = Grid.circle(8)
        u = np.ones((8, 2))
        st = SimState(g, 0.1, 3, u_prev=u, u_curr=u)
        assert st.time == pytest.approx(0.3)
        assert st.courant == pytest.approx(0.1 / g.spacings[0])

    def test_rejects_bad_dt(self):
        g = Grid.circle(8)
        u = np.ones((8, 2))
        with pytest.raises(ValueError):
            SimState(g, -0.1, 0, u_prev=u, u_curr=u)
