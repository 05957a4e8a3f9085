import math

import numpy as np
import pytest

from nnreach import (
    LinearSystemModel,
    VehicleModel,
    d_bilinear,
    d_cos,
    d_sin,
    linear_decomposition,
    tight_decomposition_oracle,
    vehicle_decomposition,
    vehicle_field,
)


def grid_extremum(fn, a, b, npts=10_000):
    """Dense-grid oracle for interval extrema of a scalar function."""
    lo, hi = (a, b) if a <= b else (b, a)
    vals = fn(np.linspace(lo, hi, npts))
    return vals.min(), vals.max()


class TestAngleDecompositions:
    def test_cos_symmetric_interval(self):
        want, _ = grid_extremum(np.cos, -math.pi / 4, math.pi / 4)
        assert d_cos(-math.pi / 4, math.pi / 4) == pytest.approx(math.cos(math.pi / 4), abs=1e-9)
        assert d_cos(-math.pi / 4, math.pi / 4) == pytest.approx(want, abs=1e-6)

    def test_cos_point_case(self, rng):
        for z in rng.uniform(-10, 10, size=20):
            assert d_cos(z, z) == pytest.approx(math.cos(z), abs=0)

    def test_cos_reversed_is_max(self):
        assert d_cos(math.pi / 2, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_sin_interval(self):
        assert d_sin(0.0, math.pi) == pytest.approx(0.0, abs=1e-9)
        assert d_sin(math.pi, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_sin_point_case(self, rng):
        for z in rng.uniform(-10, 10, size=20):
            assert d_sin(z, z) == pytest.approx(math.sin(z), abs=0)

    def test_matches_dense_grid_oracle(self, rng):
        # includes multi-period intervals
        for _ in range(1000):
            a = rng.uniform(-10, 10)
            b = a + rng.uniform(0, 15)
            min_cos, max_cos = grid_extremum(np.cos, a, b)
            min_sin, max_sin = grid_extremum(np.sin, a, b)
            assert d_cos(a, b) <= min_cos + 1e-9
            assert d_cos(a, b) >= min_cos - 1e-6
            assert d_cos(b, a) >= max_cos - 1e-9
            assert d_cos(b, a) <= max_cos + 1e-6
            assert d_sin(a, b) <= min_sin + 1e-9
            assert d_sin(b, a) >= max_sin - 1e-9


class TestBilinear:
    def test_corner_oracle_lower(self):
        # v in [1,2], c in [-1,1]: min corner product is -2
        assert d_bilinear(1.0, -1.0, 2.0, 1.0) == -2.0

    def test_point_case(self, rng):
        for _ in range(20):
            v, c = rng.normal(size=2)
            assert d_bilinear(v, c, v, c) == v * c

    def test_reversed_order_is_max(self):
        assert d_bilinear(2.0, 1.0, 1.0, -1.0) == 2.0

    def test_mixed_ordering_rejected(self):
        with pytest.raises(ValueError):
            d_bilinear(1.0, 1.0, 2.0, -1.0)

    def test_brute_force_oracle(self, rng):
        for _ in range(500):
            v = rng.normal()
            vh = v + rng.uniform(0, 2)
            c = rng.normal()
            ch = c + rng.uniform(0, 2)
            vs = np.linspace(v, vh, 50)
            cs = np.linspace(c, ch, 50)
            prods = np.outer(vs, cs)
            assert d_bilinear(v, c, vh, ch) == pytest.approx(prods.min(), abs=1e-9)
            assert d_bilinear(vh, ch, v, c) == pytest.approx(prods.max(), abs=1e-9)


class TestVehicleField:
    def test_straight_line(self):
        m = VehicleModel()
        out = vehicle_field(m, np.array([0, 0, 0, 1.0]), np.array([0.0, 0.0]), np.array([0.0]))
        assert np.allclose(out, [1, 0, 0, 0], atol=1e-15)

    def test_heading_plus_y(self):
        m = VehicleModel()
        out = vehicle_field(
            m, np.array([0, 0, math.pi / 2, 2.0]), np.array([0.0, 0.0]), np.array([0.0])
        )
        assert np.allclose(out, [0, 2, 0, 0], atol=1e-12)

    def test_scripted_oracle(self):
        # independent evaluation with scalar math
        m = VehicleModel(l_f=1.0, l_r=1.0)
        x = np.array([0.0, 0.0, 0.0, 1.0])
        u = np.array([1.0, 0.3])
        w = np.array([0.1])
        beta = math.atan((1.0 / (1.0 + 1.0)) * math.tan(0.3))
        want = np.array(
            [
                1.0 * math.cos(0.0 + beta),
                1.0 * math.sin(0.0 + beta),
                1.0 / 1.0 * math.sin(beta),
                1.0 + 0.1,
            ]
        )
        assert np.allclose(vehicle_field(m, x, u, w), want, atol=1e-12)

    def test_steering_domain(self):
        m = VehicleModel()
        with pytest.raises(ValueError):
            vehicle_field(m, np.zeros(4), np.array([0.0, math.pi / 2]), np.array([0.0]))

    def test_batched(self, rng):
        m = VehicleModel(l_f=0.8, l_r=1.3)
        xs = rng.normal(size=(6, 4))
        us = rng.uniform(-1, 1, size=(6, 2))
        ws = rng.uniform(-0.1, 0.1, size=(6, 1))
        batch = vehicle_field(m, xs, us, ws)
        for i in range(6):
            assert np.allclose(batch[i], vehicle_field(m, xs[i], us[i], ws[i]), atol=1e-12)


def sample_ordered_tuple(rng, m, width=0.8):
    x = rng.normal(size=m.n)
    xh = x + rng.uniform(0, width, size=m.n)
    u = np.array([rng.uniform(-1, 1), rng.uniform(-0.9, 0.7)])[: m.p]
    if m.p != 2:
        u = rng.uniform(-1, 1, size=m.p)
    uh = u + rng.uniform(0, 0.4, size=m.p)
    if m.p == 2:
        uh[1] = min(uh[1], 1.2)  # keep steering inside (-pi/2, pi/2)
    w = rng.uniform(-0.3, 0, size=m.q)
    wh = w + rng.uniform(0, 0.3, size=m.q)
    return x, xh, u, uh, w, wh


class TestVehicleDecomposition:
    def test_diagonal_equals_field(self, rng):
        m = VehicleModel()
        for _ in range(1000):
            x = rng.normal(size=4)
            u = np.array([rng.uniform(-1, 1), rng.uniform(-1.2, 1.2)])
            w = rng.uniform(-0.2, 0.2, size=1)
            d = vehicle_decomposition(m, x, x, u, u, w, w)
            f = vehicle_field(m, x, u, w)
            assert np.allclose(d, f, atol=1e-12, rtol=0)

    def test_frozen_corner_example(self):
        # row 1 over phi in [-0.1, 0.1], v in [1, 1.2]: min of v*cos(phi)
        m = VehicleModel()
        x = np.array([0, 0, -0.1, 1.0])
        xh = np.array([0, 0, 0.1, 1.2])
        u = np.zeros(2)
        w = np.zeros(1)
        d = vehicle_decomposition(m, x, xh, u, u, w, w)
        phis = np.linspace(-0.1, 0.1, 300)
        vs = np.linspace(1.0, 1.2, 300)
        want = np.min(np.outer(vs, np.cos(phis)))
        assert d[0] == pytest.approx(want, abs=1e-9)

    def test_row4_passthrough(self, rng):
        m = VehicleModel()
        x, xh, u, uh, w, wh = sample_ordered_tuple(rng, m)
        d = vehicle_decomposition(m, x, xh, u, uh, w, wh)
        assert d[3] == pytest.approx(u[0] + w[0], abs=0)

    def test_monte_carlo_minorant(self, rng):
        m = VehicleModel()
        for _ in range(100):
            x, xh, u, uh, w, wh = sample_ordered_tuple(rng, m)
            d = vehicle_decomposition(m, x, xh, u, uh, w, wh)
            zs = rng.uniform(x, xh, size=(200, 4))
            etas = rng.uniform(u, uh, size=(200, 2))
            xis = rng.uniform(w, wh, size=(200, 1))
            vals = vehicle_field(m, zs, etas, xis)
            assert np.all(d <= vals.min(axis=0) + 1e-9)

    def test_property2_shrinking_box(self, rng):
        m = VehicleModel()
        for _ in range(1000):
            x, xh, u, uh, w, wh = sample_ordered_tuple(rng, m)
            i = int(rng.integers(0, 4))
            y = np.minimum(x + rng.uniform(0, 0.3, size=4), xh)
            yh = np.maximum(xh - rng.uniform(0, 0.3, size=4), y)
            y[i] = x[i]
            yh = np.maximum(yh, y)
            a = vehicle_decomposition(m, x, xh, u, uh, w, wh)
            b = vehicle_decomposition(m, y, yh, u, uh, w, wh)
            assert a[i] <= b[i] + 1e-12

    def test_property3_control_monotone(self, rng):
        m = VehicleModel()
        for _ in range(1000):
            x, xh, u, uh, w, wh = sample_ordered_tuple(rng, m)
            v = np.minimum(u + rng.uniform(0, 0.2, size=2), uh)
            vh = np.maximum(uh - rng.uniform(0, 0.2, size=2), v)
            a = vehicle_decomposition(m, x, xh, u, uh, w, wh)
            b = vehicle_decomposition(m, x, xh, v, vh, w, wh)
            assert np.all(a <= b + 1e-12)


class TestLinearDecomposition:
    def make_model(self, rng, n=3, p=2, q=1):
        return LinearSystemModel(
            A=rng.normal(size=(n, n)),
            B=rng.normal(size=(n, p)),
            C=rng.normal(size=(n, q)),
            c=rng.normal(size=n),
        )

    def test_diagonal_equals_field(self, rng):
        m = self.make_model(rng)
        for _ in range(1000):
            x = rng.normal(size=3)
            u = rng.normal(size=2)
            w = rng.normal(size=1)
            d = linear_decomposition(m, x, x, u, u, w, w)
            f = m.vector_field(x, u, w)
            assert np.allclose(d, f, atol=1e-12)

    def test_nonnegative_entry_uses_lower_argument(self):
        m = LinearSystemModel(
            A=[[0.0, 1.0], [0.0, 0.0]], B=np.zeros((2, 1)), C=np.zeros((2, 1))
        )
        x = np.array([0.0, 1.0])
        xh = np.array([0.0, 5.0])
        d = linear_decomposition(m, x, xh, [0.0], [0.0], [0.0], [0.0])
        assert d[0] == 1.0  # A_12 >= 0 is Metzler: row 1 reads the lower x_2

    def test_monte_carlo_minorant(self, rng):
        # row i lower-bounds the field over the box with z_i pinned to x_i
        for _ in range(50):
            m = self.make_model(rng)
            x = rng.normal(size=3)
            xh = x + rng.uniform(0, 1, size=3)
            u = rng.normal(size=2)
            uh = u + rng.uniform(0, 1, size=2)
            w = rng.normal(size=1)
            wh = w + rng.uniform(0, 1, size=1)
            d = linear_decomposition(m, x, xh, u, uh, w, wh)
            for i in range(3):
                zs = rng.uniform(x, xh, size=(500, 3))
                zs[:, i] = x[i]
                etas = rng.uniform(u, uh, size=(500, 2))
                xis = rng.uniform(w, wh, size=(500, 1))
                vals = m.vector_field(zs, etas, xis)
                assert d[i] <= vals[:, i].min() + 1e-9

    def test_property2_and_3(self, rng):
        m = self.make_model(rng)
        for _ in range(1000):
            x = rng.normal(size=3)
            xh = x + rng.uniform(0, 1, size=3)
            u = rng.normal(size=2)
            uh = u + rng.uniform(0, 0.5, size=2)
            w = rng.normal(size=1)
            wh = w + rng.uniform(0, 0.5, size=1)
            i = int(rng.integers(0, 3))
            y = np.minimum(x + rng.uniform(0, 0.3, size=3), xh)
            y[i] = x[i]
            yh = np.maximum(xh - rng.uniform(0, 0.3, size=3), y)
            a = linear_decomposition(m, x, xh, u, uh, w, wh)
            b = linear_decomposition(m, y, yh, u, uh, w, wh)
            assert a[i] <= b[i] + 1e-12
            v = np.minimum(u + rng.uniform(0, 0.2, size=2), uh)
            vh = np.maximum(uh - rng.uniform(0, 0.2, size=2), v)
            c = linear_decomposition(m, x, xh, v, vh, w, wh)
            assert np.all(a <= c + 1e-12)


class TestTightDecompositionOracle:
    def test_linear_matches_within_lipschitz_grid(self, rng):
        for _ in range(10):
            m = LinearSystemModel(
                A=rng.normal(size=(2, 2)),
                B=rng.normal(size=(2, 1)),
                C=rng.normal(size=(2, 1)),
            )
            x = rng.normal(size=2)
            xh = x + rng.uniform(0.1, 1, size=2)
            u = rng.normal(size=1)
            uh = u + rng.uniform(0.1, 1, size=1)
            w = rng.normal(size=1)
            wh = w + rng.uniform(0.1, 1, size=1)
            grid = 11
            for i in range(2):
                oracle = tight_decomposition_oracle(
                    m.vector_field, x, xh, u, uh, w, wh, i, grid=grid
                )
                dec = linear_decomposition(m, x, xh, u, uh, w, wh)[i]
                lip = np.abs(m.A[i]).sum() + np.abs(m.B[i]).sum() + np.abs(m.C[i]).sum()
                spacing = max((xh - x).max(), (uh - u).max(), (wh - w).max()) / (grid - 1)
                assert dec <= oracle + 1e-9
                assert oracle - dec <= lip * spacing + 1e-9

    def test_vehicle_row4_exact(self, rng):
        m = VehicleModel()
        x, xh, u, uh, w, wh = sample_ordered_tuple(rng, m)
        oracle = tight_decomposition_oracle(m.vector_field, x, xh, u, uh, w, wh, 3, grid=3)
        assert oracle == pytest.approx(u[0] + w[0], abs=1e-12)

    def test_point_inputs(self, rng):
        m = VehicleModel()
        x = rng.normal(size=4)
        u = np.array([0.3, 0.2])
        w = np.array([0.05])
        for i in range(4):
            oracle = tight_decomposition_oracle(m.vector_field, x, x, u, u, w, w, i, grid=5)
            assert oracle == pytest.approx(vehicle_field(m, x, u, w)[i], abs=1e-12)

    def test_budget_cap(self, rng):
        m = VehicleModel()
        x, xh, u, uh, w, wh = sample_ordered_tuple(rng, m)
        with pytest.raises(ValueError, match="budget"):
            tight_decomposition_oracle(
                m.vector_field, x, xh, u, uh, w, wh, 0, grid=200, budget=1000
            )

    def test_vehicle_minorant_vs_oracle(self, rng):
        m = VehicleModel()
        for _ in range(20):
            x, xh, u, uh, w, wh = sample_ordered_tuple(rng, m, width=0.5)
            for i in range(4):
                oracle = tight_decomposition_oracle(
                    m.vector_field, x, xh, u, uh, w, wh, i, grid=7
                )
                dec = vehicle_decomposition(m, x, xh, u, uh, w, wh)[i]
                assert dec <= oracle + 1e-9
