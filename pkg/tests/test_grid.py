import numpy as np
import pytest

from photoseg import grid
from photoseg.levelset import signed_distance
from photoseg.synth import disc_mask


def bilinear_oracle(field, x, y):
    """Direct 4-point weighted sum, independent of the library path."""
    h, w = field.shape
    x = min(max(x, 0.0), w - 1.0)
    y = min(max(y, 0.0), h - 1.0)
    x0 = min(int(np.floor(x)), w - 2)
    y0 = min(int(np.floor(y)), h - 2)
    fx, fy = x - x0, y - y0
    return (field[y0, x0] * (1 - fx) * (1 - fy)
            + field[y0, x0 + 1] * fx * (1 - fy)
            + field[y0 + 1, x0] * (1 - fx) * fy
            + field[y0 + 1, x0 + 1] * fx * fy)


class TestSampleBilinear:
    def test_constant_field(self):
        field = np.full((6, 6), 5.0)
        assert grid.sample_bilinear(field, 3.7, 2.2) == pytest.approx(5.0)

    def test_affine_exact(self):
        x, _ = np.meshgrid(np.arange(8.0), np.arange(8.0))
        assert grid.sample_bilinear(x, 2.5, 4.0) == pytest.approx(2.5)

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(7)
        field = rng.uniform(0, 255, (4, 4))
        pts = rng.uniform(-1.0, 4.5, (1000, 2))
        got = grid.sample_bilinear(field, pts[:, 0], pts[:, 1])
        want = [bilinear_oracle(field, px, py) for px, py in pts]
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_reproduces_node_values(self):
        rng = np.random.default_rng(3)
        field = rng.uniform(0, 1, (5, 7))
        xs, ys = np.meshgrid(np.arange(7.0), np.arange(5.0))
        np.testing.assert_allclose(grid.sample_bilinear(field, xs, ys), field,
                                   atol=1e-14)

    def test_nonfinite_point_rejected(self):
        with pytest.raises(ValueError):
            grid.sample_bilinear(np.zeros((4, 4)), np.nan, 1.0)


class TestGradient:
    def test_affine_exact_interior(self):
        x, y = np.meshgrid(np.arange(10.0), np.arange(10.0))
        gx, gy = grid.gradient(3 * x + 2 * y)
        np.testing.assert_allclose(gx, 3.0, atol=1e-12)
        np.testing.assert_allclose(gy, 2.0, atol=1e-12)

    def test_constant_is_zero(self):
        gx, gy = grid.gradient(np.full((5, 5), 4.0))
        assert np.all(gx == 0) and np.all(gy == 0)

    def test_quadratic_exact_interior(self):
        x, _ = np.meshgrid(np.arange(16.0), np.arange(16.0))
        gx, _ = grid.gradient(x ** 2)
        np.testing.assert_allclose(gx[:, 1:-1], 2 * x[:, 1:-1], atol=1e-10)


class TestHessian:
    def test_analytic_quadratic(self):
        x, y = np.meshgrid(np.arange(12.0), np.arange(12.0))
        hxx, hxy, hyy = grid.hessian(x ** 2 + 3 * x * y)
        interior = np.s_[1:-1, 1:-1]
        np.testing.assert_allclose(hxx[interior], 2.0, atol=1e-10)
        np.testing.assert_allclose(hxy[interior], 3.0, atol=1e-10)
        np.testing.assert_allclose(hyy[interior], 0.0, atol=1e-10)

    def test_affine_zero(self):
        x, y = np.meshgrid(np.arange(8.0), np.arange(8.0))
        for h in grid.hessian(5 * x - 2 * y + 1):
            np.testing.assert_allclose(h, 0.0, atol=1e-12)


class TestIntegrals:
    def setup_method(self):
        self.sdf = signed_distance(disc_mask((128, 128), (64, 64), 20))

    def test_disc_area(self):
        area = grid.region_integral(np.ones((128, 128)), self.sdf, "inside")
        oracle = int((self.sdf < 0).sum())
        assert area == pytest.approx(np.pi * 20 ** 2, rel=0.02)
        assert area == pytest.approx(oracle, rel=0.02)

    def test_zero_integrand(self):
        assert grid.region_integral(np.zeros((128, 128)), self.sdf, "inside") == 0
        assert grid.curve_integral(np.zeros((128, 128)), self.sdf) == 0

    def test_partition_of_unity(self):
        ones = np.ones((128, 128))
        total = (grid.region_integral(ones, self.sdf, "inside")
                 + grid.region_integral(ones, self.sdf, "outside"))
        assert total == pytest.approx(128 * 128, abs=1e-9)

    def test_disc_perimeter(self):
        per = grid.curve_integral(np.ones((128, 128)), self.sdf)
        assert per == pytest.approx(2 * np.pi * 20, rel=0.03)

    def test_translation_invariance(self):
        moved = signed_distance(disc_mask((128, 128), (69, 67), 20))
        ones = np.ones((128, 128))
        per0 = grid.curve_integral(ones, self.sdf)
        per1 = grid.curve_integral(ones, moved)
        assert per1 == pytest.approx(per0, rel=1e-6)
        area0 = grid.region_integral(ones, self.sdf, "inside")
        area1 = grid.region_integral(ones, moved, "inside")
        assert area1 == pytest.approx(area0, rel=0.005)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            grid.region_integral(np.ones((4, 4)), np.ones((5, 5)))
        with pytest.raises(ValueError):
            grid.curve_integral(np.ones((4, 4)), np.ones((5, 5)))


def test_heaviside_dirac_consistency():
    # dirac is the derivative of the heaviside (finite-difference check)
    t = np.linspace(-2.0, 2.0, 401)
    h = 1e-6
    fd = (grid.smoothed_heaviside(t + h) - grid.smoothed_heaviside(t - h)) / (2 * h)
    np.testing.assert_allclose(fd, grid.smoothed_dirac(t), atol=1e-5)


def test_field_validation():
    with pytest.raises(ValueError):
        grid.check_field(np.zeros((2, 5)))
    with pytest.raises(ValueError):
        grid.check_field(np.array([[np.inf, 0, 0]] * 3))
