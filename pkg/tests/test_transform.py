import numpy as np
import pytest

from photoseg import grid
from photoseg.levelset import signed_distance
from photoseg.synth import disc_mask
from photoseg.transform import (Pose, pose_jacobians, pose_mixed_jacobians,
                                spatial_jacobian_inverse, warp_model_field)


def g_apply(params, x):
    tx, ty, theta, scale = params
    c, s = np.cos(theta), np.sin(theta)
    return np.array([scale * (c * x[0] - s * x[1]) + tx,
                     scale * (s * x[0] + c * x[1]) + ty])


class TestPose:
    def test_inverse_roundtrip(self):
        pose = Pose(tx=5.0, ty=-3.0, theta=0.7, scale=1.4)
        x, y = np.array([2.0, -7.0]), np.array([1.0, 4.0])
        xh, yh = pose.apply(x, y)
        xb, yb = pose.apply_inverse(xh, yh)
        np.testing.assert_allclose([xb, yb], [x, y], atol=1e-12)

    def test_inverse_pose_object(self):
        pose = Pose(tx=2.0, ty=1.0, theta=-0.4, scale=0.8)
        inv = pose.inverse()
        xh, yh = pose.apply(3.0, -2.0)
        np.testing.assert_allclose(inv.apply(xh, yh), (3.0, -2.0), atol=1e-12)

    def test_scale_bounds(self):
        with pytest.raises(ValueError):
            Pose(scale=0.1)

    def test_theta_wrapped(self):
        assert -np.pi < Pose(theta=7.0).theta <= np.pi


class TestPoseDerivatives:
    # every analytic block vs central finite differences of g itself
    def test_jacobian_blocks(self):
        pose = Pose(tx=1.5, ty=-2.0, theta=0.6, scale=1.3)
        pts = np.array([[3.0, -1.0], [0.5, 2.5], [-4.0, 1.0]])
        x, y = pts[:, 0], pts[:, 1]
        jac = pose_jacobians(pose, x, y)
        p0 = pose.as_array()
        h = 1e-6
        for i in range(4):
            for k, pt in enumerate(pts):
                dp = np.zeros(4)
                dp[i] = h
                fd = (g_apply(p0 + dp, pt) - g_apply(p0 - dp, pt)) / (2 * h)
                np.testing.assert_allclose([jac[i][0][k], jac[i][1][k]], fd,
                                           atol=1e-8)

    def test_mixed_jacobians(self):
        pose = Pose(theta=0.3, scale=1.7)
        p0 = pose.as_array()
        h = 1e-6
        mixed = pose_mixed_jacobians(pose)
        for i in range(4):
            dp = np.zeros(4)
            dp[i] = h
            # d/dp of the spatial jacobian columns, probed with basis points
            for col, e in enumerate((np.array([1.0, 0]), np.array([0, 1.0]))):
                fd = ((g_apply(p0 + dp, e) - g_apply(p0 + dp, 0 * e))
                      - (g_apply(p0 - dp, e) - g_apply(p0 - dp, 0 * e))) / (2 * h)
                np.testing.assert_allclose(mixed[i][:, col], fd, atol=1e-8)

    def test_spatial_jacobian_inverse(self):
        pose = Pose(theta=-0.9, scale=2.2)
        c, s = np.cos(pose.theta), np.sin(pose.theta)
        jac = pose.scale * np.array([[c, -s], [s, c]])
        np.testing.assert_allclose(spatial_jacobian_inverse(pose) @ jac,
                                   np.eye(2), atol=1e-12)


class TestWarp:
    def test_identity(self):
        rng = np.random.default_rng(0)
        field = rng.uniform(0, 1, (20, 20))
        np.testing.assert_allclose(warp_model_field(field, Pose(), (20, 20)),
                                   field, atol=1e-12)

    def test_translation_roundtrip(self):
        rng = np.random.default_rng(1)
        field = rng.uniform(0, 1, (32, 32))
        pose = Pose(tx=5.0, ty=0.0)
        back = warp_model_field(warp_model_field(field, pose, (32, 32)),
                                pose.inverse(), (32, 32))
        np.testing.assert_allclose(back[8:-8, 8:-8], field[8:-8, 8:-8],
                                   atol=1e-6)

    @staticmethod
    def _zero_crossing(row):
        k = int(np.flatnonzero(row > 0)[0])
        return k - 1 + row[k - 1] / (row[k - 1] - row[k])

    def test_scale_doubles_zero_set_radius(self):
        sdf = signed_distance(disc_mask((128, 128), (0, 0), 10))
        warped = warp_model_field(sdf, Pose(scale=2.0), (128, 128))
        # zero crossings along the +x ray from the origin
        r0 = self._zero_crossing(sdf[0, :])
        r1 = self._zero_crossing(warped[0, :])
        assert r1 == pytest.approx(2.0 * r0, abs=0.5)
        # level values are preserved, not rescaled distances
        assert warped[0, 0] == pytest.approx(sdf[0, 0], abs=1e-9)


def test_image_grid_shapes():
    from photoseg.transform import image_grid
    x, y = image_grid((3, 5))
    assert x.shape == (3, 5)
    assert x[0, 4] == 4.0 and y[2, 0] == 2.0
