"""Similarity transforms between the training domain and the image domain.

g(x; p) = scale * R(theta) @ x + (tx, ty) maps training coordinates x to
image coordinates x_hat. Model fields live in the training domain and are
pulled back through g^{-1} when evaluated on the image grid.
"""

from dataclasses import dataclass

import numpy as np

from . import grid


def wrap_angle(theta):
    """Wrap an angle to (-pi, pi]."""
    t = (theta + np.pi) % (2.0 * np.pi) - np.pi
    if t == -np.pi:
        t = np.pi
    return t


@dataclass(frozen=True)
class Pose:
    """Similarity-transform parameters (pixels, radians, dimensionless scale)."""

    tx: float = 0.0
    ty: float = 0.0
    theta: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not (0.2 <= self.scale <= 5.0):
            raise ValueError(f"scale {self.scale} outside sanity bounds [0.2, 5]")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_array(self):
        return np.array([self.tx, self.ty, self.theta, self.scale])

    @staticmethod
    def from_array(a):
        return Pose(tx=float(a[0]), ty=float(a[1]), theta=float(a[2]),
                    scale=float(a[3]))

    def apply(self, x, y):
        """Map training coordinates to image coordinates."""
        c, s = np.cos(self.theta), np.sin(self.theta)
        xh = self.scale * (c * x - s * y) + self.tx
        yh = self.scale * (s * x + c * y) + self.ty
        return xh, yh

    def apply_inverse(self, xh, yh):
        """Map image coordinates back to training coordinates."""
        c, s = np.cos(self.theta), np.sin(self.theta)
        dx = (xh - self.tx) / self.scale
        dy = (yh - self.ty) / self.scale
        return c * dx + s * dy, -s * dx + c * dy

    def inverse(self):
        c, s = np.cos(self.theta), np.sin(self.theta)
        inv_s = 1.0 / self.scale
        return Pose(tx=-inv_s * (c * self.tx + s * self.ty),
                    ty=-inv_s * (-s * self.tx + c * self.ty),
                    theta=-self.theta, scale=inv_s)


def image_grid(shape):
    """Return (x, y) coordinate arrays for an image of the given shape."""
    h, w = shape
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    return x, y


def warp_model_field(field, pose, out_shape):
    """Resample a training-domain field onto the image grid.

    Each image pixel x_hat takes the value field(g^{-1}(x_hat; pose)),
    bilinearly interpolated with border clamping. Level values are
    preserved (no distance rescaling).
    """
    xh, yh = image_grid(out_shape)
    x, y = pose.apply_inverse(xh, yh)
    return grid.sample_bilinear(field, x, y)


def pose_jacobians(pose, x, y):
    """Per-pixel derivative blocks of g with respect to each pose parameter.

    x, y are training-domain coordinates (g^{-1} of the image grid).
    Returns a list of four (dgx, dgy) pairs ordered (tx, ty, theta, scale).
    """
    c, s = np.cos(pose.theta), np.sin(pose.theta)
    ones = np.ones_like(x)
    zeros = np.zeros_like(x)
    # d g / d theta = scale * R(theta + pi/2) @ x
    dth = (pose.scale * (-s * x - c * y), pose.scale * (c * x - s * y))
    # d g / d scale = R(theta) @ x
    dsc = (c * x - s * y, s * x + c * y)
    return [(ones, zeros), (zeros, ones), dth, dsc]


def pose_mixed_jacobians(pose):
    """The 2x2 matrices d^2 g / (dx dp_i), ordered (tx, ty, theta, scale)."""
    c, s = np.cos(pose.theta), np.sin(pose.theta)
    zero = np.zeros((2, 2))
    d_theta = pose.scale * np.array([[-s, -c], [c, -s]])
    d_scale = np.array([[c, -s], [s, c]])
    return [zero, zero, d_theta, d_scale]


def spatial_jacobian_inverse(pose):
    """[d g / d x]^{-1} = R(-theta) / scale."""
    c, s = np.cos(pose.theta), np.sin(pose.theta)
    return np.array([[c, s], [-s, c]]) / pose.scale
