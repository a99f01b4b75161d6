"""Pixel-grid scalar fields: interpolation, derivatives, and level-set integrals.

Fields are 2-D float64 arrays of shape (height, width) with unit pixel
spacing. Points are (x, y) pairs with x along columns and y along rows.
"""

import numpy as np

# Width of the smoothed Heaviside/Dirac transition band, in pixels.
DEFAULT_EPS = 1.5


def check_field(field):
    """Validate and return a scalar field as a float64 array.

    Requires at least 3 samples per axis (differential operators need
    interior points) and finite values throughout.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2:
        raise ValueError(f"scalar field must be 2-D, got shape {field.shape}")
    if field.shape[0] < 3 or field.shape[1] < 3:
        raise ValueError(f"scalar field must be at least 3x3, got {field.shape}")
    if not np.all(np.isfinite(field)):
        raise ValueError("scalar field contains non-finite values")
    return field


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ValueError(f"field dimensions differ: {a.shape} vs {b.shape}")


def sample_bilinear(field, x, y):
    """Bilinearly interpolate `field` at points (x, y).

    Points outside [0, width-1] x [0, height-1] are clamped to the border
    before interpolation. Exact at grid nodes. x and y may be scalars or
    arrays of matching shape.
    """
    field = np.asarray(field, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("sample point coordinates must be finite")
    h, w = field.shape
    x = np.clip(x, 0.0, w - 1.0)
    y = np.clip(y, 0.0, h - 1.0)
    x0 = np.clip(np.floor(x).astype(np.intp), 0, w - 2)
    y0 = np.clip(np.floor(y).astype(np.intp), 0, h - 2)
    fx = x - x0
    fy = y - y0
    f00 = field[y0, x0]
    f01 = field[y0, x0 + 1]
    f10 = field[y0 + 1, x0]
    f11 = field[y0 + 1, x0 + 1]
    return (f00 * (1 - fx) * (1 - fy) + f01 * fx * (1 - fy)
            + f10 * (1 - fx) * fy + f11 * fx * fy)


def sample_bilinear_stack(fields, x, y):
    """Bilinearly interpolate a stack of fields (N, H, W) at shared points.

    Equivalent to calling sample_bilinear per field, but the index and
    weight computation is shared; returns shape (N,) + x.shape.
    """
    fields = np.asarray(fields, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("sample point coordinates must be finite")
    h, w = fields.shape[1:]
    x = np.clip(x, 0.0, w - 1.0)
    y = np.clip(y, 0.0, h - 1.0)
    x0 = np.clip(np.floor(x).astype(np.intp), 0, w - 2)
    y0 = np.clip(np.floor(y).astype(np.intp), 0, h - 2)
    fx = x - x0
    fy = y - y0
    f00 = fields[:, y0, x0]
    f01 = fields[:, y0, x0 + 1]
    f10 = fields[:, y0 + 1, x0]
    f11 = fields[:, y0 + 1, x0 + 1]
    return (f00 * (1 - fx) * (1 - fy) + f01 * fx * (1 - fy)
            + f10 * (1 - fx) * fy + f11 * fx * fy)


def scatter_bilinear(shape, x, y, values):
    """Adjoint of sample_bilinear: accumulate `values` at fractional points.

    For any field f, sum(sample_bilinear(f, x, y) * values) equals
    sum(f * scatter_bilinear(f.shape, x, y, values)); this turns reductions
    against many sampled fields into one scatter plus dot products.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("sample point coordinates must be finite")
    h, w = shape
    x = np.clip(x, 0.0, w - 1.0).ravel()
    y = np.clip(y, 0.0, h - 1.0).ravel()
    x0 = np.clip(np.floor(x).astype(np.intp), 0, w - 2)
    y0 = np.clip(np.floor(y).astype(np.intp), 0, h - 2)
    fx = x - x0
    fy = y - y0
    v = np.asarray(values, dtype=np.float64).ravel()
    base = y0 * w + x0
    out = np.bincount(base, v * (1 - fx) * (1 - fy), minlength=h * w)
    out += np.bincount(base + 1, v * fx * (1 - fy), minlength=h * w)
    out += np.bincount(base + w, v * (1 - fx) * fy, minlength=h * w)
    out += np.bincount(base + w + 1, v * fx * fy, minlength=h * w)
    return out.reshape(h, w)


def gradient(field):
    """Return (d/dx, d/dy) of a field.

    Central differences at interior points, one-sided first-order
    differences at the borders, unit pixel spacing.
    """
    field = check_field(field)
    gy, gx = np.gradient(field)
    return gx, gy


def gradient_norm(field):
    gx, gy = gradient(field)
    return np.hypot(gx, gy)


def hessian(field):
    """Return (xx, xy, yy) second derivatives of a field.

    Second central differences in the interior; border rows/columns are
    filled by replicating the nearest interior value.
    """
    field = check_field(field)
    hxx = np.zeros_like(field)
    hyy = np.zeros_like(field)
    hxx[:, 1:-1] = field[:, 2:] - 2.0 * field[:, 1:-1] + field[:, :-2]
    hxx[:, 0] = hxx[:, 1]
    hxx[:, -1] = hxx[:, -2]
    hyy[1:-1, :] = field[2:, :] - 2.0 * field[1:-1, :] + field[:-2, :]
    hyy[0, :] = hyy[1, :]
    hyy[-1, :] = hyy[-2, :]
    hxy = np.zeros_like(field)
    hxy[1:-1, 1:-1] = 0.25 * (field[2:, 2:] - field[2:, :-2]
                              - field[:-2, 2:] + field[:-2, :-2])
    hxy[0, :] = hxy[1, :]
    hxy[-1, :] = hxy[-2, :]
    hxy[:, 0] = hxy[:, 1]
    hxy[:, -1] = hxy[:, -2]
    return hxx, hxy, hyy


def smoothed_heaviside(t, eps=DEFAULT_EPS):
    """C^2 regularized Heaviside with compact transition band of width eps.

    H(t) = 0 for t <= -eps, 1 for t >= eps, and
    0.5 * (1 + t/eps + sin(pi*t/eps)/pi) in between.
    """
    t = np.asarray(t, dtype=np.float64)
    out = np.where(t >= eps, 1.0, 0.0)
    band = np.abs(t) < eps
    tb = t[band] if t.ndim else (t if band else None)
    if t.ndim == 0:
        if band:
            return 0.5 * (1.0 + t / eps + np.sin(np.pi * t / eps) / np.pi)
        return float(out)
    out[band] = 0.5 * (1.0 + tb / eps + np.sin(np.pi * tb / eps) / np.pi)
    return out


def smoothed_dirac(t, eps=DEFAULT_EPS):
    """Derivative of smoothed_heaviside: (1 + cos(pi*t/eps)) / (2*eps) on the band."""
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t, dtype=np.float64)
    band = np.abs(t) < eps
    if t.ndim == 0:
        if band:
            return (1.0 + np.cos(np.pi * t / eps)) / (2.0 * eps)
        return 0.0
    out[band] = (1.0 + np.cos(np.pi * t[band] / eps)) / (2.0 * eps)
    return out


def region_integral(integrand, levelset, side="inside", eps=DEFAULT_EPS):
    """Integrate over the region bounded by the zero level set.

    side="inside" integrates over {levelset < 0} via the smoothed
    Heaviside of -levelset; side="outside" over the complement. The two
    sides partition the full pixel sum exactly.
    """
    integrand = np.asarray(integrand, dtype=np.float64)
    levelset = np.asarray(levelset, dtype=np.float64)
    _check_same_shape(integrand, levelset)
    if side == "inside":
        weights = smoothed_heaviside(-levelset, eps)
    elif side == "outside":
        weights = smoothed_heaviside(levelset, eps)
    else:
        raise ValueError(f"side must be 'inside' or 'outside', got {side!r}")
    return float(np.sum(integrand * weights))


def curve_integral(integrand, levelset, eps=DEFAULT_EPS):
    """Integrate along the zero level set.

    Discretized as sum(integrand * dirac(levelset) * |grad levelset|).
    """
    integrand = np.asarray(integrand, dtype=np.float64)
    levelset = np.asarray(levelset, dtype=np.float64)
    _check_same_shape(integrand, levelset)
    delta = smoothed_dirac(levelset, eps)
    return float(np.sum(integrand * delta * gradient_norm(levelset)))
