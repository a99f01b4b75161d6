"""Procedural training and test data: shapes, textures, and sequences.

All generators are deterministic for a fixed numpy Generator / seed.
Intensities are in [0, 255]; the default background gray is 128.
"""

import numpy as np
from skimage.draw import polygon as draw_polygon

from .levelset import signed_distance

BACKGROUND = 128.0


def disc_mask(shape, center, radius):
    h, w = shape
    y, x = np.mgrid[0:h, 0:w]
    return (x - center[0]) ** 2 + (y - center[1]) ** 2 <= radius ** 2


def ellipse_mask(shape, center, radii, theta=0.0):
    h, w = shape
    y, x = np.mgrid[0:h, 0:w]
    c, s = np.cos(theta), np.sin(theta)
    u = c * (x - center[0]) + s * (y - center[1])
    v = -s * (x - center[0]) + c * (y - center[1])
    return (u / radii[0]) ** 2 + (v / radii[1]) ** 2 <= 1.0


def polygon_mask(shape, xs, ys):
    mask = np.zeros(shape, dtype=bool)
    rr, cc = draw_polygon(np.asarray(ys), np.asarray(xs), shape=shape)
    mask[rr, cc] = True
    return mask


def fighter_mask(shape=(128, 128), rng=None, center=None):
    """A randomized delta-wing aircraft silhouette (nose up)."""
    rng = np.random.default_rng(rng)
    h, w = shape
    cx, cy = center if center is not None else (w / 2.0, h / 2.0)
    body_len = rng.uniform(0.52, 0.66) * min(h, w)
    nose_y = cy - 0.55 * body_len
    tail_y = cy + 0.45 * body_len
    body_hw = rng.uniform(0.055, 0.085) * min(h, w)
    wing_span = rng.uniform(0.30, 0.42) * min(h, w)
    wing_front = cy + rng.uniform(-0.08, 0.04) * body_len
    wing_back = cy + rng.uniform(0.24, 0.36) * body_len
    wing_tip_y = wing_back + rng.uniform(-0.06, 0.04) * body_len
    tail_span = rng.uniform(0.13, 0.20) * min(h, w)
    tail_front = tail_y - rng.uniform(0.14, 0.20) * body_len
    # one closed outline, right side mirrored onto the left
    right_x = [cx, cx + body_hw, cx + wing_span, cx + wing_span,
               cx + body_hw, cx + tail_span, cx + tail_span, cx + body_hw]
    right_y = [nose_y, wing_front, wing_back, wing_tip_y,
               wing_tip_y, tail_front + 0.35 * (tail_y - tail_front),
               tail_y, tail_y]
    xs = right_x + [2 * cx - x for x in reversed(right_x[1:])]
    ys = right_y + list(reversed(right_y[1:]))
    return polygon_mask(shape, xs, ys)


def beetle_mask(shape=(128, 128), center=None, size=1.0):
    """A beetle-like blob: elliptical body, round head, leg nubs."""
    h, w = shape
    cx, cy = center if center is not None else (w / 2.0, h / 2.0)
    body = ellipse_mask(shape, (cx, cy + 6 * size), (16 * size, 24 * size))
    head = disc_mask(shape, (cx, cy - 20 * size), 10 * size)
    mask = body | head
    for side in (-1, 1):
        for dy, length in ((-6, 20), (6, 22), (18, 20)):
            leg = ellipse_mask(shape, (cx + side * (14 * size + length / 2.5),
                                       cy + (dy + 6) * size),
                               (length * size / 2.0, 2.5 * size))
            mask |= leg
    return mask


def spot_pattern(shape, rng, n_spots=60, radius_range=(2.5, 5.0), depth=60.0):
    """Shared dark-spot field (leopard-style), zero away from spots."""
    h, w = shape
    y, x = np.mgrid[0:h, 0:w]
    pattern = np.zeros(shape)
    for _ in range(n_spots):
        sx = rng.uniform(0, w)
        sy = rng.uniform(0, h)
        r = rng.uniform(*radius_range)
        d2 = (x - sx) ** 2 + (y - sy) ** 2
        pattern -= depth * np.exp(-d2 / (2.0 * (r / 2.0) ** 2))
    return np.clip(pattern, -depth, 0.0)


def textured_object(mask, spots=None, base=150.0, ramp=70.0,
                    background=BACKGROUND):
    """Paint an object with a depth ramp plus an optional spot pattern.

    Intensity rises linearly with distance from the boundary (base at the
    boundary, base + ramp at the deepest point), so the iso-contour mean
    profile is informative; spots add leopard-like texture on top.
    """
    sdf = signed_distance(mask)
    psi_min = sdf.min()
    depth = np.clip(sdf / psi_min, 0.0, 1.0)  # 0 at boundary, 1 at core
    tex = base + ramp * depth
    if spots is not None:
        tex = tex + spots
    image = np.full(mask.shape, background, dtype=np.float64)
    image[mask] = np.clip(tex[mask], 0.0, 255.0)
    return image


def add_noise(image, variance, rng):
    """Zero-mean Gaussian noise of the given variance, clipped to [0, 255]."""
    if variance <= 0:
        return image.copy()
    noisy = image + rng.normal(0.0, np.sqrt(variance), size=image.shape)
    return np.clip(noisy, 0.0, 255.0)


def occlude_top(image, fraction, background=BACKGROUND):
    """Over-paint the top `fraction` of rows with the background gray."""
    out = image.copy()
    rows = int(round(fraction * image.shape[0]))
    out[:rows, :] = background
    return out


def make_fighter_set(n=12, shape=(128, 128), seed=0, base=150.0, ramp=70.0,
                     spot_depth=60.0):
    """N fighter silhouettes sharing one spot texture; returns (images, masks)."""
    rng = np.random.default_rng(seed)
    spots = spot_pattern(shape, rng, depth=spot_depth)
    masks = [fighter_mask(shape, rng) for _ in range(n)]
    images = [textured_object(m, spots, base=base, ramp=ramp) for m in masks]
    return images, masks


def make_test_image(clean_image, occlusion=0.3, noise_variance=15.0, seed=1,
                    background=BACKGROUND):
    """Occlude the top rows with background gray, then add Gaussian noise."""
    rng = np.random.default_rng(seed)
    return add_noise(occlude_top(clean_image, occlusion, background),
                     noise_variance, rng)


def make_noisy_shape_set(true_mask, n=40, seed=0, max_shift=6.0,
                         max_rotation=0.25):
    """Shifted/rotated copies of a true mask, for noisy shape-model PCA."""
    from .transform import Pose, warp_model_field
    rng = np.random.default_rng(seed)
    sdf = signed_distance(true_mask)
    h, w = true_mask.shape
    out = []
    for i in range(n):
        if i == 0:
            pose = Pose()
        else:
            pose = Pose(tx=rng.uniform(-max_shift, max_shift),
                        ty=rng.uniform(-max_shift, max_shift),
                        theta=rng.uniform(-max_rotation, max_rotation))
        # rotate/shift about the image center
        cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
        centered = Pose(tx=pose.tx + cx - (np.cos(pose.theta) * cx
                                           - np.sin(pose.theta) * cy),
                        ty=pose.ty + cy - (np.sin(pose.theta) * cx
                                           + np.cos(pose.theta) * cy),
                        theta=pose.theta)
        out.append(warp_model_field(sdf, centered, true_mask.shape) < 0)
    return out


def make_rimmed_scene(shape=(128, 128), seed=0, body=150.0, rim=230.0,
                      halo=172.0, halo_width=6.0, noise_variance=15.0,
                      n_shapes=40, max_shift=4.0):
    """A rimmed beetle blob with a halo band hugging its outline, plus a
    deliberately noisy (unaligned) shape-training set.

    The halo intensity sits between the object's mean intensity and the
    background mean, so a constant-intensity region model is rewarded for
    leaking across the boundary into it; a boundary intensity profile that
    has seen the bright rim is not.  Returns (image, truth, train_masks).
    """
    truth = beetle_mask(shape)
    sdf = signed_distance(truth)
    clean = np.full(shape, BACKGROUND)
    clean[truth] = body
    clean[(sdf < 0) & (sdf > -2.5)] = rim
    clean[(sdf > 0) & (sdf < halo_width)] = halo
    image = add_noise(clean, noise_variance, np.random.default_rng(seed))
    train = make_noisy_shape_set(truth, n=n_shapes, seed=seed,
                                 max_shift=max_shift)
    return image, truth, train


def make_sequence(n_frames=10, shape=(128, 128), seed=0, velocity=(2.0, 0.0),
                  radius=20.0, base=148.0, ramp=20.0, noise_variance=15.0,
                  start=None, kind="disc"):
    """A moving textured object; returns (frames, truth_masks).

    `base` minus the background gray sets the boundary contrast; `ramp`
    adds internal radial structure that a constant-intensity model cannot
    represent.
    """
    rng = np.random.default_rng(seed)
    h, w = shape
    if start is None:
        start = (w / 2.0 - velocity[0] * n_frames / 2.0,
                 h / 2.0 - velocity[1] * n_frames / 2.0)
    frames, truths = [], []
    for k in range(n_frames):
        cx = start[0] + velocity[0] * k
        cy = start[1] + velocity[1] * k
        if kind == "disc":
            mask = disc_mask(shape, (cx, cy), radius)
        elif kind == "beetle":
            mask = beetle_mask(shape, (cx, cy))
        else:
            raise ValueError(f"unknown sequence kind {kind!r}")
        clean = textured_object(mask, None, base=base, ramp=ramp)
        frames.append(add_noise(clean, noise_variance, rng))
        truths.append(mask)
    return frames, truths
