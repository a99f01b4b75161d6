"""Signed distances, mask conversions, and overlap-based shape alignment."""

import numpy as np
from scipy import ndimage, optimize

from . import grid
from .transform import Pose, warp_model_field


class DegenerateShapeError(ValueError):
    """Raised when a mask has no object pixels or no background pixels."""


def check_mask(mask):
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    return mask


def signed_distance(mask):
    """Exact Euclidean signed distance to a mask's boundary.

    The boundary sits at inter-pixel midpoints between 4-connected
    object/background pairs, so distances carry a 0.5 px offset and psi is
    never exactly zero at pixel centers. Negative inside the object.
    """
    mask = check_mask(mask)
    n_obj = int(mask.sum())
    if n_obj == 0 or n_obj == mask.size:
        raise DegenerateShapeError("mask must contain both object and background pixels")
    dist_to_object = ndimage.distance_transform_edt(~mask)
    dist_to_background = ndimage.distance_transform_edt(mask)
    psi = np.where(mask, -(dist_to_background - 0.5), dist_to_object - 0.5)
    return psi


def mask_from_levelset(field):
    """Binary mask of the region {field < 0}. May be empty."""
    return np.asarray(field, dtype=np.float64) < 0


def _soft_mask(sdf, pose=None, eps=grid.DEFAULT_EPS):
    if pose is None:
        phi = sdf
    else:
        phi = warp_model_field(sdf, pose, sdf.shape)
    return grid.smoothed_heaviside(-phi, eps)


def _soft_jaccard(a, b):
    inter = float(np.sum(a * b))
    union = float(np.sum(a + b - a * b))
    return inter / union if union > 0 else 0.0


def pairwise_overlap_score(masks):
    """Sum of Jaccard indices over all unordered mask pairs."""
    masks = [check_mask(m) for m in masks]
    score = 0.0
    for i in range(len(masks)):
        for j in range(i + 1, len(masks)):
            inter = np.logical_and(masks[i], masks[j]).sum()
            union = np.logical_or(masks[i], masks[j]).sum()
            score += inter / union if union > 0 else 0.0
    return score


def align_shapes(masks, max_rounds=3, maxiter=30):
    """Align training masks by maximizing the summed pairwise overlap.

    The first shape's pose is fixed to identity; each other shape's
    similarity pose is optimized in turn (soft Jaccard objective, numeric
    gradients) with a multi-start over four initial rotations. Returns a
    list of (Pose, aligned signed-distance field) in input order. The
    aligned field is the pose-resampled SDF rescaled by the pose scale, so
    it remains a signed-distance function.
    """
    masks = [check_mask(m) for m in masks]
    if len(masks) < 2:
        raise ValueError("alignment needs at least 2 masks")
    sdfs = [signed_distance(m) for m in masks]
    n = len(masks)
    params = [np.array([0.0, 0.0, 0.0, 0.0]) for _ in range(n)]  # tx,ty,theta,log s
    h, w = masks[0].shape
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    # coarse-to-fine: bulk optimization on a 2x-downsampled pyramid level,
    # one polishing pass at full resolution
    coarse = [s[::2, ::2] / 2.0 for s in sdfs]
    levels = [(coarse, 0.5), (sdfs, 1.0)]

    def pose_of(q, res=1.0):
        # rotation/scale taken about the image center so the parameters stay
        # decoupled: g(x) = s R (x - c) + c + t
        s = float(np.exp(q[3]))
        c, sn = np.cos(q[2]), np.sin(q[2])
        ccx, ccy = cx * res, cy * res
        return Pose(tx=q[0] * res + ccx - s * (c * ccx - sn * ccy),
                    ty=q[1] * res + ccy - s * (sn * ccx + c * ccy),
                    theta=q[2], scale=s)

    bounds = [(-40, 40), (-40, 40), (-np.pi, np.pi), (np.log(0.5), np.log(2.0))]
    for fields, res in levels:
        softs = [_soft_mask(fields[i], pose_of(params[i], res))
                 for i in range(n)]
        rounds = max_rounds if res < 1.0 else 1

        def shape_loss(q, i, others):
            soft_i = _soft_mask(fields[i], pose_of(q, res))
            return -sum(_soft_jaccard(soft_i, o) for o in others)

        for rnd in range(rounds):
            moved = 0.0
            for i in range(1, n):
                others = [softs[j] for j in range(n) if j != i]
                best = (shape_loss(params[i], i, others), params[i])
                starts = [params[i]]
                if rnd == 0 and res < 1.0:
                    # elongated shapes have rotation local minima; multi-start
                    starts += [np.array([params[i][0], params[i][1], rot,
                                         params[i][3]])
                               for rot in (0.5 * np.pi, np.pi, -0.5 * np.pi)]
                for q0 in starts:
                    r = optimize.minimize(shape_loss, q0, args=(i, others),
                                          method="L-BFGS-B", bounds=bounds,
                                          options={"maxiter": maxiter,
                                                   "eps": 0.05, "ftol": 1e-12,
                                                   "gtol": 1e-10})
                    if r.fun < best[0]:
                        best = (r.fun, r.x)
                # polish with a derivative-free pass; soft-Jaccard FD
                # gradients go flat near the optimum
                r = optimize.minimize(shape_loss, best[1], args=(i, others),
                                      method="Nelder-Mead",
                                      options={"maxiter": 80, "xatol": 1e-3,
                                               "fatol": 1e-10})
                if r.fun < best[0]:
                    best = (r.fun, r.x)
                moved += float(np.linalg.norm(best[1] - params[i]))
                params[i] = best[1]
                softs[i] = _soft_mask(fields[i], pose_of(params[i], res))
            if moved < 1e-3:
                break

    # Soft Jaccard can disagree with the binary score by a sliver; revert any
    # pose that does not help the binary overlap so the output never scores
    # below the identity-pose input.
    def binary_masks(ps):
        return [warp_model_field(sdfs[i], pose_of(ps[i]), sdfs[i].shape) < 0
                for i in range(n)]

    for i in range(1, n):
        if np.allclose(params[i], 0.0):
            continue
        kept = pairwise_overlap_score(binary_masks(params))
        trial = [p.copy() for p in params]
        trial[i][:] = 0.0
        if pairwise_overlap_score(binary_masks(trial)) > kept:
            params = trial

    out = []
    for i in range(n):
        pose = pose_of(params[i])
        # re-derive the exact SDF of the resampled shape; rescaled warped
        # values drift near borders where clamped sampling flattens them
        warped = warp_model_field(sdfs[i], pose, sdfs[i].shape)
        out.append((pose, signed_distance(mask_from_levelset(warped))))
    return out
