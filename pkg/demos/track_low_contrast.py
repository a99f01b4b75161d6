"""Walkthrough: track a low-contrast moving object across frames.

The object's boundary intensity equals the background gray; the only
evidence is an interior intensity ramp. A constant-inside-mean model
(Chan-Vese with shape prior) mislocalizes the boundary, while the coupled
shape-and-profile prior tracks it accurately. Each frame is initialized
from the previous frame's final pose and weights.

Run:  python3 demos/track_low_contrast.py
"""

from pathlib import Path

import numpy as np

from photoseg import imageio
from photoseg.energy import (DegenerateRegionError, EnergyConfig,
                             chan_vese_shape, minimize)
from photoseg.levelset import signed_distance
from photoseg.metrics import dice
from photoseg.models import train_coupled, train_shape
from photoseg.photogeom import extract_profile
from photoseg.synth import disc_mask, make_sequence, textured_object
from photoseg.transform import Pose

out = Path("demo_out/tracking")
out.mkdir(parents=True, exist_ok=True)

print("generating an 8-frame sequence (boundary contrast 0, interior ramp "
      "30, noise variance 15) ...")
frames, truths = make_sequence(n_frames=8, seed=3, velocity=(2.0, 0.0),
                               radius=20.0, base=128.0, ramp=30.0,
                               noise_variance=15.0)

print("training priors on clean discs of radius 16..23 ...")
masks = [disc_mask((128, 128), (64, 64), r) for r in range(16, 24)]
images = [textured_object(m, None, base=128.0, ramp=30.0) for m in masks]
sdfs = [signed_distance(m) for m in masks]
profiles = [extract_profile(i, s, 32) for i, s in zip(images, sdfs)]
coupled = train_coupled(sdfs, profiles, 4)
shape_model = train_shape(sdfs, 4)

config = EnergyConfig(max_iterations=400)
start = Pose(tx=(64 - 2.0 * len(frames) / 2) - 63.5)


def track(name, step):
    pose, w, scores = start, None, []
    for i, (frame, truth) in enumerate(zip(frames, truths)):
        try:
            result = step(frame, pose, w)
        except DegenerateRegionError:
            scores.append(0.0)
            continue
        pose, w = result.pose, result.w
        scores.append(dice(result.mask, truth))
        imageio.write_pgm(out / f"{name}_frame_{i:03d}.pgm",
                          imageio.overlay_contour(frame, result.mask))
    print(f"{name:16s} per-frame dice:",
          " ".join(f"{s:.3f}" for s in scores),
          f" mean {np.mean(scores):.4f}")
    return float(np.mean(scores))


m_profile = track("coupled_profile",
                  lambda f, p, w: minimize(f, coupled, w, p, config,
                                           mode="coupled"))
m_const = track("constant_mean",
                lambda f, p, w: chan_vese_shape(f, shape_model, None, p,
                                                config))
print(f"coupled profile model beats constant mean by "
      f"{m_profile - m_const:+.4f} mean dice; overlays in {out}/")
