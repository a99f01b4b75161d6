"""Command-line harness: synth, train, segment, track, eval, sweep-k.

Exit codes: 0 success, 2 invalid input, 3 degenerate or failed optimization.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import energy, imageio, levelset, metrics, models, photogeom, synth
from .energy import EnergyConfig
from .transform import Pose

EXIT_INVALID = 2
EXIT_FAILED = 3


class CliError(Exception):
    def __init__(self, message, code=EXIT_INVALID):
        super().__init__(message)
        self.code = code


# -- config handling ----------------------------------------------------------

_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(EnergyConfig)}


def load_config(path=None, overrides=()):
    """EnergyConfig from a flat key=value file plus command-line overrides."""
    values = {}
    pairs = []
    if path:
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                pairs.append(line)
    pairs.extend(overrides)
    for pair in pairs:
        if "=" not in pair:
            raise CliError(f"config entry {pair!r} is not key=value")
        key, raw = (s.strip() for s in pair.split("=", 1))
        if key not in _CONFIG_FIELDS:
            raise CliError(f"unknown config key {key!r}")
        kind = _CONFIG_FIELDS[key].type
        if "int" in str(kind):
            values[key] = int(raw)
        elif raw.lower() == "none":
            values[key] = None
        else:
            values[key] = float(raw)
    try:
        config = EnergyConfig(**values)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad config: {exc}") from exc
    print("config:", " ".join(f"{f}={getattr(config, f)}" for f in _CONFIG_FIELDS))
    return config


def parse_pose(args):
    try:
        return Pose(tx=args.tx, ty=args.ty, theta=args.theta, scale=args.scale)
    except ValueError as exc:
        raise CliError(f"bad init pose: {exc}") from exc


def add_pose_args(parser):
    parser.add_argument("--tx", type=float, default=0.0)
    parser.add_argument("--ty", type=float, default=0.0)
    parser.add_argument("--theta", type=float, default=0.0)
    parser.add_argument("--scale", type=float, default=1.0)


def add_config_args(parser):
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config key")


# -- synth --------------------------------------------------------------------

def cmd_synth(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "fighters":
        images, masks = synth.make_fighter_set(n=args.n, seed=args.seed)
        for i, (img, msk) in enumerate(zip(images, masks)):
            imageio.write_pgm(out / f"train_{i:02d}.pgm", img)
            imageio.write_pgm(out / f"train_{i:02d}_mask.pgm", msk)
        test = synth.make_test_image(images[args.test_index],
                                     occlusion=args.occlusion,
                                     noise_variance=args.noise_var,
                                     seed=args.seed + 1)
        imageio.write_pgm(out / "test.pgm", test)
        imageio.write_pgm(out / "test_mask.pgm", masks[args.test_index])
    elif args.kind == "beetle":
        mask = synth.beetle_mask()
        clean = synth.textured_object(mask, None, base=150.0, ramp=70.0)
        rng = np.random.default_rng(args.seed)
        imageio.write_pgm(out / "image.pgm", synth.add_noise(clean, args.noise_var, rng))
        imageio.write_pgm(out / "truth_mask.pgm", mask)
        for i, m in enumerate(synth.make_noisy_shape_set(mask, n=args.n,
                                                         seed=args.seed)):
            imageio.write_pgm(out / f"train_{i:02d}_mask.pgm", m)
    elif args.kind == "rimmed":
        image, truth, train = synth.make_rimmed_scene(seed=args.seed,
                                                      n_shapes=args.n,
                                                      noise_variance=args.noise_var)
        imageio.write_pgm(out / "image.pgm", image)
        imageio.write_pgm(out / "truth_mask.pgm", truth)
        for i, m in enumerate(train):
            imageio.write_pgm(out / f"train_{i:02d}_mask.pgm", m)
    elif args.kind == "sequence":
        frames, truths = synth.make_sequence(
            n_frames=args.n, seed=args.seed, noise_variance=args.noise_var,
            base=synth.BACKGROUND + args.contrast, ramp=args.ramp)
        for i, (frame, truth) in enumerate(zip(frames, truths)):
            imageio.write_pgm(out / f"frame_{i:03d}.pgm", frame)
            imageio.write_pgm(out / f"frame_{i:03d}_mask.pgm", truth)
    print(f"wrote {args.kind} dataset to {out}")
    return 0


# -- train --------------------------------------------------------------------

def _load_pairs(image_paths, mask_paths):
    images = [imageio.read_image(p) for p in image_paths] if image_paths else None
    masks = [imageio.read_mask(p) for p in mask_paths]
    if images is not None and len(images) != len(masks):
        raise CliError("image and mask counts differ")
    return images, masks


def train_models(images, masks, mode, k=4, l=4, m=4, bins=photogeom.DEFAULT_BINS,
                 block_weight=None):
    """Full training pipeline: align, extract profiles, run PCA."""
    if len(masks) < 2:
        raise CliError("training needs at least 2 samples")
    aligned = levelset.align_shapes(masks)
    aligned_sdfs = [sdf for _, sdf in aligned]
    profiles = None
    if mode in ("appearance", "decoupled", "coupled"):
        if images is None:
            raise CliError(f"mode {mode!r} needs training images")
        profiles = [photogeom.extract_profile(img, levelset.signed_distance(msk),
                                              bins)
                    for img, msk in zip(images, masks)]
    if mode == "shape":
        return models.train_shape(aligned_sdfs, k)
    if mode == "appearance":
        return models.train_appearance(profiles, l)
    if mode == "decoupled":
        return (models.train_shape(aligned_sdfs, k),
                models.train_appearance(profiles, l))
    if mode == "coupled":
        return models.train_coupled(aligned_sdfs, profiles, m,
                                    block_weight=block_weight)
    raise CliError(f"unknown training mode {mode!r}")


def cmd_train(args):
    images, masks = _load_pairs(args.images, args.masks)
    model = train_models(images, masks, args.mode, k=args.k, l=args.l, m=args.m,
                         bins=args.bins, block_weight=args.block_weight)
    models.save_model(args.out, model)
    print(f"wrote {args.mode} model to {args.out}")
    return 0


# -- segment ------------------------------------------------------------------

def _resolve_model(model, algorithm):
    """Model pieces required by an algorithm, from whatever file kind loaded."""
    if algorithm == "cvs":
        if isinstance(model, tuple):
            return model[0]
        if isinstance(model, models.ShapeModel):
            return model
        raise CliError("cvs needs a shape (or decoupled) model file")
    if algorithm == "esad":
        if isinstance(model, tuple) and isinstance(model[0], models.ShapeModel):
            return model
        raise CliError("esad needs a decoupled model file")
    if algorithm == "esac":
        if isinstance(model, models.CoupledModel):
            return model
        raise CliError("esac needs a coupled model file")
    raise CliError(f"unknown algorithm {algorithm!r}")


def run_segmentation(image, algorithm, model, pose, config, init_w=None,
                     init_v=None, u_in=None):
    if algorithm == "cv":
        if model is not None:
            shape_model = model[0] if isinstance(model, tuple) else model
            mean = shape_model.shape_mean if isinstance(
                shape_model, models.CoupledModel) else shape_model.mean
            from .transform import warp_model_field
            init_mask = warp_model_field(mean, pose, image.shape) < 0
        else:
            h, w = image.shape
            init_mask = synth.disc_mask(image.shape, (w / 2, h / 2),
                                        min(h, w) / 4.0)
        return energy.chan_vese(image, init_mask, config)
    part = _resolve_model(model, algorithm)
    if algorithm == "cvs":
        return energy.chan_vese_shape(image, part, init_w, pose, config,
                                      u_in=u_in)
    mode = "decoupled" if algorithm == "esad" else "coupled"
    return energy.minimize(image, part, init_w, pose, config, mode=mode,
                           init_v=init_v)


def _write_result(out, image, result, algorithm, model):
    out.mkdir(parents=True, exist_ok=True)
    imageio.write_pgm(out / "mask.pgm", result.mask)
    imageio.write_pgm(out / "overlay.pgm",
                      imageio.overlay_contour(image, result.mask))
    rows = [(i, *e) for i, e in enumerate(result.energy_trace)]
    imageio.write_csv(out / "trace.csv", ["iteration", "E_in", "E_out", "E"], rows)
    with open(out / "params.txt", "w") as fh:
        fh.write(f"algorithm {algorithm}\n")
        fh.write(f"converged {result.converged}\n")
        fh.write(f"iterations {result.iterations}\n")
        fh.write(f"final_energy {result.final_energy!r}\n")
        fh.write(f"u_out {result.u_out!r}\n")
        p = result.pose
        fh.write(f"pose tx {p.tx!r} ty {p.ty!r} theta {p.theta!r} "
                 f"scale {p.scale!r}\n")
        fh.write(f"w {' '.join(repr(x) for x in result.w)}\n")
        fh.write(f"v {' '.join(repr(x) for x in result.v)}\n")
    if algorithm in ("esad", "esac") and model is not None:
        part = _resolve_model(model, algorithm)
        if algorithm == "esad":
            profile = models.evaluate_appearance(part[1], result.v)
        else:
            profile = models.evaluate_appearance(part, result.w)
        imageio.write_csv(out / "profile.csv", ["tau", "intensity"],
                          list(zip(profile.tau_grid, profile.samples)))
        imageio.write_pgm(out / "profile.pgm",
                          imageio.render_line_chart(profile.tau_grid,
                                                    profile.samples))


def cmd_segment(args):
    image = imageio.read_image(args.image)
    model = models.load_model(args.model) if args.model else None
    config = load_config(args.config, args.overrides)
    pose = parse_pose(args)
    try:
        result = run_segmentation(image, args.algorithm, model, pose, config)
    except energy.DegenerateRegionError as exc:
        raise CliError(f"optimization failed: {exc}", EXIT_FAILED) from exc
    _write_result(Path(args.out), image, result, args.algorithm, model)
    print(f"final energy {result.final_energy:.6g} after "
          f"{result.iterations} iterations (converged={result.converged})")
    return 0


# -- track --------------------------------------------------------------------

def cmd_track(args):
    frame_paths = sorted(Path(args.frames).glob(args.pattern))
    frame_paths = [p for p in frame_paths if "_mask" not in p.name]
    if not frame_paths:
        raise CliError(f"no frames matching {args.pattern} in {args.frames}")
    model = models.load_model(args.model) if args.model else None
    config = load_config(args.config, args.overrides)
    pose = parse_pose(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    w, v = None, None
    rows = []
    for i, path in enumerate(frame_paths):
        image = imageio.read_image(path)
        try:
            result = run_segmentation(image, args.algorithm, model, pose,
                                      config, init_w=w, init_v=v)
        except energy.DegenerateRegionError:
            rows.append((i, path.name, "", "", "failed"))
            continue  # next frame re-inits from the last successful estimate
        pose, w, v = result.pose, result.w, result.v
        _write_result(out / f"frame_{i:03d}", image, result, args.algorithm,
                      model)
        truth_path = path.with_name(path.stem + "_mask" + path.suffix)
        d = (f"{metrics.dice(result.mask, imageio.read_mask(truth_path)):.6f}"
             if truth_path.exists() else "")
        rows.append((i, path.name, d, repr(result.final_energy),
                     result.iterations))
    imageio.write_csv(out / "summary.csv",
                      ["frame", "file", "dice", "final_energy", "iterations"],
                      rows)
    print(f"tracked {len(frame_paths)} frames -> {out / 'summary.csv'}")
    return 0


# -- eval ---------------------------------------------------------------------

def cmd_eval(args):
    pred = imageio.read_mask(args.pred)
    truth = imageio.read_mask(args.truth)
    try:
        out = {"seg_error": metrics.seg_error(pred, truth),
               "dice": metrics.dice(pred, truth)}
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    print(json.dumps(out))
    return 0


# -- sweep-k ------------------------------------------------------------------

def cmd_sweep_k(args):
    image = imageio.read_image(args.image)
    truth = imageio.read_mask(args.truth_mask)
    mask_paths = sorted(Path(args.train_masks).glob("*_mask.pgm"))
    if len(mask_paths) < 2:
        raise CliError(f"need >= 2 training masks in {args.train_masks}")
    masks = [imageio.read_mask(p) for p in mask_paths]
    config = load_config(args.config, args.overrides)
    pose = parse_pose(args)
    k_list = [int(s) for s in args.k_list.split(",")]
    truth_sdf = levelset.signed_distance(truth)
    profile = photogeom.extract_profile(image, truth_sdf, args.bins)
    app_model = models.constant_appearance(profile)
    u_in = float(image[truth].mean())
    if args.no_align:
        # keep the dislocations in the training set: the sweep then measures
        # how added eigenshapes absorb pose noise as model detail
        sdfs = [levelset.signed_distance(m) for m in masks]
    else:
        sdfs = [sdf for _, sdf in levelset.align_shapes(masks)]
    rows = []
    base_energy = {}
    for k in k_list:
        shape_model = models.train_shape(sdfs, k)
        for algorithm in args.algorithms.split(","):
            if algorithm == "cvs":
                result = energy.chan_vese_shape(image, shape_model, None, pose,
                                                config, u_in=u_in)
            elif algorithm == "esa":
                result = energy.minimize(image, (shape_model, app_model), None,
                                         pose, config, mode="decoupled")
            else:
                raise CliError(f"sweep-k supports cvs/esa, not {algorithm!r}")
            base = base_energy.setdefault(algorithm, result.final_energy)
            rows.append((k, algorithm, metrics.seg_error(result.mask, truth),
                         result.final_energy / base))
    imageio.write_csv(args.out, ["k", "algorithm", "seg_error",
                                 "relative_final_energy"], rows)
    print(f"wrote sweep to {args.out}")
    return 0


# -- parser -------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="photoseg",
        description="Shape-and-appearance prior active contour segmentation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic datasets")
    p.add_argument("--kind", choices=["fighters", "beetle", "rimmed", "sequence"],
                   required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-var", type=float, default=15.0)
    p.add_argument("--occlusion", type=float, default=0.3)
    p.add_argument("--test-index", type=int, default=0)
    p.add_argument("--contrast", type=float, default=20.0)
    p.add_argument("--ramp", type=float, default=20.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train PCA models")
    p.add_argument("--images", nargs="*", default=None)
    p.add_argument("--masks", nargs="+", required=True)
    p.add_argument("--mode", choices=["shape", "appearance", "decoupled",
                                      "coupled"], required=True)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--l", type=int, default=4)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--bins", type=int, default=photogeom.DEFAULT_BINS)
    p.add_argument("--block-weight", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("segment", help="segment one image")
    p.add_argument("--image", required=True)
    p.add_argument("--model")
    p.add_argument("--algorithm", choices=["cv", "cvs", "esad", "esac"],
                   required=True)
    p.add_argument("--out", required=True)
    add_pose_args(p)
    add_config_args(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("track", help="track through an image sequence")
    p.add_argument("--frames", required=True)
    p.add_argument("--pattern", default="*.pgm")
    p.add_argument("--model")
    p.add_argument("--algorithm", choices=["cv", "cvs", "esad", "esac"],
                   required=True)
    p.add_argument("--out", required=True)
    add_pose_args(p)
    add_config_args(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="compare a predicted mask to ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-k",
                       help="segmentation quality as eigenshape count grows")
    p.add_argument("--image", required=True)
    p.add_argument("--truth-mask", required=True)
    p.add_argument("--train-masks", required=True)
    p.add_argument("--k-list", default="1,3,10,30")
    p.add_argument("--algorithms", default="cvs,esa")
    p.add_argument("--no-align", action="store_true",
                   help="train eigenshapes on the masks as given")
    p.add_argument("--bins", type=int, default=photogeom.DEFAULT_BINS)
    p.add_argument("--out", required=True)
    add_pose_args(p)
    add_config_args(p)
    p.set_defaults(func=cmd_sweep_k)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
