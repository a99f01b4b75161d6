"""PCA priors over aligned signed-distance fields and appearance profiles."""

from dataclasses import dataclass

import numpy as np

from .photogeom import PhotoGeomProfile

MODEL_FILE_VERSION = 1


def pca(vectors, keep):
    """Principal components of a stack of row vectors.

    Returns (mean, components, singular_values) with `keep` top left
    singular directions of the mean-subtracted data. Component sign is
    fixed so each component's largest-magnitude entry is positive.
    """
    data = np.asarray(vectors, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("pca expects a 2-D array of row vectors")
    n = data.shape[0]
    if n < 2:
        raise ValueError("pca needs at least 2 vectors")
    if not 1 <= keep <= n - 1:
        raise ValueError(f"keep must be in [1, {n - 1}], got {keep}")
    mean = data.mean(axis=0)
    centered = data - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:keep]
    svals = svals[:keep]
    flip = components[np.arange(keep), np.argmax(np.abs(components), axis=1)] < 0
    components = np.where(flip[:, None], -components, components)
    return mean, components, svals


@dataclass(frozen=True)
class ShapeModel:
    """Mean level-set field plus eigenshapes (not SDFs in general)."""

    mean: np.ndarray          # (H, W)
    eigenshapes: np.ndarray   # (K, H, W)
    singular_values: np.ndarray

    @property
    def k(self):
        return self.eigenshapes.shape[0]

    @property
    def grid_shape(self):
        return self.mean.shape


@dataclass(frozen=True)
class AppearanceModel:
    """Mean profile plus eigenprofiles on a shared tau grid."""

    mean: PhotoGeomProfile
    eigenprofiles: np.ndarray  # (L, B)
    singular_values: np.ndarray

    @property
    def l(self):
        return self.eigenprofiles.shape[0]

    @property
    def tau_grid(self):
        return self.mean.tau_grid


@dataclass(frozen=True)
class CoupledModel:
    """Joint PCA over stacked shape-and-profile vectors; one weight drives both."""

    shape_mean: np.ndarray
    shape_components: np.ndarray   # (M, H, W)
    profile_mean: PhotoGeomProfile
    profile_components: np.ndarray  # (M, B)
    singular_values: np.ndarray
    block_weight: float

    @property
    def m(self):
        return self.shape_components.shape[0]

    @property
    def grid_shape(self):
        return self.shape_mean.shape

    @property
    def tau_grid(self):
        return self.profile_mean.tau_grid


def train_shape(aligned_sdfs, keep):
    """Shape PCA over aligned signed-distance fields."""
    fields = np.asarray(aligned_sdfs, dtype=np.float64)
    if fields.ndim != 3:
        raise ValueError("expected a stack of 2-D fields")
    n, h, w = fields.shape
    mean, comps, svals = pca(fields.reshape(n, -1), keep)
    return ShapeModel(mean=mean.reshape(h, w),
                      eigenshapes=comps.reshape(keep, h, w),
                      singular_values=svals)


def train_appearance(profiles, keep):
    """Appearance PCA over photo-geometric profiles (no alignment needed)."""
    tau = profiles[0].tau_grid
    for p in profiles[1:]:
        if not np.array_equal(p.tau_grid, tau):
            raise ValueError("profiles must share one tau grid")
    data = np.stack([p.samples for p in profiles])
    mean, comps, svals = pca(data, keep)
    psi_min = float(np.mean([p.psi_min for p in profiles]))
    return AppearanceModel(
        mean=PhotoGeomProfile(samples=mean, tau_grid=tau, psi_min=psi_min),
        eigenprofiles=comps, singular_values=svals)


def default_block_weight(fields, profile_data):
    """Equalize the energy of the shape and appearance blocks.

    1 / sqrt(total shape variance / total appearance variance), from the
    training data itself; guards against one block silently dominating the
    stacked PCA through its units.
    """
    sv = np.sum(np.var(fields, axis=0))
    av = np.sum(np.var(profile_data, axis=0))
    if av == 0 or sv == 0:
        return 1.0
    return float(np.sqrt(sv / av))


def train_coupled(aligned_sdfs, profiles, keep, block_weight=None):
    """Joint PCA over stacked [shape ; block_weight * profile] vectors.

    The appearance block is divided by block_weight after de-stacking, so
    evaluation formulas need no weight.
    """
    fields = np.asarray(aligned_sdfs, dtype=np.float64)
    if len(fields) != len(profiles):
        raise ValueError("need one profile per shape")
    n, h, w = fields.shape
    tau = profiles[0].tau_grid
    pdata = np.stack([p.samples for p in profiles])
    if block_weight is None:
        block_weight = default_block_weight(fields.reshape(n, -1), pdata)
    if not block_weight > 0:
        raise ValueError("block_weight must be positive")
    stacked = np.hstack([fields.reshape(n, -1), block_weight * pdata])
    mean, comps, svals = pca(stacked, keep)
    d = h * w
    psi_min = float(np.mean([p.psi_min for p in profiles]))
    return CoupledModel(
        shape_mean=mean[:d].reshape(h, w),
        shape_components=comps[:, :d].reshape(keep, h, w),
        profile_mean=PhotoGeomProfile(samples=mean[d:] / block_weight,
                                      tau_grid=tau, psi_min=psi_min),
        profile_components=comps[:, d:] / block_weight,
        singular_values=svals,
        block_weight=float(block_weight))


def evaluate_shape(model, w):
    """Mean field plus weighted sum of eigenshapes."""
    w = np.asarray(w, dtype=np.float64)
    comps = model.shape_components if isinstance(model, CoupledModel) else model.eigenshapes
    mean = model.shape_mean if isinstance(model, CoupledModel) else model.mean
    if w.shape != (comps.shape[0],):
        raise ValueError(f"expected {comps.shape[0]} weights, got {w.shape}")
    return mean + np.tensordot(w, comps, axes=1)


def evaluate_appearance(model, v):
    """Mean profile plus weighted sum of eigenprofiles."""
    v = np.asarray(v, dtype=np.float64)
    coupled = isinstance(model, CoupledModel)
    comps = model.profile_components if coupled else model.eigenprofiles
    mean = model.profile_mean if coupled else model.mean
    if v.shape != (comps.shape[0],):
        raise ValueError(f"expected {comps.shape[0]} weights, got {v.shape}")
    return PhotoGeomProfile(samples=mean.samples + v @ comps,
                            tau_grid=mean.tau_grid, psi_min=mean.psi_min)


def constant_appearance(profile):
    """An appearance model with no free parameters (fixed mean profile)."""
    return AppearanceModel(mean=profile,
                           eigenprofiles=np.zeros((0, profile.samples.size)),
                           singular_values=np.zeros(0))


def project_shape(model, field):
    """Optimal weights for a field: inner products against the eigenshapes."""
    coupled = isinstance(model, CoupledModel)
    comps = model.shape_components if coupled else model.eigenshapes
    mean = model.shape_mean if coupled else model.mean
    delta = (np.asarray(field, dtype=np.float64) - mean).ravel()
    return comps.reshape(comps.shape[0], -1) @ delta


# ---------------------------------------------------------------------------
# Serialization: versioned structured text, lossless round trip.

def _write_array(fh, name, arr):
    arr = np.asarray(arr, dtype=np.float64)
    fh.write(f"array {name} {' '.join(map(str, arr.shape))}\n")
    flat = arr.ravel()
    for i in range(0, flat.size, 8):
        fh.write(" ".join(repr(float(x)) for x in flat[i:i + 8]) + "\n")


def _read_array(lines, i):
    head = lines[i].split()
    assert head[0] == "array"
    name = head[1]
    shape = tuple(int(s) for s in head[2:])
    count = int(np.prod(shape)) if shape else 1
    vals = []
    i += 1
    while len(vals) < count:
        vals.extend(float(t) for t in lines[i].split())
        i += 1
    return name, np.array(vals).reshape(shape), i


def save_model(path, model):
    """Write a model (or a decoupled (shape, appearance) pair) to text."""
    if isinstance(model, tuple):
        kind, parts = "decoupled", model
    elif isinstance(model, ShapeModel):
        kind, parts = "shape", (model,)
    elif isinstance(model, AppearanceModel):
        kind, parts = "appearance", (model,)
    elif isinstance(model, CoupledModel):
        kind, parts = "coupled", (model,)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    with open(path, "w") as fh:
        fh.write(f"photoseg-model version {MODEL_FILE_VERSION} kind {kind}\n")
        for part in parts:
            if isinstance(part, ShapeModel):
                h, w = part.grid_shape
                fh.write(f"shape-model height {h} width {w} k {part.k}\n")
                _write_array(fh, "mean", part.mean)
                _write_array(fh, "eigenshapes", part.eigenshapes)
                _write_array(fh, "singular_values", part.singular_values)
            elif isinstance(part, AppearanceModel):
                fh.write(f"appearance-model b {part.tau_grid.size} l {part.l} "
                         f"psi_min {part.mean.psi_min!r}\n")
                _write_array(fh, "tau_grid", part.tau_grid)
                _write_array(fh, "mean", part.mean.samples)
                _write_array(fh, "eigenprofiles", part.eigenprofiles)
                _write_array(fh, "singular_values", part.singular_values)
            elif isinstance(part, CoupledModel):
                h, w = part.grid_shape
                fh.write(f"coupled-model height {h} width {w} m {part.m} "
                         f"b {part.tau_grid.size} "
                         f"block_weight {part.block_weight!r} "
                         f"psi_min {part.profile_mean.psi_min!r}\n")
                _write_array(fh, "shape_mean", part.shape_mean)
                _write_array(fh, "shape_components", part.shape_components)
                _write_array(fh, "tau_grid", part.tau_grid)
                _write_array(fh, "profile_mean", part.profile_mean.samples)
                _write_array(fh, "profile_components", part.profile_components)
                _write_array(fh, "singular_values", part.singular_values)


def _read_arrays(lines, i, names):
    out = {}
    for name in names:
        got, arr, i = _read_array(lines, i)
        if got != name:
            raise ValueError(f"model file: expected array {name}, got {got}")
        out[name] = arr
    return out, i


def load_model(path):
    """Read a model file; returns the model, or a (shape, appearance) tuple."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    head = lines[0].split()
    if head[0] != "photoseg-model" or int(head[2]) != MODEL_FILE_VERSION:
        raise ValueError(f"not a version-{MODEL_FILE_VERSION} model file: {path}")
    kind = head[4]
    parts = []
    i = 1
    while i < len(lines) and lines[i].strip():
        tokens = lines[i].split()
        meta = dict(zip(tokens[1::2], tokens[2::2]))
        if tokens[0] == "shape-model":
            arrs, i = _read_arrays(lines, i + 1,
                                   ["mean", "eigenshapes", "singular_values"])
            parts.append(ShapeModel(mean=arrs["mean"],
                                    eigenshapes=arrs["eigenshapes"],
                                    singular_values=arrs["singular_values"]))
        elif tokens[0] == "appearance-model":
            arrs, i = _read_arrays(lines, i + 1, ["tau_grid", "mean",
                                                  "eigenprofiles", "singular_values"])
            mean = PhotoGeomProfile(samples=arrs["mean"], tau_grid=arrs["tau_grid"],
                                    psi_min=float(meta["psi_min"]))
            parts.append(AppearanceModel(mean=mean,
                                         eigenprofiles=arrs["eigenprofiles"],
                                         singular_values=arrs["singular_values"]))
        elif tokens[0] == "coupled-model":
            arrs, i = _read_arrays(lines, i + 1,
                                   ["shape_mean", "shape_components", "tau_grid",
                                    "profile_mean", "profile_components",
                                    "singular_values"])
            mean = PhotoGeomProfile(samples=arrs["profile_mean"],
                                    tau_grid=arrs["tau_grid"],
                                    psi_min=float(meta["psi_min"]))
            parts.append(CoupledModel(shape_mean=arrs["shape_mean"],
                                      shape_components=arrs["shape_components"],
                                      profile_mean=mean,
                                      profile_components=arrs["profile_components"],
                                      singular_values=arrs["singular_values"],
                                      block_weight=float(meta["block_weight"])))
        else:
            raise ValueError(f"model file: unknown section {tokens[0]!r}")
    if kind == "decoupled":
        return tuple(parts)
    return parts[0]
