"""Recognition-segmentation energy, analytic gradients, and optimizers.

The energy compares the image against a warped level-set shape model and a
1-D appearance model evaluated at the level values:

    E = E_in + E_out
    E_in  = int_{phi<0} alpha*(I - F(phi))^2 + beta*(F'(phi)*|grad phi|)^2
    E_out = int_{phi>0} alpha*(I - u_out)^2

where phi is the pose-warped shape model and F the appearance profile
composed with the per-iteration level normalization tau = phi / |min phi|.
Gradient descent runs simultaneously over pose, shape, and appearance
weights with per-group step sizes and backtracking.
"""

from dataclasses import dataclass

import numpy as np

from . import grid, models as models_mod, photogeom
from .levelset import mask_from_levelset, signed_distance
from .photogeom import PhotoGeomProfile
from .transform import (Pose, image_grid, pose_jacobians, pose_mixed_jacobians,
                        spatial_jacobian_inverse)

MIN_REGION_AREA = 4.0  # px; below this the contour has collapsed


class DegenerateRegionError(RuntimeError):
    """Raised when the estimated object region collapses."""


@dataclass
class EnergyConfig:
    """Weights, step sizes, and stopping rules for the descent."""

    alpha: float = 1.0
    beta: float = 0.1
    # Desired first-iteration parameter moves per group; the constant step
    # sizes delta_t are calibrated from these against the initial gradient.
    step_translation: float = 0.5    # px
    step_rotation: float = 0.01      # rad
    step_scale: float = 0.005
    step_shape: float = 0.05         # fraction of the leading sigma
    step_appearance: float = 0.05
    max_iterations: int = 2000
    energy_tolerance: float | None = None  # absolute; None = 1e-6 * initial E
    dirac_width: float = grid.DEFAULT_EPS
    max_backtracks: int = 20
    sigma_bound: float = 3.0
    curvature_weight: float = 0.01 * 255.0 ** 2  # CV baseline length penalty

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or (self.alpha == 0 and self.beta == 0):
            raise ValueError("need alpha >= 0, beta >= 0, not both zero")
        for name in ("step_translation", "step_rotation", "step_scale",
                     "step_shape", "step_appearance"):
            # zero freezes that parameter group
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass
class SegmentationResult:
    w: np.ndarray
    v: np.ndarray
    pose: Pose
    u_out: float
    mask: np.ndarray
    energy_trace: np.ndarray  # (iterations+1, 3) rows of (E_in, E_out, E)
    converged: bool
    iterations: int

    @property
    def final_energy(self):
        return float(self.energy_trace[-1, 2])


def _profile_tables(samples, tau_grid):
    d1 = photogeom.profile_derivative(tau_grid, samples, 1)
    d2 = photogeom.profile_derivative(tau_grid, samples, 2)
    return samples, d1, d2


class _Objective:
    """Shared evaluation machinery for all model-driven energies.

    mode 'decoupled': models = (ShapeModel, AppearanceModel), params (w, v).
    mode 'coupled':   models = CoupledModel, single weight vector w (v unused).
    mode 'cvs':       models = ShapeModel, appearance is the constant inside
                      mean (Chan-Vese with shape prior); beta is forced to 0.
    """

    def __init__(self, image, models, config, mode, fixed_u_in=None):
        self.image = grid.check_field(image)
        self.config = config
        self.mode = mode
        self.fixed_u_in = fixed_u_in
        if mode == "decoupled":
            self.shape_model, self.app_model = models
            self.shape_mean = self.shape_model.mean
            self.shape_comps = self.shape_model.eigenshapes
            self.shape_sigma = self.shape_model.singular_values
            self.app_sigma = self.app_model.singular_values
            self.tau_grid = self.app_model.tau_grid
            self.n_w = self.shape_comps.shape[0]
            self.n_v = self.app_model.l
        elif mode == "coupled":
            self.coupled = models
            self.shape_mean = self.coupled.shape_mean
            self.shape_comps = self.coupled.shape_components
            self.shape_sigma = self.coupled.singular_values
            self.app_sigma = np.zeros(0)
            self.tau_grid = self.coupled.tau_grid
            self.n_w = self.coupled.m
            self.n_v = 0
        elif mode == "cvs":
            self.shape_model = models
            self.shape_mean = self.shape_model.mean
            self.shape_comps = self.shape_model.eigenshapes
            self.shape_sigma = self.shape_model.singular_values
            self.app_sigma = np.zeros(0)
            self.tau_grid = None
            self.n_w = self.shape_comps.shape[0]
            self.n_v = 0
        else:
            raise ValueError(f"unknown mode {mode!r}")
        self.beta = 0.0 if mode == "cvs" else config.beta
        # training-domain gradients of the eigenshapes (h_i), cached as one
        # stack [phi_1..phi_K, dx_1..dx_K, dy_1..dy_K] for shared sampling
        self.comp_grads = [grid.gradient(c) for c in self.shape_comps]
        self._comp_stack = np.concatenate([
            self.shape_comps,
            np.stack([g[0] for g in self.comp_grads]) if self.n_w else
            np.zeros((0,) + self.shape_mean.shape),
            np.stack([g[1] for g in self.comp_grads]) if self.n_w else
            np.zeros((0,) + self.shape_mean.shape)])
        self._xh, self._yh = image_grid(self.image.shape)

    # -- model evaluation -------------------------------------------------

    def shape_field(self, w):
        return self.shape_mean + np.tensordot(w, self.shape_comps, axes=1)

    def profile_samples(self, w, v):
        if self.mode == "decoupled":
            return self.app_model.mean.samples + v @ self.app_model.eigenprofiles
        if self.mode == "coupled":
            return (self.coupled.profile_mean.samples
                    + w @ self.coupled.profile_components)
        return None  # cvs: constant appearance

    def clip_weights(self, w, v):
        b = self.config.sigma_bound
        w = np.clip(w, -b * self.shape_sigma, b * self.shape_sigma)
        if v.size:
            v = np.clip(v, -b * self.app_sigma, b * self.app_sigma)
        return w, v

    # -- state ------------------------------------------------------------

    def state(self, w, v, pose, norm=None, u_out=None):
        """Evaluate all per-pixel fields and the energy triple at (w, v, pose)."""
        cfg = self.config
        eps = cfg.dirac_width
        x, y = pose.apply_inverse(self._xh, self._yh)
        phi = grid.sample_bilinear(self.shape_field(w), x, y)
        inside_w = grid.smoothed_heaviside(-phi, eps)
        area = float(inside_w.sum())
        if area < MIN_REGION_AREA:
            raise DegenerateRegionError(f"estimated region area {area:.2f} px")
        gx, gy = grid.gradient(phi)
        gnorm = np.hypot(gx, gy)
        phi_min = float(phi.min())
        if phi_min >= 0:
            raise DegenerateRegionError("warped shape model has no interior")
        m = float(norm) if norm is not None else -phi_min

        I = self.image
        if self.mode == "cvs":
            u_in = self.fixed_u_in
            if u_in is None:
                u_in = float(np.sum(I * inside_w) / area)
            Fv = np.full_like(phi, u_in)
            F1 = np.zeros_like(phi)
            F2 = np.zeros_like(phi)
            F0, F1_0 = u_in, 0.0
            tau = None
        else:
            samples, d1, d2 = _profile_tables(self.profile_samples(w, v),
                                              self.tau_grid)
            tau = phi / m
            Fv = np.interp(tau, self.tau_grid, samples)
            F1 = np.interp(tau, self.tau_grid, d1) / m
            F2 = np.interp(tau, self.tau_grid, d2) / m ** 2
            F0 = samples[-1]
            F1_0 = d1[-1] / m

        if u_out is None:
            outside_w = 1.0 - inside_w
            denom = float(outside_w.sum())
            u_out = float(np.sum(I * outside_w) / denom) if denom > 0 else 0.0

        ein_density = cfg.alpha * (I - Fv) ** 2 + self.beta * (F1 * gnorm) ** 2
        e_in = float(np.sum(ein_density * inside_w))
        e_out = grid.region_integral(cfg.alpha * (I - u_out) ** 2, phi,
                                     "outside", eps)
        return {
            "w": np.asarray(w, dtype=np.float64),
            "v": np.asarray(v, dtype=np.float64),
            "pose": pose, "x": x, "y": y,
            "phi": phi, "gx": gx, "gy": gy, "gnorm": gnorm,
            "tau": tau, "m": m, "Fv": Fv, "F1": F1, "F2": F2,
            "F0": F0, "F1_0": F1_0, "u_out": u_out,
            "inside_w": inside_w, "area": area,
            "energies": (e_in, e_out, e_in + e_out),
        }

    def energy(self, w, v, pose, norm=None, u_out=None):
        return self.state(w, v, pose, norm=norm, u_out=u_out)["energies"]

    # -- gradients ----------------------------------------------------------

    def gradients(self, st):
        """Analytic (grad_pose, grad_w, grad_v) of E at a state.

        The level normalizer and u_out are treated as frozen, matching the
        per-iteration refresh policy.
        """
        cfg = self.config
        eps = cfg.dirac_width
        I = self.image
        phi, gx, gy, gnorm = st["phi"], st["gx"], st["gy"], st["gnorm"]
        Fv, F1, F2 = st["Fv"], st["F1"], st["F2"]
        pose, u_out = st["pose"], st["u_out"]
        delta = grid.smoothed_dirac(phi, eps)
        inside_w = st["inside_w"]
        gnorm2 = gnorm ** 2

        # curve-term densities at the zero level (F evaluated at level 0)
        a_curve = (cfg.alpha * (I - st["F0"]) ** 2
                   + self.beta * (st["F1_0"] * gnorm) ** 2)
        a_out = cfg.alpha * (I - u_out) ** 2
        # shared region-term factor
        resid = cfg.alpha * (I - Fv) - self.beta * F2 * gnorm2

        # pose gradient
        hxx, hxy, hyy = grid.hessian(phi)
        jinv = spatial_jacobian_inverse(pose)
        ux = jinv[0, 0] * gx + jinv[0, 1] * gy
        uy = jinv[1, 0] * gx + jinv[1, 1] * gy
        jac = pose_jacobians(pose, st["x"], st["y"])
        mixed = pose_mixed_jacobians(pose)
        g_pose = np.zeros(4)
        for i, ((dgx, dgy), mx) in enumerate(zip(jac, mixed)):
            curve = np.sum((a_curve - a_out) * (gx * dgx + gy * dgy) * delta)
            hx = hxx * dgx + hxy * dgy + mx[0, 0] * ux + mx[0, 1] * uy
            hy = hxy * dgx + hyy * dgy + mx[1, 0] * ux + mx[1, 1] * uy
            region = 2.0 * np.sum(inside_w * (
                F1 * (gx * dgx + gy * dgy) * resid
                - self.beta * F1 ** 2 * (gx * hx + gy * hy)))
            g_pose[i] = curve + region

        # shape gradient: each component reduces warped eigenshape fields
        # against shared per-pixel weights; done as one scatter of the
        # weights back to the training grid plus dot products (the adjoint
        # of the bilinear warp), which is exact and independent of K
        k = self.n_w
        w_phi = (a_out - a_curve) * delta - 2.0 * inside_w * F1 * resid
        w_h = 2.0 * self.beta * inside_w * F1 ** 2
        tshape = self.shape_mean.shape
        adj = np.stack([
            grid.scatter_bilinear(tshape, st["x"], st["y"], w_phi),
            grid.scatter_bilinear(tshape, st["x"], st["y"], w_h * ux),
            grid.scatter_bilinear(tshape, st["x"], st["y"], w_h * uy),
        ]).reshape(3, -1)
        flat = self._comp_stack.reshape(3 * k, -1) if k else self._comp_stack
        g_w = (flat[:k] @ adj[0] + flat[k:2 * k] @ adj[1]
               + flat[2 * k:] @ adj[2]) if k else np.zeros(0)

        # appearance gradient
        if self.mode == "decoupled" and self.n_v:
            g_v = self._appearance_gradient(st, self.app_model.eigenprofiles)
        else:
            g_v = np.zeros(self.n_v)
        if self.mode == "coupled":
            g_w = g_w + self._appearance_gradient(st, self.coupled.profile_components)
        return g_pose, g_w, g_v

    def _appearance_gradient(self, st, eigenprofiles):
        cfg = self.config
        I = self.image
        tau, m = st["tau"], st["m"]
        Fv, F1, gnorm = st["Fv"], st["F1"], st["gnorm"]
        inside_w = st["inside_w"]
        out = np.zeros(eigenprofiles.shape[0])
        for i, comp in enumerate(eigenprofiles):
            Fi = np.interp(tau, self.tau_grid, comp)
            dFi = np.interp(tau, self.tau_grid,
                            photogeom.profile_derivative(self.tau_grid, comp, 1)) / m
            out[i] = 2.0 * np.sum(inside_w * (
                cfg.alpha * (Fv - I) * Fi
                + self.beta * F1 * gnorm ** 2 * dFi))
        return out


# -- public single-shot wrappers ---------------------------------------------

def compute_energy(image, models, w, v, pose, config, mode="decoupled",
                   u_out=None, norm=None):
    """Energy triple (E_in, E_out, E) at the given parameters.

    u_out and the level normalizer default to their closed-form /
    per-evaluation values; pass them explicitly to reproduce the frozen
    quantities used inside a gradient evaluation.
    """
    obj = _Objective(image, models, config, mode)
    return obj.energy(w, v, pose, norm=norm, u_out=u_out)


def grad_pose(image, models, w, v, pose, config, mode="decoupled"):
    obj = _Objective(image, models, config, mode)
    return obj.gradients(obj.state(w, v, pose))[0]


def grad_shape(image, models, w, v, pose, config, mode="decoupled"):
    obj = _Objective(image, models, config, mode)
    return obj.gradients(obj.state(w, v, pose))[1]


def grad_appearance(image, models, w, v, pose, config, mode="decoupled"):
    obj = _Objective(image, models, config, mode)
    return obj.gradients(obj.state(w, v, pose))[2]


# -- descent loop -------------------------------------------------------------

def _calibrate_steps(cfg, g_pose, g_w, g_v, shape_sigma, app_sigma):
    """Constant per-group step sizes from desired first-iteration moves."""
    tiny = 1e-30
    dt = np.zeros(5)
    dt[0] = cfg.step_translation / (np.linalg.norm(g_pose[:2]) + tiny)
    dt[1] = cfg.step_rotation / (abs(g_pose[2]) + tiny)
    dt[2] = cfg.step_scale / (abs(g_pose[3]) + tiny)
    w_move = cfg.step_shape * (shape_sigma[0] if shape_sigma.size else 1.0)
    dt[3] = w_move / (np.linalg.norm(g_w) + tiny)
    if g_v.size:
        v_move = cfg.step_appearance * (app_sigma[0] if app_sigma.size else 1.0)
        dt[4] = v_move / (np.linalg.norm(g_v) + tiny)
    return np.minimum(dt, 1e12)


def _run_descent(obj, w0, v0, pose0):
    """Backtracking gradient descent shared by minimize and chan_vese_shape."""
    cfg = obj.config
    w = np.asarray(w0, dtype=np.float64).copy()
    v = np.asarray(v0, dtype=np.float64).copy()
    pose = pose0
    st = obj.state(w, v, pose)
    trace = [st["energies"]]
    tol = cfg.energy_tolerance
    if tol is None:
        tol = 1e-6 * abs(st["energies"][2])
    dt = None
    flat_count = 0
    converged = False
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        g_pose, g_w, g_v = obj.gradients(st)
        if not (np.all(np.isfinite(g_pose)) and np.all(np.isfinite(g_w))
                and np.all(np.isfinite(g_v))):
            raise DegenerateRegionError("non-finite gradient")
        if dt is None:
            dt = _calibrate_steps(cfg, g_pose, g_w, g_v,
                                  obj.shape_sigma, obj.app_sigma)
            dt0 = dt.copy()
        e_prev = trace[-1][2]
        accepted = None
        scale_dt = 1.0
        for _ in range(cfg.max_backtracks + 1):
            step = dt * scale_dt
            pa = pose.as_array() - step[[0, 0, 1, 2]] * g_pose
            pa[3] = np.clip(pa[3], 0.2, 5.0)
            w_new = w - step[3] * g_w
            v_new = v - step[4] * g_v if v.size else v
            w_new, v_new = obj.clip_weights(w_new, v_new)
            try:
                st_new = obj.state(w_new, v_new, Pose.from_array(pa))
            except DegenerateRegionError:
                scale_dt *= 0.5
                continue
            if st_new["energies"][2] <= e_prev:
                accepted = (w_new, v_new, Pose.from_array(pa), st_new)
                break
            scale_dt *= 0.5
        if accepted is None:
            # fully stalled; record a flat step
            trace.append(trace[-1])
            flat_count += 1
            if flat_count >= 10:
                converged = True
                break
            continue
        if scale_dt < 1.0:
            dt = dt * max(scale_dt, 2 ** -cfg.max_backtracks)
        else:
            dt = np.minimum(dt * 1.2, dt0)
        w, v, pose, st = accepted
        trace.append(st["energies"])
        if abs(e_prev - st["energies"][2]) < tol:
            flat_count += 1
            if flat_count >= 10:
                converged = True
                break
        else:
            flat_count = 0
    return SegmentationResult(
        w=w, v=v, pose=pose, u_out=st["u_out"],
        mask=mask_from_levelset(st["phi"]),
        energy_trace=np.array(trace), converged=converged, iterations=it)


def minimize(image, models, init_w, init_pose, config=None, mode="decoupled",
             init_v=None):
    """Gradient descent on the full energy over pose, shape, and appearance.

    mode 'decoupled' takes models = (ShapeModel, AppearanceModel) and
    separate weight vectors; mode 'coupled' takes a CoupledModel whose
    single weight vector drives both parts.
    """
    config = config or EnergyConfig()
    obj = _Objective(image, models, config, mode)
    w0 = np.zeros(obj.n_w) if init_w is None else np.asarray(init_w, float)
    v0 = np.zeros(obj.n_v) if init_v is None else np.asarray(init_v, float)
    return _run_descent(obj, w0, v0, init_pose)


def chan_vese_shape(image, shape_model, init_w, init_pose, config=None,
                    u_in=None):
    """Chan-Vese with a PCA shape prior: piecewise-constant means over (w, p).

    u_in defaults to the closed-form inside mean each iteration; pass a
    value to fix it (noisy-shape-model experiments use the true mean).
    """
    config = config or EnergyConfig()
    obj = _Objective(image, shape_model, config, "cvs", fixed_u_in=u_in)
    w0 = np.zeros(obj.n_w) if init_w is None else np.asarray(init_w, float)
    return _run_descent(obj, w0, np.zeros(0), init_pose)


# -- Chan-Vese baseline (no prior) --------------------------------------------

def _cv_energy(image, phi, mu, eps):
    inside_w = grid.smoothed_heaviside(-phi, eps)
    a_in = float(inside_w.sum())
    a_out = float(inside_w.size - a_in)
    u_in = float(np.sum(image * inside_w) / a_in) if a_in > 0 else 0.0
    u_out = (float(np.sum(image * (1 - inside_w)) / a_out) if a_out > 0 else 0.0)
    length = grid.curve_integral(np.ones_like(phi), phi, eps)
    e_in = float(np.sum((image - u_in) ** 2 * inside_w)) + mu * length
    e_out = float(np.sum((image - u_out) ** 2 * (1 - inside_w)))
    return e_in, e_out, u_in, u_out


def _curvature(phi):
    gx, gy = grid.gradient(phi)
    hxx, hxy, hyy = grid.hessian(phi)
    denom = (gx ** 2 + gy ** 2) ** 1.5 + 1e-12
    return (hxx * gy ** 2 - 2.0 * hxy * gx * gy + hyy * gx ** 2) / denom


def chan_vese(image, init_mask, config=None, reinit_every=50):
    """Two-phase piecewise-constant segmentation without priors.

    Full-grid level-set evolution with curvature regularization; the level
    set is re-initialized to a signed distance periodically (skipped when
    that would raise the energy). The length penalty is folded into the
    recorded E_in so that E = E_in + E_out holds row-wise in the trace.
    """
    config = config or EnergyConfig()
    image = grid.check_field(image)
    eps = config.dirac_width
    mu = config.curvature_weight
    init_mask = np.asarray(init_mask, dtype=bool)
    try:
        phi = signed_distance(init_mask)
    except ValueError:
        # degenerate init: report the trivial split without evolving
        e_in, e_out, _, u_out = _cv_energy(image, np.where(init_mask, -1.0, 1.0),
                                           mu, eps)
        return SegmentationResult(
            w=np.zeros(0), v=np.zeros(0), pose=Pose(), u_out=u_out,
            mask=init_mask, energy_trace=np.array([[e_in, e_out, e_in + e_out]]),
            converged=True, iterations=0)

    e_in, e_out, u_in, u_out = _cv_energy(image, phi, mu, eps)
    trace = [(e_in, e_out, e_in + e_out)]
    tol = config.energy_tolerance
    if tol is None:
        tol = 1e-6 * abs(trace[0][2])
    dt_base = None
    flat = 0
    converged = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        delta = grid.smoothed_dirac(phi, eps)
        # inside is {phi < 0}, so misfit to u_in pushes phi up (outward loss).
        # The data term acts on the whole grid rather than only the dirac
        # band; backtracking still guarantees descent, and the front does not
        # starve between re-initializations.
        force = (mu * _curvature(phi) * delta
                 + (image - u_in) ** 2 - (image - u_out) ** 2)
        fmax = float(np.abs(force).max())
        if fmax == 0:
            converged = True
            break
        if dt_base is None:
            dt_base = 0.45 / fmax
        e_prev = trace[-1][2]
        accepted = False
        dt = dt_base
        for _ in range(config.max_backtracks + 1):
            phi_new = phi + dt * force
            e_in, e_out, ui_new, uo_new = _cv_energy(image, phi_new, mu, eps)
            if e_in + e_out <= e_prev:
                accepted = True
                break
            dt *= 0.5
        if not accepted:
            trace.append(trace[-1])
            flat += 1
            if flat >= 10:
                converged = True
                break
            continue
        dt_base = min(dt * 1.5, 1.0 / max(fmax, 1e-12))
        phi, u_in, u_out = phi_new, ui_new, uo_new
        if it % reinit_every == 0:
            mask = mask_from_levelset(phi)
            if mask.any() and not mask.all():
                phi_r = signed_distance(mask)
                er_in, er_out, ui_r, uo_r = _cv_energy(image, phi_r, mu, eps)
                if er_in + er_out <= e_in + e_out:
                    phi, e_in, e_out, u_in, u_out = phi_r, er_in, er_out, ui_r, uo_r
        trace.append((e_in, e_out, e_in + e_out))
        if abs(e_prev - trace[-1][2]) < tol:
            flat += 1
            if flat >= 10:
                converged = True
                break
        else:
            flat = 0
    return SegmentationResult(
        w=np.zeros(0), v=np.zeros(0), pose=Pose(), u_out=u_out,
        mask=mask_from_levelset(phi), energy_trace=np.array(trace),
        converged=converged, iterations=it)
