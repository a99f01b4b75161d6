"""Active contour segmentation with coupled shape and appearance priors."""

from .energy import (DegenerateRegionError, EnergyConfig, SegmentationResult,
                     chan_vese, chan_vese_shape, compute_energy,
                     grad_appearance, grad_pose, grad_shape, minimize)
from .levelset import (DegenerateShapeError, align_shapes, mask_from_levelset,
                       signed_distance)
from .metrics import dice, seg_error
from .models import (AppearanceModel, CoupledModel, ShapeModel,
                     constant_appearance, evaluate_appearance, evaluate_shape,
                     load_model, pca, save_model, train_appearance,
                     train_coupled, train_shape)
from .photogeom import (PhotoGeomProfile, ProfileResolutionError,
                        evaluate_profile, extract_profile, profile_derivative)
from .transform import Pose, warp_model_field

__version__ = "0.1.0"

__all__ = [
    "AppearanceModel", "CoupledModel", "DegenerateRegionError",
    "DegenerateShapeError", "EnergyConfig", "PhotoGeomProfile", "Pose",
    "ProfileResolutionError", "SegmentationResult", "ShapeModel",
    "align_shapes", "chan_vese", "chan_vese_shape", "compute_energy",
    "constant_appearance", "dice", "evaluate_appearance", "evaluate_profile",
    "evaluate_shape", "extract_profile", "grad_appearance", "grad_pose",
    "grad_shape", "load_model", "mask_from_levelset", "minimize", "pca",
    "profile_derivative", "save_model", "seg_error", "signed_distance",
    "train_appearance", "train_coupled", "train_shape", "warp_model_field",
]
