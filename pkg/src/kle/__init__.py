"""Kernelised likelihood estimation for manifold-valued trajectories.

Non-parametric regression whose responses live on the sphere, on the space
of axes (unit quaternions included), on the SPD cone or in R^d. At each query
time the parameters of an intrinsic distribution are fitted by kernel-weighted
maximum likelihood.
"""
from .adaptation import (ActivationFunction, ViaPointTarget, adapted_weights, blend,
                         kle_fit_adapted, synthesize_target_set)
from .generation import GenerationSpec, generate_trajectories, generate_trajectory, smoother_matrix
from .kernels import BACKEND
from .regression import (FittedCurve, Kernel, QueryGrid, SolverOptions, TrajectoryDataset,
                         bandwidth_cv, curve_mean, kernel_weights, kernel_weights_manifold,
                         kle_fit)

__version__ = "0.1.0"

__all__ = [
    "ActivationFunction", "ViaPointTarget", "adapted_weights", "blend", "kle_fit_adapted",
    "synthesize_target_set", "GenerationSpec", "generate_trajectories", "generate_trajectory",
    "smoother_matrix", "BACKEND", "FittedCurve", "Kernel", "QueryGrid", "SolverOptions",
    "TrajectoryDataset", "bandwidth_cv", "curve_mean", "kernel_weights",
    "kernel_weights_manifold", "kle_fit",
]
