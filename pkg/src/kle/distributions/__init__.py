"""Densities, samplers and weighted maximum-likelihood estimators."""
from ._common import effective_sample_size
from .acg import AcgParams, acg_fixed_point_residual, acg_log_density, acg_mle, acg_sample
from .esag import EsagParams, esag_build_V, esag_log_density, esag_mle, esag_sample
from .gaussian import GaussianParams, gaussian_log_density, gaussian_mle, gaussian_sample
from .spd_lognormal import (SpdLognormalParams, log_jacobian, spd_lognormal_log_density,
                            spd_lognormal_mle, spd_lognormal_sample)

__all__ = [
    "AcgParams", "EsagParams", "GaussianParams", "SpdLognormalParams",
    "acg_fixed_point_residual", "acg_log_density", "acg_mle", "acg_sample",
    "esag_build_V", "esag_log_density", "esag_mle", "esag_sample",
    "gaussian_log_density", "gaussian_mle", "gaussian_sample",
    "log_jacobian", "spd_lognormal_log_density", "spd_lognormal_mle", "spd_lognormal_sample",
    "effective_sample_size",
]
