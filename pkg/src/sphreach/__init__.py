"""Reach of the mixed-degree spherical-harmonic embedding of S^d, its
large-degree limit, and the exceedence probability of random spherical
harmonics under the spherical ensemble."""

__version__ = "0.1.0"

from .kernel import KernelSpec, metric_scale, normalized_kernel, total_dim
from .reach import ReachProfile, critical_radius, limit_function_f, limit_function_g, limit_function_h
from .tube import TubeQuery, exceedence_probability, make_query

__all__ = [
    "KernelSpec",
    "ReachProfile",
    "TubeQuery",
    "critical_radius",
    "exceedence_probability",
    "limit_function_f",
    "limit_function_g",
    "limit_function_h",
    "make_query",
    "metric_scale",
    "normalized_kernel",
    "total_dim",
]
