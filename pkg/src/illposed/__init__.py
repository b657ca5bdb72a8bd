"""Ill-posedness orderings, singular-value profiling and nonlinearity probes
for discretized linear and nonlinear inverse problems."""

from ._kernels import BACKEND
from .errors import IllposedError
from .gallery import (
    DiscretizedOperator,
    GridFunction,
    autoconv_apply,
    autoconv_frechet,
    build_cesaro,
    build_diagonal,
    build_embedding,
    build_hausdorff,
    build_integration,
    build_mimic,
)
from .linalg_core import SingularSystem, compute_svd, isometry_defect, polar_decompose, truncated_pinv
from .ordering import (
    construct_connecting_factors,
    douglas_factorize,
    modulus_of_injectivity,
    norm_order_constant,
    sigma_order,
    tikhonov_compare,
)
from .profiler import estimate_decay_exponent, illposedness_interval, profile

__version__ = "0.1.0"
