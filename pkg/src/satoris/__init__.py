"""Subspace-informed nuclear-norm matrix completion for spatiotemporal data."""

from .baselines import (
    IterativeSvd,
    KnnImputer,
    MeanFill,
    NNmin,
    SklearnAdapter,
    SoftImpute,
    impute,
    impute_stacked,
    make_imputer,
    register_imputer,
    srisi,
)
from .errors import DataError, DimensionError, EvaluationError, SatorisError, SolverError
from .formulations import (
    ExplicitMethod,
    factorization_norm_oracle,
    impute_explicit,
    nuclear_norm_sdp,
    solve_explicit,
)
from .masking import ErrorReport, aggregate, apply_mask, evaluate, generate_mask
from .matrix_core import (
    SvdResult,
    frobenius_norm,
    hadamard,
    nuclear_norm_svd,
    sign_align,
    truncated_svd,
)
from .sdp import SdpProblem, SdpSolution, SolverOptions, solve, verify_kkt
from .subspace import SubspacePrior, build_prior, stability_series, subspace_overlap
from .synthetic import SyntheticGenerator, generate_synthetic_days

__version__ = "0.1.0"
