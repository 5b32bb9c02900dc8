"""Dynamic partial sufficient dimension reduction.

Estimates, at any query point w, the subspace of the reducible predictors x
that carries all information about the response given the shielded
predictors w, together with its local dimension.  Candidate matrices come
from kernel-localized SIR / SAVE / directional regression; the dimension
comes from a bootstrap ladle estimator.
"""

from .bandwidth import (
    BandwidthSearch,
    cv_slice,
    default_grid,
    mixture_loglik,
    rot_bandwidth,
    select_bandwidth,
)
from .candidates import (
    DR,
    METHODS,
    SAVE,
    SIR,
    CandidateMatrix,
    SubspaceEstimate,
    candidate_matrix,
    extract_subspace,
    m_dr,
    m_save,
    m_sir,
)
from .data import (
    Dataset,
    SlicePartition,
    discretize,
    load_dataset,
    make_slices,
    save_dataset,
)
from .errors import (
    AllCellsInvalid,
    DegenerateNeighborhood,
    EmptySliceAtQuery,
    EstimationError,
    SingularCovariance,
    SliceTooSmall,
)
from .kernels import (
    EPANECHNIKOV,
    GAUSSIAN,
    ConditionalMoments,
    KernelSpec,
    conditional_moments,
    kernel_weight,
    nw_cov,
    nw_mean,
    nw_second_moments,
    nw_slice_means,
    nw_slice_probs,
)
from .ladle import (
    LadleProfile,
    OrderResult,
    bootstrap_resample,
    default_replicates,
    eigenvector_variability,
    estimate_order,
    ladle_curves,
    ladle_kmax,
    ladle_profile,
)
from .metrics import distance_correlation, trace_correlation
from .simulate import (
    MODELS,
    ModelSpec,
    TrueSubspace,
    gen_model,
    noise_free_response,
    sample_predictors,
    true_basis,
    true_dimension,
)

__version__ = "0.1.0"

__all__ = [
    "AllCellsInvalid",
    "BandwidthSearch",
    "CandidateMatrix",
    "ConditionalMoments",
    "DR",
    "Dataset",
    "DegenerateNeighborhood",
    "EPANECHNIKOV",
    "EmptySliceAtQuery",
    "EstimationError",
    "GAUSSIAN",
    "KernelSpec",
    "LadleProfile",
    "METHODS",
    "MODELS",
    "ModelSpec",
    "OrderResult",
    "SAVE",
    "SIR",
    "SingularCovariance",
    "SlicePartition",
    "SliceTooSmall",
    "SubspaceEstimate",
    "TrueSubspace",
    "bootstrap_resample",
    "candidate_matrix",
    "conditional_moments",
    "cv_slice",
    "default_grid",
    "default_replicates",
    "discretize",
    "distance_correlation",
    "eigenvector_variability",
    "estimate_order",
    "extract_subspace",
    "gen_model",
    "kernel_weight",
    "ladle_curves",
    "ladle_kmax",
    "ladle_profile",
    "load_dataset",
    "m_dr",
    "m_save",
    "m_sir",
    "make_slices",
    "mixture_loglik",
    "noise_free_response",
    "nw_cov",
    "nw_mean",
    "nw_second_moments",
    "nw_slice_means",
    "nw_slice_probs",
    "rot_bandwidth",
    "sample_predictors",
    "save_dataset",
    "select_bandwidth",
    "trace_correlation",
    "true_basis",
    "true_dimension",
]
