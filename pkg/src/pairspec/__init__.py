"""Symmetric, anti-symmetric and permutation-invariant pairwise kernels."""

from pairspec.kernels import (
    GramMatrix,
    KernelSpec,
    PairSample,
    PointSet,
    build_gram,
    close_under_swap,
    eval_base,
    eval_pairwise,
    normalize_pairwise,
)
from pairspec.spectral import (
    CheckResult,
    ProjectionPair,
    Spectrum,
    check_commuting_family,
    check_eigen_dominance,
    check_majorization,
    effdim_curve,
    effective_dimension,
    eigh_psd,
    empirical_operator,
    kraus_channel,
    permutation_matrix,
    project_gram,
)

__version__ = "0.1.0"
