"""Finite-dimensional W*-algebras with normal states, state-preserving CPU
channels, GNS quotients with their induced contractions, covariance products,
and Riemannian metric pullbacks for statistical models."""

from .algebra import (
    AlgebraElement,
    AlgebraShape,
    ShapeError,
    adjoint,
    add,
    basis,
    hermitian_basis,
    hs_norm,
    identity,
    is_positive,
    mk_element,
    mk_shape,
    multiply,
    scale,
    trace_functional,
)
from .states import (
    NormalState,
    StateValidationError,
    evaluate,
    is_faithful,
    is_tracial,
    mk_state,
    random_state,
    random_tracial_state,
    support,
)
from .channels import (
    ChannelValidationError,
    CongruentEmbedding,
    CpuMap,
    MorphismValidationError,
    NcpMorphism,
    apply,
    choi,
    compose,
    congruent_embedding,
    from_kraus,
    from_linear,
    identity_map,
    identity_morphism,
    is_cp,
    is_unital,
    left_inverse,
    markov_from_stochastic,
    min_choi_eig,
    mk_morphism,
    predual,
    random_cpu_map,
    transpose_map,
)
from .gns import (
    GnsContraction,
    GnsQuotientError,
    GnsSpace,
    build_gns,
    check_functor_laws,
    embed,
    induced_contraction,
    inner,
)
from .covariance import (
    KMB,
    RLD,
    SLD,
    WY,
    CovarianceGram,
    CovarianceKind,
    OperatorMonotoneFunction,
    UnsupportedKindError,
    covariance_eval,
    covariance_gram,
    gns_kind,
    kind_catalog,
    kind_from_name,
    matrix_apply,
    monotonicity_check,
    omf_catalog,
    petz_kind,
    tracial_collapse_check,
)
from .models import (
    GroupActionModel,
    ModelDomainError,
    ScoreNotRepresentableError,
    StatModel,
    affine_compose,
    affine_identity,
    affine_pushforward_check,
    analytic_references,
    congruence_invariance_check,
    embedded_model,
    gaussian_group_model,
    gaussian_model,
    metric_pullback,
    qubit_faithful_model,
    qubit_pure_model,
    riesz_score,
    simplex_model,
)

__version__ = "0.1.0"
