"""kronopt: element-wise and matrix-structured preconditioned optimizers.

A numpy library covering one family of optimizers, from sign descent and
its EMA-adapted variants through Kronecker-factored and spectral
(polar-factor) methods, together with an executable verification suite
that machine-checks the identities, decompositions, and optimality
conditions relating them on desk-scale synthetic problems.
"""

from .errors import (
    DimensionMismatchError,
    DivergenceDetectedError,
    KronoptError,
    NonFiniteError,
    NotConvergedError,
    OptimizerDidNotConvergeError,
    RankDeficientError,
    ShapeMismatchError,
    SingularWithoutDampingError,
    StateMissingError,
    ZeroDirectionError,
    ZeroMatrixError,
    ZeroVarianceError,
)
from .harness import RunConfig, TraceRecord, clip_global, lr_at, reshape_params, run_sweep, train
from .linalg import (
    NS_QUINTIC,
    MatrixNorms,
    SymEig,
    Svd,
    kron,
    matrix_norms,
    polar_newton_schulz,
    polar_svd,
    pseudo_inverse,
    pseudo_inverse_root,
    stabilized_inverse_root,
    svd,
    sym_eig,
    unvec,
    vec,
)
from .optim import (
    BiasCorrection,
    OptimizerSpec,
    OptimizerState,
    adam_decompose,
    adam_direction,
    bias_corrected,
    ema_update,
    graft_and_scale,
    init_state,
    shampoo_decompose,
    sign_direction,
    spectral_direction,
    step,
)
from .precond import (
    EigCorrectionState,
    FactorPair,
    KlState,
    OrderNFactors,
    PreconditionerKind,
    centered_factor_update,
    eshampoo_correction_update,
    full_matrix_update,
    init_kl_state,
    kl_factor_update,
    order_n_factor_update,
    precondition,
    shampoo_factor_update,
)
from .problems import (
    MatrixGaussianModel,
    Problem,
    eval_logistic,
    eval_mlp,
    eval_quadratic,
    logistic_problem,
    matrix_gaussian_moments,
    mlp_problem,
    quadratic_problem,
    sample_matrix_gaussian,
)
from .verify import (
    VerificationReport,
    check_adapted_norm_descent,
    check_exponent_paradox,
    check_kron_equivalence,
    check_table1_equivalences,
    check_whitening,
    instantaneous_kl,
    oracle_prop1,
    oracle_prop2,
    oracle_prop3,
    run_suite,
    solve_idealized_kl,
)

__version__ = "0.1.0"
