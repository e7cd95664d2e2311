"""Global symbolic surrogates for black-box regressors.

Fits a short weighted sum of Meijer G-function ridge terms to any
queryable regression function by projection pursuit, then extracts
closed-form expressions, feature importances and feature interactions
from the fitted surrogate.
"""

from .contour import ContourConfig, meijer_g_contour
from .data import (
    ScalingSpec,
    apply_scaling,
    fit_scaling,
    invert_scaling,
    load_csv,
    scale_labels,
    unscale_labels,
)
from .errors import (
    AllCandidatesFailed,
    BlackBoxError,
    BlackBoxTimeout,
    ChildExit,
    ConstantColumn,
    ContourError,
    DataError,
    DegenerateTerm,
    DivergenceError,
    EvaluationError,
    GridgefitError,
    MalformedReply,
    NonConvergence,
    ParseError,
    PoleError,
    RaggedRows,
    SchemaError,
    VersionMismatch,
    ZeroDirection,
)
from .gfunc import (
    DEFAULT_POLICY,
    H_CONFIGS,
    EvalPolicy,
    MeijerGParams,
    grad_params,
    grad_z,
    insert_cancel_pair,
    ln_gamma,
    meijer_g,
    pfq,
    reduce_check,
)
from .interpret import (
    ExpressionDoc,
    Taylor1Report,
    Taylor2Report,
    evaluate_quadratic,
    feature_importance,
    mean_importance,
    parse_machine_block,
    taylor1,
    taylor2,
    to_expression,
)
from .blackbox import BlackBoxHandle, SubprocessBlackBox, query_blackbox
from .persist import load_model, save_model
from .pursuit import (
    FitConfig,
    FitReport,
    RidgeTerm,
    SampleSet,
    SymbolicModel,
    backfit,
    evaluate_model,
    fit_term,
    loss,
    project,
    refit_weight,
    symbolic_pursuit,
)

__version__ = "0.1.0"
