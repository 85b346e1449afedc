"""Ablated data augmentation for tabular models, the closed-form penalized
solvers it converges to, and integrated-gradients penalty diagnostics for
feed-forward networks."""

from .dataset import (
    CLASSIFICATION,
    REGRESSION,
    Dataset,
    DatasetError,
    FeatureStats,
    SplitSpec,
    feature_stats,
    load_csv,
    one_hot_encode,
    split,
    standardize,
    synth_correlated,
)
from .augment import (
    INVERTED_DROPOUT,
    MEAN_ABLATION,
    AblationMask,
    AugmentError,
    AugmentSpec,
    apply_inverted_dropout,
    apply_mean_ablation,
    batch_masks,
    build_augmented,
    make_mask,
)
from .linear import (
    CCP,
    ML2P,
    LinearModel,
    RegularizedFit,
    SingularModelError,
    fit_ccp,
    fit_ml2p,
    fit_ols,
    predict,
)
from .penalty import (
    ContributionMatrix,
    PenaltyReport,
    ccp_from_attributions,
    ccp_pairwise,
    ccp_variance_form,
    contribution_covariances,
    contributions_linear,
    ml2p,
    ml2p_from_avg_gradients,
    ml2p_per_input,
)
from .nn import (
    Checkpoint,
    MlpModel,
    TrainConfig,
    TrainLog,
    TrainingDivergedError,
    evaluate,
    forward,
    init,
    input_gradients,
    linear_as_mlp,
    loss,
    param_gradients,
    train,
)
from .attribution import (
    AttributionConfig,
    AttributionResult,
    CompletenessSummary,
    as_contributions,
    average_gradients,
    completeness_report,
    integrated_gradients,
)
from .harness import (
    ConvergenceRun,
    CrossTrendReport,
    MomentCheck,
    SweepCell,
    SweepResult,
    check_moment_limits,
    converge_theorem1,
    converge_theorem2,
    cross_trend_check,
    emit_report,
    lambda_sweep,
    penalty_trend,
    render_report,
)

__version__ = "0.1.0"
