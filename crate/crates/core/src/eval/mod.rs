//! Scoring and comparing fitted models.

mod agreement;
mod bootstrap;
mod flow;
mod logistic;
mod metrics;
mod operating;
mod selection;

pub use agreement::{
    case_agreement, compare_distributions, CaseAgreement, DistributionShift, EarlyTruePositive, OutcomeClass,
    RegionShare, WindowCases,
};
pub use bootstrap::{bootstrap_ci, BootstrapCi, DEFAULT_BOOTSTRAP_REPLICATES};
pub use flow::{event_flow, EventFlow};
pub use logistic::{fit_logistic, logistic_baseline, LogisticModel, OneHotDesign, LR_GRAD_TOL, LR_MAX_ITER};
pub use metrics::{average_precision, pr_curve, roc_auc, roc_curve, PrPoint, RocPoint, ScoredSet};
pub use operating::{confusion_at_threshold, threshold_for_precision, ConfusionMatrix, OperatingPoint};
pub use selection::{select_models, EvalReport, SelectionCriterion, TimestepMetrics};
