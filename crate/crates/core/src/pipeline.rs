//! Run configuration and the end-to-end fan-out over ranking methods and
//! prediction windows.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    apply_bins, apply_kdigo_labels, fit_bins, load_panel, significance_filter, stratified_folds,
    stratified_indices, undersample_balance, Balanced, BinningPolicy, BinningSpec, CsvFormat,
    DiscretePanel, FilterResult, KdigoRule, RawPanel,
};
use crate::error::{Error, Result};
use crate::eval::{
    average_precision, bootstrap_ci, case_agreement, compare_distributions, event_flow,
    logistic_baseline, roc_auc, select_models, threshold_for_precision, BootstrapCi, CaseAgreement,
    EvalReport, EventFlow, OperatingPoint, OutcomeClass, ScoredSet, SelectionCriterion,
    TimestepMetrics, WindowCases,
};
use crate::inference::{PredictOptions, Predictor};
use crate::params::{em_fit, CptSet, EmConfig, EmTrace};
use crate::ranking::{lagged_pairs, rank_variables, ObservationPair, RankMethod, Selection, VariableRanking};
use crate::sequences::{SequenceData, DEFAULT_TARGET_NAME};
use crate::stats::{mean, std_dev};
use crate::structure::{
    assemble_2tbn, k2_search, reveal_search, InterEdges, RevealConfig, TwoSliceStructure,
    DEFAULT_PARENT_SPACE_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// IQR bins, CKD stages for an `egfr` column.
    #[default]
    Clinical,
    /// Inputs are already integer category codes.
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    Dbn,
    /// Single-slice networks only.
    Static,
    /// Static networks first; the best one's ordering then seeds a DBN.
    PromoteTopBn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Prediction windows in hours.
    pub windows: Vec<usize>,
    /// Hours per timestep.
    pub step_hours: usize,
    pub methods: Vec<RankMethod>,
    pub selection: Selection,
    pub alpha: f64,
    pub max_parents: usize,
    pub max_inter_parents: usize,
    pub accept_ratio: f64,
    pub fallback_ratio: f64,
    pub forbid_target_source: bool,
    pub parent_space_cap: usize,
    pub pseudocount: f64,
    pub em_tol: f64,
    pub em_max_iter: usize,
    pub bootstrap: usize,
    pub seed: u64,
    pub split_ratio: f64,
    pub folds: Option<usize>,
    pub threads: Option<usize>,
    pub binning: Binning,
    pub mode: RunMode,
    pub use_past_labels: bool,
    /// Target precision per window; windows not listed use 0.4.
    pub precision_targets: BTreeMap<usize, f64>,
    pub criterion: SelectionCriterion,
    pub baseline: bool,
    pub lr_l2: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            out: None,
            windows: vec![24, 48, 72],
            step_hours: 24,
            methods: RankMethod::ALL.to_vec(),
            selection: Selection::All,
            alpha: 0.01,
            max_parents: 3,
            max_inter_parents: 2,
            accept_ratio: 0.9,
            fallback_ratio: 0.1,
            forbid_target_source: false,
            parent_space_cap: DEFAULT_PARENT_SPACE_CAP,
            pseudocount: 1.0,
            em_tol: 1e-4,
            em_max_iter: 100,
            bootstrap: 1000,
            seed: 0,
            split_ratio: 0.7,
            folds: None,
            threads: None,
            binning: Binning::Clinical,
            mode: RunMode::Dbn,
            use_past_labels: true,
            precision_targets: BTreeMap::from([(24, 0.40), (48, 0.33), (72, 0.20)]),
            criterion: SelectionCriterion::FinalAp,
            baseline: true,
            lr_l2: 1.0,
        }
    }
}

const DEFAULT_PRECISION_TARGET: f64 = 0.4;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    /// Range checks that need no data.
    pub fn validate(&self) -> Result<()> {
        check(self.step_hours > 0, || "step_hours must be positive".into())?;
        check(!self.windows.is_empty(), || "at least one window is required".into())?;
        for &w in &self.windows {
            check(w >= self.step_hours && w % self.step_hours == 0, || {
                format!("window {w} is not a positive multiple of {} hours", self.step_hours)
            })?;
        }
        let unique: BTreeSet<_> = self.windows.iter().collect();
        check(unique.len() == self.windows.len(), || "windows repeat".into())?;
        check(!self.methods.is_empty(), || "at least one method is required".into())?;
        let unique: BTreeSet<_> = self.methods.iter().collect();
        check(unique.len() == self.methods.len(), || "methods repeat".into())?;
        match self.selection {
            Selection::BestK(k) => check(k >= 1, || "best_k needs k >= 1".into())?,
            Selection::Percentile(p) => check(p > 0.0 && p <= 1.0, || "percentile must be in (0, 1]".into())?,
            Selection::All => {}
        }
        check(self.alpha > 0.0 && self.alpha < 1.0, || "alpha must be in (0, 1)".into())?;
        check((0.0..=1.0).contains(&self.accept_ratio), || "accept_ratio must be in [0, 1]".into())?;
        check((0.0..=1.0).contains(&self.fallback_ratio), || "fallback_ratio must be in [0, 1]".into())?;
        check(self.parent_space_cap >= 1, || "parent_space_cap must be positive".into())?;
        check(self.pseudocount >= 0.0 && self.pseudocount.is_finite(), || "pseudocount must be >= 0".into())?;
        check(self.em_tol > 0.0, || "em_tol must be positive".into())?;
        check(self.em_max_iter >= 1, || "em_max_iter must be >= 1".into())?;
        check(self.bootstrap >= 1, || "bootstrap must be >= 1".into())?;
        check(self.split_ratio > 0.0 && self.split_ratio < 1.0, || "split_ratio must be in (0, 1)".into())?;
        if let Some(k) = self.folds {
            check(k >= 2, || "folds must be >= 2".into())?;
        }
        if let Some(t) = self.threads {
            check(t >= 1, || "threads must be >= 1".into())?;
        }
        for (&w, &p) in &self.precision_targets {
            check(p > 0.0 && p <= 1.0, || format!("precision target for {w} must be in (0, 1]"))?;
        }
        check(self.lr_l2 >= 0.0, || "lr_l2 must be >= 0".into())
    }

    pub fn lookahead(&self, window: usize) -> usize {
        window / self.step_hours
    }

    pub fn precision_target(&self, window: usize) -> f64 {
        self.precision_targets.get(&window).copied().unwrap_or(DEFAULT_PRECISION_TARGET)
    }

    fn policy(&self, variables: &[String]) -> BinningPolicy {
        match self.binning {
            Binning::Clinical => BinningPolicy::clinical(variables),
            Binning::Categorical => BinningPolicy::categorical(),
        }
    }

    fn reveal(&self, target: &str) -> RevealConfig {
        RevealConfig {
            max_inter_parents: self.max_inter_parents,
            accept_ratio: self.accept_ratio,
            fallback_ratio: self.fallback_ratio,
            forbid_source: self.forbid_target_source.then(|| target.to_string()),
            parent_space_cap: self.parent_space_cap,
        }
    }
}

/// Mixes `parts` into `seed` (splitmix64 finalizer per step).
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut z = seed;
    for &p in parts {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dbn,
    Bn,
    TopDbn,
}

impl ModelKind {
    fn name(self, method: RankMethod) -> String {
        match self {
            ModelKind::Dbn => format!("{method}-DBN"),
            ModelKind::Bn => format!("{method}-BN"),
            ModelKind::TopDbn => "TOP-DBN".into(),
        }
    }

    fn folder(self, method: RankMethod) -> String {
        match self {
            ModelKind::Dbn => method.slug().into(),
            ModelKind::Bn => format!("{}-bn", method.slug()),
            ModelKind::TopDbn => "top-dbn".into(),
        }
    }

    fn is_static(self) -> bool {
        self == ModelKind::Bn
    }
}

/// Settings a model was trained and scored with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSettings {
    pub window: usize,
    pub lookahead: usize,
    pub kind: ModelKind,
    pub method: RankMethod,
    pub selection: Selection,
    pub max_parents: usize,
    pub max_inter_parents: usize,
    pub accept_ratio: f64,
    pub fallback_ratio: f64,
    pub pseudocount: f64,
    pub em_tol: f64,
    pub em_max_iter: usize,
    pub bootstrap: usize,
    pub seed: u64,
    pub target_precision: f64,
    pub use_past_labels: bool,
    pub training_rows: usize,
    pub test_subjects: usize,
}

#[derive(Debug, Clone)]
pub struct ModelResult {
    pub ranking: VariableRanking,
    /// Features of the network, most important first.
    pub importance: Vec<String>,
    pub structure: TwoSliceStructure,
    pub intra_score: f64,
    pub cpts: CptSet,
    pub trace: EmTrace,
    pub report: EvalReport,
    pub settings: CellSettings,
    pub deviations: Vec<String>,
    pub scored: Vec<(usize, ScoredSet)>,
    pub operating_points: Vec<(usize, OperatingPoint)>,
    /// Outcome classes at the final prediction timestep.
    pub cases: WindowCases,
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub window: usize,
    pub kind: ModelKind,
    pub method: RankMethod,
    pub model: String,
    /// Leaf folder name below the window folder.
    pub label: String,
    pub result: std::result::Result<ModelResult, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedModel {
    pub rank: usize,
    pub model: String,
    pub folder: String,
    pub value: Option<f64>,
    pub final_ap: Option<f64>,
    pub final_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRanking {
    pub window: usize,
    pub criterion: SelectionCriterion,
    pub models: Vec<RankedModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub window: usize,
    pub model: String,
    pub folder: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineEntry {
    pub window: usize,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub subjects: usize,
    /// Subjects dropped for lack of an admission SCr when labels come from
    /// the KDIGO rule.
    pub unlabeled: usize,
    pub horizon: usize,
    pub target: String,
    pub variables: Vec<String>,
    pub degenerate: Vec<String>,
    pub filter: FilterResult,
    pub train_subjects: usize,
    pub test_subjects: usize,
    pub empty_timesteps: BTreeMap<usize, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: RunConfig,
    pub data: DataSummary,
    pub rankings: Vec<WindowRanking>,
    pub baselines: Vec<BaselineEntry>,
    pub failures: Vec<CellFailure>,
    pub deviations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinsFile {
    pub specs: Vec<BinningSpec>,
    pub degenerate: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftRow {
    pub model: String,
    pub class: OutcomeClass,
    /// `None` for static attributes.
    pub window: Option<usize>,
    pub feature: String,
    pub n: usize,
    pub effect_size: Option<f64>,
    pub p_value: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_train: usize,
    pub n_validate: usize,
    pub final_ap: Option<f64>,
    pub final_auc: Option<f64>,
    pub mean_ap: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl MeanSd {
    pub fn of(xs: &[f64]) -> Option<MeanSd> {
        (!xs.is_empty()).then(|| MeanSd { mean: mean(xs), sd: std_dev(xs), n: xs.len() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub window: usize,
    pub model: String,
    pub folds: Vec<FoldMetrics>,
    pub final_ap: Option<MeanSd>,
    pub final_auc: Option<MeanSd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub k: usize,
    /// Subject ids per validation fold.
    pub membership: Vec<Vec<String>>,
    pub cells: Vec<CvCell>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub summary: Summary,
    pub bins: BinsFile,
    pub event_flow: EventFlow,
    pub agreement: Vec<(String, CaseAgreement)>,
    pub shifts: Vec<ShiftRow>,
    pub cross_validation: Option<CrossValidation>,
    pub cells: Vec<CellOutcome>,
}

const DEVIATIONS: &[&str] = &[
    "LR baseline imputes missing cells with the per-(variable, timestep) training mode",
    "bootstrap resamples test rows of one prediction timestep",
    "EM starts from complete-case estimates with at least one pseudocount",
];

fn target_name(variables: &[String]) -> String {
    let mut name = DEFAULT_TARGET_NAME.to_string();
    while variables.contains(&name) {
        name.push('_');
    }
    name
}

fn find_column(raw: &RawPanel, name: &str) -> Option<String> {
    raw.variables.iter().find(|v| v.eq_ignore_ascii_case(name)).cloned()
}

/// Labels from the KDIGO rule using `scr` and `egfr` columns. Unlabelable
/// subjects are dropped and the `scr` column is removed from the features.
pub fn label_with_kdigo(raw: &RawPanel, rule: &KdigoRule) -> Result<(RawPanel, usize)> {
    let (Some(scr), Some(egfr)) = (find_column(raw, "scr"), find_column(raw, "egfr")) else {
        return Err(Error::Schema("no label column and no scr/egfr columns to derive labels".into()));
    };
    let series = |name: &str| raw.series(raw.variable_index(name).expect("column exists"));
    let labels = apply_kdigo_labels(&series(&scr), &series(&egfr), rule);
    let keep: Vec<usize> = (0..raw.subjects.len()).filter(|&s| labels.labels[s].is_some()).collect();
    let mut out = raw.subset(&keep).without_variable(&scr);
    out.labels = Some(keep.iter().map(|&s| labels.labels[s].clone().expect("kept")).collect());
    Ok((out, labels.excluded))
}

/// Writes a raw panel in the input CSV layout with a `label` column.
pub fn write_raw_csv<W: Write>(raw: &RawPanel, writer: W) -> Result<()> {
    let static_keys: BTreeSet<&String> = raw.subjects.iter().flat_map(|s| s.statics.keys()).collect();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["subject_id".to_string(), "timestep".to_string()];
    header.extend(raw.variables.iter().cloned());
    header.extend(static_keys.iter().map(|k| format!("static:{k}")));
    if raw.labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for (s, subject) in raw.subjects.iter().enumerate() {
        for t in 0..raw.horizon {
            let mut row = vec![subject.subject_id.clone(), t.to_string()];
            row.extend((0..raw.variables.len()).map(|v| raw.value(s, v, t).map(|x| x.to_string()).unwrap_or_default()));
            row.extend(static_keys.iter().map(|k| subject.statics.get(*k).cloned().unwrap_or_default()));
            if let Some(labels) = &raw.labels {
                row.push(u8::from(labels[s][t]).to_string());
            }
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io("writing CSV", e))
}

struct Prepared {
    panel: DiscretePanel,
    train: DiscretePanel,
    test: DiscretePanel,
    target: String,
    data: DataSummary,
    bins: BinsFile,
}

fn prepare(cfg: &RunConfig, raw: RawPanel) -> Result<Prepared> {
    let (raw, unlabeled) = if raw.labels.is_some() {
        (raw, 0)
    } else {
        label_with_kdigo(&raw, &KdigoRule::default())?
    };
    let horizon = raw.horizon;
    for &w in &cfg.windows {
        let l = cfg.lookahead(w);
        check(l < horizon, || format!("window {w} needs lookahead {l} but the panel has {horizon} timesteps"))?;
    }
    let labels = raw.labels.as_ref().expect("labelled above");
    let strata: Vec<bool> = labels.iter().map(|l| l.iter().any(|&x| x)).collect();
    let (train_idx, test_idx) = stratified_indices(&strata, cfg.split_ratio, derive_seed(cfg.seed, &[1]))?;
    let (specs, degenerate) = fit_bins(&raw, &train_idx, &cfg.policy(&raw.variables))?;
    let full = apply_bins(&raw, &specs)?;
    let train_all = full.subset(&train_idx);
    let filter = significance_filter(&train_all, cfg.alpha)?;
    let panel = full.select_variables(&filter.retained)?;
    let target = target_name(&filter.retained);
    let data = DataSummary {
        subjects: panel.n_subjects(),
        unlabeled,
        horizon,
        target: target.clone(),
        variables: raw.variables.clone(),
        degenerate: degenerate.clone(),
        filter,
        train_subjects: train_idx.len(),
        test_subjects: test_idx.len(),
        empty_timesteps: BTreeMap::new(),
    };
    Ok(Prepared {
        train: panel.subset(&train_idx),
        test: panel.subset(&test_idx),
        panel,
        target,
        data,
        bins: BinsFile { specs, degenerate },
    })
}

struct Fitted {
    structure: TwoSliceStructure,
    intra_score: f64,
    cpts: CptSet,
    trace: EmTrace,
    rows: usize,
}

fn pair_list(pairs: &[ObservationPair]) -> Vec<(usize, usize)> {
    pairs.iter().map(|p| (p.subject, p.x_t)).collect()
}

fn fit_model(
    cfg: &RunConfig,
    train: &DiscretePanel,
    balanced: &Balanced,
    features: &[String],
    target: &str,
    kind: ModelKind,
    seed: u64,
) -> Result<Fitted> {
    let data = if kind.is_static() {
        let pairs = pair_list(&lagged_pairs(balanced));
        SequenceData::lagged_rows(train, features, target, &pairs, balanced.lookahead)?
    } else {
        SequenceData::from_panel(train, features, target, &balanced.stacked_subjects())?
    };
    let order: Vec<usize> = (0..data.n_nodes()).collect();
    let dag = k2_search(&data, &order, cfg.max_parents, cfg.parent_space_cap)?;
    let inter = if kind.is_static() {
        InterEdges::default()
    } else {
        reveal_search(&data, &cfg.reveal(target))?
    };
    let structure = assemble_2tbn(&dag, &inter, target)?;
    let em = EmConfig {
        pseudocount: cfg.pseudocount,
        tol: cfg.em_tol,
        max_iter: cfg.em_max_iter,
        seed,
    };
    let (cpts, trace) = em_fit(&structure, &data, &em)?;
    Ok(Fitted {
        intra_score: dag.total_score(),
        structure,
        cpts,
        trace,
        rows: data.n_sequences(),
    })
}

/// Scores every subject of `test` at every prediction timestep.
fn score_panel(
    cfg: &RunConfig,
    fitted: &Fitted,
    test: &DiscretePanel,
    features: &[String],
    target: &str,
    kind: ModelKind,
    lookahead: usize,
) -> Result<Vec<(usize, ScoredSet)>> {
    let h = test.horizon();
    let n = test.n_subjects();
    let opts = PredictOptions { use_past_labels: cfg.use_past_labels };
    let labels = |t: usize| (0..n).map(|s| test.label(s, t + lookahead)).collect::<Vec<_>>();
    if kind.is_static() {
        let predictor = Predictor::new(&fitted.structure, &fitted.cpts, 1);
        (0..h - lookahead)
            .map(|t| {
                let pairs: Vec<(usize, usize)> = (0..n).map(|s| (s, t)).collect();
                let rows = SequenceData::lagged_rows(test, features, target, &pairs, lookahead)?;
                let scores = (0..n)
                    .into_par_iter()
                    .map(|s| predictor.predict_sequence(&rows, s, 0, 0, opts))
                    .collect::<Result<Vec<_>>>()?;
                Ok((t, ScoredSet::new(scores, labels(t))?))
            })
            .collect()
    } else {
        let all: Vec<usize> = (0..n).collect();
        let data = SequenceData::from_panel(test, features, target, &all)?;
        let predictor = Predictor::new(&fitted.structure, &fitted.cpts, h);
        (0..h - lookahead)
            .map(|t| {
                let scores = (0..n)
                    .into_par_iter()
                    .map(|s| predictor.predict_sequence(&data, s, t, lookahead, opts))
                    .collect::<Result<Vec<_>>>()?;
                Ok((t, ScoredSet::new(scores, labels(t))?))
            })
            .collect()
    }
}

fn ci(metric: fn(&ScoredSet) -> Result<f64>, set: &ScoredSet, b: usize, seed: u64) -> (Option<BootstrapCi>, Option<String>) {
    match bootstrap_ci(metric, set, b, seed) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn timestep_metrics(t: usize, set: &ScoredSet, b: usize, seed: u64) -> TimestepMetrics {
    let (auc, auc_note) = ci(roc_auc, set, b, derive_seed(seed, &[t as u64, 0]));
    let (ap, ap_note) = ci(average_precision, set, b, derive_seed(seed, &[t as u64, 1]));
    let note = match (auc_note, ap_note) {
        (Some(a), Some(b)) if a == b => Some(a),
        (Some(a), Some(b)) => Some(format!("AUC: {a}; AP: {b}")),
        (a, b) => a.or(b),
    };
    TimestepMetrics { timestep: t, n: set.len(), positives: set.positives(), auc, ap, note }
}

struct Evaluated {
    timesteps: Vec<TimestepMetrics>,
    operating_points: Vec<(usize, OperatingPoint)>,
}

fn evaluate(cfg: &RunConfig, window: usize, scored: &[(usize, ScoredSet)], seed: u64) -> Evaluated {
    let target = cfg.precision_target(window);
    let timesteps = scored
        .iter()
        .map(|(t, set)| timestep_metrics(*t, set, cfg.bootstrap, seed))
        .collect();
    let operating_points = scored.iter().map(|(t, set)| (*t, threshold_for_precision(set, target))).collect();
    Evaluated { timesteps, operating_points }
}

fn window_cases(window: usize, test: &DiscretePanel, set: &ScoredSet, op: &OperatingPoint) -> WindowCases {
    let mut cases = WindowCases { window, ..Default::default() };
    for (s, (&score, &label)) in set.scores.iter().zip(&set.labels).enumerate() {
        let id = test.subject_ids()[s].clone();
        match (score >= op.threshold, label) {
            (true, true) => cases.tp.insert(id),
            (false, true) => cases.fn_.insert(id),
            (true, false) => cases.fp.insert(id),
            (false, false) => false,
        };
    }
    cases
}

struct WindowData {
    window: usize,
    lookahead: usize,
    balanced: Balanced,
    pairs: Vec<ObservationPair>,
}

fn window_data(cfg: &RunConfig, train: &DiscretePanel, window: usize, seed: u64) -> Result<WindowData> {
    let lookahead = cfg.lookahead(window);
    let balanced = undersample_balance(train, lookahead, derive_seed(seed, &[2, window as u64]))?;
    let pairs = lagged_pairs(&balanced);
    Ok(WindowData { window, lookahead, balanced, pairs })
}

fn method_index(m: RankMethod) -> u64 {
    m as u64
}

fn kind_index(k: ModelKind) -> u64 {
    k as u64
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    cfg: &RunConfig,
    prep: &Prepared,
    wd: &WindowData,
    method: RankMethod,
    kind: ModelKind,
    ranking: Option<VariableRanking>,
) -> Result<ModelResult> {
    let seed = derive_seed(cfg.seed, &[3, method_index(method), wd.window as u64, kind_index(kind)]);
    let ranking = match ranking {
        Some(r) => r,
        None => rank_variables(&prep.train, &wd.pairs, method, cfg.selection)?,
    };
    let features = ranking.selected.clone();
    let fitted = fit_model(cfg, &prep.train, &wd.balanced, &features, &prep.target, kind, seed)?;
    let scored = score_panel(cfg, &fitted, &prep.test, &features, &prep.target, kind, wd.lookahead)?;
    let ev = evaluate(cfg, wd.window, &scored, seed);
    let (final_t, final_set) = scored.last().ok_or(Error::EmptyInput)?;
    let final_op = ev.operating_points.last().map(|(_, op)| *op).ok_or(Error::EmptyInput)?;
    debug_assert_eq!(*final_t, ev.operating_points.last().unwrap().0);
    let cases = window_cases(wd.window, &prep.test, final_set, &final_op);
    let model = kind.name(method);
    let report = EvalReport {
        model: model.clone(),
        method: Some(method),
        window: wd.window,
        timesteps: ev.timesteps,
        operating_point: Some(final_op),
        selection_rank: None,
    };
    let settings = CellSettings {
        window: wd.window,
        lookahead: wd.lookahead,
        kind,
        method,
        selection: cfg.selection,
        max_parents: cfg.max_parents,
        max_inter_parents: if kind.is_static() { 0 } else { cfg.max_inter_parents },
        accept_ratio: cfg.accept_ratio,
        fallback_ratio: cfg.fallback_ratio,
        pseudocount: cfg.pseudocount,
        em_tol: cfg.em_tol,
        em_max_iter: cfg.em_max_iter,
        bootstrap: cfg.bootstrap,
        seed,
        target_precision: cfg.precision_target(wd.window),
        use_past_labels: cfg.use_past_labels,
        training_rows: fitted.rows,
        test_subjects: prep.test.n_subjects(),
    };
    let mut deviations: Vec<String> = DEVIATIONS[1..].iter().map(|s| s.to_string()).collect();
    if kind.is_static() {
        deviations.push("static network scores features at t against the label at t + lookahead".into());
    }
    Ok(ModelResult {
        ranking,
        importance: features,
        structure: fitted.structure,
        intra_score: fitted.intra_score,
        cpts: fitted.cpts,
        trace: fitted.trace,
        report,
        settings,
        deviations,
        operating_points: ev.operating_points,
        scored,
        cases,
    })
}

fn outcome(window: usize, method: RankMethod, kind: ModelKind, result: Result<ModelResult>) -> CellOutcome {
    CellOutcome {
        window,
        kind,
        method,
        model: kind.name(method),
        label: kind.folder(method),
        result: result.map_err(|e| e.to_string()),
    }
}

fn window_cells(cfg: &RunConfig, prep: &Prepared, window: usize) -> Vec<CellOutcome> {
    let wd = match window_data(cfg, &prep.train, window, cfg.seed) {
        Ok(wd) => wd,
        Err(e) => {
            let kind = if cfg.mode == RunMode::Dbn { ModelKind::Dbn } else { ModelKind::Bn };
            return cfg
                .methods
                .iter()
                .map(|&m| outcome(window, m, kind, Err(Error::Config(e.to_string()))))
                .collect();
        }
    };
    let primary = if cfg.mode == RunMode::Dbn { ModelKind::Dbn } else { ModelKind::Bn };
    let mut cells: Vec<CellOutcome> = cfg
        .methods
        .par_iter()
        .map(|&m| outcome(window, m, primary, run_cell(cfg, prep, &wd, m, primary, None)))
        .collect();
    if cfg.mode == RunMode::PromoteTopBn {
        let ok: Vec<&CellOutcome> = cells.iter().filter(|c| c.result.is_ok()).collect();
        let reports: Vec<EvalReport> = ok.iter().map(|c| c.result.as_ref().unwrap().report.clone()).collect();
        let top = match select_models(&reports, cfg.criterion).first() {
            Some(&i) => {
                let best = ok[i].result.as_ref().unwrap();
                let method = ok[i].method;
                let mut r = run_cell(cfg, prep, &wd, method, ModelKind::TopDbn, Some(best.ranking.clone()));
                if let Ok(r) = &mut r {
                    r.deviations.push(format!("ordering taken from {}", ok[i].model));
                }
                outcome(window, method, ModelKind::TopDbn, r)
            }
            None => outcome(
                window,
                cfg.methods[0],
                ModelKind::TopDbn,
                Err(Error::Config("no static network succeeded".into())),
            ),
        };
        cells.push(top);
    }
    cells
}

fn rank_window(window: usize, cells: &mut [CellOutcome], criterion: SelectionCriterion) -> WindowRanking {
    let idx: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].window == window && cells[i].result.is_ok()).collect();
    let reports: Vec<EvalReport> = idx.iter().map(|&i| cells[i].result.as_ref().unwrap().report.clone()).collect();
    let order = select_models(&reports, criterion);
    let mut models = Vec::new();
    for (rank, &j) in order.iter().enumerate() {
        let cell = &mut cells[idx[j]];
        let r = cell.result.as_mut().unwrap();
        r.report.selection_rank = Some(rank + 1);
        models.push(RankedModel {
            rank: rank + 1,
            model: cell.model.clone(),
            folder: format!("{}/{}", window, cell.label),
            value: criterion.value(&r.report),
            final_ap: r.report.final_ap(),
            final_auc: r.report.final_auc(),
        });
    }
    WindowRanking { window, criterion, models }
}

/// Recomputes the ranked list of each window from stored reports.
pub fn rerank(reports: &[(String, EvalReport)], window: usize, criterion: SelectionCriterion) -> WindowRanking {
    let in_window: Vec<&(String, EvalReport)> = reports.iter().filter(|(_, r)| r.window == window).collect();
    let plain: Vec<EvalReport> = in_window.iter().map(|(_, r)| r.clone()).collect();
    let models = select_models(&plain, criterion)
        .iter()
        .enumerate()
        .map(|(rank, &j)| RankedModel {
            rank: rank + 1,
            model: plain[j].model.clone(),
            folder: in_window[j].0.clone(),
            value: criterion.value(&plain[j]),
            final_ap: plain[j].final_ap(),
            final_auc: plain[j].final_auc(),
        })
        .collect();
    WindowRanking { window, criterion, models }
}

fn baseline(cfg: &RunConfig, prep: &Prepared, window: usize) -> BaselineEntry {
    let lookahead = cfg.lookahead(window);
    let seed = derive_seed(cfg.seed, &[7, window as u64]);
    match logistic_baseline(&prep.train, &prep.test, lookahead, cfg.lr_l2) {
        Ok((_, scored)) => {
            let ev = evaluate(cfg, window, &scored, seed);
            BaselineEntry {
                window,
                report: Some(EvalReport {
                    model: "LR".into(),
                    method: None,
                    window,
                    timesteps: ev.timesteps,
                    operating_point: ev.operating_points.last().map(|(_, op)| *op),
                    selection_rank: None,
                }),
                error: None,
            }
        }
        Err(e) => BaselineEntry { window, report: None, error: Some(e.to_string()) },
    }
}

fn static_columns(panel: &DiscretePanel) -> Vec<(String, Vec<Option<usize>>, usize)> {
    let keys: BTreeSet<&String> = (0..panel.n_subjects()).flat_map(|s| panel.statics(s).keys()).collect();
    keys.into_iter()
        .map(|k| {
            let cats: BTreeSet<&String> = (0..panel.n_subjects()).filter_map(|s| panel.statics(s).get(k)).collect();
            let cats: Vec<&String> = cats.into_iter().collect();
            let values = (0..panel.n_subjects())
                .map(|s| panel.statics(s).get(k).and_then(|v| cats.binary_search(&v).ok()))
                .collect();
            (k.clone(), values, cats.len())
        })
        .collect()
}

fn shift_row(
    model: &str,
    class: OutcomeClass,
    window: Option<usize>,
    feature: &str,
    values: &[Option<usize>],
    card: usize,
    group: &[bool],
) -> ShiftRow {
    let mut row = ShiftRow {
        model: model.to_string(),
        class,
        window,
        feature: feature.to_string(),
        n: 0,
        effect_size: None,
        p_value: None,
        status: "ok".into(),
    };
    match compare_distributions(feature, values, card, group) {
        Ok(d) => {
            row.n = d.n;
            row.effect_size = Some(d.effect_size);
            row.p_value = Some(d.p_value);
        }
        Err(Error::DegenerateVariable(_)) => row.status = "degenerate".into(),
        Err(e) => row.status = e.to_string(),
    }
    row
}

fn analyses(cfg: &RunConfig, prep: &Prepared, cells: &[CellOutcome]) -> (Vec<(String, CaseAgreement)>, Vec<ShiftRow>) {
    let test = &prep.test;
    let statics = static_columns(test);
    let mut agreement = Vec::new();
    let mut shifts = Vec::new();
    let kinds: BTreeSet<(ModelKind, RankMethod)> = cells.iter().map(|c| (c.kind, c.method)).collect();
    for (kind, method) in kinds {
        let mine: Vec<&CellOutcome> = cells
            .iter()
            .filter(|c| c.kind == kind && c.method == method && c.result.is_ok())
            .collect();
        if mine.is_empty() || kind == ModelKind::TopDbn {
            continue;
        }
        let model = kind.name(method);
        let cases: Vec<WindowCases> = mine.iter().map(|c| c.result.as_ref().unwrap().cases.clone()).collect();
        agreement.push((model.clone(), case_agreement(&cases)));
        for class in OutcomeClass::ALL {
            let mut common: BTreeSet<String> = class.of(&cases[0]).clone();
            for w in &cases[1..] {
                common = common.intersection(class.of(w)).cloned().collect();
            }
            let group: Vec<bool> = test.subject_ids().iter().map(|id| common.contains(id)).collect();
            for c in &mine {
                let t = test.horizon() - 1 - cfg.lookahead(c.window);
                for (v, var) in test.variables().iter().enumerate() {
                    let values: Vec<Option<usize>> = (0..test.n_subjects()).map(|s| test.cell(s, v, t)).collect();
                    shifts.push(shift_row(&model, class, Some(c.window), &var.name, &values, var.cardinality(), &group));
                }
            }
            for (name, values, card) in &statics {
                shifts.push(shift_row(&model, class, None, name, values, *card, &group));
            }
        }
    }
    (agreement, shifts)
}

fn cross_validate(cfg: &RunConfig, prep: &Prepared, k: usize) -> Result<CrossValidation> {
    let train = &prep.train;
    let strata: Vec<bool> = (0..train.n_subjects()).map(|s| train.ever_event(s)).collect();
    let folds = stratified_folds(&strata, k, derive_seed(cfg.seed, &[5]))?;
    let membership = folds
        .iter()
        .map(|f| f.iter().map(|&s| train.subject_ids()[s].clone()).collect())
        .collect();
    let kind = if cfg.mode == RunMode::Static { ModelKind::Bn } else { ModelKind::Dbn };
    let specs: Vec<(usize, RankMethod)> = cfg
        .windows
        .iter()
        .flat_map(|&w| cfg.methods.iter().map(move |&m| (w, m)))
        .collect();
    let cells = specs
        .par_iter()
        .map(|&(window, method)| {
            let lookahead = cfg.lookahead(window);
            let fold_metrics = folds
                .iter()
                .enumerate()
                .map(|(f, val)| {
                    let rest: Vec<usize> = (0..train.n_subjects()).filter(|s| val.binary_search(s).is_err()).collect();
                    let mut m = FoldMetrics {
                        fold: f,
                        n_train: rest.len(),
                        n_validate: val.len(),
                        final_ap: None,
                        final_auc: None,
                        mean_ap: None,
                        skipped: None,
                    };
                    let cases = val.iter().filter(|&&s| strata[s]).count();
                    if cases == 0 || cases == val.len() {
                        m.skipped = Some("validation fold has a single class".into());
                        return m;
                    }
                    let run = || -> Result<Vec<(usize, ScoredSet)>> {
                        let fit_panel = train.subset(&rest);
                        let val_panel = train.subset(val);
                        let seed = derive_seed(cfg.seed, &[6, f as u64]);
                        let wd = window_data(cfg, &fit_panel, window, seed)?;
                        let ranking = rank_variables(&fit_panel, &wd.pairs, method, cfg.selection)?;
                        let cell_seed = derive_seed(seed, &[method_index(method), window as u64]);
                        let fitted = fit_model(cfg, &fit_panel, &wd.balanced, &ranking.selected, &prep.target, kind, cell_seed)?;
                        score_panel(cfg, &fitted, &val_panel, &ranking.selected, &prep.target, kind, lookahead)
                    };
                    match run() {
                        Ok(scored) => {
                            let aps: Vec<Option<f64>> = scored.iter().map(|(_, s)| average_precision(s).ok()).collect();
                            m.final_ap = aps.iter().rev().find_map(|x| *x);
                            m.final_auc = scored.iter().rev().find_map(|(_, s)| roc_auc(s).ok());
                            let defined: Vec<f64> = aps.iter().flatten().copied().collect();
                            m.mean_ap = MeanSd::of(&defined).map(|x| x.mean);
                        }
                        Err(e) => m.skipped = Some(e.to_string()),
                    }
                    m
                })
                .collect::<Vec<_>>();
            let ap: Vec<f64> = fold_metrics.iter().filter_map(|m| m.final_ap).collect();
            let auc: Vec<f64> = fold_metrics.iter().filter_map(|m| m.final_auc).collect();
            CvCell {
                window,
                model: kind.name(method),
                final_ap: MeanSd::of(&ap),
                final_auc: MeanSd::of(&auc),
                folds: fold_metrics,
            }
        })
        .collect();
    Ok(CrossValidation { k, membership, cells })
}

/// Runs everything on an already loaded panel. Nothing is written.
pub fn run_on_panel(cfg: &RunConfig, raw: RawPanel) -> Result<RunResult> {
    cfg.validate()?;
    let mut prep = prepare(cfg, raw)?;
    let mut cells: Vec<CellOutcome> = cfg
        .windows
        .par_iter()
        .flat_map_iter(|&w| window_cells(cfg, &prep, w))
        .collect();
    for &w in &cfg.windows {
        if let Ok(b) = undersample_balance(&prep.train, cfg.lookahead(w), derive_seed(cfg.seed, &[2, w as u64])) {
            prep.data.empty_timesteps.insert(w, b.empty);
        }
    }
    let rankings = cfg.windows.iter().map(|&w| rank_window(w, &mut cells, cfg.criterion)).collect();
    let baselines = if cfg.baseline {
        cfg.windows.par_iter().map(|&w| baseline(cfg, &prep, w)).collect()
    } else {
        Vec::new()
    };
    let failures = cells
        .iter()
        .filter_map(|c| {
            c.result.as_ref().err().map(|e| CellFailure {
                window: c.window,
                model: c.model.clone(),
                folder: format!("{}/{}", c.window, c.label),
                error: e.clone(),
            })
        })
        .collect();
    let (agreement, shifts) = analyses(cfg, &prep, &cells);
    let cross_validation = cfg.folds.map(|k| cross_validate(cfg, &prep, k)).transpose()?;
    let mut config = cfg.clone();
    // Where the run was written and how many threads it used do not belong
    // in the results.
    config.out = None;
    config.threads = None;
    Ok(RunResult {
        summary: Summary {
            config,
            data: prep.data.clone(),
            rankings,
            baselines,
            failures,
            deviations: DEVIATIONS.iter().map(|s| s.to_string()).collect(),
        },
        bins: prep.bins.clone(),
        event_flow: event_flow(&prep.panel),
        agreement,
        shifts,
        cross_validation,
        cells,
    })
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Loads `cfg.data`, runs every cell and, when `cfg.out` is set, writes the
/// artifact tree. The output directory is checked before any work starts.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunResult> {
    cfg.validate()?;
    let data = cfg.data.as_ref().ok_or_else(|| Error::Config("no data path given".into()))?;
    if let Some(out) = &cfg.out {
        crate::report::preflight_output(out)?;
    }
    let raw = load_panel(data, &CsvFormat::default())?;
    let result = with_threads(cfg.threads, || run_on_panel(cfg, raw))??;
    if let Some(out) = &cfg.out {
        crate::report::emit_run_artifacts(&result, out)?;
    }
    Ok(result)
}

/// Redraws graphs and recomputes each window's ranked list from the
/// `metrics.json` files under `out`.
pub fn reemit(out: &Path, criterion: Option<SelectionCriterion>) -> Result<Summary> {
    let path = out.join("summary.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let mut summary: Summary = serde_json::from_str(&text)?;
    crate::report::reemit_dot(out)?;
    if let Some(c) = criterion {
        summary.config.criterion = c;
    }
    #[derive(Deserialize)]
    struct MetricsFile {
        report: EvalReport,
    }
    let mut reports = Vec::new();
    for w in &summary.config.windows {
        let dir = out.join(w.to_string());
        let Ok(entries) = std::fs::read_dir(&dir) else { continue };
        let mut leaves: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        leaves.sort();
        for leaf in leaves {
            let file = leaf.join("metrics.json");
            if !file.exists() {
                continue;
            }
            let text = std::fs::read_to_string(&file).map_err(|e| Error::io(format!("reading {}", file.display()), e))?;
            let m: MetricsFile = serde_json::from_str(&text)?;
            let name = leaf.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            reports.push((format!("{w}/{name}"), m.report));
        }
    }
    summary.rankings = summary
        .config
        .windows
        .iter()
        .map(|&w| rerank(&reports, w, summary.config.criterion))
        .collect();
    std::fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    Ok(summary)
}
