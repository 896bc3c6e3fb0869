//! `raus`: rank, learn, fit, evaluate and compare discrete DBNs from the
//! command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use raus::dataset::{load_panel, CsvFormat, KdigoRule};
use raus::eval::SelectionCriterion;
use raus::pipeline::{self, Binning, RunConfig, RunMode};
use raus::ranking::{RankMethod, Selection};
use raus::synthgen::{random_truth, sample_panel, write_synthetic, GeneratorSpec, TruthSpec};
use raus::Error;

#[derive(Parser)]
#[command(name = "raus", version, about = "Ranking-guided discrete dynamic Bayesian networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: rank, structure search, EM, evaluation, artifacts.
    Run(RunArgs),
    /// Sample a synthetic panel from a random or stored ground truth.
    Synth(SynthArgs),
    /// Derive KDIGO labels from `scr` and `egfr` columns.
    Label(LabelArgs),
    /// Redraw graphs and re-rank models from a finished run.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    FinalAp,
    MeanAp,
    FinalAuc,
}

impl From<CriterionArg> for SelectionCriterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::FinalAp => SelectionCriterion::FinalAp,
            CriterionArg::MeanAp => SelectionCriterion::MeanAp,
            CriterionArg::FinalAuc => SelectionCriterion::FinalAuc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BinningArg {
    Clinical,
    Categorical,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Prediction windows in hours, e.g. 24,48,72.
    #[arg(long, value_delimiter = ',')]
    windows: Option<Vec<usize>>,
    #[arg(long)]
    step_hours: Option<usize>,
    /// Ranking methods: cv, chi2, ig.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// `all`, `best-k:N` or `percentile:P`.
    #[arg(long)]
    selection: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    max_parents: Option<usize>,
    #[arg(long)]
    max_inter_parents: Option<usize>,
    #[arg(long)]
    accept_ratio: Option<f64>,
    #[arg(long)]
    fallback_ratio: Option<f64>,
    /// Keep the outcome from parenting next-slice features.
    #[arg(long)]
    forbid_target_source: bool,
    #[arg(long)]
    pseudocount: Option<f64>,
    #[arg(long)]
    em_tol: Option<f64>,
    #[arg(long)]
    em_max_iter: Option<usize>,
    /// Bootstrap replicates.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split_ratio: Option<f64>,
    /// Also cross-validate on the training split with this many folds.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    binning: Option<BinningArg>,
    /// Single-slice networks only.
    #[arg(long = "static", conflicts_with = "promote_top_bn")]
    static_only: bool,
    /// Carry the best static network's ordering into a DBN.
    #[arg(long)]
    promote_top_bn: bool,
    /// Do not enter past outcome labels as evidence.
    #[arg(long)]
    no_past_labels: bool,
    /// Target precision per window, e.g. 24=0.4,48=0.33.
    #[arg(long, value_delimiter = ',')]
    precision: Option<Vec<String>>,
    #[arg(long, value_enum)]
    criterion: Option<CriterionArg>,
    /// Skip the logistic regression baseline.
    #[arg(long)]
    no_baseline: bool,
    #[arg(long)]
    lr_l2: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output folder for panel.csv and truth.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    subjects: usize,
    #[arg(long, default_value_t = 7)]
    horizon: usize,
    /// Fraction of feature cells masked at random.
    #[arg(long, default_value_t = 0.0)]
    missing: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reuse the ground truth of an earlier truth.json.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    features: usize,
    #[arg(long, default_value_t = 0.85)]
    strength: f64,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Folder of a finished run.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    criterion: Option<CriterionArg>,
}

fn parse_selection(s: &str) -> Result<Selection, Error> {
    let bad = || Error::Config(format!("bad selection `{s}`"));
    match s.split_once(':') {
        None if s == "all" => Ok(Selection::All),
        Some(("best-k" | "best_k", k)) => k.parse().map(Selection::BestK).map_err(|_| bad()),
        Some(("percentile", p)) => p.parse().map(Selection::Percentile).map_err(|_| bad()),
        _ => Err(bad()),
    }
}

fn build_config(a: &RunArgs) -> Result<RunConfig, Error> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = &a.$field { cfg.$field = v.clone(); } )* };
    }
    set!(windows, step_hours, alpha, max_parents, max_inter_parents, accept_ratio, fallback_ratio);
    set!(pseudocount, em_tol, em_max_iter, bootstrap, seed, split_ratio, lr_l2);
    if a.data.is_some() {
        cfg.data = a.data.clone();
    }
    if a.out.is_some() {
        cfg.out = a.out.clone();
    }
    if a.folds.is_some() {
        cfg.folds = a.folds;
    }
    if a.threads.is_some() {
        cfg.threads = a.threads;
    }
    if let Some(ms) = &a.methods {
        cfg.methods = ms
            .iter()
            .map(|m| RankMethod::parse(m).ok_or_else(|| Error::Config(format!("unknown method `{m}`"))))
            .collect::<Result<_, _>>()?;
    }
    if let Some(s) = &a.selection {
        cfg.selection = parse_selection(s)?;
    }
    if let Some(b) = a.binning {
        cfg.binning = match b {
            BinningArg::Clinical => Binning::Clinical,
            BinningArg::Categorical => Binning::Categorical,
        };
    }
    if a.static_only {
        cfg.mode = RunMode::Static;
    }
    if a.promote_top_bn {
        cfg.mode = RunMode::PromoteTopBn;
    }
    if a.forbid_target_source {
        cfg.forbid_target_source = true;
    }
    if a.no_past_labels {
        cfg.use_past_labels = false;
    }
    if a.no_baseline {
        cfg.baseline = false;
    }
    if let Some(c) = a.criterion {
        cfg.criterion = c.into();
    }
    for item in a.precision.iter().flatten() {
        let parsed = item
            .split_once('=')
            .and_then(|(w, p)| Some((w.trim().parse::<usize>().ok()?, p.trim().parse::<f64>().ok()?)));
        let (w, p) = parsed.ok_or_else(|| Error::Config(format!("bad precision target `{item}`")))?;
        cfg.precision_targets.insert(w, p);
    }
    if let Some(cap) = std::env::var("RAUS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if cap >= 1 {
            cfg.threads = Some(cfg.threads.map_or(cap, |t| t.min(cap)));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Parse { .. }
        | Error::Schema(_)
        | Error::DegenerateVariable(_)
        | Error::StratumTooSmall { .. }
        | Error::EmptyStratum(_)
        | Error::NoRankableVariables
        | Error::EmptyInput
        | Error::MissingData(_)
        | Error::Csv(_)
        | Error::Io { .. } => 3,
        _ => 1,
    }
}

fn run(a: &RunArgs) -> Result<(), Error> {
    let cfg = build_config(a)?;
    let out = cfg.out.clone().ok_or_else(|| Error::Config("--out is required".into()))?;
    let existed = out.exists();
    if let Err(e) = raus::report::preflight_output(&out) {
        return Err(Error::Config(e.to_string()));
    }
    let result = pipeline::run_pipeline(&cfg);
    match result {
        Ok(r) => {
            for w in &r.summary.rankings {
                let names: Vec<&str> = w.models.iter().map(|m| m.model.as_str()).collect();
                println!("{}h: {}", w.window, names.join(" > "));
            }
            for f in &r.summary.failures {
                eprintln!("failed {}: {}", f.folder, f.error);
            }
            if r.cells.iter().all(|c| c.result.is_err()) {
                if !existed {
                    let _ = std::fs::remove_dir_all(&out);
                }
                return Err(Error::InvalidStructure("every model failed".into()));
            }
            Ok(())
        }
        Err(e) => {
            if !existed {
                let _ = std::fs::remove_dir_all(&out);
            }
            Err(e)
        }
    }
}

fn synth(a: &SynthArgs) -> Result<(), Error> {
    if !(0.0..1.0).contains(&a.missing) {
        return Err(Error::Config("--missing must be in [0, 1)".into()));
    }
    let (structure, cpts) = match &a.truth {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
            let stored: GeneratorSpec = serde_json::from_str(&text)?;
            (stored.structure, stored.cpts)
        }
        None => random_truth(&TruthSpec {
            n_features: a.features,
            strength: a.strength,
            seed: a.seed,
            ..Default::default()
        })?,
    };
    let spec = GeneratorSpec {
        structure,
        cpts,
        n_subjects: a.subjects,
        horizon: a.horizon,
        missing_rate: a.missing,
        seed: a.seed,
    };
    let panel = sample_panel(&spec)?;
    write_synthetic(&spec, &panel, &a.out)?;
    println!("wrote {} subjects to {}", a.subjects, a.out.join("panel.csv").display());
    Ok(())
}

fn label(a: &LabelArgs) -> Result<(), Error> {
    let raw = load_panel(&a.data, &CsvFormat::default())?;
    let (labeled, excluded) = pipeline::label_with_kdigo(&raw, &KdigoRule::default())?;
    let file = std::fs::File::create(&a.out).map_err(|e| Error::Config(format!("creating {}: {e}", a.out.display())))?;
    pipeline::write_raw_csv(&labeled, std::io::BufWriter::new(file))?;
    println!("labeled {} subjects, excluded {excluded} without admission SCr", labeled.subjects.len());
    Ok(())
}

fn report(a: &ReportArgs) -> Result<(), Error> {
    if !Path::new(&a.out).join("summary.json").exists() {
        return Err(Error::Config(format!("{} holds no finished run", a.out.display())));
    }
    let summary = pipeline::reemit(&a.out, a.criterion.map(Into::into))?;
    for w in &summary.rankings {
        let names: Vec<&str> = w.models.iter().map(|m| m.model.as_str()).collect();
        println!("{}h: {}", w.window, names.join(" > "));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Synth(a) => synth(a),
        Command::Label(a) => label(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
