//! `gami`: simulate data, rank interactions, fit, export, verify and report
//! monotone GAMI-Tree models from the command line.
//!
//! Exit codes: 0 success, 1 failed audit, 2 bad usage, 3 unreadable or
//! malformed input, 4 pipeline failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use gami_tree::anova::{
    check_monotone, check_monotone_full, export_terms, orthogonality_audit, parse_ensemble, purify, term_importance,
    MonotoneReport, PairOrthogonality, TermManifest,
};
use gami_tree::binning::bin_features;
use gami_tree::booster::{audit_constraints, BoostConfig, ConstraintViolation, TreeEnsemble};
use gami_tree::data::{split_dataset, Dataset, ResponseKind, SplitFractions};
use gami_tree::filter::{fast_filter, fit_initial_gam, residuals, PairScore, DEFAULT_FAST_BINS};
use gami_tree::json::to_canonical_string;
use gami_tree::pipeline::{run_pipeline, GridResult, HyperGrid, PipelineConfig, SplitMetrics};
use gami_tree::sim::{generate, SimConfig, SimModel};
use gami_tree::GamiError;

const PARSE_TOLERANCE: f64 = 1e-8;
const ORTHOGONALITY_TOLERANCE: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "gami", version, about = "Monotone tree-based GAM with pairwise interactions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a simulated data set and write train/valid/test CSVs.
    Simulate(SimulateArgs),
    /// Rank feature pairs by FAST score on main-effect residuals.
    Filter(FilterArgs),
    /// Run the full pipeline and write model, term grids and a run manifest.
    Fit(FitArgs),
    /// Parse and purify a saved model and write its term grids.
    ExportTerms(ExportArgs),
    /// Audit a saved model: parse identity, monotonicity, constraints, orthogonality.
    Verify(VerifyArgs),
    /// Summarise the outputs of a `fit` run.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    First,
    Second,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Continuous,
    Binary,
}

impl From<KindArg> for ResponseKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Continuous => ResponseKind::Continuous,
            KindArg::Binary => ResponseKind::Binary,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    sigma: f64,
    #[arg(long, value_enum, default_value = "continuous")]
    kind: KindArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Response kind override shared by commands that read CSVs; inferred from
/// the data (all 0/1 means binary) when absent.
#[derive(Args)]
struct KindOverride {
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    train: PathBuf,
    /// Early-stopping set for the main-effects fit.
    #[arg(long)]
    valid: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_FAST_BINS)]
    bins: usize,
    #[command(flatten)]
    kind: KindOverride,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    valid: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    k: usize,
    /// Comma list aligned with the feature columns: `+`, `-` or `0`.
    #[arg(long, allow_hyphen_values = true)]
    monotone: String,
    #[arg(long)]
    out: PathBuf,
    /// JSON hyperparameter grid; defaults to the built-in grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[command(flatten)]
    kind: KindOverride,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    kind: KindOverride,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    train: PathBuf,
    /// Random anchor lines per constrained feature.
    #[arg(long, default_value_t = 1000)]
    lines: usize,
    /// Points per anchor line.
    #[arg(long, default_value_t = 50)]
    grid: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    kind: KindOverride,
}

#[derive(Args)]
struct ReportArgs {
    /// Output directory of a `fit` run.
    #[arg(long)]
    dir: PathBuf,
    /// Print the summary as one JSON line instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(String),
    Pipeline(String),
    Audit,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Audit => 1,
            Failure::Usage(_) => 2,
            Failure::Input(_) => 3,
            Failure::Pipeline(_) => 4,
        }
    }
}

/// Errors raised while reading inputs or checking their arguments.
fn input_error(e: GamiError) -> Failure {
    match e {
        GamiError::Config(_) => Failure::Usage(e.to_string()),
        GamiError::Stage { .. } | GamiError::Structural(_) | GamiError::UndefinedMetric(_) => {
            Failure::Pipeline(e.to_string())
        }
        _ => Failure::Input(e.to_string()),
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Filter(a) => filter(a),
        Command::Fit(a) => fit(a),
        Command::ExportTerms(a) => export(a),
        Command::Verify(a) => verify(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) | Failure::Input(m) | Failure::Pipeline(m) => eprintln!("error: {m}"),
                Failure::Audit => eprintln!("verification failed"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn json_line<T: Serialize>(value: &T) -> String {
    to_canonical_string(value).expect("plain data serializes")
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", json_line(value));
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    fs::write(path, format!("{text}\n")).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> CmdResult {
    fs::create_dir_all(path).map_err(|e| Failure::Input(format!("cannot create {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn read_data(path: &Path, kind: &KindOverride) -> Result<Dataset, Failure> {
    match kind.kind {
        Some(k) => Dataset::read_csv(path, k.into()),
        None => Dataset::read_csv_infer(path),
    }
    .map_err(input_error)
}

fn read_model(path: &Path) -> Result<TreeEnsemble, Failure> {
    let text = read_text(path)?;
    TreeEnsemble::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn require_file(path: &Path) -> CmdResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Input(format!("{} is not a readable file", path.display())))
    }
}

/// Parses `+,+,0,-` into directions.
fn parse_monotone(spec: &str) -> Result<Vec<i8>, Failure> {
    spec.split(',')
        .map(|s| match s.trim() {
            "+" | "+1" | "1" => Ok(1),
            "-" | "-1" => Ok(-1),
            "0" => Ok(0),
            other => Err(Failure::Usage(format!("monotone entry `{other}` is not one of +, -, 0"))),
        })
        .collect()
}

fn check_schema(train: &Dataset, other: &Dataset, name: &str) -> CmdResult {
    if train.same_schema(other) {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{name} set does not match the train set's columns and response kind")))
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    model: SimModel,
    kind: ResponseKind,
    n: usize,
    sigma: f64,
    seed: u64,
    rows: SplitRows,
    files: Vec<String>,
}

#[derive(Serialize)]
struct SplitRows {
    train: usize,
    valid: usize,
    test: usize,
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let model = match a.model {
        ModelArg::First => SimModel::First,
        ModelArg::Second => SimModel::Second,
    };
    let cfg = SimConfig { n: a.n, sigma: a.sigma, seed: a.seed, response_kind: a.kind.into() };
    cfg.validate().map_err(input_error)?;
    if a.n < 3 {
        return Err(Failure::Usage(format!("n = {} cannot fill train, valid and test", a.n)));
    }
    create_dir(&a.out)?;
    let ds = generate(model, &cfg).map_err(input_error)?;
    let (train, valid, test) = split_dataset(&ds, SplitFractions::default(), a.seed).map_err(input_error)?;
    let mut files = Vec::new();
    for (name, part) in [("train.csv", &train), ("valid.csv", &valid), ("test.csv", &test)] {
        let path = a.out.join(name);
        part.write_csv(&path).map_err(input_error)?;
        files.push(path.display().to_string());
    }
    print_json(&SimulateSummary {
        model,
        kind: cfg.response_kind,
        n: a.n,
        sigma: a.sigma,
        seed: a.seed,
        rows: SplitRows { train: train.n_rows(), valid: valid.n_rows(), test: test.n_rows() },
        files,
    });
    Ok(())
}

fn filter(a: FilterArgs) -> CmdResult {
    require_file(&a.train)?;
    require_file(&a.valid)?;
    let train = read_data(&a.train, &a.kind)?;
    let valid = read_data(&a.valid, &a.kind)?;
    check_schema(&train, &valid, "valid")?;
    let p = train.n_features();
    if a.k > p * p.saturating_sub(1) / 2 {
        return Err(Failure::Usage(format!("k = {} but only {} pairs exist", a.k, p * p.saturating_sub(1) / 2)));
    }
    if a.bins < 2 {
        return Err(Failure::Usage("--bins must be at least 2".into()));
    }
    let screening = BoostConfig { max_depth: 1, ..BoostConfig::default() };
    let gam = fit_initial_gam(&train, Some(&valid), &screening)
        .map_err(|e| Failure::Pipeline(e.at_stage("screen").to_string()))?;
    let resid = residuals(&train, &gam).map_err(|e| Failure::Pipeline(e.at_stage("residuals").to_string()))?;
    let binned = bin_features(&train, a.bins).map_err(input_error)?;
    let pairs: Vec<PairScore> =
        fast_filter(&resid, &binned, a.k).map_err(|e| Failure::Pipeline(e.at_stage("filter").to_string()))?;
    print_json(&pairs);
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct RunInputs {
    train: String,
    valid: String,
    test: String,
}

#[derive(Serialize, Deserialize)]
struct RunFiles {
    model: String,
    terms_manifest: String,
    terms: Vec<String>,
}

/// Contents of `run.json`.
#[derive(Serialize, Deserialize)]
struct RunManifest {
    inputs: RunInputs,
    config: PipelineConfig,
    feature_names: Vec<String>,
    selected_pairs: Vec<PairScore>,
    chosen: GridResult,
    grid: Vec<GridResult>,
    metrics: SplitMetrics,
    files: RunFiles,
}

fn fit(a: FitArgs) -> CmdResult {
    for path in [&a.train, &a.valid, &a.test] {
        require_file(path)?;
    }
    let monotone = parse_monotone(&a.monotone)?;
    let grid = match &a.grid {
        Some(path) => {
            let text = read_text(path)?;
            let grid: HyperGrid =
                serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            Some(grid)
        }
        None => None,
    };
    let train = read_data(&a.train, &a.kind)?;
    let valid = read_data(&a.valid, &a.kind)?;
    let test = read_data(&a.test, &a.kind)?;
    check_schema(&train, &valid, "valid")?;
    check_schema(&train, &test, "test")?;

    let mut cfg = PipelineConfig::new(a.k, monotone);
    cfg.grid = grid;
    cfg.validate(train.n_features()).map_err(input_error)?;
    create_dir(&a.out)?;

    let fitted = run_pipeline(&train, &valid, &test, &cfg).map_err(|e| match e {
        GamiError::Config(_) => Failure::Usage(e.to_string()),
        other => Failure::Pipeline(other.to_string()),
    })?;

    write_text(&a.out.join("model.json"), &fitted.ensemble.to_json())?;
    let manifest = export_terms(
        &fitted.terms,
        &train.feature_ranges(),
        train.feature_names(),
        &fitted.importances,
        &a.out.join("terms"),
    )
    .map_err(|e| Failure::Pipeline(e.at_stage("export").to_string()))?;

    let run = RunManifest {
        inputs: RunInputs {
            train: a.train.display().to_string(),
            valid: a.valid.display().to_string(),
            test: a.test.display().to_string(),
        },
        config: cfg,
        feature_names: train.feature_names().to_vec(),
        selected_pairs: fitted.selected_pairs,
        chosen: fitted.chosen,
        grid: fitted.grid,
        metrics: fitted.metrics,
        files: RunFiles {
            model: "model.json".into(),
            terms_manifest: "terms/terms.json".into(),
            terms: manifest.terms.iter().map(|t| format!("terms/{}", t.file)).collect(),
        },
    };
    let text = json_line(&run);
    write_text(&a.out.join("run.json"), &text)?;
    println!("{text}");
    Ok(())
}

fn export(a: ExportArgs) -> CmdResult {
    require_file(&a.model)?;
    require_file(&a.train)?;
    let ens = read_model(&a.model)?;
    let train = read_data(&a.train, &a.kind)?;
    if train.n_features() != ens.n_features() {
        return Err(Failure::Usage(format!(
            "model has {} features, train set has {}",
            ens.n_features(),
            train.n_features()
        )));
    }
    let parsed = parse_ensemble(&ens).map_err(|e| Failure::Pipeline(e.at_stage("parse").to_string()))?;
    let terms = purify(&parsed, &train).map_err(|e| Failure::Pipeline(e.at_stage("purify").to_string()))?;
    let importances = term_importance(&terms, &train);
    let manifest: TermManifest =
        export_terms(&terms, &train.feature_ranges(), train.feature_names(), &importances, &a.out)
            .map_err(|e| Failure::Pipeline(e.at_stage("export").to_string()))?;
    print_json(&manifest);
    Ok(())
}

#[derive(Serialize)]
struct ParseCheck {
    points: usize,
    max_abs_diff_parsed: f64,
    max_abs_diff_purified: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Serialize)]
struct MonotoneCheck {
    /// Exact sweep of the ensemble itself.
    model: MonotoneReport,
    /// Sweep of the purified term sum, with a rounding allowance.
    terms: MonotoneReport,
    passed: bool,
}

#[derive(Serialize)]
struct ConstraintCheck {
    violations: Vec<ConstraintViolation>,
    passed: bool,
}

#[derive(Serialize)]
struct OrthogonalityCheck {
    pairs: Vec<PairOrthogonality>,
    max_norm: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    parse_identity: ParseCheck,
    monotone: MonotoneCheck,
    constraints: ConstraintCheck,
    orthogonality: OrthogonalityCheck,
    failed: Vec<&'static str>,
    passed: bool,
}

fn verify(a: VerifyArgs) -> CmdResult {
    require_file(&a.model)?;
    require_file(&a.train)?;
    let ens = read_model(&a.model)?;
    let train = read_data(&a.train, &a.kind)?;
    if train.n_features() != ens.n_features() {
        return Err(Failure::Usage(format!(
            "model has {} features, train set has {}",
            ens.n_features(),
            train.n_features()
        )));
    }
    if a.grid < 2 {
        return Err(Failure::Usage("--grid must be at least 2".into()));
    }
    let parsed = parse_ensemble(&ens).map_err(|e| Failure::Pipeline(e.at_stage("parse").to_string()))?;
    let terms = purify(&parsed, &train).map_err(|e| Failure::Pipeline(e.at_stage("purify").to_string()))?;
    let bounds = train.feature_ranges();

    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut points: Vec<Vec<f64>> = train.rows().map(<[f64]>::to_vec).collect();
    points.extend((0..a.lines).map(|_| bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect::<Vec<_>>()));
    let gap = |f: &dyn Fn(&[f64]) -> f64| points.iter().map(|x| (f(x) - ens.predict(x)).abs()).fold(0.0, f64::max);
    let max_parsed = gap(&|x| parsed.eval(x));
    let max_purified = gap(&|x| terms.eval(x));
    let parse_identity = ParseCheck {
        points: points.len(),
        max_abs_diff_parsed: max_parsed,
        max_abs_diff_purified: max_purified,
        tolerance: PARSE_TOLERANCE,
        passed: max_parsed <= PARSE_TOLERANCE && max_purified <= PARSE_TOLERANCE,
    };

    let monotone = &ens.constraints.monotone;
    let model_sweep = check_monotone(&ens, monotone, &bounds, a.lines, a.grid, a.seed, 0.0);
    let terms_sweep = check_monotone_full(&terms, monotone, &bounds, a.lines, a.grid, a.seed);
    let monotone = MonotoneCheck { passed: model_sweep.passed() && terms_sweep.passed(), model: model_sweep, terms: terms_sweep };

    let violations = audit_constraints(&ens);
    let constraints = ConstraintCheck { passed: violations.is_empty(), violations };

    let pairs = orthogonality_audit(&terms, &train).map_err(|e| Failure::Pipeline(e.at_stage("audit").to_string()))?;
    let max_norm = pairs.iter().map(|p| p.norm).fold(0.0, f64::max);
    let orthogonality =
        OrthogonalityCheck { pairs, max_norm, tolerance: ORTHOGONALITY_TOLERANCE, passed: max_norm <= ORTHOGONALITY_TOLERANCE };

    let mut failed = Vec::new();
    for (name, ok) in [
        ("parse_identity", parse_identity.passed),
        ("monotone", monotone.passed),
        ("constraints", constraints.passed),
        ("orthogonality", orthogonality.passed),
    ] {
        if !ok {
            failed.push(name);
        }
    }
    let passed = failed.is_empty();
    print_json(&VerifyReport { parse_identity, monotone, constraints, orthogonality, failed, passed });
    if passed {
        Ok(())
    } else {
        Err(Failure::Audit)
    }
}

fn report(a: ReportArgs) -> CmdResult {
    let run_path = a.dir.join("run.json");
    let run: RunManifest = serde_json::from_str(&read_text(&run_path)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", run_path.display())))?;
    let terms_path = a.dir.join(&run.files.terms_manifest);
    let terms: TermManifest = serde_json::from_str(&read_text(&terms_path)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", terms_path.display())))?;

    if a.json {
        #[derive(Serialize)]
        struct Summary<'a> {
            metrics: &'a SplitMetrics,
            chosen: &'a GridResult,
            selected_pairs: &'a [PairScore],
            intercept: f64,
            terms: &'a [gami_tree::anova::TermEntry],
        }
        print_json(&Summary {
            metrics: &run.metrics,
            chosen: &run.chosen,
            selected_pairs: &run.selected_pairs,
            intercept: terms.intercept,
            terms: &terms.terms,
        });
        return Ok(());
    }

    let m = &run.metrics;
    let metric = serde_json::to_value(m.kind).ok().and_then(|v| v.as_str().map(str::to_uppercase)).unwrap_or_default();
    println!("{metric}: train {:.4}  valid {:.4}  test {:.4}", m.train, m.valid, m.test);
    let c = &run.chosen.config;
    println!(
        "chosen: learning_rate {} reg_lambda {} min_child_hessian {} max_depth {} trees {} (valid objective {:.6})",
        c.learning_rate, c.reg_lambda, c.min_child_hessian, c.max_depth, run.chosen.trees_used, run.chosen.valid_objective
    );
    if run.selected_pairs.is_empty() {
        println!("interactions: none");
    } else {
        let names = &run.feature_names;
        let pairs: Vec<String> =
            run.selected_pairs.iter().map(|p| format!("{}:{} ({:.4})", names[p.j], names[p.k], p.score)).collect();
        println!("interactions: {}", pairs.join(", "));
    }
    println!("intercept: {}", terms.intercept);
    println!("terms by importance:");
    for t in &terms.terms {
        println!("  {:<12} {:>10.5}  {}", t.name, t.importance, t.file);
    }
    Ok(())
}
