use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hardy_core::decompose::{bmo_decompose, duality_witness, maximal_dual};
use hardy_core::harness::{
    self, check_instance, fuzz, replay, sharpness_search, Distribution, FuzzConfig, Instance, InstanceDescriptor,
    Objective, VerificationReport, CSV_HEADER,
};
use hardy_core::io::{AnalysisDoc, BmoDecompositionDoc, CoefDoc, DualityDoc, FunctionDoc, MaximalDualDoc};
use hardy_core::lattice::{parse_rational, LatticeSpec};
use hardy_core::operators::{bmo_norm, integral, square};
use hardy_core::{CoefSequence, Lattice, StepFunction};

#[derive(Parser)]
#[command(
    name = "hardy",
    version,
    about = "Dyadic maximal, square and BMO toolkit on finite interval lattices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a dyadic or random lattice.
    GenLattice(GenLatticeArgs),
    /// Draw a random step function on a lattice.
    GenFunction(GenFunctionArgs),
    /// Maximal function, square function and BMO norm of a function.
    Analyze(AnalyzeArgs),
    /// Split a function into root means, a bounded part and a balayage.
    DecomposeBmo(FunctionArgs),
    /// The Carleson sequence whose pairing with f equals the integral of Mf.
    MaximalDual(FunctionArgs),
    /// The bounded-difference function g with the integral of f·g equal to that of Sf.
    Duality(FunctionArgs),
    /// Check every inequality on one instance.
    Verify(VerifyArgs),
    /// Check every inequality on many random instances.
    Fuzz(FuzzArgs),
    /// Hill-climb one of the bounded ratios.
    Sharpness(SharpnessArgs),
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenLatticeArgs {
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Dyadic lattice on [left, right) instead of a random one.
    #[arg(long)]
    dyadic: bool,
    #[arg(long, default_value = "0")]
    left: String,
    #[arg(long, default_value = "1")]
    right: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    max_children: usize,
    #[arg(long, default_value_t = 1)]
    max_roots: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct GenFunctionArgs {
    #[arg(long)]
    lattice: PathBuf,
    #[arg(long, default_value = "uniform")]
    dist: Distribution,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct FunctionArgs {
    #[arg(long)]
    function: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    function: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    /// The function f; also used as g and as the source of the coefficients
    /// when those are not given.
    #[arg(long, required_unless_present = "instance", conflicts_with = "instance")]
    function: Option<PathBuf>,
    /// The BMO-side function g.
    #[arg(long)]
    g: Option<PathBuf>,
    /// Coefficient file; defaults to the maximal dual sequence of f.
    #[arg(long)]
    coef: Option<PathBuf>,
    /// Replay an instance artifact written by `fuzz`.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = harness::DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 6)]
    depth: usize,
    #[arg(long, default_value_t = 4)]
    max_children: usize,
    #[arg(long, default_value_t = 3)]
    max_roots: usize,
    /// Value distributions, cycled by trial; all of them by default.
    #[arg(long, value_delimiter = ',')]
    dist: Vec<Distribution>,
    #[arg(long, default_value_t = harness::DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Directory for failing instances, one JSON file per trial.
    #[arg(long)]
    artifacts: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SharpnessArgs {
    #[arg(long)]
    objective: Objective,
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, conflicts_with = "function")]
    lattice: Option<PathBuf>,
    /// Dyadic depth on [0, 1) when neither a lattice nor a function is given.
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Starting function.
    #[arg(long)]
    function: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

/// Failure of the input files or flags; exit status 2.
struct InputError(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.into())
    }
}

type Run<T = ()> = std::result::Result<T, InputError>;

enum Outcome {
    Pass,
    NumericalOnly,
    LogicalFailure,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn load_lattice(path: &Path) -> anyhow::Result<Arc<Lattice>> {
    let spec: LatticeSpec = read_json(path)?;
    let lattice = Lattice::try_from(spec).with_context(|| format!("invalid lattice in {}", path.display()))?;
    Ok(Arc::new(lattice))
}

fn load_function(path: &Path) -> anyhow::Result<StepFunction> {
    let doc: FunctionDoc = read_json(path)?;
    doc.to_function(path.parent())
        .with_context(|| format!("invalid function in {}", path.display()))
}

fn load_function_on(path: &Path, lattice: &Arc<Lattice>) -> anyhow::Result<StepFunction> {
    let doc: FunctionDoc = read_json(path)?;
    doc.to_function_on(lattice, path.parent())
        .with_context(|| format!("invalid function in {}", path.display()))
}

fn load_coefficients(path: &Path, lattice: &Arc<Lattice>) -> anyhow::Result<CoefSequence> {
    let doc: CoefDoc = read_json(path)?;
    doc.to_sequence(lattice)
        .with_context(|| format!("invalid coefficients in {}", path.display()))
}

fn emit_text(output: &Output, text: &str) -> Run {
    match &output.out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_json<T: Serialize>(output: &Output, value: &T) -> Run {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit_text(output, &text)
}

fn gen_lattice(args: &GenLatticeArgs) -> Run {
    let lattice = if args.dyadic {
        let left = parse_rational(&args.left).context("--left")?;
        let right = parse_rational(&args.right).context("--right")?;
        Lattice::dyadic(args.depth, left, right)?
    } else {
        Lattice::random(args.seed, args.depth, args.max_children, args.max_roots)?
    };
    emit_json(&args.output, &LatticeSpec::from(&lattice))
}

fn gen_function(args: &GenFunctionArgs) -> Run {
    let lattice = load_lattice(&args.lattice)?;
    let f = harness::random_function(&lattice, args.seed, args.dist);
    emit_json(&args.output, &FunctionDoc::from_function(&f))
}

fn analyze(args: &AnalyzeArgs) -> Run {
    let f = load_function(&args.function)?;
    let doc = AnalysisDoc::new(&f);
    match args.format {
        Format::Json => emit_json(&args.output, &doc),
        Format::Csv => {
            let lattice = f.lattice();
            let mut text = String::from("leaf,left,right,value,max_function,square_function\n");
            for (pos, &leaf) in lattice.leaves().iter().enumerate() {
                let iv = lattice.interval(leaf);
                text.push_str(&format!(
                    "{},{},{},{:e},{:e},{:e}\n",
                    pos,
                    iv.left,
                    iv.right,
                    f.values()[pos],
                    doc.max_function[pos],
                    doc.square_function[pos]
                ));
            }
            emit_text(&args.output, &text)
        }
    }
}

fn decompose(args: &FunctionArgs) -> Run {
    let g = load_function(&args.function)?;
    let d = bmo_decompose(&g);
    emit_json(&args.output, &BmoDecompositionDoc::new(&g, &d))
}

fn dual(args: &FunctionArgs) -> Run {
    let f = load_function(&args.function)?;
    emit_json(&args.output, &MaximalDualDoc::new(&maximal_dual(&f)))
}

fn duality(args: &FunctionArgs) -> Run {
    let f = load_function(&args.function)?;
    let w = duality_witness(&f);
    let norm = bmo_norm(&w);
    let doc = DualityDoc {
        integral_square: integral(&square(&f)),
        pairing: integral(&f.mul(&w)?),
        max_difference: norm.c2,
        bmo_norm: norm.value,
        witness: FunctionDoc::from_function(&w),
    };
    emit_json(&args.output, &doc)
}

fn outcome_of(report: &VerificationReport) -> Outcome {
    if report.all_pass {
        Outcome::Pass
    } else if report.has_logical_failure() {
        Outcome::LogicalFailure
    } else {
        Outcome::NumericalOnly
    }
}

fn verify(args: &VerifyArgs) -> Run<Outcome> {
    if args.tol.is_nan() || args.tol < 0.0 {
        return Err(anyhow!("--tol must be non-negative").into());
    }
    let report = if let Some(path) = &args.instance {
        let inst: Instance = read_json(path)?;
        replay(&inst, args.tol).with_context(|| format!("invalid instance in {}", path.display()))?
    } else {
        let f_path = args.function.as_ref().expect("required by clap");
        let f = load_function(f_path)?;
        let lattice = f.lattice().clone();
        let g = match &args.g {
            Some(path) => load_function_on(path, &lattice)?,
            None => f.clone(),
        };
        let a = match &args.coef {
            Some(path) => load_coefficients(path, &lattice)?,
            None => maximal_dual(&f).coeffs,
        };
        let descriptor = InstanceDescriptor {
            source: Some(f_path.display().to_string()),
            ..Default::default()
        };
        check_instance(&lattice, &f, &g, &a, descriptor, args.tol)?
    };
    match args.format {
        Format::Json => emit_json(&args.output, &report)?,
        Format::Csv => {
            let mut text = String::from(CSV_HEADER);
            report.csv_rows(&mut text);
            emit_text(&args.output, &text)?;
        }
    }
    Ok(outcome_of(&report))
}

fn run_fuzz(args: &FuzzArgs) -> Run<Outcome> {
    let config = FuzzConfig {
        seed: args.seed,
        trials: args.trials,
        max_depth: args.depth,
        max_children: args.max_children,
        max_roots: args.max_roots,
        distributions: if args.dist.is_empty() {
            Distribution::ALL.to_vec()
        } else {
            args.dist.clone()
        },
        tolerance: args.tol,
    };
    let mut report = fuzz(&config)?;
    let outcome = if report.all_pass {
        Outcome::Pass
    } else if report.has_logical_failure() {
        Outcome::LogicalFailure
    } else {
        Outcome::NumericalOnly
    };
    if let Some(dir) = &args.artifacts {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for failure in &report.failures {
            let path = dir.join(format!("trial-{:06}.json", failure.trial));
            let mut text = serde_json::to_string_pretty(&failure.instance)?;
            text.push('\n');
            fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        }
    }
    match args.format {
        Format::Json => {
            if args.artifacts.is_some() {
                for failure in &mut report.failures {
                    failure.report.checks.retain(|c| !c.pass);
                }
            }
            emit_json(&args.output, &report)?
        }
        Format::Csv => {
            let mut text = String::from(
                "check,passed,failed,numerical_failures,worst_margin,worst_margin_trial,max_ratio,max_ratio_trial\n",
            );
            for (name, s) in &report.summary {
                text.push_str(&format!(
                    "{},{},{},{},{:e},{},{},{}\n",
                    name,
                    s.passed,
                    s.failed,
                    s.numerical_failures,
                    s.worst_margin,
                    s.worst_margin_trial,
                    s.max_ratio.map(|r| format!("{r:e}")).unwrap_or_default(),
                    s.max_ratio_trial.map(|t| t.to_string()).unwrap_or_default(),
                ));
            }
            emit_text(&args.output, &text)?
        }
    }
    Ok(outcome)
}

fn sharpness(args: &SharpnessArgs) -> Run {
    let start = args.function.as_deref().map(load_function).transpose()?;
    let lattice = match (&start, &args.lattice) {
        (Some(f), _) => f.lattice().clone(),
        (None, Some(path)) => load_lattice(path)?,
        (None, None) => Arc::new(Lattice::dyadic(args.depth, 0.into(), 1.into())?),
    };
    let result = sharpness_search(&lattice, args.objective, args.budget, args.seed, start.as_ref())?;
    emit_json(&args.output, &result)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenLattice(a) => gen_lattice(a).map(|_| Outcome::Pass),
        Command::GenFunction(a) => gen_function(a).map(|_| Outcome::Pass),
        Command::Analyze(a) => analyze(a).map(|_| Outcome::Pass),
        Command::DecomposeBmo(a) => decompose(a).map(|_| Outcome::Pass),
        Command::MaximalDual(a) => dual(a).map(|_| Outcome::Pass),
        Command::Duality(a) => duality(a).map(|_| Outcome::Pass),
        Command::Verify(a) => verify(a),
        Command::Fuzz(a) => run_fuzz(a),
        Command::Sharpness(a) => sharpness(a).map(|_| Outcome::Pass),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::NumericalOnly) => {
            eprintln!("warning: some checks failed within ten times the tolerance");
            ExitCode::SUCCESS
        }
        Ok(Outcome::LogicalFailure) => {
            eprintln!("error: inequality violated");
            ExitCode::from(1)
        }
        Err(InputError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
