//! The `bitscreen` command line.
//!
//! Exit codes: 0 success, 1 numerical breakdown (partial result written) or
//! failed oracle check, 2 input error, 3 configuration error.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baselines;
use crate::bits::{self, StopReason};
use crate::io::{self, ScreenReport};
use crate::linalg::{CenteredResponse, StandardizedDesign};
use crate::posterior::{Hyperparams, DEFAULT_ORACLE_MAX_P};
use crate::simgen::{run_experiment, ExperimentFile};
use crate::stopping::{self, StopRule};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "bitscreen", version, about = "Bayesian iterative screening for high-dimensional regression")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "BITSCREEN_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Screen a design against a response.
    Screen(ScreenArgs),
    /// Run a simulation experiment from a TOML config.
    Simulate(SimulateArgs),
    /// Compare the fast engine with the brute-force greedy oracle.
    OracleCheck(OracleArgs),
    /// Describe the accepted file formats.
    Formats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Bits,
    Sis,
    Holp,
    Fr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StopArg {
    Fixed,
    Pp,
    PpLargestDrop,
    Ebic,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Design matrix (.csv, .tsv or .mtx).
    #[arg(short = 'X', long = "design")]
    pub design: PathBuf,
    /// Response, one value per line.
    #[arg(short = 'y', long = "response")]
    pub response: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ScreenArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "bits")]
    pub method: MethodArg,
    /// Ridge precision (default p/n).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Prior inclusion probability.
    #[arg(long, default_value_t = 0.1)]
    pub w: f64,
    #[arg(long, value_enum, default_value = "pp")]
    pub stop: StopArg,
    /// Model size for `--stop fixed` (default n − 1, or n for rankings).
    #[arg(long)]
    pub size: Option<usize>,
    /// Path length examined by the PP, largest-drop and EBIC rules (EBIC
    /// default: n / ln n).
    #[arg(long)]
    pub cap: Option<usize>,
    /// Hard limit on screening iterations.
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Let EBIC choose the empty model.
    #[arg(long)]
    pub ebic_include_null: bool,
    /// JSON result (stdout when omitted).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// CSV of the selected columns.
    #[arg(long)]
    pub ranking_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Experiment config (TOML).
    pub config: PathBuf,
    /// CSV report (stdout when both outputs are omitted).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// JSON report
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    pub w: f64,
    /// λ used by the oracle run (defaults to `--lambda`).
    #[arg(long)]
    pub oracle_lambda: Option<f64>,
    #[arg(long, default_value_t = 6)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Largest p the oracle accepts.
    #[arg(long, default_value_t = DEFAULT_ORACLE_MAX_P)]
    pub max_p: usize,
}

const FORMATS: &str = "\
Design (-X)
  .csv / .tsv / .tab  dense, one row per observation. An optional first line of
                      column names is detected when any field is non-numeric.
  .mtx                Matrix Market `coordinate real|integer|pattern general`,
                      1-based indices, duplicates summed.
  Columns are centered and scaled internally; constant columns are skipped.

Response (-y)
  Plain text, one number per line. Blank lines and `#` comments are ignored.

screen output
  JSON: method, lambda, w, stop_rule, path, pi_trace, null_log_posterior,
        selected, stop_reason, timings (seconds per step), column_names.
        Floats are rounded to 12 significant digits.
  CSV (--ranking-csv): rank, column_index (0-based), column_name,
        log_posterior (score for sis/holp/fr).

simulate config (TOML)
  seed = 1                # master seed
  replications = 50       # default for every scenario
  w = 0.1                 # prior inclusion probability for the pp rules
  [[scenario]]
  setting = \"iid\"         # iid compound_symmetry ar1 factor group
                          # extreme_correlation sparse_factor
  n = 200
  p = 2000
  r_squared = 0.7
  rho = 0.5               # optional
  k_factors = 10          # optional
  truth = [0, 1, 2]       # optional 0-based, with beta = [..]
  beta = [2.0, 2.0, 2.0]
  replications = 10       # optional override
  methods = [\"bits1\", \"bits2\", \"bits3\", \"bits:0.5\", \"bits_all\", \"sis\", \"holp\", \"fr\"]
  rules = [\"n\", \"fixed:20\", \"pp\", \"pp-largest-drop\", \"ebic\", \"ebic:100\"]
  ebic scans the first n / ln n path entries; ebic:<k> scans k (k < n).
  bits1/2/3 use lambda = p/n, n log n / p and n/p.

simulate output
  CSV: setting, method, rule, TPR, CP, mean_size, median_size, seconds
  JSON: the same rows plus n, p, r_squared, replications, failures.
";

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Breakdown(_) => 1,
        Error::Config(_) => 3,
        Error::Input(_) | Error::Dimension(_) | Error::Inadmissible(_) | Error::Io { .. } => 2,
    }
}

fn load(data: &DataArgs) -> Result<(StandardizedDesign, CenteredResponse)> {
    let design = io::read_design(&data.design)?;
    let y = io::read_response(&data.response)?;
    if y.len() != design.n() {
        return Err(Error::Dimension(format!(
            "{} has {} rows but {} has {} values",
            data.design.display(),
            design.n(),
            data.response.display(),
            y.len()
        )));
    }
    Ok((design, CenteredResponse::new(&y)?))
}

fn emit(report: &ScreenReport, out: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => report.write_json(path)?,
        None => println!("{}", report.to_json()),
    }
    if let Some(path) = csv {
        report.write_ranking_csv(path)?;
    }
    Ok(())
}

fn stop_label(a: &ScreenArgs) -> String {
    match a.stop {
        StopArg::Fixed => format!("fixed:{}", a.size.map_or("default".into(), |s| s.to_string())),
        StopArg::Pp => "pp".into(),
        StopArg::PpLargestDrop => "pp-largest-drop".into(),
        StopArg::Ebic => "ebic".into(),
    }
}

/// Runs `screen`; returns the exit code.
pub fn screen(a: &ScreenArgs) -> Result<i32> {
    let (design, response) = load(&a.data)?;
    let (n, p) = (design.n(), design.p());
    let names = design.names().map(|n| n.to_vec());
    let label = stop_label(a);
    let report = match a.method {
        MethodArg::Bits => {
            let lambda = a.lambda.unwrap_or(p as f64 / n as f64);
            let hyper = Hyperparams::new(lambda, a.w)?;
            let rule = match a.stop {
                StopArg::Fixed => StopRule::FixedSize(a.size.unwrap_or(n - 1)),
                StopArg::Pp => StopRule::Pp { cap: a.cap },
                StopArg::PpLargestDrop => StopRule::PpLargestDrop { cap: a.cap },
                StopArg::Ebic => StopRule::Ebic { max_k: a.cap, include_null: a.ebic_include_null },
            };
            let res = bits::screen(&design, &response, hyper, rule, a.max_steps)?;
            ScreenReport::from_bits(&res, lambda, a.w, &label)
        }
        MethodArg::Sis | MethodArg::Holp => {
            if a.stop != StopArg::Fixed {
                return Err(Error::Config(format!("{:?} ranks columns; use --stop fixed", a.method).to_lowercase()));
            }
            let t0 = Instant::now();
            let res = if a.method == MethodArg::Sis {
                baselines::sis_rank(&design, &response)?
            } else {
                baselines::holp_rank(&design, &response)?
            };
            let m = a.size.unwrap_or(n).min(res.ranking.len());
            ScreenReport::from_baseline(&res, m, &label, &StopReason::FixedSize.to_string(), t0.elapsed().as_secs_f64())
        }
        MethodArg::Fr => {
            let limit = a.max_steps.unwrap_or(n - 1);
            let t0 = Instant::now();
            let (res, size, reason) = match a.stop {
                StopArg::Fixed => {
                    let m = a.size.unwrap_or(n - 1);
                    let res = baselines::fr_screen(&design, &response, m.min(limit))?;
                    let size = m.min(res.ranking.len());
                    let reason = if size == m { StopReason::FixedSize } else { StopReason::Cap };
                    (res, size, reason)
                }
                StopArg::Ebic => {
                    let cap = a.cap.unwrap_or(stopping::default_ebic_max_k(n));
                    let res = baselines::fr_screen(&design, &response, cap.min(limit))?;
                    let max_k = res.ranking.len().min(n - 1);
                    let d = stopping::ebic_decide(&design, &response, &res.ranking, max_k, a.ebic_include_null)?;
                    (res, d.size, StopReason::EbicMinimum)
                }
                _ => return Err(Error::Config("fr supports --stop fixed or --stop ebic".into())),
            };
            ScreenReport::from_baseline(&res, size, &label, &reason.to_string(), t0.elapsed().as_secs_f64())
        }
    };
    let report = report.with_names(names.as_deref());
    emit(&report, a.out.as_deref(), a.ranking_csv.as_deref())?;
    Ok(if report.stop_reason == StopReason::PerfectFit.to_string() { 1 } else { 0 })
}

pub fn simulate(a: &SimulateArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| Error::io(&a.config, e))?;
    let file = ExperimentFile::from_toml(&text)?;
    let report = run_experiment(&file)?;
    if let Some(path) = &a.csv {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        report.write_csv(f)?;
    }
    if let Some(path) = &a.json {
        std::fs::write(path, report.to_json() + "\n").map_err(|e| Error::io(path, e))?;
    }
    if a.csv.is_none() && a.json.is_none() {
        report.write_csv(std::io::stdout().lock())?;
    }
    Ok(0)
}

pub fn oracle_check(a: &OracleArgs) -> Result<i32> {
    let (design, response) = load(&a.data)?;
    if design.p() > a.max_p {
        return Err(Error::Config(format!(
            "oracle check refused: p = {} exceeds the cap of {}; its cost grows as steps·p·k³. \
             Run on a column subset or pass --max-p",
            design.p(),
            a.max_p
        )));
    }
    let fast = Hyperparams::new(a.lambda, a.w)?;
    let oracle = Hyperparams::new(a.oracle_lambda.unwrap_or(a.lambda), a.w)?;
    let steps = a.steps.min(bits::default_max_steps(&design));
    let c = bits::certify(&design, &response, fast, oracle, steps, a.max_p, a.tol)?;
    println!("{}", if c.passed { "PASS" } else { "FAIL" });
    println!("steps: {}", c.steps);
    println!("max |dpi|: {:.3e}", c.max_abs_diff);
    println!("fast path:   {:?}", c.fast_path);
    println!("oracle path: {:?}", c.oracle_path);
    if let Some(k) = c.first_divergence {
        println!("first divergent step: {k}");
    }
    Ok(if c.passed { 0 } else { 1 })
}

fn init_threads(threads: Option<usize>) {
    if let Some(t) = threads.filter(|&t| t > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    init_threads(cli.threads);
    let result = match &cli.command {
        Command::Screen(a) => screen(a),
        Command::Simulate(a) => simulate(a),
        Command::OracleCheck(a) => oracle_check(a),
        Command::Formats => {
            print!("{FORMATS}");
            Ok(0)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
