//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 when `--assert` finds a violation rate above
//! tolerance, 3 on any configuration or input error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bounds::{self, BoundInputs, BoundKey, Thm2Regime};
use crate::distributions::{Core, CovarianceSpec, DistributionFamily, MomentOracle, SeedSpec};
use crate::error::{Error, Result};
use crate::estimators::{self, TruncationConfig};
use crate::experiments::{self, ExperimentReport, Grid, SweepOutcome};
use crate::linalg::Samples;
use crate::tensor::{self, Centering, EmpiricalTensorForm, PowerMethodConfig};
use crate::variational;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "dimfree",
    version,
    about = "Dimension-free deviation bounds, checked by simulation"
)]
pub struct Cli {
    /// Master seed; overrides the config's `master_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for trial execution.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for report files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Exit with status 2 when a violation rate exceeds its tolerance.
    #[arg(long = "assert", global = true)]
    pub assert_rates: bool,
    /// Treat a bound outside its sample-size regime as a configuration error.
    #[arg(long, global = true)]
    pub strict_regime: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment (or sweep) described by a JSON config.
    Verify { config: PathBuf },
    /// Run a grid of experiments and emit a long-form CSV.
    Sweep(SweepArgs),
    /// Evaluate a closed-form bound.
    Bound(BoundArgs),
    /// Truncated estimate of a directional moment from a CSV sample.
    Estimate(EstimateArgs),
    /// Operator norm of the centered empirical moment tensor of a CSV sample.
    Tensornorm(TensornormArgs),
    /// Check the entropy duality on random finite spaces.
    Duality(DualityArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub config: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub d: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<u32>>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    pub key: String,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    /// Covariance in the compact grammar, e.g. `identity:4` or `diag:4,0,0`.
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub s: u32,
    /// Unspecified constants as `name=value`, e.g. `C=2,c_s=1`.
    #[arg(long, value_delimiter = ',')]
    pub constants: Vec<String>,
    #[arg(long, default_value = "general")]
    pub regime: String,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Headerless CSV, one sample per row.
    pub data: PathBuf,
    /// Direction: `e<k>` for a basis vector or comma-separated entries.
    #[arg(long)]
    pub v: String,
    #[arg(long, default_value_t = 2)]
    pub s: u32,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// L_{2s}-L_2 constant used by the truncation level.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Truncation level; computed from the sample size when omitted.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Covariance for the truncation level; the sample covariance when omitted.
    #[arg(long)]
    pub sigma: Option<String>,
}

#[derive(Debug, Args)]
pub struct TensornormArgs {
    pub data: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub s: u32,
    /// Covariance of the population; without it the form is not centered.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Core of the population used for exact centering.
    #[arg(long, default_value = "gaussian")]
    pub family: String,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
}

#[derive(Debug, Args)]
pub struct DualityArgs {
    #[arg(long, default_value_t = 10)]
    pub size: usize,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_CONFIG
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Verify { config } => cmd_verify(cli, config, None, out, err),
        Command::Sweep(args) => {
            let grid = Grid {
                n: args.n.clone(),
                d: args.d.clone(),
                t: args.t.clone(),
                s: args.s.clone(),
            };
            cmd_verify(cli, &args.config, Some(grid), out, err)
        }
        Command::Bound(args) => cmd_bound(args, out),
        Command::Estimate(args) => cmd_estimate(args, out),
        Command::Tensornorm(args) => cmd_tensornorm(cli, args, out),
        Command::Duality(args) => cmd_duality(cli, args, out),
    }
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    statistic: &'a str,
    bound: &'a str,
    n: usize,
    d: usize,
    t: f64,
    s: u32,
    trials: usize,
    master_seed: u64,
    bound_value: f64,
    valid: bool,
    violation_rate: f64,
    violation_tolerance: f64,
    within_tolerance: bool,
    statistic_median: f64,
    empirical_quantile: f64,
}

impl<'a> Summary<'a> {
    fn of(r: &'a ExperimentReport) -> Self {
        let c = &r.config;
        Self {
            statistic: c.statistic.as_str(),
            bound: c.bound.as_str(),
            n: c.n,
            d: c.family.dim(),
            t: c.t,
            s: c.s,
            trials: c.trials,
            master_seed: c.master_seed,
            bound_value: r.bound_value,
            valid: r.valid,
            violation_rate: r.violation_rate,
            violation_tolerance: r.violation_tolerance,
            within_tolerance: r.within_tolerance,
            statistic_median: r.statistic_median,
            empirical_quantile: r.empirical_quantile,
        }
    }
}

// Warns about reports outside their regime; returns whether any was.
fn check_regime(reports: &[&ExperimentReport], err: &mut dyn Write) -> Result<bool> {
    let mut outside = false;
    for r in reports.iter().filter(|r| !r.valid) {
        outside = true;
        writeln!(
            err,
            "warning: bound {} outside its regime: {}",
            r.config.bound,
            r.condition_text.as_deref().unwrap_or("condition fails")
        )?;
    }
    Ok(outside)
}

fn cmd_verify(
    cli: &Cli,
    path: &Path,
    grid_override: Option<Grid>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let file = experiments::load_config(path)?;
    let mut base = file.experiment;
    if let Some(seed) = cli.seed {
        base.master_seed = seed;
    }
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir)?;
    }
    let grid = match grid_override {
        Some(g) if !g.is_empty() => Some(g),
        Some(_) => Some(file.grid.unwrap_or_default()),
        None => file.grid,
    };
    let reports: Vec<ExperimentReport> = match grid {
        None => {
            let report = experiments::run_experiment_with_threads(&base, cli.threads)?;
            print_json(out, &Summary::of(&report))?;
            if let Some(dir) = &cli.out {
                report.write_json(&dir.join("report.json"))?;
                report.write_per_trial_csv(&dir.join("per_trial.csv"))?;
            }
            vec![report]
        }
        Some(grid) => {
            let outcomes = experiments::sweep(&base, &grid, cli.threads);
            for o in &outcomes {
                if let Err(e) = &o.report {
                    writeln!(
                        err,
                        "warning: point n={} d={} t={} s={} failed: {e}",
                        o.point.n, o.point.d, o.point.t, o.point.s
                    )?;
                }
            }
            experiments::write_sweep_csv(&outcomes, &mut *out)?;
            if let Some(dir) = &cli.out {
                write_sweep_files(dir, &outcomes)?;
            }
            outcomes.into_iter().filter_map(|o| o.report.ok()).collect()
        }
    };
    for r in &reports {
        if let Some(m) = &r.metadata {
            writeln!(
                err,
                "{} vs {}: {:.3} s on {} threads",
                r.config.statistic, r.config.bound, m.wall_time_seconds, m.threads
            )?;
        }
    }
    let refs: Vec<&ExperimentReport> = reports.iter().collect();
    if check_regime(&refs, err)? && cli.strict_regime {
        return Err(Error::Config(
            "bound outside its regime and --strict-regime is set".into(),
        ));
    }
    if cli.assert_rates {
        let breaches: Vec<_> = reports.iter().filter(|r| !r.within_tolerance).collect();
        for r in &breaches {
            writeln!(
                err,
                "assertion failed: violation rate {} exceeds tolerance {} (n={}, t={})",
                r.violation_rate, r.violation_tolerance, r.config.n, r.config.t
            )?;
        }
        if !breaches.is_empty() {
            return Ok(EXIT_ASSERTION);
        }
    }
    Ok(EXIT_OK)
}

fn write_sweep_files(dir: &Path, outcomes: &[SweepOutcome]) -> Result<()> {
    let csv = std::fs::File::create(dir.join("sweep.csv"))?;
    experiments::write_sweep_csv(outcomes, csv)?;
    let script = std::fs::File::create(dir.join("sweep.gp"))?;
    experiments::write_plot_script("sweep.csv", script)?;
    for (i, o) in outcomes.iter().enumerate() {
        if let Ok(r) = &o.report {
            r.write_json(&dir.join(format!("report_{i:03}.json")))?;
        }
    }
    Ok(())
}

fn parse_sigma(text: &str) -> Result<crate::linalg::SymMatrix> {
    let spec: CovarianceSpec = text
        .parse()
        .map_err(|e: Error| Error::Config(format!("--sigma: {e}")))?;
    crate::distributions::materialize_sigma(&spec)
}

fn parse_constants(items: &[String]) -> Result<BTreeMap<String, f64>> {
    items
        .iter()
        .map(|item| {
            let (k, v) = item.split_once('=').ok_or_else(|| {
                Error::Config(format!("--constants: expected name=value, got '{item}'"))
            })?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::Config(format!("--constants: '{v}' is not a number")))?;
            Ok((k.to_string(), v))
        })
        .collect()
}

fn cmd_bound(args: &BoundArgs, out: &mut dyn Write) -> Result<i32> {
    let key: BoundKey = args.key.parse()?;
    let sigma = match &args.sigma {
        Some(s) => parse_sigma(s)?,
        None => return Err(Error::Config("--sigma is required".into())),
    };
    let needs_n = !matches!(
        key,
        BoundKey::LemmaNormSubg
            | BoundKey::LemmaNormGaussExact
            | BoundKey::PropSubexpNorm
            | BoundKey::Ellipsoid
    );
    let needs_t = !matches!(key, BoundKey::Thm2 | BoundKey::Thm3 | BoundKey::Ellipsoid);
    let n = match args.n {
        Some(n) => n,
        None if needs_n => return Err(Error::Config(format!("--n is required for {key}"))),
        None => 1,
    };
    let t = match args.t {
        Some(t) => t,
        None if needs_t => return Err(Error::Config(format!("--t is required for {key}"))),
        None => 0.0,
    };
    let constants = parse_constants(&args.constants)?;
    let regime: Thm2Regime = args.regime.parse()?;
    let inputs = BoundInputs {
        kappa: args.kappa,
        sigma: &sigma,
        n,
        t,
        s: args.s,
        constants: &constants,
        regime,
    };
    let result = bounds::evaluate(key, &inputs)?;
    print_json(out, &result)?;
    Ok(EXIT_OK)
}

fn read_samples(path: &Path) -> Result<Samples> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Samples::read_csv(file)
}

fn parse_direction(text: &str, d: usize) -> Result<Vec<f64>> {
    if let Some(k) = text.strip_prefix('e') {
        let k: usize = k
            .parse()
            .map_err(|_| Error::Config(format!("--v: bad basis vector '{text}'")))?;
        if k == 0 || k > d {
            return Err(Error::Config(format!("--v: e{k} is outside dimension {d}")));
        }
        let mut v = vec![0.0; d];
        v[k - 1] = 1.0;
        return Ok(v);
    }
    let v: Vec<f64> = text
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("--v: '{x}' is not a number")))
        })
        .collect::<Result<_>>()?;
    if v.len() != d {
        return Err(Error::Config(format!(
            "--v has {} entries, data has {d} columns",
            v.len()
        )));
    }
    Ok(v)
}

#[derive(Serialize)]
struct EstimateOutput {
    #[serde(flatten)]
    estimate: estimators::MomentEstimate,
    lambda_source: &'static str,
    n: usize,
}

fn cmd_estimate(args: &EstimateArgs, out: &mut dyn Write) -> Result<i32> {
    let x = read_samples(&args.data)?;
    let v = parse_direction(&args.v, x.dim())?;
    let (cfg, source) = match args.lambda {
        Some(lambda) => (TruncationConfig::new(lambda, args.s, args.t)?, "given"),
        None => {
            let (sigma, source) = match &args.sigma {
                Some(s) => (parse_sigma(s)?, "formula with given sigma"),
                None => (
                    estimators::sample_covariance(&x),
                    "formula with sample covariance",
                ),
            };
            (
                TruncationConfig::prescribed(args.eta, args.s, &sigma, x.n(), args.t)?,
                source,
            )
        }
    };
    let estimate = estimators::truncated_moment_estimate(&x, &v, &cfg)?;
    print_json(
        out,
        &EstimateOutput {
            estimate,
            lambda_source: source,
            n: x.n(),
        },
    )?;
    Ok(EXIT_OK)
}

fn cmd_tensornorm(cli: &Cli, args: &TensornormArgs, out: &mut dyn Write) -> Result<i32> {
    let x = read_samples(&args.data)?;
    let centering = match &args.sigma {
        Some(text) => {
            let spec: CovarianceSpec = text
                .parse()
                .map_err(|e: Error| Error::Config(format!("--sigma: {e}")))?;
            if spec.dim() != x.dim() {
                return Err(Error::Config(format!(
                    "--sigma has dimension {}, data has {}",
                    spec.dim(),
                    x.dim()
                )));
            }
            let core: Core = args
                .family
                .parse()
                .map_err(|e: Error| Error::Config(format!("--family: {e}")))?;
            Centering::Moments(MomentOracle::new(
                &DistributionFamily::new(core, spec),
                args.s,
            )?)
        }
        None => Centering::Zero,
    };
    let form = EmpiricalTensorForm::new(x, args.s, centering)?;
    let pm = PowerMethodConfig {
        restarts: args.restarts,
        seed: cli.seed.unwrap_or(0),
        ..PowerMethodConfig::default()
    };
    let result = tensor::operator_norm_sup(&form, &pm)?;
    print_json(out, &result)?;
    Ok(EXIT_OK)
}

fn cmd_duality(cli: &Cli, args: &DualityArgs, out: &mut dyn Write) -> Result<i32> {
    let mut rng = SeedSpec::new(cli.seed.unwrap_or(0), 0).rng();
    let summary = variational::duality_check(args.size, args.reps, &mut rng)?;
    print_json(out, &summary)?;
    Ok(EXIT_OK)
}
