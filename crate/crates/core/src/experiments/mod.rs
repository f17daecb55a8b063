//! Seeded Monte Carlo harness: simulate a statistic many times, compare it
//! with a bound, and report the violation rate.
//!
//! Trial `i` draws its samples from stream `i` of the master seed, so results
//! do not depend on how trials are scheduled across threads.

mod sweep;

pub use sweep::{
    load_config, parse_config, sweep, write_plot_script, write_sweep_csv, ConfigFile, Grid,
    GridPoint, SweepOutcome,
};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundInputs, BoundKey, Thm2Regime};
use crate::distributions::{self, DistributionFamily, MomentOracle, Sampler, SeedSpec};
use crate::error::{Error, Result};
use crate::estimators::{self, EtaRule, TruncationConfig};
use crate::linalg::{self, Samples, SymMatrix};
use crate::tensor::{self, Centering, EmpiricalTensorForm, PowerMethodConfig};

/// Report schema version.
pub const SCHEMA_VERSION: &str = "1";

/// Number of fixed directions averaged by `trunc-moment-error`.
pub const TRUNC_DIRECTIONS: usize = 16;

// Stream reserved for the random probe directions.
const DIRECTION_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    /// `‖S - Σ‖`
    CovDeviation,
    /// `λ_max(Σ - S)`
    CovLowerDeviation,
    /// Mean absolute error of the truncated moment estimator over fixed directions.
    TruncMomentError,
    /// Power-method lower bound on the operator norm of the centered moment tensor.
    TensorDeviation,
    /// `‖X‖` of a single draw.
    Norm,
    /// `‖X‖²` of a single draw.
    NormSquared,
    /// `‖X‖` of a single draw from a sub-exponential family.
    SubexpNorm,
}

impl Statistic {
    pub const ALL: [Statistic; 7] = [
        Statistic::CovDeviation,
        Statistic::CovLowerDeviation,
        Statistic::TruncMomentError,
        Statistic::TensorDeviation,
        Statistic::Norm,
        Statistic::NormSquared,
        Statistic::SubexpNorm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::CovDeviation => "cov-deviation",
            Statistic::CovLowerDeviation => "cov-lower-deviation",
            Statistic::TruncMomentError => "trunc-moment-error",
            Statistic::TensorDeviation => "tensor-deviation",
            Statistic::Norm => "norm",
            Statistic::NormSquared => "norm-squared",
            Statistic::SubexpNorm => "subexp-norm",
        }
    }

    /// Bounds this statistic may be compared with.
    pub fn compatible_bounds(self) -> &'static [BoundKey] {
        use BoundKey::*;
        match self {
            Statistic::CovDeviation => &[Thm1, Prop1, Thm3, CorLogconcave],
            Statistic::CovLowerDeviation => &[PropLowertail, Thm1],
            Statistic::TruncMomentError => &[LemmaTruncation],
            Statistic::TensorDeviation => &[Thm2],
            Statistic::Norm => &[Ellipsoid, PropSubexpNorm],
            Statistic::NormSquared => &[LemmaNormSubg, LemmaNormGaussExact],
            Statistic::SubexpNorm => &[PropSubexpNorm],
        }
    }

    /// Whether one trial uses a single draw rather than `n` samples.
    pub fn single_draw(self) -> bool {
        matches!(
            self,
            Statistic::Norm | Statistic::NormSquared | Statistic::SubexpNorm
        )
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Statistic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let keys: Vec<_> = Self::ALL.iter().map(|k| k.as_str()).collect();
                Error::Config(format!(
                    "unknown statistic '{s}'; valid keys: {}",
                    keys.join(", ")
                ))
            })
    }
}

fn default_s() -> u32 {
    2
}

fn default_restarts() -> usize {
    32
}

/// One experiment, as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: DistributionFamily,
    /// Samples per trial; ignored by single-draw statistics.
    pub n: usize,
    #[serde(default = "default_s")]
    pub s: u32,
    pub t: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub statistic: Statistic,
    pub bound: BoundKey,
    /// Overrides for `kappa`, `C`, `c_s`, `c2`, `c3`, `C_s`, `eta`.
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    #[serde(default = "default_restarts")]
    pub tensor_restarts: usize,
    /// Rule for η in the truncation level; chosen from the family when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_rule: Option<EtaRule>,
    #[serde(default)]
    pub regime: Thm2Regime,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials: must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n: must be at least 1".into()));
        }
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(Error::Config(format!(
                "t: must be finite and nonnegative, got {}",
                self.t
            )));
        }
        if self.s < 2 && matches!(self.statistic, Statistic::TensorDeviation) {
            return Err(Error::Config("s: tensor-deviation needs s >= 2".into()));
        }
        if self.s == 0 {
            return Err(Error::Config("s: must be at least 1".into()));
        }
        if self.tensor_restarts == 0 {
            return Err(Error::Config("tensor_restarts: must be at least 1".into()));
        }
        if !self.statistic.compatible_bounds().contains(&self.bound) {
            let keys: Vec<_> = self
                .statistic
                .compatible_bounds()
                .iter()
                .map(|k| k.as_str())
                .collect();
            return Err(Error::Config(format!(
                "bound: '{}' cannot be compared with statistic '{}'; compatible bounds: {}",
                self.bound,
                self.statistic,
                keys.join(", ")
            )));
        }
        for (k, v) in &self.constants {
            if !v.is_finite() {
                return Err(Error::Config(format!("constants.{k}: must be finite")));
            }
        }
        self.family
            .core
            .validate()
            .map_err(|e| Error::Config(format!("family: {e}")))?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// κ for the chosen bound: an explicit `kappa` constant, else the family's
    /// ψ₂, ψ₁ or L₄–L₂ constant as the bound requires.
    pub fn kappa(&self) -> Result<f64> {
        if let Some(k) = self.constants.get("kappa") {
            return Ok(*k);
        }
        let family = &self.family;
        let kappa = match self.bound {
            BoundKey::Thm1 | BoundKey::Prop1 | BoundKey::LemmaNormSubg => {
                distributions::kappa_psi2(family)
            }
            BoundKey::PropSubexpNorm | BoundKey::CorLogconcave => distributions::kappa_psi1(family),
            BoundKey::PropLowertail => distributions::kappa_l4(family),
            _ => Ok(1.0),
        };
        kappa.map_err(|e| Error::Config(format!("constants.kappa: {e}; supply it explicitly")))
    }

    fn eta_rule(&self) -> EtaRule {
        self.eta_rule
            .unwrap_or_else(|| EtaRule::default_for(&self.family))
    }

    /// η for the truncation level and its bound; `constants.eta` wins over the rule.
    fn eta(&self) -> Result<f64> {
        match self.constants.get("eta") {
            Some(&eta) => Ok(eta),
            None => self.eta_rule().resolve(&self.family, self.s),
        }
    }

    /// Nominal failure probability of the bound.
    pub fn failure_probability(&self) -> f64 {
        let p = (-self.t).exp();
        match self.bound {
            BoundKey::PropLowertail | BoundKey::LemmaTruncation => (2.0 * p).min(1.0),
            _ => p,
        }
    }
}

/// Largest violation rate consistent with failure probability `p` over
/// `trials` trials, with three binomial standard errors of slack.
pub fn violation_tolerance(p: f64, trials: usize) -> f64 {
    p + 3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

/// Fields that vary between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub wall_time_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: String,
    pub config: ExperimentConfig,
    pub per_trial: Vec<f64>,
    pub bound_value: f64,
    pub valid: bool,
    pub condition_text: Option<String>,
    pub constants_used: BTreeMap<String, f64>,
    pub violations: usize,
    pub violation_rate: f64,
    /// `p + 3√(p(1-p)/trials)` for the bound's failure probability `p`.
    pub violation_tolerance: f64,
    pub within_tolerance: bool,
    pub quantile_level: f64,
    pub empirical_quantile: f64,
    pub statistic_median: f64,
    pub statistic_mean: f64,
    pub annotations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<RunMetadata>,
}

impl ExperimentReport {
    /// The report with run metadata removed, for reproducibility checks.
    pub fn without_metadata(&self) -> Self {
        Self {
            metadata: None,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    /// One row per trial: `trial,statistic,violated`.
    pub fn write_per_trial_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["trial", "statistic", "violated"])
            .map_err(io)?;
        for (i, x) in self.per_trial.iter().enumerate() {
            let violated = (*x > self.bound_value) as u8;
            w.write_record([i.to_string(), x.to_string(), violated.to_string()])
                .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Quantile by the nearest-rank rule.
pub fn quantile(values: &[f64], level: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (level * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[m]
    } else {
        0.5 * (sorted[m - 1] + sorted[m])
    }
}

// Everything a trial needs that does not depend on the trial index.
struct TrialContext {
    cfg: ExperimentConfig,
    sampler: Sampler,
    sigma: SymMatrix,
    truncation: Option<(TruncationConfig, Vec<(Vec<f64>, f64)>)>,
    oracle: Option<MomentOracle>,
}

impl TrialContext {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let sampler = cfg.family.sampler()?;
        let sigma = sampler.sigma().clone();
        let truncation = match cfg.statistic {
            Statistic::TruncMomentError => {
                let eta = cfg.eta()?;
                let tc = TruncationConfig::prescribed(eta, cfg.s, &sigma, cfg.n, cfg.t)?;
                let oracle = MomentOracle::from_sampler(&sampler, cfg.s)?;
                let dirs = probe_directions(&sigma, cfg.master_seed)?
                    .into_iter()
                    .map(|v| {
                        let m = oracle.value(&v);
                        (v, m)
                    })
                    .collect();
                Some((tc, dirs))
            }
            _ => None,
        };
        let oracle = match cfg.statistic {
            Statistic::TensorDeviation => Some(MomentOracle::from_sampler(&sampler, cfg.s)?),
            _ => None,
        };
        Ok(Self {
            cfg: cfg.clone(),
            sampler,
            sigma,
            truncation,
            oracle,
        })
    }

    fn samples(&self, trial: usize) -> Samples {
        let n = if self.cfg.statistic.single_draw() {
            1
        } else {
            self.cfg.n
        };
        self.sampler
            .sample(n, SeedSpec::new(self.cfg.master_seed, trial as u64))
    }

    fn statistic(&self, trial: usize) -> Result<f64> {
        let x = self.samples(trial);
        match self.cfg.statistic {
            Statistic::CovDeviation => estimators::covariance_deviation(&x, &self.sigma),
            Statistic::CovLowerDeviation => estimators::lower_deviation(&x, &self.sigma),
            Statistic::TruncMomentError => {
                let (tc, dirs) = self.truncation.as_ref().expect("prepared");
                let mut total = 0.0;
                for (v, truth) in dirs {
                    total +=
                        (estimators::truncated_moment_estimate(&x, v, tc)?.estimate - truth).abs();
                }
                Ok(total / dirs.len() as f64)
            }
            Statistic::TensorDeviation => {
                let oracle = self.oracle.clone().expect("prepared");
                let form = EmpiricalTensorForm::new(x, self.cfg.s, Centering::Moments(oracle))?;
                let pm = PowerMethodConfig {
                    restarts: self.cfg.tensor_restarts,
                    seed: distributions::splitmix64(
                        self.cfg.master_seed ^ distributions::splitmix64(trial as u64),
                    ),
                    ..PowerMethodConfig::default()
                };
                Ok(tensor::operator_norm_sup(&form, &pm)?.value)
            }
            Statistic::Norm | Statistic::SubexpNorm => Ok(linalg::norm(x.row(0))),
            Statistic::NormSquared => Ok(linalg::norm(x.row(0)).powi(2)),
        }
    }
}

/// Eigendirections of `Σ` followed by seeded random directions, sixteen in all.
pub fn probe_directions(sigma: &SymMatrix, master_seed: u64) -> Result<Vec<Vec<f64>>> {
    let eig = linalg::sym_eigen(sigma)?;
    let mut dirs: Vec<Vec<f64>> = eig
        .eigenvectors
        .into_iter()
        .take(TRUNC_DIRECTIONS)
        .collect();
    let mut k = 0;
    while dirs.len() < TRUNC_DIRECTIONS {
        let seed = SeedSpec::new(master_seed ^ DIRECTION_STREAM, k);
        dirs.push(tensor::random_unit(sigma.dim(), seed));
        k += 1;
    }
    Ok(dirs)
}

fn bound_for(cfg: &ExperimentConfig, sigma: &SymMatrix) -> Result<bounds::BoundResult> {
    let kappa = if cfg.bound.uses_kappa() {
        cfg.kappa()?
    } else {
        1.0
    };
    let mut constants = cfg.constants.clone();
    if cfg.bound == BoundKey::LemmaTruncation && !constants.contains_key("eta") {
        constants.insert("eta".into(), cfg.eta()?);
    }
    let inputs = BoundInputs {
        kappa,
        sigma,
        n: cfg.n,
        t: cfg.t,
        s: cfg.s,
        constants: &constants,
        regime: cfg.regime,
    };
    let mut result = bounds::evaluate(cfg.bound, &inputs)?;
    if cfg.statistic.single_draw() {
        result.constants_used.insert("n_ignored".into(), 1.0);
    }
    Ok(result)
}

/// Runs on the global thread pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with_threads(cfg, None)
}

/// Runs on a dedicated pool of `threads` workers when given.
pub fn run_experiment_with_threads(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<ExperimentReport> {
    match threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Config(format!("threads: {e}")))?;
            pool.install(|| run_in_current_pool(cfg))
        }
        None => run_in_current_pool(cfg),
    }
}

fn run_in_current_pool(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let ctx = TrialContext::new(cfg)?;
    let bound = bound_for(cfg, &ctx.sigma)?;
    if !bound.valid {
        log::warn!(
            "bound {} outside its regime: {}",
            cfg.bound,
            bound.condition_text.as_deref().unwrap_or("condition fails")
        );
    }
    let per_trial: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| ctx.statistic(i))
        .collect::<Result<_>>()?;

    let mut annotations = Vec::new();
    if cfg.statistic == Statistic::CovLowerDeviation {
        annotations.push(upper_tail_annotation(&ctx, &per_trial)?);
    }
    if cfg.bound == BoundKey::Ellipsoid {
        annotations
            .push("ellipsoid bounds the mean of the statistic; compare statistic_mean".into());
    }

    let violations = per_trial.iter().filter(|x| **x > bound.value).count();
    let violation_rate = violations as f64 / cfg.trials as f64;
    let tolerance = violation_tolerance(cfg.failure_probability(), cfg.trials);
    let quantile_level = 1.0 - (-cfg.t).exp();
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION.into(),
        config: cfg.clone(),
        empirical_quantile: quantile(&per_trial, quantile_level),
        statistic_median: median(&per_trial),
        statistic_mean: per_trial.iter().sum::<f64>() / per_trial.len() as f64,
        per_trial,
        bound_value: bound.value,
        valid: bound.valid,
        condition_text: bound.condition_text,
        constants_used: bound.constants_used,
        violations,
        violation_rate,
        violation_tolerance: tolerance,
        within_tolerance: violation_rate <= tolerance,
        quantile_level,
        annotations,
        metadata: Some(RunMetadata {
            wall_time_seconds: start.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
        }),
    })
}

// Contrasts the lower deviation with the upper one, λ_max(S - Σ), on the same trials.
fn upper_tail_annotation(ctx: &TrialContext, lower: &[f64]) -> Result<String> {
    let upper: Vec<f64> = (0..lower.len())
        .into_par_iter()
        .map(|i| {
            let x = ctx.samples(i);
            linalg::max_eigenvalue(&estimators::sample_covariance(&x).sub(&ctx.sigma)?)
        })
        .collect::<Result<_>>()?;
    let level = 1.0 - (-ctx.cfg.t).exp();
    Ok(format!(
        "upper deviation lambda_max(S - Sigma): median {:.6}, quantile {:.6}; lower deviation: median {:.6}, quantile {:.6}",
        median(&upper),
        quantile(&upper, level),
        median(lower),
        quantile(lower, level)
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Core, CovarianceSpec};

    fn config(statistic: Statistic, bound: BoundKey) -> ExperimentConfig {
        ExperimentConfig {
            family: DistributionFamily::gaussian(CovarianceSpec::Identity { d: 3 }),
            n: 50,
            s: 2,
            t: 2.0,
            trials: 8,
            master_seed: 11,
            statistic,
            bound,
            constants: BTreeMap::new(),
            tensor_restarts: 4,
            eta_rule: None,
            regime: Thm2Regime::General,
        }
    }

    #[test]
    fn incompatible_pairs_are_config_errors() {
        let cfg = config(Statistic::CovLowerDeviation, BoundKey::Ellipsoid);
        let err = run_experiment(&cfg).unwrap_err();
        assert!(
            matches!(err, Error::Config(ref m) if m.contains("prop-lowertail")),
            "{err}"
        );
    }

    #[test]
    fn quantiles() {
        let v = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(median(&v), 3.0);
        assert_eq!(quantile(&v, 0.95), 5.0);
        assert_eq!(quantile(&v, 0.2), 1.0);
        assert_eq!(median(&[1.0, 2.0]), 1.5);
    }

    #[test]
    fn every_statistic_runs() {
        for stat in Statistic::ALL {
            let bound = stat.compatible_bounds()[0];
            let mut cfg = config(stat, bound);
            if stat == Statistic::TensorDeviation {
                cfg.s = 3;
            }
            if stat == Statistic::SubexpNorm {
                cfg.family.core = Core::LaplaceProduct;
            }
            let r = run_experiment(&cfg).unwrap();
            assert_eq!(r.per_trial.len(), cfg.trials);
            assert!(
                r.per_trial.iter().all(|x| x.is_finite() && *x >= 0.0),
                "{stat}"
            );
            assert_eq!(r.violations as f64, r.violation_rate * cfg.trials as f64);
        }
    }

    #[test]
    fn missing_kappa_is_reported() {
        let mut cfg = config(Statistic::CovDeviation, BoundKey::Thm1);
        cfg.family.core = Core::LaplaceProduct;
        let err = run_experiment(&cfg).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("kappa")));
        cfg.constants.insert("kappa".into(), 2.0);
        assert!(run_experiment(&cfg).is_ok());
    }

    #[test]
    fn config_json_names_bad_field() {
        let err = ExperimentConfig::from_json(r#"{"family": {"kind": "gaussian", "sigma": {"kind": "identity", "d": 2}}, "n": 10, "t": 1.0, "trials": 0, "master_seed": 1, "statistic": "cov-deviation", "bound": "thm1"}"#).unwrap_err();
        assert!(err.to_string().contains("trials"));
        let err = ExperimentConfig::from_json(r#"{"n": 10}"#).unwrap_err();
        assert!(err.to_string().contains("family"));
    }
}
