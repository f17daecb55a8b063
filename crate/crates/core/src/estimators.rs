//! Sample covariance, deviation statistics and the truncated moment estimator.
//!
//! The truncated estimator of `E⟨v, X⟩^s` is
//!
//! ```text
//! (1 / (n λ)) Σ_i ψ(λ ⟨v, X_i⟩^s),   ψ(x) = clamp(x, -1, 1)
//! ```
//!
//! with `λ = sqrt((r(Σ) + t) / (n η^{2s} ‖Σ‖^s))`.

use serde::{Deserialize, Serialize};

use crate::distributions::{self, DistributionFamily, MomentOracle};
use crate::error::{Error, Result};
use crate::linalg::{self, Samples, SymMatrix};

/// Tolerance on `‖v‖ - 1` for direction arguments.
pub const UNIT_TOLERANCE: f64 = 1e-10;
/// Directions off by at most this much are renormalized with a warning.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

/// The truncation function: identity on `[-1, 1]`, `sign(x)` outside.
pub fn psi(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Negative part of the truncation function, defined for `x ≤ 0`.
pub fn psi_lower(x: f64) -> Result<f64> {
    if x > 0.0 {
        return Err(Error::Domain(format!(
            "psi_lower is defined for x <= 0, got {x}"
        )));
    }
    Ok(x.max(-1.0))
}

/// Accepts `v` when it is a unit vector, renormalizing tiny deviations.
pub fn check_unit(v: &[f64]) -> Result<Vec<f64>> {
    let len = linalg::norm(v);
    let gap = (len - 1.0).abs();
    if gap <= UNIT_TOLERANCE {
        Ok(v.to_vec())
    } else if gap <= RENORMALIZE_TOLERANCE {
        log::warn!("direction has norm {len}; renormalizing");
        Ok(v.iter().map(|x| x / len).collect())
    } else {
        Err(Error::Domain(format!(
            "direction must be a unit vector, got norm {len}"
        )))
    }
}

/// `(1/n) Σ X_i X_iᵀ`.
pub fn sample_covariance(samples: &Samples) -> SymMatrix {
    let d = samples.dim();
    let mut acc = vec![0.0; d * d];
    for x in samples.rows() {
        for i in 0..d {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let row = &mut acc[i * d..(i + 1) * d];
            for j in i..d {
                row[j] += xi * x[j];
            }
        }
    }
    let n = samples.n() as f64;
    SymMatrix::from_fn(d, |i, j| acc[i * d + j] / n)
}

fn check_dims(samples: &Samples, sigma: &SymMatrix) -> Result<()> {
    if samples.dim() != sigma.dim() {
        return Err(Error::Shape(format!(
            "samples have dimension {} but Sigma is {}x{}",
            samples.dim(),
            sigma.dim(),
            sigma.dim()
        )));
    }
    Ok(())
}

/// `‖(1/n) Σ X_i X_iᵀ - Σ‖`.
pub fn covariance_deviation(samples: &Samples, sigma: &SymMatrix) -> Result<f64> {
    check_dims(samples, sigma)?;
    linalg::operator_norm(&sample_covariance(samples).sub(sigma)?)
}

/// `sup_{‖v‖=1} (vᵀΣv - (1/n) Σ ⟨X_i, v⟩²)`, the lower-tail deviation.
pub fn lower_deviation(samples: &Samples, sigma: &SymMatrix) -> Result<f64> {
    check_dims(samples, sigma)?;
    linalg::max_eigenvalue(&sigma.sub(&sample_covariance(samples))?)
}

/// `λ = sqrt((r(Σ) + t) / (n η^{2s} ‖Σ‖^s))`.
pub fn truncation_level(eta: f64, s: u32, sigma: &SymMatrix, n: usize, t: f64) -> Result<f64> {
    if !(eta > 0.0) || s == 0 || n == 0 || !(t > 0.0) {
        return Err(Error::Domain(format!(
            "truncation level needs eta > 0, s >= 1, n >= 1, t > 0 (eta={eta}, s={s}, n={n}, t={t})"
        )));
    }
    let r = linalg::effective_rank(sigma)?;
    let norm = linalg::psd_norm(sigma)?;
    let s = s as i32;
    Ok(((r + t) / (n as f64 * eta.powi(2 * s) * norm.powi(s))).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    pub lambda: f64,
    pub s: u32,
    pub t: f64,
}

impl TruncationConfig {
    pub fn new(lambda: f64, s: u32, t: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() || s == 0 {
            return Err(Error::Domain(format!(
                "truncation config needs lambda > 0 and s >= 1 (lambda={lambda}, s={s})"
            )));
        }
        Ok(Self { lambda, s, t })
    }

    /// Uses the prescribed truncation level for the given sample size.
    pub fn prescribed(eta: f64, s: u32, sigma: &SymMatrix, n: usize, t: f64) -> Result<Self> {
        Self::new(truncation_level(eta, s, sigma, n, t)?, s, t)
    }
}

/// JSON record emitted for one estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub v: Vec<f64>,
    pub s: u32,
    pub lambda: f64,
    pub estimate: f64,
    /// Fraction of samples with `|λ⟨v, X_i⟩^s| > 1`.
    pub clipped_fraction: f64,
}

/// `(1/(nλ)) Σ ψ(λ⟨v, X_i⟩^s)`.
pub fn truncated_moment_estimate(
    samples: &Samples,
    v: &[f64],
    cfg: &TruncationConfig,
) -> Result<MomentEstimate> {
    if v.len() != samples.dim() {
        return Err(Error::Shape(format!(
            "direction has length {} but samples have dimension {}",
            v.len(),
            samples.dim()
        )));
    }
    let v = check_unit(v)?;
    let lambda = cfg.lambda;
    let mut sum = 0.0;
    let mut clipped = 0usize;
    for p in samples.project(&v) {
        let x = lambda * p.powi(cfg.s as i32);
        if x.abs() > 1.0 {
            clipped += 1;
        }
        sum += psi(x);
    }
    let n = samples.n() as f64;
    Ok(MomentEstimate {
        v,
        s: cfg.s,
        lambda,
        estimate: sum / (n * lambda),
        clipped_fraction: clipped as f64 / n,
    })
}

/// Exact `E⟨X, v⟩^s` for the family.
pub fn true_moment(family: &DistributionFamily, v: &[f64], s: u32) -> Result<f64> {
    let v = check_unit(v)?;
    if v.len() != family.dim() {
        return Err(Error::Shape(
            "direction and family dimensions differ".into(),
        ));
    }
    Ok(MomentOracle::new(family, s)?.value(&v))
}

/// Which moment-equivalence constant η feeds the truncation level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum EtaRule {
    /// The family's exact coordinate constant `(E|Z_1|^{2s})^{1/(2s)}`.
    Exact,
    /// `3κ√(2s)` from the ψ₂ constant.
    SubGaussian,
    /// `4κs` from the ψ₁ constant.
    LogConcave,
    Fixed {
        value: f64,
    },
}

impl EtaRule {
    /// Default rule for a family: sub-Gaussian, then log-concave, then exact.
    pub fn default_for(family: &DistributionFamily) -> Self {
        if family.core.is_sub_gaussian() && distributions::kappa_psi2(family).is_ok() {
            Self::SubGaussian
        } else if family.core.is_log_concave() {
            Self::LogConcave
        } else {
            Self::Exact
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::SubGaussian => "sub-gaussian",
            Self::LogConcave => "log-concave",
            Self::Fixed { .. } => "fixed",
        }
    }

    pub fn resolve(&self, family: &DistributionFamily, s: u32) -> Result<f64> {
        Ok(match *self {
            Self::Exact => distributions::eta(family, s)?,
            Self::SubGaussian => 3.0 * distributions::kappa_psi2(family)? * f64::from(2 * s).sqrt(),
            Self::LogConcave => 4.0 * distributions::kappa_psi1(family)? * f64::from(s),
            Self::Fixed { value } => value,
        })
    }
}
