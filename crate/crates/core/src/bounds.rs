//! Closed-form deviation bounds.
//!
//! Every calculator returns the numeric value even when its sample-size or
//! parameter condition fails; `valid` records whether the condition holds.
//! Constants that have no explicit value are supplied by the caller and echoed
//! in `constants_used`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: f64,
    pub valid: bool,
    /// The violated condition, if any.
    pub condition_text: Option<String>,
    pub constants_used: BTreeMap<String, f64>,
}

impl BoundResult {
    fn new(value: f64, violated: Option<String>, constants: &[(&str, f64)]) -> Self {
        Self {
            value,
            valid: violated.is_none(),
            condition_text: violated,
            constants_used: constants.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

/// Trace, operator norm and effective rank of a covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSummary {
    pub trace: f64,
    pub norm: f64,
    pub rank: f64,
}

impl SigmaSummary {
    pub fn of(sigma: &SymMatrix) -> Result<Self> {
        let rank = linalg::effective_rank(sigma)?;
        let norm = linalg::psd_norm(sigma)?;
        Ok(Self {
            trace: sigma.trace(),
            norm,
            rank,
        })
    }
}

fn check_n(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("sample size must be positive".into()));
    }
    Ok(n as f64)
}

fn check_t(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!(
            "confidence parameter t must be nonnegative, got {t}"
        )));
    }
    Ok(())
}

fn kappa_condition(kappa: f64) -> Option<String> {
    (kappa < 1.0).then(|| format!("kappa >= 1 fails: kappa = {kappa}"))
}

/// `20κ²‖Σ‖√((4r + t)/n)`, valid when `n ≥ 4r + t`.
pub fn thm1_bound(kappa: f64, sigma: &SymMatrix, n: usize, t: f64) -> Result<BoundResult> {
    check_t(t)?;
    let nf = check_n(n)?;
    let sg = SigmaSummary::of(sigma)?;
    let need = 4.0 * sg.rank + t;
    let value = 20.0 * kappa * kappa * sg.norm * (need / nf).sqrt();
    let violated = if nf < need {
        Some(format!("n >= 4r(Sigma) + t fails: {n} < {need:.6}"))
    } else {
        kappa_condition(kappa)
    };
    Ok(BoundResult::new(value, violated, &[("kappa", kappa)]))
}

/// `52κ²√((d + t)/n)` for isotropic vectors, valid when `n ≥ d + t`.
pub fn prop1_bound(kappa: f64, d: usize, n: usize, t: f64) -> Result<BoundResult> {
    check_t(t)?;
    let nf = check_n(n)?;
    let need = d as f64 + t;
    let value = 52.0 * kappa * kappa * (need / nf).sqrt();
    let violated = if nf < need {
        Some(format!("n >= d + t fails: {n} < {need}"))
    } else {
        kappa_condition(kappa)
    };
    Ok(BoundResult::new(value, violated, &[("kappa", kappa)]))
}

/// High-probability bounds on `‖X‖²` for a sub-Gaussian vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBound {
    /// `36κ²(tr/2 + √(2t·tr·‖Σ‖) + t‖Σ‖)`
    pub exact: f64,
    /// `36κ²(tr + 2t‖Σ‖)`
    pub relaxed: f64,
}

pub fn norm_bound_subgaussian(kappa: f64, sigma: &SymMatrix, t: f64) -> Result<NormBound> {
    check_t(t)?;
    let sg = SigmaSummary::of(sigma)?;
    let k = 36.0 * kappa * kappa;
    Ok(NormBound {
        exact: k * (sg.trace / 2.0 + (2.0 * t * sg.trace * sg.norm).sqrt() + t * sg.norm),
        relaxed: k * (sg.trace + 2.0 * t * sg.norm),
    })
}

/// `tr(Σ) + 2√(2t·tr(Σ)‖Σ‖) + 2t‖Σ‖`, the Gaussian squared-norm bound.
pub fn norm_bound_gaussian_exact(sigma: &SymMatrix, t: f64) -> Result<f64> {
    check_t(t)?;
    let sg = SigmaSummary::of(sigma)?;
    Ok(sg.trace + 2.0 * (2.0 * t * sg.trace * sg.norm).sqrt() + 2.0 * t * sg.norm)
}

/// `8κ(√(t·tr(Σ)) + t√‖Σ‖)` on `‖X‖`, valid for `t ≥ 1`.
pub fn subexp_norm_bound(kappa: f64, sigma: &SymMatrix, t: f64) -> Result<BoundResult> {
    check_t(t)?;
    let sg = SigmaSummary::of(sigma)?;
    let value = 8.0 * kappa * ((t * sg.trace).sqrt() + t * sg.norm.sqrt());
    let violated = (t < 1.0).then(|| format!("t >= 1 fails: t = {t}"));
    Ok(BoundResult::new(value, violated, &[("kappa", kappa)]))
}

/// `7κ²‖Σ‖√((r + t)/n)` on the lower deviation, valid for `t > log 2`.
pub fn lowertail_bound(kappa: f64, sigma: &SymMatrix, n: usize, t: f64) -> Result<BoundResult> {
    check_t(t)?;
    let nf = check_n(n)?;
    let sg = SigmaSummary::of(sigma)?;
    let value = 7.0 * kappa * kappa * sg.norm * ((sg.rank + t) / nf).sqrt();
    let violated = (t <= std::f64::consts::LN_2).then(|| format!("t > log 2 fails: t = {t}"));
    Ok(BoundResult::new(value, violated, &[("kappa", kappa)]))
}

/// Sample-size regime for the moment-tensor bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Thm2Regime {
    /// `n ≥ c_s r^{s-1}`
    #[default]
    General,
    /// `n ≥ c_s r^{s+1}`, the sharper-tail sub-Gaussian regime.
    SubGaussianTail,
}

impl FromStr for Thm2Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Self::General),
            "sub-gaussian-tail" => Ok(Self::SubGaussianTail),
            _ => Err(Error::Config(format!(
                "unknown regime '{s}', expected general or sub-gaussian-tail"
            ))),
        }
    }
}

pub fn thm2_sample_condition(
    c_s: f64,
    s: u32,
    sigma: &SymMatrix,
    n: usize,
    regime: Thm2Regime,
) -> Result<bool> {
    let r = SigmaSummary::of(sigma)?.rank;
    Ok(n as f64 >= thm2_required_n(c_s, s, r, regime))
}

fn thm2_required_n(c_s: f64, s: u32, r: f64, regime: Thm2Regime) -> f64 {
    let power = match regime {
        Thm2Regime::General => f64::from(s) - 1.0,
        Thm2Regime::SubGaussianTail => f64::from(s) + 1.0,
    };
    c_s * r.powf(power)
}

/// `C‖Σ‖^{s/2}√(r/n)`, valid under the regime's sample-size condition.
pub fn thm2_bound(
    c: f64,
    c_s: f64,
    s: u32,
    sigma: &SymMatrix,
    n: usize,
    regime: Thm2Regime,
) -> Result<BoundResult> {
    let nf = check_n(n)?;
    let sg = SigmaSummary::of(sigma)?;
    let value = c * sg.norm.powf(f64::from(s) / 2.0) * (sg.rank / nf).sqrt();
    let need = thm2_required_n(c_s, s, sg.rank, regime);
    let violated = (nf < need).then(|| {
        let power = if regime == Thm2Regime::General {
            "s-1"
        } else {
            "s+1"
        };
        format!("n >= c_s r(Sigma)^({power}) fails: {n} < {need:.6}")
    });
    Ok(BoundResult::new(value, violated, &[("C", c), ("c_s", c_s)]))
}

/// `c₂‖Σ‖√(r/n)`, valid when `n ≥ c₃ r`.
pub fn thm3_bound(c2: f64, c3: f64, sigma: &SymMatrix, n: usize) -> Result<BoundResult> {
    let nf = check_n(n)?;
    let sg = SigmaSummary::of(sigma)?;
    let value = c2 * sg.norm * (sg.rank / nf).sqrt();
    let need = c3 * sg.rank;
    let violated = (nf < need).then(|| format!("n >= c3 r(Sigma) fails: {n} < {need:.6}"));
    Ok(BoundResult::new(value, violated, &[("c2", c2), ("c3", c3)]))
}

/// `c₂κ²‖Σ‖(√((r + t)/n) + t²/n)`, the log-concave tail form.
pub fn logconcave_tail_bound(
    c2: f64,
    kappa: f64,
    sigma: &SymMatrix,
    n: usize,
    t: f64,
) -> Result<BoundResult> {
    check_t(t)?;
    let nf = check_n(n)?;
    let sg = SigmaSummary::of(sigma)?;
    let value = c2 * kappa * kappa * sg.norm * (((sg.rank + t) / nf).sqrt() + t * t / nf);
    Ok(BoundResult::new(
        value,
        None,
        &[("c2", c2), ("kappa", kappa)],
    ))
}

/// `√tr(Σ)`, bounding `E sup_{v ∈ Σ^{1/2} S^{d-1}} ⟨Z, v⟩`.
pub fn ellipsoid_gaussian_complexity(sigma: &SymMatrix) -> Result<f64> {
    SigmaSummary::of(sigma)?;
    Ok(sigma.trace().sqrt())
}

/// `C_s η^s ‖Σ‖^{s/2} √((r + t)/n)` for the truncated moment estimator.
pub fn truncation_bound(
    c_s: f64,
    eta: f64,
    s: u32,
    sigma: &SymMatrix,
    n: usize,
    t: f64,
) -> Result<BoundResult> {
    check_t(t)?;
    let nf = check_n(n)?;
    let sg = SigmaSummary::of(sigma)?;
    let sf = f64::from(s);
    let value = c_s * eta.powf(sf) * sg.norm.powf(sf / 2.0) * ((sg.rank + t) / nf).sqrt();
    let violated = if t <= 0.0 {
        Some(format!("t > 0 fails: t = {t}"))
    } else {
        (eta < 1.0).then(|| format!("eta >= 1 fails: eta = {eta}"))
    };
    Ok(BoundResult::new(
        value,
        violated,
        &[("C_s", c_s), ("eta", eta)],
    ))
}

/// Bound selector used by experiment configs and the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKey {
    Thm1,
    Prop1,
    LemmaNormSubg,
    LemmaNormGaussExact,
    PropSubexpNorm,
    PropLowertail,
    Thm2,
    Thm3,
    CorLogconcave,
    Ellipsoid,
    LemmaTruncation,
}

impl BoundKey {
    pub const ALL: [BoundKey; 11] = [
        BoundKey::Thm1,
        BoundKey::Prop1,
        BoundKey::LemmaNormSubg,
        BoundKey::LemmaNormGaussExact,
        BoundKey::PropSubexpNorm,
        BoundKey::PropLowertail,
        BoundKey::Thm2,
        BoundKey::Thm3,
        BoundKey::CorLogconcave,
        BoundKey::Ellipsoid,
        BoundKey::LemmaTruncation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundKey::Thm1 => "thm1",
            BoundKey::Prop1 => "prop1",
            BoundKey::LemmaNormSubg => "lemma-norm-subg",
            BoundKey::LemmaNormGaussExact => "lemma-norm-gauss-exact",
            BoundKey::PropSubexpNorm => "prop-subexp-norm",
            BoundKey::PropLowertail => "prop-lowertail",
            BoundKey::Thm2 => "thm2",
            BoundKey::Thm3 => "thm3",
            BoundKey::CorLogconcave => "cor-logconcave",
            BoundKey::Ellipsoid => "ellipsoid",
            BoundKey::LemmaTruncation => "lemma-truncation",
        }
    }

    /// Whether the bound involves a moment-equivalence constant κ.
    pub fn uses_kappa(self) -> bool {
        matches!(
            self,
            BoundKey::Thm1
                | BoundKey::Prop1
                | BoundKey::LemmaNormSubg
                | BoundKey::PropSubexpNorm
                | BoundKey::PropLowertail
                | BoundKey::CorLogconcave
        )
    }

    pub fn valid_keys() -> String {
        Self::ALL
            .iter()
            .map(|k| k.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for BoundKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundKey {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown bound '{s}'; valid keys: {}",
                    Self::valid_keys()
                ))
            })
    }
}

/// Inputs for evaluating a bound by key. Unused fields are ignored.
#[derive(Debug, Clone)]
pub struct BoundInputs<'a> {
    pub kappa: f64,
    pub sigma: &'a SymMatrix,
    pub n: usize,
    pub t: f64,
    pub s: u32,
    /// Overrides for `C`, `c_s`, `c2`, `c3`, `C_s`, `eta`; missing ones default to 1.
    pub constants: &'a BTreeMap<String, f64>,
    pub regime: Thm2Regime,
}

impl BoundInputs<'_> {
    fn constant(&self, name: &str) -> f64 {
        self.constants.get(name).copied().unwrap_or(1.0)
    }
}

pub fn evaluate(key: BoundKey, p: &BoundInputs<'_>) -> Result<BoundResult> {
    let kappa = p.kappa;
    match key {
        BoundKey::Thm1 => thm1_bound(kappa, p.sigma, p.n, p.t),
        BoundKey::Prop1 => {
            let mut r = prop1_bound(kappa, p.sigma.dim(), p.n, p.t)?;
            if r.valid && *p.sigma != SymMatrix::identity(p.sigma.dim()) {
                r.valid = false;
                r.condition_text = Some("isotropy fails: Sigma is not the identity".into());
            }
            Ok(r)
        }
        BoundKey::LemmaNormSubg => {
            let nb = norm_bound_subgaussian(kappa, p.sigma, p.t)?;
            let mut r = BoundResult::new(nb.exact, kappa_condition(kappa), &[("kappa", kappa)]);
            r.constants_used.insert("relaxed_value".into(), nb.relaxed);
            Ok(r)
        }
        BoundKey::LemmaNormGaussExact => Ok(BoundResult::new(
            norm_bound_gaussian_exact(p.sigma, p.t)?,
            None,
            &[],
        )),
        BoundKey::PropSubexpNorm => subexp_norm_bound(kappa, p.sigma, p.t),
        BoundKey::PropLowertail => lowertail_bound(kappa, p.sigma, p.n, p.t),
        BoundKey::Thm2 => thm2_bound(
            p.constant("C"),
            p.constant("c_s"),
            p.s,
            p.sigma,
            p.n,
            p.regime,
        ),
        BoundKey::Thm3 => thm3_bound(p.constant("c2"), p.constant("c3"), p.sigma, p.n),
        BoundKey::CorLogconcave => {
            logconcave_tail_bound(p.constant("c2"), kappa, p.sigma, p.n, p.t)
        }
        BoundKey::Ellipsoid => Ok(BoundResult::new(
            ellipsoid_gaussian_complexity(p.sigma)?,
            None,
            &[],
        )),
        BoundKey::LemmaTruncation => {
            truncation_bound(p.constant("C_s"), p.constant("eta"), p.s, p.sigma, p.n, p.t)
        }
    }
}
