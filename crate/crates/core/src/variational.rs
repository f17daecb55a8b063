//! Entropy and moment-generating-function duality on finite probability spaces.
//!
//! For a prior `μ` and a function `g` on a finite space,
//! `log E_μ e^g = sup_{ρ ≪ μ} (E_ρ g - KL(ρ, μ))`, attained by the Gibbs measure
//! `ρ ∝ μ e^g`. On finite spaces every quantity is an exact finite sum.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A probability vector over the points `0..k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteSpace {
    weights: Vec<f64>,
}

impl DiscreteSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain(
                "a probability space needs at least one point".into(),
            ));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::Domain(format!(
                "weights must be nonnegative and finite, got {w}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Domain(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![1.0 / k as f64; k])
    }

    /// Normalizes nonnegative masses into a probability vector.
    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Domain(
                "masses must have a positive finite total".into(),
            ));
        }
        Self::new(masses.iter().map(|m| m / total).collect())
    }

    /// Random weights from normalized exponential draws.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<Self> {
        let masses: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        Self::from_masses(&masses)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn expectation(&self, g: &[f64]) -> f64 {
        self.weights.iter().zip(g).map(|(w, x)| w * x).sum()
    }
}

impl TryFrom<Vec<f64>> for DiscreteSpace {
    type Error = Error;
    fn try_from(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights)
    }
}

impl From<DiscreteSpace> for Vec<f64> {
    fn from(space: DiscreteSpace) -> Self {
        space.weights
    }
}

/// A prior `μ` and a posterior `ρ ≪ μ` on the same points.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasurePair {
    mu: DiscreteSpace,
    rho: DiscreteSpace,
}

impl DiscreteMeasurePair {
    pub fn new(mu: DiscreteSpace, rho: DiscreteSpace) -> Result<Self> {
        if mu.len() != rho.len() {
            return Err(Error::Shape(format!(
                "prior has {} points, posterior {}",
                mu.len(),
                rho.len()
            )));
        }
        if let Some(index) = (0..mu.len()).find(|&i| rho.weights[i] > 0.0 && mu.weights[i] == 0.0) {
            return Err(Error::NotAbsolutelyContinuous {
                index,
                rho: rho.weights[index],
            });
        }
        Ok(Self { mu, rho })
    }

    pub fn mu(&self) -> &DiscreteSpace {
        &self.mu
    }

    pub fn rho(&self) -> &DiscreteSpace {
        &self.rho
    }
}

/// `Σ ρ_i log(ρ_i / μ_i)` with `0 log 0 = 0`.
pub fn kl_divergence(pair: &DiscreteMeasurePair) -> f64 {
    pair.rho
        .weights
        .iter()
        .zip(&pair.mu.weights)
        .filter(|(r, _)| **r > 0.0)
        .map(|(r, m)| r * (r / m).ln())
        .sum::<f64>()
        .max(0.0)
}

fn check_len(mu: &DiscreteSpace, g: &[f64]) -> Result<()> {
    if g.len() != mu.len() {
        return Err(Error::Shape(format!(
            "g has {} values for {} points",
            g.len(),
            mu.len()
        )));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("g must be finite".into()));
    }
    Ok(())
}

/// `log Σ μ_i e^{g_i}`, shifted by the largest `g_i` on the support.
pub fn log_mgf(mu: &DiscreteSpace, g: &[f64]) -> Result<f64> {
    check_len(mu, g)?;
    let support = || mu.weights.iter().zip(g).filter(|(w, _)| **w > 0.0);
    let shift = support().map(|(_, x)| *x).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = support().map(|(w, x)| w * (x - shift).exp()).sum();
    Ok(shift + sum.ln())
}

/// The Gibbs measure `ρ_i ∝ μ_i e^{g_i}`.
pub fn gibbs_posterior(mu: &DiscreteSpace, g: &[f64]) -> Result<DiscreteSpace> {
    let z = log_mgf(mu, g)?;
    let weights: Vec<f64> = mu
        .weights
        .iter()
        .zip(g)
        .map(|(w, x)| if *w > 0.0 { w * (x - z).exp() } else { 0.0 })
        .collect();
    DiscreteSpace::from_masses(&weights)
}

/// `log E_μ e^g - (E_ρ g - KL(ρ, μ))`; nonnegative, zero at the Gibbs measure.
pub fn duality_gap(mu: &DiscreteSpace, g: &[f64], rho: &DiscreteSpace) -> Result<f64> {
    let pair = DiscreteMeasurePair::new(mu.clone(), rho.clone())?;
    let lhs = log_mgf(mu, g)?;
    Ok(lhs - (rho.expectation(g) - kl_divergence(&pair)))
}

/// A finite observation model: `X` takes value `x` with probability `p_x`,
/// and `f(x, θ)` is tabulated for every `x` and `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteModel {
    x_dist: DiscreteSpace,
    /// `f[x][θ]`
    f: Vec<Vec<f64>>,
    log_mgf: Vec<f64>,
}

impl FiniteModel {
    pub fn new(x_dist: DiscreteSpace, f: Vec<Vec<f64>>) -> Result<Self> {
        if f.len() != x_dist.len() || f.is_empty() {
            return Err(Error::Shape("f needs one row per value of X".into()));
        }
        let k = f[0].len();
        if k == 0 || f.iter().any(|row| row.len() != k) {
            return Err(Error::Shape(
                "f rows must have equal, positive length".into(),
            ));
        }
        let log_mgf = (0..k)
            .map(|j| log_mgf(&x_dist, &f.iter().map(|row| row[j]).collect::<Vec<_>>()))
            .collect::<Result<_>>()?;
        Ok(Self { x_dist, f, log_mgf })
    }

    pub fn parameters(&self) -> usize {
        self.log_mgf.len()
    }

    /// Exact `log E_X e^{f(X, θ)}` per parameter.
    pub fn log_mgf(&self) -> &[f64] {
        &self.log_mgf
    }

    /// Draws `n` indices of `X` by inversion.
    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        let last = self.x_dist.len() - 1;
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                self.x_dist
                    .weights
                    .iter()
                    .position(|w| {
                        acc += w;
                        u < acc
                    })
                    .unwrap_or(last)
            })
            .collect()
    }

    fn centered_sum(&self, draws: &[usize]) -> Vec<f64> {
        let n = draws.len() as f64;
        (0..self.parameters())
            .map(|j| draws.iter().map(|&x| self.f[x][j]).sum::<f64>() - n * self.log_mgf[j])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub holds: bool,
    /// `(1/n) Σ_i E_ρ f(X_i, θ)`
    pub lhs: f64,
    /// `E_ρ log E_X e^{f(X, θ)} + (KL(ρ, μ) + t)/n`
    pub rhs: f64,
    pub slack: f64,
}

/// Evaluates both sides of the change-of-measure inequality for one posterior.
pub fn pacbayes_certificate(
    model: &FiniteModel,
    draws: &[usize],
    mu: &DiscreteSpace,
    rho: &DiscreteSpace,
    t: f64,
) -> Result<Certificate> {
    if draws.is_empty() {
        return Err(Error::Domain("at least one draw is required".into()));
    }
    if mu.len() != model.parameters() {
        return Err(Error::Shape(
            "prior and model disagree on the parameter count".into(),
        ));
    }
    let pair = DiscreteMeasurePair::new(mu.clone(), rho.clone())?;
    let n = draws.len() as f64;
    let mean_f: Vec<f64> = (0..model.parameters())
        .map(|j| draws.iter().map(|&x| model.f[x][j]).sum::<f64>() / n)
        .collect();
    let lhs = rho.expectation(&mean_f);
    let rhs = rho.expectation(&model.log_mgf) + (kl_divergence(&pair) + t) / n;
    Ok(Certificate {
        holds: lhs <= rhs,
        lhs,
        rhs,
        slack: rhs - lhs,
    })
}

/// Smallest slack over all posteriors, `(t - log E_μ exp(Σ_i f(X_i, θ) - nΛ(θ)))/n`
/// with `Λ(θ) = log E_X e^{f(X, θ)}`; the certificate holds for every `ρ` iff
/// this is nonnegative.
pub fn pacbayes_uniform_slack(
    model: &FiniteModel,
    draws: &[usize],
    mu: &DiscreteSpace,
    t: f64,
) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::Domain("at least one draw is required".into()));
    }
    let worst = log_mgf(mu, &model.centered_sum(draws))?;
    Ok((t - worst) / draws.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualitySummary {
    pub size: usize,
    pub reps: usize,
    pub max_gibbs_gap: f64,
    pub min_random_gap: f64,
}

/// Draws `reps` random `(μ, g, ρ)` triples on a space of `size` points and
/// records the largest `|gap|` at the Gibbs measure and the smallest gap at `ρ`.
pub fn duality_check<R: Rng + ?Sized>(
    size: usize,
    reps: usize,
    rng: &mut R,
) -> Result<DualitySummary> {
    if size == 0 || reps == 0 {
        return Err(Error::Config("size and reps must be positive".into()));
    }
    let mut max_gibbs_gap: f64 = 0.0;
    let mut min_random_gap = f64::INFINITY;
    for _ in 0..reps {
        let mu = DiscreteSpace::random(size, rng)?;
        let g: Vec<f64> = (0..size).map(|_| rng.random_range(-5.0..5.0)).collect();
        let gibbs = gibbs_posterior(&mu, &g)?;
        max_gibbs_gap = max_gibbs_gap.max(duality_gap(&mu, &g, &gibbs)?.abs());
        let rho = DiscreteSpace::random(size, rng)?;
        min_random_gap = min_random_gap.min(duality_gap(&mu, &g, &rho)?);
    }
    Ok(DualitySummary {
        size,
        reps,
        max_gibbs_gap,
        min_random_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(w: &[f64]) -> DiscreteSpace {
        DiscreteSpace::new(w.to_vec()).unwrap()
    }

    #[test]
    fn kl_examples() {
        let mu = DiscreteSpace::uniform(2).unwrap();
        let same = DiscreteMeasurePair::new(mu.clone(), mu.clone()).unwrap();
        assert_eq!(kl_divergence(&same), 0.0);
        let rho = space(&[1.0 / 3.0, 2.0 / 3.0]);
        let kl = kl_divergence(&DiscreteMeasurePair::new(mu, rho).unwrap());
        let direct = (1.0f64 / 3.0) * (2.0f64 / 3.0).ln() + (2.0f64 / 3.0) * (4.0f64 / 3.0).ln();
        assert!((kl - direct).abs() < 1e-15);
        assert!((kl - 0.0566).abs() < 1e-4);
        let point = DiscreteMeasurePair::new(
            DiscreteSpace::uniform(5).unwrap(),
            space(&[0.0, 1.0, 0.0, 0.0, 0.0]),
        );
        assert!((kl_divergence(&point.unwrap()) - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn absolute_continuity_is_enforced() {
        let err = DiscreteMeasurePair::new(space(&[1.0, 0.0]), space(&[0.5, 0.5])).unwrap_err();
        assert_eq!(err, Error::NotAbsolutelyContinuous { index: 1, rho: 0.5 });
    }

    #[test]
    fn log_mgf_and_gibbs_examples() {
        let mu = DiscreteSpace::uniform(2).unwrap();
        let g = [0.0, 2f64.ln()];
        assert_eq!(log_mgf(&mu, &[0.0, 0.0]).unwrap(), 0.0);
        assert!((log_mgf(&mu, &g).unwrap() - 1.5f64.ln()).abs() < 1e-15);
        let shifted = log_mgf(&mu, &[3.0, 3.0 + 2f64.ln()]).unwrap();
        assert!((shifted - 3.0 - 1.5f64.ln()).abs() < 1e-14);
        let rho = gibbs_posterior(&mu, &g).unwrap();
        assert!((rho.weights()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(gibbs_posterior(&mu, &[0.0, 0.0]).unwrap(), mu);
    }

    #[test]
    fn large_exponents_stay_finite() {
        let mu = DiscreteSpace::uniform(3).unwrap();
        let g = [700.0, -700.0, 699.0];
        let v = log_mgf(&mu, &g).unwrap();
        assert!(v.is_finite() && v > 699.0);
        let rho = gibbs_posterior(&mu, &g).unwrap();
        assert!(duality_gap(&mu, &g, &rho).unwrap().abs() < 1e-10);
    }

    #[test]
    fn gap_examples() {
        let mu = DiscreteSpace::uniform(2).unwrap();
        let g = [0.0, 2f64.ln()];
        let gap = duality_gap(&mu, &g, &mu).unwrap();
        assert!((gap - (1.5f64.ln() - 2f64.ln() / 2.0)).abs() < 1e-15);
        assert!((gap - 0.0589).abs() < 1e-4);
        let rho = gibbs_posterior(&mu, &g).unwrap();
        assert!(duality_gap(&mu, &g, &rho).unwrap().abs() < 1e-10);
    }

    #[test]
    fn certificate_with_zero_f() {
        let model =
            FiniteModel::new(DiscreteSpace::uniform(3).unwrap(), vec![vec![0.0; 2]; 3]).unwrap();
        let mu = DiscreteSpace::uniform(2).unwrap();
        let c = pacbayes_certificate(&model, &[0, 1, 2, 1], &mu, &mu, 2.0).unwrap();
        assert!(c.holds);
        assert!((c.slack - 0.5).abs() < 1e-15);
    }

    #[test]
    fn duality_check_rejects_empty_runs() {
        let mut rng = crate::distributions::SeedSpec::new(1, 0).rng();
        assert!(matches!(
            duality_check(4, 0, &mut rng),
            Err(Error::Config(_))
        ));
        let single = duality_check(1, 10, &mut rng).unwrap();
        assert_eq!(single.max_gibbs_gap, 0.0);
    }
}
