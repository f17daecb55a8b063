//! Exact moments of linear forms `⟨v, X⟩` for `X = Σ^{1/2} Z`.
//!
//! With `a = Σ^{1/2} v`, `⟨v, X⟩ = ⟨a, Z⟩`. For product cores the moment
//! sequence of the sum `Σ a_i Z_i` is the binomial convolution of the
//! per-coordinate sequences `a_i^k E Z_i^k`; the Gaussian and the uniform ball
//! are rotation invariant, so only `‖a‖` matters there.

use super::constants::core_moment;
use super::family::{Core, DistributionFamily, Sampler};
use crate::error::Result;
use crate::linalg::{self, SymMatrix};
use crate::numeric::binomial;

/// `E Z_1^k` for `k = 0..=order`, plus the machinery for linear forms.
#[derive(Debug, Clone)]
pub struct CoreMoments {
    core: Core,
    moments: Vec<f64>,
}

impl CoreMoments {
    pub fn new(core: Core, d: usize, order: u32) -> Result<Self> {
        let moments = (0..=order)
            .map(|k| core_moment(core, d, k))
            .collect::<Result<_>>()?;
        Ok(Self { core, moments })
    }

    pub fn order(&self) -> u32 {
        (self.moments.len() - 1) as u32
    }

    pub fn moment(&self, k: u32) -> f64 {
        self.moments[k as usize]
    }

    /// `E⟨a, Z⟩^s`.
    pub fn linear_form(&self, a: &[f64], s: u32) -> f64 {
        assert!(s <= self.order());
        if self.core.is_product() && !matches!(self.core, Core::Gaussian) {
            let seq = a.iter().fold(unit_sequence(s), |acc, &ai| {
                convolve(&acc, &self.scaled_sequence(ai, s))
            });
            return seq[s as usize];
        }
        let r = linalg::norm(a);
        self.moment(s) * r.powi(s as i32)
    }

    /// Gradient of `a ↦ E⟨a, Z⟩^s`.
    pub fn linear_form_gradient(&self, a: &[f64], s: u32) -> Vec<f64> {
        assert!(s <= self.order());
        if s == 0 {
            return vec![0.0; a.len()];
        }
        if !self.core.is_product() || matches!(self.core, Core::Gaussian) {
            let r2 = linalg::dot(a, a);
            if r2 == 0.0 {
                return vec![0.0; a.len()];
            }
            // d/da m_s ‖a‖^s = s m_s ‖a‖^{s-2} a
            let c = f64::from(s) * self.moment(s) * r2.powf(f64::from(s) / 2.0 - 1.0);
            return a.iter().map(|x| c * x).collect();
        }
        let d = a.len();
        let seqs: Vec<Vec<f64>> = a.iter().map(|&ai| self.scaled_sequence(ai, s)).collect();
        let mut prefix = Vec::with_capacity(d + 1);
        prefix.push(unit_sequence(s));
        for q in &seqs {
            let next = convolve(prefix.last().unwrap(), q);
            prefix.push(next);
        }
        let mut suffix = vec![unit_sequence(s); d + 1];
        for i in (0..d).rev() {
            suffix[i] = convolve(&suffix[i + 1], &seqs[i]);
        }
        (0..d)
            .map(|i| {
                // s E[Z_i (a_i Z_i + R)^{s-1}], R the sum of the other coordinates
                let rest = convolve(&prefix[i], &suffix[i + 1]);
                let inner: f64 = (0..s)
                    .map(|j| {
                        binomial(s - 1, j)
                            * a[i].powi(j as i32)
                            * self.moment(j + 1)
                            * rest[(s - 1 - j) as usize]
                    })
                    .sum();
                f64::from(s) * inner
            })
            .collect()
    }

    fn scaled_sequence(&self, ai: f64, s: u32) -> Vec<f64> {
        (0..=s)
            .map(|k| ai.powi(k as i32) * self.moment(k))
            .collect()
    }
}

fn unit_sequence(s: u32) -> Vec<f64> {
    let mut v = vec![0.0; s as usize + 1];
    v[0] = 1.0;
    v
}

// Moments of a sum of independent variables from the moments of each.
fn convolve(p: &[f64], q: &[f64]) -> Vec<f64> {
    (0..p.len())
        .map(|k| {
            (0..=k)
                .map(|j| binomial(k as u32, j as u32) * p[j] * q[k - j])
                .sum()
        })
        .collect()
}

/// Exact `E⟨v, X⟩^s` as a function of the direction `v`.
#[derive(Debug, Clone)]
pub struct MomentOracle {
    core_moments: CoreMoments,
    root: SymMatrix,
    s: u32,
}

impl MomentOracle {
    pub fn new(family: &DistributionFamily, s: u32) -> Result<Self> {
        Self::from_sampler(&family.sampler()?, s)
    }

    pub fn from_sampler(sampler: &Sampler, s: u32) -> Result<Self> {
        Ok(Self {
            core_moments: CoreMoments::new(sampler.core(), sampler.dim(), s)?,
            root: sampler.sigma_root().clone(),
            s,
        })
    }

    pub fn order(&self) -> u32 {
        self.s
    }

    pub fn value(&self, v: &[f64]) -> f64 {
        self.core_moments.linear_form(&self.root.matvec(v), self.s)
    }

    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let g = self
            .core_moments
            .linear_form_gradient(&self.root.matvec(v), self.s);
        self.root.matvec(&g)
    }
}
