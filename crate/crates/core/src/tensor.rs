//! Symmetric `s`-linear deviation forms and their operator norm.
//!
//! The form is `F(v) = (1/n) Σ ⟨X_i, v⟩^s - E⟨X, v⟩^s`, evaluated directly from
//! the samples in `O(nd)` without building the `d^s` tensor. Its operator norm
//! `sup_{‖v‖=1} |F(v)|` is approached from below by a shifted higher-order
//! power method; at `d ≤ 3` an exhaustive grid gives a reference value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{MomentOracle, SeedSpec};
use crate::error::{Error, Result};
use crate::estimators::check_unit;
use crate::linalg::{self, Samples, SymMatrix};

/// The subtracted population term `E⟨X, v⟩^s`.
#[derive(Debug, Clone)]
pub enum Centering {
    Zero,
    /// Constant on the sphere, extended as `c ‖v‖^s`.
    Constant(f64),
    /// `vᵀCv`; only meaningful for `s = 2`.
    Matrix(SymMatrix),
    /// Exact moments of a distribution family.
    Moments(MomentOracle),
}

impl Centering {
    fn value(&self, v: &[f64], s: u32) -> f64 {
        match self {
            Centering::Zero => 0.0,
            Centering::Constant(c) => c * linalg::dot(v, v).powf(f64::from(s) / 2.0),
            Centering::Matrix(m) => m.quadratic_form(v),
            Centering::Moments(o) => o.value(v),
        }
    }

    fn gradient(&self, v: &[f64], s: u32) -> Vec<f64> {
        match self {
            Centering::Zero => vec![0.0; v.len()],
            Centering::Constant(c) => {
                let r2 = linalg::dot(v, v);
                let k = c * f64::from(s) * r2.powf(f64::from(s) / 2.0 - 1.0);
                v.iter().map(|x| k * x).collect()
            }
            Centering::Matrix(m) => m.matvec(v).into_iter().map(|x| 2.0 * x).collect(),
            Centering::Moments(o) => o.gradient(v),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmpiricalTensorForm {
    samples: Samples,
    s: u32,
    centering: Centering,
}

impl EmpiricalTensorForm {
    pub fn new(samples: Samples, s: u32, centering: Centering) -> Result<Self> {
        if s < 2 {
            return Err(Error::Domain(format!(
                "tensor order must be at least 2, got {s}"
            )));
        }
        match &centering {
            Centering::Matrix(m) if s != 2 || m.dim() != samples.dim() => {
                return Err(Error::Shape(
                    "matrix centering needs s = 2 and matching dimension".into(),
                ))
            }
            Centering::Moments(o) if o.order() != s => {
                return Err(Error::Shape("moment oracle order differs from s".into()))
            }
            _ => {}
        }
        Ok(Self {
            samples,
            s,
            centering,
        })
    }

    pub fn order(&self) -> u32 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.samples.dim()
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    /// `F(v)` for a unit vector `v`.
    pub fn form_value(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::Shape("direction has the wrong dimension".into()));
        }
        Ok(self.eval(&check_unit(v)?))
    }

    // Homogeneous extension of F; no unit check.
    fn eval(&self, v: &[f64]) -> f64 {
        let n = self.samples.n() as f64;
        let empirical: f64 = self
            .samples
            .rows()
            .map(|x| linalg::dot(x, v).powi(self.s as i32))
            .sum::<f64>()
            / n;
        empirical - self.centering.value(v, self.s)
    }

    fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let n = self.samples.n() as f64;
        let s = self.s as i32;
        let mut g = vec![0.0; v.len()];
        for x in self.samples.rows() {
            let c = f64::from(self.s) * linalg::dot(x, v).powi(s - 1) / n;
            g.iter_mut().zip(x).for_each(|(gi, xi)| *gi += c * xi);
        }
        let cg = self.centering.gradient(v, self.s);
        g.iter_mut().zip(cg).for_each(|(gi, ci)| *gi -= ci);
        g
    }

    /// Initial spectral shift: `(s - 1)` times a bound on the form's curvature.
    pub fn shift_bound(&self) -> f64 {
        let n = self.samples.n() as f64;
        let s = self.s as i32;
        let empirical: f64 = self
            .samples
            .rows()
            .map(|x| linalg::norm(x).powi(s))
            .sum::<f64>()
            / n;
        let centering = match &self.centering {
            Centering::Zero => 0.0,
            Centering::Constant(c) => c.abs(),
            Centering::Matrix(m) => linalg::operator_norm(m).unwrap_or(0.0),
            // E‖X‖^s, estimated by its empirical counterpart with a margin
            Centering::Moments(_) => 2.0 * empirical,
        };
        (f64::from(self.s) - 1.0) * (empirical + centering)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerMethodConfig {
    /// Random starting points; each is also run from its antipode when
    /// `antipodal` is set.
    pub restarts: usize,
    pub antipodal: bool,
    /// Stop when an accepted step moves the iterate by less than this.
    pub tol: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for PowerMethodConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            antipodal: true,
            tol: 1e-10,
            max_iterations: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupResult {
    /// Largest `|F(v)|` found; a lower bound on the operator norm.
    pub value: f64,
    pub argmax: Vec<f64>,
    /// `F(argmax)`, whose sign says which side attains the supremum.
    pub signed_value: f64,
    /// Whether the run attaining `value` converged within the iteration budget.
    pub converged: bool,
    pub iterations: usize,
}

struct Ascent {
    v: Vec<f64>,
    value: f64,
    converged: bool,
    iterations: usize,
}

// Shifted power iteration v ← normalize(σ∇F(v)/s + αv) on σF. A step that fails
// to increase σF doubles the shift and the doubled shift becomes its new floor;
// accepted steps relax the shift toward that floor.
fn ascend(
    form: &EmpiricalTensorForm,
    start: Vec<f64>,
    sign: f64,
    cfg: &PowerMethodConfig,
) -> Ascent {
    let s = f64::from(form.s);
    let bound = form.shift_bound().max(f64::MIN_POSITIVE);
    let mut floor = bound * 1e-6;
    let mut alpha = bound;
    let mut v = start;
    let mut value = sign * form.eval(&v);
    for it in 0..cfg.max_iterations {
        let g = form.gradient(&v);
        let mut w: Vec<f64> = g
            .iter()
            .zip(&v)
            .map(|(gi, vi)| sign * gi / s + alpha * vi)
            .collect();
        let len = linalg::norm(&w);
        if len == 0.0 {
            return Ascent {
                v,
                value,
                converged: true,
                iterations: it,
            };
        }
        w.iter_mut().for_each(|x| *x /= len);
        let candidate = sign * form.eval(&w);
        if candidate + 1e-15 * value.abs().max(1.0) < value {
            alpha *= 2.0;
            floor = floor.max(alpha);
            if alpha > 1e12 * bound {
                return Ascent {
                    v,
                    value,
                    converged: true,
                    iterations: it,
                };
            }
            continue;
        }
        let moved = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        v = w;
        value = candidate.max(value);
        if moved < cfg.tol {
            return Ascent {
                v,
                value,
                converged: true,
                iterations: it + 1,
            };
        }
        alpha = (alpha * 0.5).max(floor);
    }
    Ascent {
        v,
        value,
        converged: false,
        iterations: cfg.max_iterations,
    }
}

/// Uniform direction on the sphere from the given stream.
pub fn random_unit(d: usize, seed: SeedSpec) -> Vec<f64> {
    use rand::Rng;
    use rand_distr::StandardNormal;
    let mut rng = seed.rng();
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let len = linalg::norm(&v);
        if len > 1e-12 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

/// Lower bound on `sup_{‖v‖=1} |F(v)|` from restarted shifted power iterations
/// on both `F` and `-F`.
pub fn operator_norm_sup(form: &EmpiricalTensorForm, cfg: &PowerMethodConfig) -> Result<SupResult> {
    if cfg.restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    let d = form.dim();
    if d == 1 {
        let value = form.eval(&[1.0]);
        let neg = form.eval(&[-1.0]);
        let (v, signed) = if neg.abs() > value.abs() {
            (-1.0, neg)
        } else {
            (1.0, value)
        };
        return Ok(SupResult {
            value: signed.abs(),
            argmax: vec![v],
            signed_value: signed,
            converged: true,
            iterations: 0,
        });
    }
    let mut starts = Vec::new();
    for i in 0..cfg.restarts {
        let v = random_unit(d, SeedSpec::new(cfg.seed, i as u64));
        if cfg.antipodal {
            starts.push(v.iter().map(|x| -x).collect());
        }
        starts.push(v);
    }
    let runs: Vec<Ascent> = starts
        .par_iter()
        .flat_map_iter(|v| [1.0, -1.0].map(|sign| ascend(form, v.clone(), sign, cfg)))
        .collect();
    let iterations = runs.iter().map(|r| r.iterations).max().unwrap_or(0);
    // first maximum in start order keeps the result independent of scheduling
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one run");
    let signed_value = form.eval(&best.v);
    Ok(SupResult {
        value: signed_value.abs(),
        converged: best.converged,
        argmax: best.v,
        signed_value,
        iterations,
    })
}

/// Exhaustive reference for `sup |F(v)|` at `d ≤ 3`: both points at `d = 1`,
/// `points` equally spaced angles at `d = 2`, a `points`-point Fibonacci
/// sphere at `d = 3`.
pub fn grid_sup(form: &EmpiricalTensorForm, points: usize) -> Result<SupResult> {
    let d = form.dim();
    let direction = |i: usize| -> Vec<f64> {
        match d {
            1 => vec![if i == 0 { 1.0 } else { -1.0 }],
            2 => {
                let a = std::f64::consts::TAU * i as f64 / points as f64;
                vec![a.cos(), a.sin()]
            }
            _ => {
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                let z = 1.0 - (2 * i + 1) as f64 / points as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * i as f64;
                vec![r * phi.cos(), r * phi.sin(), z]
            }
        }
    };
    let count = match d {
        1 => 2,
        2 | 3 => points,
        _ => {
            return Err(Error::Domain(format!(
                "grid reference supports d <= 3, got {d}"
            )))
        }
    };
    let (index, signed) = (0..count)
        .into_par_iter()
        .map(|i| (i, form.eval(&direction(i))))
        .reduce(
            || (usize::MAX, 0.0),
            |a, b| {
                let better = b.1.abs() > a.1.abs() || (b.1.abs() == a.1.abs() && b.0 < a.0);
                if better {
                    b
                } else {
                    a
                }
            },
        );
    Ok(SupResult {
        value: signed.abs(),
        argmax: direction(index),
        signed_value: signed,
        converged: true,
        iterations: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::sample_covariance;

    fn samples(rows: &[[f64; 2]]) -> Samples {
        Samples::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn exact_centering_vanishes() {
        let x = samples(&[[1.0, 2.0], [-0.5, 0.3], [0.2, -1.0]]);
        let c = sample_covariance(&x);
        let f = EmpiricalTensorForm::new(x, 2, Centering::Matrix(c)).unwrap();
        for a in [0.0, 0.7, 2.0] {
            let v = [f64::cos(a), f64::sin(a)];
            assert!(f.form_value(&v).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn rank_one_cube() {
        let x = Samples::from_rows(&[vec![2.0, 0.0, 0.0]]).unwrap();
        let f = EmpiricalTensorForm::new(x, 3, Centering::Zero).unwrap();
        assert_eq!(f.form_value(&[1.0, 0.0, 0.0]).unwrap(), 8.0);
        assert!(f.form_value(&[1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn one_dimensional_sup() {
        let x = Samples::from_rows(&[vec![1.5], vec![-0.5]]).unwrap();
        let f = EmpiricalTensorForm::new(x, 3, Centering::Zero).unwrap();
        let r = operator_norm_sup(&f, &PowerMethodConfig::default()).unwrap();
        assert_eq!(r.value, f.form_value(&[1.0]).unwrap().abs());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = samples(&[[1.0, 2.0], [-0.5, 0.3], [0.2, -1.0]]);
        let f = EmpiricalTensorForm::new(x, 4, Centering::Constant(0.7)).unwrap();
        let v = [0.3, -0.8];
        let g = f.gradient(&v);
        let h = 1e-6;
        for i in 0..2 {
            let mut up = v;
            let mut dn = v;
            up[i] += h;
            dn[i] -= h;
            let fd = (f.eval(&up) - f.eval(&dn)) / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-6, "{} vs {fd}", g[i]);
        }
    }
}
