use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use super::covariance::{materialize_sigma, CovarianceSpec};
use super::seed::SeedSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, Samples, SymMatrix};

/// Distribution of the isotropic core `Z`; every variant has zero mean and
/// identity covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Core {
    Gaussian,
    /// Independent Rademacher coordinates.
    RademacherMix,
    /// Independent unit-variance Laplace coordinates.
    LaplaceProduct,
    /// Uniform on the centered ball of radius `sqrt(d + 2)`.
    UniformBall,
    /// Independent Student-t coordinates rescaled to unit variance; needs `nu > 2`.
    StudentT {
        nu: f64,
    },
}

impl Core {
    pub fn name(&self) -> String {
        match self {
            Core::Gaussian => "gaussian".into(),
            Core::RademacherMix => "rademacher-mix".into(),
            Core::LaplaceProduct => "laplace-product".into(),
            Core::UniformBall => "uniform-ball".into(),
            Core::StudentT { nu } => format!("student-t({nu})"),
        }
    }

    /// Whether the coordinates of `Z` are independent.
    pub fn is_product(&self) -> bool {
        !matches!(self, Core::UniformBall)
    }

    pub fn is_log_concave(&self) -> bool {
        matches!(
            self,
            Core::Gaussian | Core::LaplaceProduct | Core::UniformBall
        )
    }

    pub fn is_sub_gaussian(&self) -> bool {
        matches!(
            self,
            Core::Gaussian | Core::RademacherMix | Core::UniformBall
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Core::StudentT { nu } if !(*nu > 2.0) => Err(Error::Config(format!(
                "student-t needs nu > 2 for a finite variance, got {nu}"
            ))),
            _ => Ok(()),
        }
    }

    /// Fills `z` with one draw of the core.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64]) {
        match *self {
            Core::Gaussian => z.iter_mut().for_each(|x| *x = rng.sample(StandardNormal)),
            Core::RademacherMix => z
                .iter_mut()
                .for_each(|x| *x = if rng.random::<bool>() { 1.0 } else { -1.0 }),
            Core::LaplaceProduct => z.iter_mut().for_each(|x| {
                let e: f64 = rng.sample(Exp1);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                *x = sign * e * std::f64::consts::FRAC_1_SQRT_2;
            }),
            Core::UniformBall => {
                let d = z.len();
                loop {
                    z.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
                    let r = linalg::norm(z);
                    if r > 0.0 {
                        let u: f64 = rng.random();
                        let scale = ((d + 2) as f64).sqrt() * u.powf(1.0 / d as f64) / r;
                        z.iter_mut().for_each(|x| *x *= scale);
                        break;
                    }
                }
            }
            Core::StudentT { nu } => {
                let t = StudentT::new(nu).expect("validated nu");
                let scale = ((nu - 2.0) / nu).sqrt();
                z.iter_mut().for_each(|x| *x = scale * t.sample(rng));
            }
        }
    }
}

impl fmt::Display for Core {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Parses `gaussian`, `rademacher-mix`, `laplace-product`, `uniform-ball` or
/// `student-t:<nu>`.
impl std::str::FromStr for Core {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let core = match s {
            "gaussian" => Core::Gaussian,
            "rademacher-mix" => Core::RademacherMix,
            "laplace-product" => Core::LaplaceProduct,
            "uniform-ball" => Core::UniformBall,
            _ => match s.strip_prefix("student-t:").map(str::parse::<f64>) {
                Some(Ok(nu)) => Core::StudentT { nu },
                _ => {
                    return Err(Error::Parse(format!(
                        "unknown family '{s}'; expected gaussian, rademacher-mix, \
                         laplace-product, uniform-ball or student-t:<nu>"
                    )))
                }
            },
        };
        core.validate()?;
        Ok(core)
    }
}

/// A random vector `X = Σ^{1/2} Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFamily {
    #[serde(flatten)]
    pub core: Core,
    pub sigma: CovarianceSpec,
}

impl DistributionFamily {
    pub fn new(core: Core, sigma: CovarianceSpec) -> Self {
        Self { core, sigma }
    }

    pub fn gaussian(sigma: CovarianceSpec) -> Self {
        Self::new(Core::Gaussian, sigma)
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn sigma_matrix(&self) -> Result<SymMatrix> {
        materialize_sigma(&self.sigma)
    }

    pub fn sampler(&self) -> Result<Sampler> {
        self.core.validate()?;
        let sigma = self.sigma_matrix()?;
        let root = linalg::psd_sqrt(&sigma)?;
        let mixing = if root.is_diagonal() {
            Mixing::Diagonal(root.diagonal())
        } else {
            Mixing::Dense(root.clone())
        };
        Ok(Sampler {
            core: self.core,
            sigma,
            root,
            mixing,
        })
    }
}

#[derive(Debug, Clone)]
enum Mixing {
    Diagonal(Vec<f64>),
    Dense(SymMatrix),
}

/// A family with its covariance and square root realized, ready to draw from.
#[derive(Debug, Clone)]
pub struct Sampler {
    core: Core,
    sigma: SymMatrix,
    root: SymMatrix,
    mixing: Mixing,
}

impl Sampler {
    pub fn core(&self) -> Core {
        self.core
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    /// `Σ^{1/2}`.
    pub fn sigma_root(&self) -> &SymMatrix {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    /// Draws `n` independent rows from the stream addressed by `seed`.
    pub fn sample(&self, n: usize, seed: SeedSpec) -> Samples {
        let mut rng = seed.rng();
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Samples {
        assert!(n >= 1, "need at least one sample");
        let d = self.dim();
        let mut data = Vec::with_capacity(n * d);
        let mut z = vec![0.0; d];
        for _ in 0..n {
            self.core.draw(rng, &mut z);
            match &self.mixing {
                Mixing::Diagonal(diag) => data.extend(z.iter().zip(diag).map(|(a, b)| a * b)),
                Mixing::Dense(root) => data.extend(root.matvec(&z)),
            }
        }
        Samples::new(n, d, data).expect("finite samples")
    }
}

/// Convenience wrapper: `n` draws of `X` from `family` on stream `seed`.
pub fn sample(family: &DistributionFamily, n: usize, seed: SeedSpec) -> Result<Samples> {
    if n == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    Ok(family.sampler()?.sample(n, seed))
}
