//! Seeded samplers for sub-Gaussian, log-concave and heavy-tailed random
//! vectors, together with their moment-equivalence constants.

mod constants;
mod covariance;
mod family;
mod moments;
mod seed;

pub use constants::core_moment;
pub use covariance::{materialize_sigma, CovarianceSpec};
pub use family::{sample, Core, DistributionFamily, Sampler};
pub use moments::{CoreMoments, MomentOracle};
pub use seed::{splitmix64, SeedSpec, StreamRng};

use crate::error::Result;

/// ψ₂ moment-equivalence constant κ of the family.
pub fn kappa_psi2(family: &DistributionFamily) -> Result<f64> {
    constants::kappa_psi2(family.core, family.dim())
}

/// ψ₁ moment-equivalence constant κ of the family.
pub fn kappa_psi1(family: &DistributionFamily) -> Result<f64> {
    constants::kappa_psi1(family.core, family.dim())
}

/// `L_4`–`L_2` constant κ of the family, `√E(xᵀXXᵀx)² ≤ κ² xᵀΣx`.
pub fn kappa_l4(family: &DistributionFamily) -> Result<f64> {
    constants::kappa_l4(family.core, family.dim())
}

/// `L_{2s}`–`L_2` constant η of the family.
pub fn eta(family: &DistributionFamily, s: u32) -> Result<f64> {
    constants::eta(family.core, family.dim(), s)
}
