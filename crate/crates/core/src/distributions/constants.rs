//! Moment-equivalence constants of the isotropic cores.
//!
//! All constants refer to one coordinate `Z_1` of the core (for the uniform
//! ball every direction is equivalent). `X = Σ^{1/2} Z` inherits them: the
//! marginal `⟨y, X⟩` is a linear form in `Z` with variance `yᵀΣy`.

use super::family::Core;
use crate::error::{Error, Result};
use crate::numeric::{bisect, double_factorial_odd, factorial, integrate, integrate_half_line};

const QUAD_TOL: f64 = 1e-13;

/// ψ₂ constant `inf{c : E exp(Z²/c²) ≤ 2}`.
pub fn kappa_psi2(core: Core, d: usize) -> Result<f64> {
    match core {
        // 1/sqrt(1 - 2/c²) = 2
        Core::Gaussian => Ok((8.0f64 / 3.0).sqrt()),
        // exp(1/c²) = 2
        Core::RademacherMix => Ok(1.0 / std::f64::consts::LN_2.sqrt()),
        Core::UniformBall => Ok(psi_norm_numeric(core, d, 2.0)),
        Core::LaplaceProduct | Core::StudentT { .. } => Err(Error::NotSubGaussian(core.name())),
    }
}

/// ψ₁ constant `inf{c : E exp(|Z|/c) ≤ 2}`.
pub fn kappa_psi1(core: Core, d: usize) -> Result<f64> {
    match core {
        // exp(1/c) = 2
        Core::RademacherMix => Ok(1.0 / std::f64::consts::LN_2),
        // 1/(1 - b/c) = 2 with b = 1/sqrt(2)
        Core::LaplaceProduct => Ok(std::f64::consts::SQRT_2),
        Core::Gaussian | Core::UniformBall => Ok(psi_norm_numeric(core, d, 1.0)),
        Core::StudentT { .. } => Err(Error::NotSubExponential(core.name())),
    }
}

/// `L_4`–`L_2` constant κ with `κ² = sup_a √(E⟨a, Z⟩⁴) / ‖a‖²`.
pub fn kappa_l4(core: Core, d: usize) -> Result<f64> {
    let m4 = core_moment(core, d, 4)?;
    let sup = if core.is_product() && !matches!(core, Core::Gaussian) {
        // E⟨a, Z⟩⁴ = 3‖a‖⁴ + (m4 - 3) Σ a_i⁴ and Σ a_i⁴ / ‖a‖⁴ ranges over [1/d, 1]
        m4.max(3.0 + (m4 - 3.0) / d as f64)
    } else {
        m4
    };
    Ok(sup.powf(0.25))
}

/// `L_{2s}`–`L_2` constant `(E|Z_1|^{2s})^{1/(2s)}`.
pub fn eta(core: Core, d: usize, s: u32) -> Result<f64> {
    let order = 2 * s;
    Ok(core_moment(core, d, order)?.powf(1.0 / f64::from(order)))
}

/// Signed moment `E Z_1^k` of one core coordinate.
pub fn core_moment(core: Core, d: usize, k: u32) -> Result<f64> {
    if let Core::StudentT { nu } = core {
        if f64::from(k) >= nu {
            return Err(Error::MomentDoesNotExist {
                family: core.name(),
                order: k,
            });
        }
    }
    if k == 0 {
        return Ok(1.0);
    }
    if k % 2 == 1 {
        return Ok(0.0);
    }
    Ok(match core {
        Core::Gaussian => double_factorial_odd(k / 2),
        Core::RademacherMix => 1.0,
        Core::LaplaceProduct => factorial(k) * 0.5f64.powf(f64::from(k) / 2.0),
        Core::UniformBall | Core::StudentT { .. } => expect_abs(core, d, |x| x.powi(k as i32)),
    })
}

// Unnormalized log-density of |Z_1| on [0, support).
fn log_density(core: Core, d: usize, x: f64) -> f64 {
    match core {
        Core::Gaussian => -0.5 * x * x,
        Core::LaplaceProduct => -std::f64::consts::SQRT_2 * x,
        Core::UniformBall => {
            let r2 = (d + 2) as f64;
            let u = 1.0 - x * x / r2;
            if u <= 0.0 {
                f64::NEG_INFINITY
            } else {
                0.5 * (d as f64 - 1.0) * u.ln()
            }
        }
        Core::StudentT { nu } => {
            let c2 = (nu - 2.0) / nu;
            -0.5 * (nu + 1.0) * (x * x / (c2 * nu)).ln_1p()
        }
        Core::RademacherMix => unreachable!("discrete core"),
    }
}

// E g(|Z_1|) for an absolutely continuous core, with `g` given in log space
// when `log_g` is set.
fn expect_abs_log(core: Core, d: usize, log_g: impl Fn(f64) -> f64) -> f64 {
    let weighted = |x: f64| (log_g(x) + log_density(core, d, x)).exp();
    let plain = |x: f64| log_density(core, d, x).exp();
    match core {
        Core::UniformBall => {
            let r = ((d + 2) as f64).sqrt();
            integrate(weighted, 0.0, r, QUAD_TOL) / integrate(plain, 0.0, r, QUAD_TOL)
        }
        _ => integrate_half_line(weighted, QUAD_TOL) / integrate_half_line(plain, QUAD_TOL),
    }
}

fn expect_abs(core: Core, d: usize, g: impl Fn(f64) -> f64) -> f64 {
    expect_abs_log(core, d, |x| g(x).ln())
}

fn psi_norm_numeric(core: Core, d: usize, alpha: f64) -> f64 {
    let log_integrand = |c: f64, x: f64| (x / c).powf(alpha) + log_density(core, d, x);
    let excess = |c: f64| {
        // an integrand still growing far out means E exp(|Z/c|^alpha) is infinite
        let bounded = matches!(core, Core::UniformBall);
        if !bounded && log_integrand(c, 200.0) >= log_integrand(c, 100.0) {
            return f64::INFINITY;
        }
        expect_abs_log(core, d, |x| (x / c).powf(alpha)) - 2.0
    };
    let mut lo = 0.5;
    while excess(lo) < 0.0 {
        lo *= 0.5;
    }
    let mut hi = 2.0;
    while excess(hi) > 0.0 {
        hi *= 2.0;
    }
    bisect(excess, lo, hi, 1e-13)
}
