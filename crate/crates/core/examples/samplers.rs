//! Built-in distribution families with their moment constants and sample moments.

use dimfree::distributions::{
    eta, kappa_l4, kappa_psi1, kappa_psi2, sample, Core, CovarianceSpec, DistributionFamily,
    SeedSpec,
};
use dimfree::estimators::covariance_deviation;

fn show(value: dimfree::Result<f64>) -> String {
    value.map_or_else(|_| "-".into(), |v| format!("{v:.4}"))
}

fn main() -> dimfree::Result<()> {
    let cores = [
        Core::Gaussian,
        Core::RademacherMix,
        Core::LaplaceProduct,
        Core::UniformBall,
        Core::StudentT { nu: 5.0 },
    ];
    println!(
        "{:<22} {:>8} {:>8} {:>8} {:>8} {:>10}",
        "family", "psi2", "psi1", "L4", "eta(2)", "deviation"
    );
    for core in cores {
        let family = DistributionFamily::new(core, CovarianceSpec::Expdecay { d: 6, gamma: 0.5 });
        let x = sample(&family, 20_000, SeedSpec::new(2, 0))?;
        let dev = covariance_deviation(&x, &family.sigma_matrix()?)?;
        println!(
            "{:<22} {:>8} {:>8} {:>8} {:>8} {dev:>10.4}",
            core.name(),
            show(kappa_psi2(&family)),
            show(kappa_psi1(&family)),
            show(kappa_l4(&family)),
            show(eta(&family, 2)),
        );
    }
    Ok(())
}
