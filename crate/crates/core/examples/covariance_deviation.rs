//! Sample covariance deviation against the effective-rank bound as n grows.

use dimfree::bounds::thm1_bound;
use dimfree::distributions::{kappa_psi2, sample, CovarianceSpec, DistributionFamily, SeedSpec};
use dimfree::estimators::covariance_deviation;
use dimfree::linalg::effective_rank;

fn main() -> dimfree::Result<()> {
    let family = DistributionFamily::gaussian(CovarianceSpec::Polydecay { d: 50, alpha: 1.0 });
    let sigma = family.sigma_matrix()?;
    let kappa = kappa_psi2(&family)?;
    println!(
        "d = 50, r(Sigma) = {:.3}, kappa = {kappa:.4}",
        effective_rank(&sigma)?
    );
    println!("{:>6} {:>12} {:>12}", "n", "deviation", "bound");
    for n in [100, 400, 1600, 6400] {
        let x = sample(&family, n, SeedSpec::new(1, n as u64))?;
        let dev = covariance_deviation(&x, &sigma)?;
        let bound = thm1_bound(kappa, &sigma, n, 3.0)?;
        println!("{n:>6} {dev:>12.5} {:>12.5}", bound.value);
    }
    Ok(())
}
