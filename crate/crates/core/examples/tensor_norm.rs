//! Operator norm of a centered empirical moment tensor, power method against a grid.

use dimfree::distributions::{sample, CovarianceSpec, DistributionFamily, MomentOracle, SeedSpec};
use dimfree::tensor::{
    grid_sup, operator_norm_sup, Centering, EmpiricalTensorForm, PowerMethodConfig,
};

fn main() -> dimfree::Result<()> {
    let family = DistributionFamily::gaussian(CovarianceSpec::Identity { d: 3 });
    for s in [3, 4] {
        let x = sample(&family, 200, SeedSpec::new(5, u64::from(s)))?;
        let form =
            EmpiricalTensorForm::new(x, s, Centering::Moments(MomentOracle::new(&family, s)?))?;
        let power = operator_norm_sup(&form, &PowerMethodConfig::default())?;
        let grid = grid_sup(&form, 200_000)?;
        println!(
            "s = {s}: power {:.6} ({} iterations), grid {:.6}",
            power.value, power.iterations, grid.value
        );
    }
    Ok(())
}
