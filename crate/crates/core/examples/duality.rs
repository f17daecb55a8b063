//! Entropy duality on a finite space and a PAC-Bayes certificate.

use dimfree::distributions::SeedSpec;
use dimfree::variational::{
    duality_check, duality_gap, gibbs_posterior, log_mgf, pacbayes_certificate, DiscreteSpace,
    FiniteModel,
};

fn main() -> dimfree::Result<()> {
    let mu = DiscreteSpace::uniform(4)?;
    let g = [0.0, 1.0, -2.0, 3.0];
    let gibbs = gibbs_posterior(&mu, &g)?;
    println!("log E_mu e^g   {:.6}", log_mgf(&mu, &g)?);
    println!("gibbs weights  {:?}", gibbs.weights());
    println!("gap at gibbs   {:.3e}", duality_gap(&mu, &g, &gibbs)?);
    println!("gap at mu      {:.6}", duality_gap(&mu, &g, &mu)?);

    let mut rng = SeedSpec::new(11, 0).rng();
    let summary = duality_check(20, 1000, &mut rng)?;
    println!("random check   {summary:?}");

    let points = DiscreteSpace::uniform(3)?;
    let model = FiniteModel::new(
        points,
        vec![vec![0.5, -0.2], vec![-0.3, 0.4], vec![0.1, 0.0]],
    )?;
    let prior = DiscreteSpace::uniform(2)?;
    let draws = model.draw(10, &mut rng);
    let cert = pacbayes_certificate(&model, &draws, &prior, &prior, 2.0)?;
    println!("certificate    {cert:?}");
    Ok(())
}
