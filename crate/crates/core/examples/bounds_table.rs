//! Every closed-form bound at one parameter point.

use std::collections::BTreeMap;

use dimfree::bounds::{evaluate, BoundInputs, BoundKey, Thm2Regime};
use dimfree::distributions::{materialize_sigma, CovarianceSpec};

fn main() -> dimfree::Result<()> {
    let sigma = materialize_sigma(&CovarianceSpec::Spiked {
        d: 20,
        k: 2,
        strength: 5.0,
    })?;
    let constants = BTreeMap::new();
    let inputs = BoundInputs {
        kappa: 1.0,
        sigma: &sigma,
        n: 1000,
        t: 3.0,
        s: 3,
        constants: &constants,
        regime: Thm2Regime::General,
    };
    for key in BoundKey::ALL {
        let r = evaluate(key, &inputs)?;
        let note = r.condition_text.as_deref().unwrap_or("");
        println!(
            "{:<24} {:>12.5} {:<5} {note}",
            key.to_string(),
            r.value,
            r.valid
        );
    }
    Ok(())
}
