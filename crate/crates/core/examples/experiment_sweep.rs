//! Monte Carlo check of a bound and a sample-size sweep written as CSV.

use dimfree::experiments::{parse_config, run_experiment, sweep, write_sweep_csv, Grid};

const CONFIG: &str = r#"{
    "family": {"kind": "gaussian", "sigma": {"kind": "polydecay", "d": 20, "alpha": 1.0}},
    "n": 200, "t": 3.0, "trials": 200, "master_seed": 1,
    "statistic": "cov-deviation", "bound": "thm1",
    "constants": {"kappa": 1.632993161855452}
}"#;

fn main() -> dimfree::Result<()> {
    let cfg = parse_config(CONFIG)?.experiment;
    let r = run_experiment(&cfg)?;
    println!(
        "bound {:.4}, median {:.4}, violation rate {} (tolerance {:.4})",
        r.bound_value, r.statistic_median, r.violation_rate, r.violation_tolerance
    );
    let grid = Grid {
        n: Some(vec![100, 400, 1600]),
        ..Grid::default()
    };
    write_sweep_csv(&sweep(&cfg, &grid, None), std::io::stdout())?;
    Ok(())
}
