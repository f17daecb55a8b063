use dimfree::distributions::{CovarianceSpec, DistributionFamily, MomentOracle, SeedSpec};
use dimfree::estimators::sample_covariance;
use dimfree::linalg::{operator_norm, Samples, SymMatrix};
use dimfree::tensor::{
    grid_sup, operator_norm_sup, random_unit, Centering, EmpiricalTensorForm, PowerMethodConfig,
};
use dimfree::Error;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_samples(n: usize, d: usize, seed: u64) -> Samples {
    let mut rng = SeedSpec::new(seed, 0).rng();
    Samples::new(
        n,
        d,
        (0..n * d).map(|_| rng.sample(StandardNormal)).collect(),
    )
    .unwrap()
}

fn moments(d: usize, s: u32) -> Centering {
    let f = DistributionFamily::gaussian(CovarianceSpec::Identity { d });
    Centering::Moments(MomentOracle::new(&f, s).unwrap())
}

// Σ_{i1..is} T[i1..is] v_i1 ⋯ v_is with T = (1/n) Σ X^{⊗s} - E X^{⊗s}, built densely.
fn dense_contraction(x: &Samples, s: u32, v: &[f64]) -> f64 {
    let d = x.dim();
    let total = d.pow(s);
    let mut sum = 0.0;
    for flat in 0..total {
        let mut idx = Vec::with_capacity(s as usize);
        let mut k = flat;
        for _ in 0..s {
            idx.push(k % d);
            k /= d;
        }
        let emp: f64 = x
            .rows()
            .map(|r| idx.iter().map(|&i| r[i]).product::<f64>())
            .sum::<f64>()
            / x.n() as f64;
        // E Z_{i1}⋯Z_{is} for standard Gaussian Z by pairing counts
        let mut counts = vec![0u32; d];
        idx.iter().for_each(|&i| counts[i] += 1);
        let pop: f64 = counts
            .iter()
            .map(|&c| {
                if c % 2 == 1 {
                    0.0
                } else {
                    (1..c).step_by(2).map(f64::from).product::<f64>()
                }
            })
            .product();
        let weight: f64 = idx.iter().map(|&i| v[i]).product();
        sum += (emp - pop) * weight;
    }
    sum
}

#[test]
fn form_matches_dense_contraction() {
    for s in 2..=4 {
        let x = gaussian_samples(15, 2, u64::from(s));
        let form = EmpiricalTensorForm::new(x.clone(), s, moments(2, s)).unwrap();
        for i in 0..10 {
            let v = random_unit(2, SeedSpec::new(100, i));
            let a = form.form_value(&v).unwrap();
            let b = dense_contraction(&x, s, &v);
            assert!((a - b).abs() < 1e-12, "s={s}: {a} vs {b}");
        }
    }
}

#[test]
fn form_examples() {
    let x = Samples::from_rows(&[vec![2.0, 0.0]]).unwrap();
    let form = EmpiricalTensorForm::new(x, 3, Centering::Zero).unwrap();
    assert_eq!(form.form_value(&[1.0, 0.0]).unwrap(), 8.0);
    assert!(matches!(
        form.form_value(&[0.5, 0.0]),
        Err(Error::Domain(_))
    ));
    let x = gaussian_samples(10, 3, 1);
    let c = sample_covariance(&x);
    let form = EmpiricalTensorForm::new(x, 2, Centering::Matrix(c)).unwrap();
    for i in 0..20 {
        let v = random_unit(3, SeedSpec::new(2, i));
        assert!(form.form_value(&v).unwrap().abs() < 1e-12);
    }
}

#[test]
fn order_two_reduces_to_matrix_norm() {
    let x = gaussian_samples(25, 5, 3);
    let c = SymMatrix::diag(&[1.5, 1.0, 0.7, 0.3, 0.1]);
    let expected = operator_norm(&sample_covariance(&x).sub(&c).unwrap()).unwrap();
    let form = EmpiricalTensorForm::new(x, 2, Centering::Matrix(c)).unwrap();
    let sup = operator_norm_sup(&form, &PowerMethodConfig::default()).unwrap();
    assert!(
        (sup.value - expected).abs() < 1e-8,
        "{} vs {expected}",
        sup.value
    );
    assert!(sup.converged);
    let len: f64 = sup.argmax.iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!((len - 1.0).abs() < 1e-12);
}

#[test]
fn one_dimensional_forms() {
    let x = Samples::from_rows(&[vec![1.0], vec![-2.0]]).unwrap();
    let form = EmpiricalTensorForm::new(x, 3, Centering::Zero).unwrap();
    let sup = operator_norm_sup(&form, &PowerMethodConfig::default()).unwrap();
    // mean of x³ is -3.5, so both signs attain 3.5
    assert_eq!(sup.value, 3.5);
    assert_eq!(sup.signed_value, form.form_value(&sup.argmax).unwrap());
    assert_eq!(grid_sup(&form, 2).unwrap().value, 3.5);
}

#[test]
fn matches_fibonacci_grid_at_three_dimensions() {
    let x = gaussian_samples(20, 3, 7);
    let form = EmpiricalTensorForm::new(x, 3, moments(3, 3)).unwrap();
    let cfg = PowerMethodConfig {
        seed: 7,
        ..PowerMethodConfig::default()
    };
    let power = operator_norm_sup(&form, &cfg).unwrap();
    let grid = grid_sup(&form, 1_000_000).unwrap();
    assert!((power.value - grid.value).abs() <= 1e-3 * grid.value);
    assert!(power.value >= grid.value - 1e-12);
}

#[test]
fn supremum_dominates_probed_directions() {
    for (d, s) in [(3usize, 3u32), (4, 4), (6, 3)] {
        let x = gaussian_samples(30, d, 11 + d as u64);
        let form = EmpiricalTensorForm::new(x, s, moments(d, s)).unwrap();
        let sup = operator_norm_sup(&form, &PowerMethodConfig::default()).unwrap();
        for i in 0..2000 {
            let v = random_unit(d, SeedSpec::new(12, i));
            assert!(sup.value >= form.form_value(&v).unwrap().abs() - 1e-12);
        }
    }
}

#[test]
fn antipodal_restarts_agree() {
    for seed in 0..5 {
        let x = gaussian_samples(20, 3, 20 + seed);
        let form = EmpiricalTensorForm::new(x, 3, moments(3, 3)).unwrap();
        let with = operator_norm_sup(
            &form,
            &PowerMethodConfig {
                seed,
                ..PowerMethodConfig::default()
            },
        )
        .unwrap();
        let without = operator_norm_sup(
            &form,
            &PowerMethodConfig {
                seed,
                antipodal: false,
                ..PowerMethodConfig::default()
            },
        )
        .unwrap();
        assert!((with.value - without.value).abs() < 1e-9);
    }
}

#[test]
fn value_is_monotone_in_restarts() {
    let x = gaussian_samples(15, 8, 30);
    let form = EmpiricalTensorForm::new(x, 4, moments(8, 4)).unwrap();
    let mut last = 0.0;
    for restarts in [1, 2, 4, 8, 16, 32] {
        let cfg = PowerMethodConfig {
            restarts,
            seed: 5,
            ..PowerMethodConfig::default()
        };
        let v = operator_norm_sup(&form, &cfg).unwrap().value;
        assert!(v >= last, "{restarts}: {v} < {last}");
        last = v;
    }
}

#[test]
fn result_is_independent_of_thread_count() {
    let x = gaussian_samples(40, 5, 31);
    let form = EmpiricalTensorForm::new(x, 3, moments(5, 3)).unwrap();
    let cfg = PowerMethodConfig::default();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| operator_norm_sup(&form, &cfg).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn rejects_bad_configuration() {
    let x = gaussian_samples(5, 2, 1);
    assert!(matches!(
        EmpiricalTensorForm::new(x.clone(), 1, Centering::Zero),
        Err(Error::Domain(_))
    ));
    assert!(
        EmpiricalTensorForm::new(x.clone(), 3, Centering::Matrix(SymMatrix::identity(2))).is_err()
    );
    let form = EmpiricalTensorForm::new(x, 3, Centering::Zero).unwrap();
    let cfg = PowerMethodConfig {
        restarts: 0,
        ..PowerMethodConfig::default()
    };
    assert!(matches!(
        operator_norm_sup(&form, &cfg),
        Err(Error::Config(_))
    ));
}
