use dimfree::distributions::{
    self, core_moment, materialize_sigma, sample, Core, CovarianceSpec, DistributionFamily,
    SeedSpec,
};
use dimfree::estimators::sample_covariance;
use dimfree::linalg::{effective_rank, operator_norm, SymMatrix};
use dimfree::Error;
use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};

fn family(core: Core, sigma: CovarianceSpec) -> DistributionFamily {
    DistributionFamily::new(core, sigma)
}

fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    let inner: f64 = (1..steps).map(|i| f(a + h * i as f64)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

#[test]
fn covariance_specs_materialize() {
    let poly = materialize_sigma(&CovarianceSpec::Polydecay { d: 3, alpha: 1.0 }).unwrap();
    assert_eq!(poly.diagonal(), vec![1.0, 0.5, 1.0 / 3.0]);
    let spiked = materialize_sigma(&CovarianceSpec::Spiked {
        d: 5,
        k: 1,
        strength: 10.0,
    })
    .unwrap();
    assert_eq!(spiked, SymMatrix::diag(&[10.0, 1.0, 1.0, 1.0, 1.0]));
    assert!((effective_rank(&spiked).unwrap() - 1.4).abs() < 1e-12);
    assert_eq!(
        materialize_sigma(&CovarianceSpec::Identity { d: 4 }).unwrap(),
        SymMatrix::identity(4)
    );
    let bad = CovarianceSpec::Explicit {
        matrix: SymMatrix::diag(&[1.0, -0.5]),
    };
    assert!(matches!(materialize_sigma(&bad), Err(Error::NotPsd { .. })));
}

#[test]
fn gaussian_covariance_converges() {
    let f = family(Core::Gaussian, CovarianceSpec::Identity { d: 2 });
    let x = sample(&f, 100_000, SeedSpec::new(1, 0)).unwrap();
    let dev = operator_norm(&sample_covariance(&x).sub(&SymMatrix::identity(2)).unwrap()).unwrap();
    assert!(dev < 0.05, "{dev}");
}

#[test]
fn mixed_covariance_converges() {
    let sigma = CovarianceSpec::Diag {
        values: vec![4.0, 1.0, 0.25],
    };
    for core in [
        Core::RademacherMix,
        Core::LaplaceProduct,
        Core::UniformBall,
        Core::StudentT { nu: 5.0 },
    ] {
        let f = family(core, sigma.clone());
        let x = sample(&f, 200_000, SeedSpec::new(2, 0)).unwrap();
        let dev = operator_norm(
            &sample_covariance(&x)
                .sub(&f.sigma_matrix().unwrap())
                .unwrap(),
        )
        .unwrap();
        assert!(dev < 0.1, "{} {dev}", core.name());
    }
}

#[test]
fn rademacher_values_are_signs() {
    let f = family(Core::RademacherMix, CovarianceSpec::Identity { d: 1 });
    let x = sample(&f, 1000, SeedSpec::new(3, 0)).unwrap();
    assert!(x.rows().all(|r| r[0] == 1.0 || r[0] == -1.0));
}

#[test]
fn laplace_coordinate_variance() {
    let f = family(Core::LaplaceProduct, CovarianceSpec::Identity { d: 3 });
    let x = sample(&f, 100_000, SeedSpec::new(4, 0)).unwrap();
    for j in 0..3 {
        let var = x.rows().map(|r| r[j] * r[j]).sum::<f64>() / 1e5;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }
}

#[test]
fn uniform_ball_stays_in_ball() {
    let f = family(Core::UniformBall, CovarianceSpec::Identity { d: 4 });
    let x = sample(&f, 10_000, SeedSpec::new(5, 0)).unwrap();
    let radius = 6f64.sqrt();
    assert!(x
        .rows()
        .all(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt() <= radius + 1e-12));
}

#[test]
fn empirical_means_vanish() {
    let f = family(Core::LaplaceProduct, CovarianceSpec::Identity { d: 2 });
    let n = 200_000;
    let limit = 4.0 * (1.0 / n as f64).sqrt();
    let mut good = 0;
    for rep in 0..100 {
        let x = sample(&f, n, SeedSpec::new(6, rep)).unwrap();
        let ok = (0..2).all(|j| (x.rows().map(|r| r[j]).sum::<f64>() / n as f64).abs() <= limit);
        good += usize::from(ok);
    }
    assert!(good >= 99, "{good}");
}

#[test]
fn samples_are_deterministic_across_threads() {
    let f = family(
        Core::StudentT { nu: 5.0 },
        CovarianceSpec::Polydecay { d: 6, alpha: 1.0 },
    );
    let one = sample(&f, 500, SeedSpec::new(7, 3)).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let draws: Vec<_> = pool.install(|| {
        use rayon::prelude::*;
        (0..4)
            .into_par_iter()
            .map(|_| sample(&f, 500, SeedSpec::new(7, 3)).unwrap())
            .collect()
    });
    assert!(draws.iter().all(|d| *d == one));
    assert_ne!(sample(&f, 500, SeedSpec::new(7, 4)).unwrap(), one);
}

#[test]
fn psi_constants() {
    let g = family(Core::Gaussian, CovarianceSpec::Identity { d: 3 });
    assert!((distributions::kappa_psi2(&g).unwrap() - (8.0f64 / 3.0).sqrt()).abs() < 1e-9);
    let r = family(Core::RademacherMix, CovarianceSpec::Identity { d: 3 });
    assert!((distributions::kappa_psi2(&r).unwrap() - 1.0 / 2f64.ln().sqrt()).abs() < 1e-9);
    let l = family(Core::LaplaceProduct, CovarianceSpec::Identity { d: 1 });
    assert!((distributions::kappa_psi1(&l).unwrap() - 2f64.sqrt()).abs() < 1e-9);
    assert!(matches!(
        distributions::kappa_psi2(&l),
        Err(Error::NotSubGaussian(_))
    ));
    let t = family(
        Core::StudentT { nu: 5.0 },
        CovarianceSpec::Identity { d: 1 },
    );
    assert!(matches!(
        distributions::kappa_psi2(&t),
        Err(Error::NotSubGaussian(_))
    ));
    assert!(distributions::eta(&t, 2).is_ok());
    assert!(matches!(
        distributions::eta(&t, 3),
        Err(Error::MomentDoesNotExist { .. })
    ));
}

#[test]
fn gaussian_psi2_solves_defining_equation() {
    // E exp(Z²/c²) = ∫ φ(x) e^{x²/c²} dx = 2
    let c = distributions::kappa_psi2(&family(Core::Gaussian, CovarianceSpec::Identity { d: 1 }))
        .unwrap();
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    let value = trapezoid(
        |x| (x * x * (1.0 / (c * c) - 0.5)).exp() / norm,
        -200.0,
        200.0,
        400_000,
    );
    assert!((value - 2.0).abs() < 1e-6, "{value}");
}

#[test]
fn laplace_core_obeys_subexponential_mgf_bound() {
    let f = family(Core::LaplaceProduct, CovarianceSpec::Identity { d: 1 });
    let k = distributions::kappa_psi1(&f).unwrap();
    let n = 200_000;
    let x = sample(&f, n, SeedSpec::new(8, 0)).unwrap();
    for lambda in [
        1.0 / (4.0 * k),
        -1.0 / (4.0 * k),
        1.0 / (2.0 * k),
        -1.0 / (2.0 * k),
    ] {
        let vals: Vec<f64> = x.rows().map(|r| (lambda * r[0]).exp()).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!(mean - 3.0 * se <= (4.0 * lambda * lambda * k * k).exp());
    }
}

#[test]
fn student_t_fourth_moment() {
    let nu = 5.0;
    // unit-variance scaling divides by sqrt(nu/(nu-2))
    let t = StudentsT::new(0.0, 1.0, nu).unwrap();
    let scale = nu / (nu - 2.0);
    // x = tan θ keeps the x⁴ tail integrable on a bounded interval
    let half = std::f64::consts::FRAC_PI_2;
    let integrand = |th: f64| {
        let x = th.tan();
        x.powi(4) * t.pdf(x) * (1.0 + x * x)
    };
    let oracle = trapezoid(integrand, -half + 1e-9, half - 1e-9, 2_000_000) / (scale * scale);
    assert!((oracle - 9.0).abs() < 1e-3, "{oracle}");
    let exact = core_moment(Core::StudentT { nu }, 1, 4).unwrap();
    assert!((exact - oracle).abs() < 1e-3);
    let f = family(Core::StudentT { nu }, CovarianceSpec::Identity { d: 1 });
    // the estimator has infinite variance, so its spread shrinks slowly with n
    let n = 10_000_000;
    let x = sample(&f, n, SeedSpec::new(9, 0)).unwrap();
    let m4 = x.rows().map(|r| r[0].powi(4)).sum::<f64>() / n as f64;
    assert!(m4.is_finite() && (m4 - 9.0).abs() <= 0.15 * 9.0, "{m4}");
}

#[test]
fn student_t_matches_reference_cdf() {
    let nu = 5.0;
    let t = StudentsT::new(0.0, 1.0, nu).unwrap();
    let f = family(Core::StudentT { nu }, CovarianceSpec::Identity { d: 1 });
    let n = 100_000;
    let x = sample(&f, n, SeedSpec::new(10, 0)).unwrap();
    let scale = (nu / (nu - 2.0)).sqrt();
    let mut v: Vec<f64> = x.rows().map(|r| r[0] * scale).collect();
    v.sort_by(f64::total_cmp);
    let ks = v
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let c = t.cdf(z);
            (c - i as f64 / n as f64)
                .abs()
                .max(((i + 1) as f64 / n as f64 - c).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value 1.63/√n
    assert!(ks < 1.63 / (n as f64).sqrt(), "{ks}");
}

#[test]
fn l4_constants() {
    let t = family(
        Core::StudentT { nu: 5.0 },
        CovarianceSpec::Spiked {
            d: 10,
            k: 1,
            strength: 10.0,
        },
    );
    assert!((distributions::kappa_l4(&t).unwrap().powi(2) - 3.0).abs() < 1e-9);
    let g = family(Core::Gaussian, CovarianceSpec::Identity { d: 3 });
    assert!((distributions::kappa_l4(&g).unwrap().powi(4) - 3.0).abs() < 1e-9);
}

#[test]
fn seed_streams_differ() {
    let mut a = SeedSpec::new(1, 0).rng();
    let mut b = SeedSpec::new(1, 1).rng();
    let mut c = SeedSpec::new(2, 0).rng();
    let x: u64 = a.random();
    assert_ne!(x, b.random::<u64>());
    assert_ne!(x, c.random::<u64>());
    assert_eq!(x, SeedSpec::new(1, 0).rng().random::<u64>());
}
