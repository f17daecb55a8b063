use dimfree::distributions::SeedSpec;
use dimfree::linalg::{
    effective_rank, operator_norm, psd_sqrt, sym_eigen, sym_eigenvalues, SymMatrix,
};
use proptest::prelude::*;
use rand::Rng;

fn random_symmetric(d: usize, seed: u64) -> SymMatrix {
    let mut rng = SeedSpec::new(seed, 0).rng();
    let mut data = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let x = rng.random_range(-1.0..1.0);
            data[i * d + j] = x;
            data[j * d + i] = x;
        }
    }
    SymMatrix::new(d, data).unwrap()
}

// det(A - xI) by Gaussian elimination with partial pivoting.
fn char_poly(a: &SymMatrix, x: f64) -> f64 {
    let d = a.dim();
    let mut m: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| a.get(i, j) - if i == j { x } else { 0.0 })
                .collect()
        })
        .collect();
    let mut det = 1.0;
    for c in 0..d {
        let p = (c..d)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..d {
            let f = m[r][c] / m[c][c];
            for k in c..d {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

fn bisection_eigenvalues(a: &SymMatrix) -> Vec<f64> {
    let bound = a.frobenius_norm() + 1.0;
    let steps = 20_000;
    let at = |i: usize| -bound + 2.0 * bound * i as f64 / steps as f64;
    let mut roots = Vec::new();
    for i in 0..steps {
        let (mut lo, mut hi) = (at(i), at(i + 1));
        let (flo, fhi) = (char_poly(a, lo), char_poly(a, hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo * fhi > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if char_poly(a, mid) * char_poly(a, lo) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

#[test]
fn eigenvalues_match_characteristic_polynomial_roots() {
    let a = random_symmetric(5, 42);
    let mut jacobi = sym_eigenvalues(&a).unwrap();
    jacobi.sort_by(f64::total_cmp);
    let oracle = bisection_eigenvalues(&a);
    assert_eq!(oracle.len(), 5);
    for (x, y) in jacobi.iter().zip(&oracle) {
        assert!((x - y).abs() < 1e-8, "{jacobi:?} vs {oracle:?}");
    }
}

#[test]
fn operator_norm_matches_power_iteration() {
    let a = random_symmetric(6, 11);
    // power iteration on A² avoids cancellation between ±λ
    let mut v = vec![1.0; 6];
    let mut est = 0.0;
    for _ in 0..20_000 {
        let w = a.matvec(&a.matvec(&v));
        let len = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.into_iter().map(|x| x / len).collect();
        est = len.sqrt();
    }
    assert!((operator_norm(&a).unwrap() - est).abs() < 1e-8);
}

fn orthogonal(d: usize, seed: u64) -> Vec<Vec<f64>> {
    sym_eigen(&random_symmetric(d, seed)).unwrap().eigenvectors
}

fn conjugate(a: &SymMatrix, q: &[Vec<f64>]) -> SymMatrix {
    let d = a.dim();
    SymMatrix::from_fn(d, |i, j| {
        let aj = a.matvec(&q[j]);
        q[i].iter().zip(&aj).map(|(x, y)| x * y).sum()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_reconstructs(d in 1usize..8, seed in any::<u64>()) {
        let a = random_symmetric(d, seed);
        let e = sym_eigen(&a).unwrap();
        let back = e.reconstruct();
        prop_assert!(back.sub(&a).unwrap().max_abs() <= 1e-9);
        for i in 0..d {
            for j in 0..d {
                let ip: f64 = e.eigenvectors[i].iter().zip(&e.eigenvectors[j]).map(|(x, y)| x * y).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((ip - target).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn operator_norm_is_orthogonally_invariant(d in 1usize..7, seed in any::<u64>()) {
        let a = random_symmetric(d, seed);
        let q = orthogonal(d, seed ^ 0x5555);
        let b = conjugate(&a, &q);
        prop_assert!((operator_norm(&a).unwrap() - operator_norm(&b).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn operator_norm_triangle_inequality(d in 1usize..7, s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_symmetric(d, s1);
        let b = random_symmetric(d, s2);
        let lhs = operator_norm(&a.add(&b).unwrap()).unwrap();
        prop_assert!(lhs <= operator_norm(&a).unwrap() + operator_norm(&b).unwrap() + 1e-12);
    }

    #[test]
    fn effective_rank_is_scale_invariant_and_bounded(d in 1usize..8, seed in any::<u64>(), c in 1e-3f64..1e3) {
        let a = random_symmetric(d, seed);
        let s = a.mul_symmetric(&a);
        let r = effective_rank(&s).unwrap();
        prop_assert!(r >= 1.0 - 1e-12 && r <= d as f64 + 1e-9);
        let rc = effective_rank(&s.scaled(c)).unwrap();
        prop_assert!((r - rc).abs() <= 1e-9 * r);
    }

    #[test]
    fn psd_sqrt_squares_back(d in 1usize..7, seed in any::<u64>()) {
        let a = random_symmetric(d, seed);
        let s = a.mul_symmetric(&a);
        let root = psd_sqrt(&s).unwrap();
        prop_assert!(root.mul_symmetric(&root).sub(&s).unwrap().max_abs() <= 1e-9);
    }
}

#[test]
fn effective_rank_rejects_zero_and_indefinite() {
    assert!(effective_rank(&SymMatrix::zeros(3)).is_err());
    assert!(effective_rank(&SymMatrix::diag(&[1.0, -1.0])).is_err());
    assert_eq!(effective_rank(&SymMatrix::identity(7)).unwrap(), 7.0);
}

#[test]
fn csv_round_trip() {
    let a = random_symmetric(4, 3);
    let mut buf = Vec::new();
    a.write_csv(&mut buf).unwrap();
    let b = SymMatrix::read_csv(buf.as_slice()).unwrap();
    assert!(a.sub(&b).unwrap().max_abs() <= 1e-15);
}
