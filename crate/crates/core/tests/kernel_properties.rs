use gpcbo::kernel::KernelSpec;
use gpcbo::points::PointSet;
use proptest::prelude::*;

fn spec(which: u8, ell: f64, var: f64) -> KernelSpec {
    match which % 4 {
        0 => KernelSpec::squared_exponential(ell, var).unwrap(),
        1 => KernelSpec::matern(0.5, ell, var).unwrap(),
        2 => KernelSpec::matern(1.5, ell, var).unwrap(),
        _ => KernelSpec::matern(2.5, ell, var).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_is_symmetric_under_swap(
        which in 0u8..4,
        ell in 0.05f64..5.0,
        xs in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..12),
        ys in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..12),
    ) {
        let k = spec(which, ell, 1.3);
        let xs = PointSet::from_2d(&xs.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>()).unwrap();
        let ys = PointSet::from_2d(&ys.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>()).unwrap();
        let gxy = k.gram(&xs, &ys).unwrap();
        let gyx = k.gram(&ys, &xs).unwrap();
        prop_assert_eq!(gxy, gyx.transpose());
    }

    #[test]
    fn gram_is_positive_semidefinite(
        which in 0u8..4,
        ell in 0.05f64..5.0,
        var in 0.1f64..10.0,
        pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..=20),
    ) {
        let k = spec(which, ell, var);
        let xs = PointSet::from_2d(&pts.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>()).unwrap();
        let g = k.gram(&xs, &xs).unwrap();
        let eig = g.symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|&l| l >= -1e-10 * var), "{:?}", eig);
    }
}

/// Matérn kernel with ν = p + 1/2 from the generic finite-sum representation
/// `σ² e^{−√(2ν) s} p!/(2p)! Σ_i (p+i)!/(i!(p−i)!) (2√(2ν) s)^{p−i}`.
fn matern_sum(p: u32, r: f64, ell: f64, var: f64) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    let nu = f64::from(p) + 0.5;
    let z = (2.0 * nu).sqrt() * r / ell;
    let poly: f64 = (0..=p)
        .map(|i| fact(p + i) / (fact(i) * fact(p - i)) * (2.0 * z).powi((p - i) as i32))
        .sum();
    var * (-z).exp() * fact(p) / fact(2 * p) * poly
}

#[test]
fn closed_forms_match_generic_half_integer_sum() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let ell = rng.random_range(0.05..5.0);
        let var = rng.random_range(0.1..10.0);
        let r = rng.random_range(0.0..6.0 * ell);
        for p in 0..3u32 {
            let k = KernelSpec::matern(f64::from(p) + 0.5, ell, var).unwrap();
            let want = matern_sum(p, r, ell, var);
            worst = worst.max((k.eval(r).unwrap() - want).abs() / want);
        }
        let se = KernelSpec::squared_exponential(ell, var).unwrap();
        let want = var * (-(r * r) / (2.0 * ell * ell)).exp();
        worst = worst.max((se.eval(r).unwrap() - want).abs() / want);
    }
    assert!(worst <= 1e-12, "worst relative error {worst:e}");
}
