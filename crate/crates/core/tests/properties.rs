use num_complex::Complex64;
use proptest::prelude::*;
use superfock::car::gns::{GnsRep, DEFAULT_GNS_BUDGET_BYTES};
use superfock::car::jordan_wigner::FiniteCARAlgebra;
use superfock::car::quasifree::{normal_ordered_moment, quasi_free_moment, wick_moment, Letter, QuasiFreeSpec};
use superfock::cohomology::cochain::{Cochain, SignConvention};
use superfock::cohomology::two_addit::clifford_two_addit;
use superfock::grid::{GridInterval, MultiplicitySpace};
use superfock::harness::{run_suite, RunConfig};
use superfock::linalg::c64;
use superfock::modes::ModeSet;
use superfock::rng;
use superfock::sps::SuperProductSystem;

fn vector(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len).prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jordan_wigner_fields_satisfy_car(f in vector(5), g in vector(5)) {
        let alg = FiniteCARAlgebra::new(5, false).unwrap();
        let (anti, mixed) = alg.car_defects(&f, &g).unwrap();
        prop_assert!(anti < 1e-13 && mixed < 1e-13);
    }

    #[test]
    fn wedge_sign_is_antisymmetric(a in prop::collection::btree_set(0usize..40, 0..5), b in prop::collection::btree_set(0usize..40, 0..5)) {
        let x = ModeSet::from_modes(a.iter().copied());
        let y = ModeSet::from_modes(b.iter().copied());
        match (x.wedge_sign(&y), y.wedge_sign(&x)) {
            (Some(s), Some(t)) => {
                let parity = if (x.len() * y.len()) % 2 == 0 { 1.0 } else { -1.0 };
                prop_assert_eq!(s * t, parity);
            }
            (None, None) => prop_assert!(!x.is_disjoint(&y)),
            _ => prop_assert!(false, "wedge sign defined in one order only"),
        }
    }

    #[test]
    fn product_map_is_isometric(seed in any::<u64>(), s in 1usize..4, t in 1usize..4) {
        let sps = SuperProductSystem::new(GridInterval::unit(6).unwrap(), MultiplicitySpace::new(2).unwrap(), Some(4)).unwrap();
        let mut r = rng::seeded(seed);
        let x = sps.random_fiber_vector(&mut r, s, 2, 32);
        let x2 = sps.random_fiber_vector(&mut r, s, 2, 32);
        let y = sps.random_fiber_vector(&mut r, t, 2, 32);
        let y2 = sps.random_fiber_vector(&mut r, t, 2, 32);
        let scale = (x.norm() * x2.norm() * y.norm() * y2.norm()).max(1.0);
        prop_assert!(sps.isometry_defect(s, t, (&x, &x2), (&y, &y2)).unwrap() < 1e-12 * scale);
    }

    #[test]
    fn coboundary_squares_to_zero(seed in any::<u64>(), degree in 0usize..3) {
        let sps = SuperProductSystem::new(GridInterval::unit(5).unwrap(), MultiplicitySpace::new(1).unwrap(), Some(3)).unwrap();
        let mut r = rng::seeded(seed);
        let c = Cochain::random_adapted(&sps, &mut r, degree, 5, 3, 8).unwrap();
        let alt = SignConvention::Alternating;
        let dd = c.coboundary(&sps, alt).unwrap().coboundary(&sps, alt).unwrap();
        prop_assert!(dd.max_norm() < 1e-12 * c.max_norm().max(1.0));
    }

    #[test]
    fn clifford_families_are_two_addits(seed in any::<u64>()) {
        let sps = SuperProductSystem::clifford(GridInterval::unit(5).unwrap(), MultiplicitySpace::new(2).unwrap(), Some(2)).unwrap();
        let mut r = rng::seeded(seed);
        let f: Vec<_> = (0..5).map(|_| rng::complex_matrix(&mut r, 2, 2)).collect();
        let a = clifford_two_addit(&sps, &f).unwrap();
        prop_assert!(a.identity_defect(&sps).unwrap().max_defect < 1e-12);
        prop_assert!(a.defectiveness(&sps) < 1e-12);
    }

    #[test]
    fn determinant_wick_and_gns_agree(lambda in 0.05..0.95f64, x in vector(2), y in vector(2), x2 in vector(2), y2 in vector(2)) {
        let spec = QuasiFreeSpec::scalar(lambda, 1).unwrap();
        let g = GnsRep::new(spec.clone(), 2, DEFAULT_GNS_BUDGET_BYTES).unwrap();
        // a(x2) a(x) a*(y) a*(y2)
        let word = [
            Letter::annihilation(x2.clone()),
            Letter::annihilation(x.clone()),
            Letter::creation(y.clone()),
            Letter::creation(y2.clone()),
        ];
        let det = quasi_free_moment(&spec, 2, &[x.clone(), x2.clone()], &[y.clone(), y2.clone()]).unwrap();
        prop_assert!((wick_moment(&spec, 2, &word).unwrap() - det).norm() < 1e-12);
        prop_assert!((g.word_moment(&word).unwrap() - det).norm() < 1e-10);
        // a*(y) a*(y2) a(x2) a(x)
        let normal = [
            Letter::creation(y.clone()),
            Letter::creation(y2.clone()),
            Letter::annihilation(x2.clone()),
            Letter::annihilation(x.clone()),
        ];
        let det = normal_ordered_moment(&spec, 2, &[x, x2], &[y, y2]).unwrap();
        prop_assert!((g.word_moment(&normal).unwrap() - det).norm() < 1e-10);
    }

    #[test]
    fn parity_commutes_with_even_products(f in vector(3), g in vector(3)) {
        let alg = FiniteCARAlgebra::new(3, false).unwrap();
        let p = alg.parity().to_dense();
        let prod = alg.annihilation(&f).unwrap().mul(&alg.creation(&g).unwrap()).to_dense();
        prop_assert!((&p * &prod - &prod * &p).norm() < 1e-13);
        let odd = alg.annihilation(&f).unwrap().to_dense();
        prop_assert!((&p * &odd + &odd * &p).norm() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn reports_are_reproducible(seed in any::<u64>(), cells in 2usize..5) {
        let cfg = RunConfig { suites: vec!["fock-check".into(), "sps-check".into()], seed, n_cells: cells, ..RunConfig::default() };
        let a = run_suite(&cfg).unwrap();
        let b = run_suite(&cfg).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
        prop_assert!(a.passed());
    }
}

#[test]
fn zero_vector_has_zero_moments() {
    let spec = QuasiFreeSpec::scalar(0.4, 1).unwrap();
    let z = vec![c64(0.0); 2];
    assert_eq!(quasi_free_moment(&spec, 2, &[z.clone()], &[z]).unwrap(), c64(0.0));
}
