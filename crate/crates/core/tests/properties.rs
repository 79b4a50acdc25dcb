//! Randomized invariants across the public API.

use proptest::prelude::*;

use floquet_core::diophantine::{
    density_witness, gamma_estimate, select_exponents, witness_threshold, DiophantineProfile, Interval,
};
use floquet_core::eigenlab::{assemble, eigenpair_track, sublevel_measure, TestFunction};
use floquet_core::linalg::{self, CMat, Complex64};
use floquet_core::perturbation::{decay_check, FourierPerturbation, MatrixSlice};
use floquet_core::reduction::bounds::{lemma51_check, lemma62_check};
use floquet_core::reduction::{critical_set, projector_bounds, ReductionContext};
use floquet_core::rs_series::{compose_trees, decompose_tree, enumerate_trees, rs_recursive, rs_tree_formula};
use floquet_core::spectrum::{FloquetGrid, LatticeIndex, SpectrumModel, TruncationWindow};

fn grid(omega: f64) -> FloquetGrid {
    FloquetGrid::new(SpectrumModel::quadratic(), omega, LatticeIndex::new(0, 1).unwrap()).unwrap()
}

prop_compose! {
    fn band()(amps in prop::collection::vec(-0.3f64..0.3, 1..4),
              decay in 0.5f64..3.0,
              diagonal in -0.3f64..0.3,
              phase in 0.0f64..std::f64::consts::TAU) -> FourierPerturbation {
        FourierPerturbation::band(amps, decay, diagonal).unwrap().with_phase(phase)
    }
}

/// Frequencies away from small rationals, where exact resonances stay out of the windows used here.
fn omega() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.618_033_988_749_895), Just(std::f64::consts::SQRT_2), Just(2.236_067_977_499_79), Just(1.324_717_957_244_746)]
}

fn context(omega: f64, v: &FourierPerturbation, window: TruncationWindow) -> ReductionContext {
    let g = grid(omega);
    let profile = DiophantineProfile::estimate(&g, select_exponents(20, 1.0, None).unwrap(), window).unwrap();
    ReductionContext::new(&g, v, &profile, window).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn truncated_operator_is_hermitian_with_matching_trace(v in band(), beta in -0.2f64..0.2) {
        let w = TruncationWindow::new(3, 4).unwrap();
        let op = assemble(&grid(1.618_033_988_749_895), &v, beta, w).unwrap();
        let m = op.matrix();
        prop_assert_eq!(linalg::hermiticity_defect(&m), 0.0);
        let (values, _) = linalg::hermitian_eigen(&m).unwrap();
        let trace: f64 = (0..m.nrows()).map(|i| m[(i, i)].re).sum();
        let sum: f64 = values.iter().sum();
        prop_assert!((sum - trace).abs() <= 1e-9 * trace.abs().max(1.0));
    }

    #[test]
    fn diagonal_shift_moves_the_tracked_eigenvalue(v in band(), beta in -0.05f64..0.05, shift in -0.5f64..0.5) {
        let w = TruncationWindow::new(3, 4).unwrap();
        let g = grid(1.618_033_988_749_895);
        let a = eigenpair_track(&assemble(&g, &v, beta, w).unwrap()).unwrap();
        let b = eigenpair_track(&assemble(&g, &v.shifted(shift), beta, w).unwrap()).unwrap();
        prop_assert!((b.detuning - (a.detuning - beta * shift)).abs() <= 1e-12);
        prop_assert!((a.overlap - b.overlap).abs() <= 1e-10);
    }

    #[test]
    fn reduced_operator_stays_within_twice_v(om in omega(), v in band(), sb in -1.0f64..1.0, sl in -1.0f64..1.0) {
        let ctx = context(om, &v, TruncationWindow::new(3, 5).unwrap());
        // w_slice itself refuses norms above 2 ||V||
        let w = ctx.w_slice(sb * ctx.beta_bound(), sl * ctx.lambda_bound()).unwrap();
        prop_assert!(w.schur_norm() <= 2.0 * ctx.v_norm * (1.0 + 1e-12));
        prop_assert!(linalg::hermiticity_defect(&w.entries) <= 1e-12 * ctx.v_norm.max(1e-300));
    }

    #[test]
    fn reduced_state_solves_its_equation(om in omega(), v in band(), sb in -1.0f64..1.0, sl in -1.0f64..1.0) {
        let ctx = context(om, &v, TruncationWindow::new(3, 5).unwrap());
        let (beta, lambda) = (sb * ctx.beta_bound(), sl * ctx.lambda_bound());
        if let Ok(st) = ctx.reduced_state(beta, lambda) {
            prop_assert!(st.residual <= 1e-8 * (1.0 + st.g_norm()));
            prop_assert!(st.g_value.is_finite());
            for vn in &st.v_diag {
                prop_assert!(vn.value >= 0.0);
            }
        }
    }

    #[test]
    fn projector_norms_respect_the_frequency(om in omega(), a in 1u32..20, b in 1u32..20) {
        let g = grid(om);
        let set = critical_set(&g, TruncationWindow::new(a, b).unwrap()).unwrap();
        let p = projector_bounds(&g, &set).unwrap();
        prop_assert!(p.norm_ks <= 0.5 * om);
        prop_assert!(p.norm_g0pr <= 2.0 / om * (1.0 + 1e-12));
        prop_assert!(set.members.len() + set.outside.len() + 1 == b as usize);
    }

    #[test]
    fn gamma_estimate_shrinks_with_the_window(om in omega(), a in 1u32..10, b in 1u32..10, da in 0u32..5, db in 0u32..5) {
        let g = grid(om);
        let small = gamma_estimate(&g, 1.25, TruncationWindow::new(a, b.max(2)).unwrap()).unwrap();
        let large = gamma_estimate(&g, 1.25, TruncationWindow::new(a + da, b.max(2) + db).unwrap()).unwrap();
        prop_assert!(large <= small);
        let prof = DiophantineProfile::new(&g, select_exponents(20, 1.0, None).unwrap(), small).unwrap();
        for k in 1..50 {
            prop_assert!(prof.psi(k) >= 2.0 * prof.psi_tilde(k));
        }
    }

    #[test]
    fn selected_exponents_satisfy_their_constraints(r in 2u32..80, alpha in 0.3f64..3.0, ell in prop::option::of(1u32..10)) {
        if let Ok(e) = select_exponents(r, alpha, ell) {
            prop_assert!(e.tau > 4.0 && e.sigma > 1.0 && 2.0 * e.sigma + 2.0 < e.tau);
            prop_assert!(e.tau * (e.ell as f64 + 2.0) <= r as f64 * alpha * (1.0 + 1e-12));
        }
    }

    #[test]
    fn commutator_estimates_hold(v in band(), r in 1u32..6, p in 1usize..4, scale in 0.05f64..0.95, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let w = TruncationWindow::new(3, 4).unwrap();
        let x = MatrixSlice::build(&v, w).unwrap().entries;
        let n = w.len();
        let mut diag = |radius: f64| -> Vec<Complex64> {
            (0..n).map(|_| Complex64::from_polar(radius * rng.random::<f64>(), rng.random_range(0.0..6.3))).collect()
        };
        let b: Vec<Vec<Complex64>> = (0..p).map(|_| diag(1.0)).collect();
        let c = lemma51_check(w, &x, &b, r).unwrap();
        prop_assert!(c.holds(), "{:?}", c);
        let top = floquet_core::reduction::bounds::ad_norms(w, &x, r).into_iter().fold(0.0f64, f64::max);
        if top > 0.0 {
            let c = lemma62_check(w, &x, &diag(scale / top), r).unwrap();
            prop_assert!(c.holds(), "{:?}", c);
        }
    }

    #[test]
    fn finite_bands_decay_at_every_order(v in band(), r in 1u32..12) {
        let rep = decay_check(&v, TruncationWindow::new(3, 4).unwrap(), r).unwrap();
        prop_assert!(rep.passed(), "{:?}", rep);
    }

    #[test]
    fn tree_formula_matches_recursion(om in omega(), v in band(), ell in 1usize..5) {
        let w = TruncationWindow::new(3, 4).unwrap();
        let g = grid(om);
        let a = rs_recursive(&g, &v, ell, w).unwrap();
        let b = rs_tree_formula(&g, &v, ell, w).unwrap();
        prop_assert!(a.max_relative_difference(&b, 1e-300) <= 1e-9);
        prop_assert_eq!(a.lambdas[0], 0.0);
    }

    #[test]
    fn witness_sets_are_disjoint_and_large(u in -1.0f64..1.0, width in 0.05f64..0.5, a_gap in 0.0f64..1.0,
                                           ratio in 1.1f64..3.0, stretch in 1e4f64..1e5) {
        let v = u + width;
        let comp = Interval::new(width + a_gap, (width + a_gap) * ratio).unwrap();
        let x = (witness_threshold(u, v, comp) + comp.hi) * stretch;
        let m = density_witness(u, v, &[comp], x).unwrap();
        for pair in m.windows(2) {
            prop_assert!(pair[0].hi < pair[1].lo);
        }
        let total: f64 = m.iter().map(Interval::len).sum();
        prop_assert!(total >= 0.25 * width * ratio.ln());
    }

    #[test]
    fn sublevel_sets_obey_the_curvature_bound(a in 0.1f64..10.0, x0 in -2.0f64..2.0, s in -2.0f64..2.0,
                                              kappa in 0.0f64..3.0, x1 in -2.0f64..2.0, eps in 1e-4f64..3.0, flip in any::<bool>()) {
        let h = TestFunction { curvature: a, x0, offset: s, kappa, x1, sign: if flip { -1.0 } else { 1.0 } };
        let m = sublevel_measure(&h, eps, (f64::NEG_INFINITY, f64::INFINITY));
        prop_assert!(m <= 4.0 * (eps / a).sqrt() + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn trees_split_uniquely(n in 2usize..10, pick in any::<prop::sample::Index>()) {
        let trees = enumerate_trees(n).unwrap();
        let t = &trees[pick.index(trees.len())];
        let (a, b) = decompose_tree(t).unwrap();
        prop_assert_eq!(a.size() + b.size(), n);
        prop_assert_eq!(&compose_trees(&a, &b), t);
    }
}

#[test]
fn windows_give_a_dense_reference_matrix() {
    // sanity anchor for the strategies above: the reference band couples eta
    let w = TruncationWindow::new(3, 4).unwrap();
    let v = FourierPerturbation::band(vec![0.1, 0.2], 2.0, 0.0).unwrap();
    let m: CMat = MatrixSlice::build(&v, w).unwrap().entries;
    let eta = w.index_of(LatticeIndex::new(0, 1).unwrap()).unwrap();
    assert!((0..w.len()).filter(|&i| m[(i, eta)].norm() > 0.0).count() > 4);
}
