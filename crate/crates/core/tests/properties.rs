use proptest::prelude::*;

use entdist::certificate::{build_certificate, build_certificate_for, verify_dual_feasibility};
use entdist::linalg::{herm_eig, kron, partial_transpose, permute_factors, psd_project};
use entdist::measures::fef;
use entdist::protocol::{self, default_completion, incomplete_bounds, protocol_success};
use entdist::random::{
    random_complex_matrix, random_hermitian, random_spectrum, random_unitary, seeded_rng,
};
use entdist::states::{build_ensemble, weyl_basis};
use entdist::{ComplexMatrix, SubsystemLayout};

fn layouts() -> impl Strategy<Value = (Vec<usize>, usize)> {
    prop::collection::vec(1usize..4, 2..4).prop_flat_map(|dims| {
        let n = dims.len();
        (Just(dims), 1..n)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_transpose_is_linear_involutive_and_trace_preserving(
        (dims, cut) in layouts(), seed in any::<u64>(), mask in 0u8..8
    ) {
        let layout = SubsystemLayout::new(dims.clone(), cut).unwrap();
        let factors: Vec<usize> = (0..dims.len()).filter(|k| mask & (1 << k) != 0).collect();
        let n = layout.total_dim();
        let mut rng = seeded_rng(seed);
        let a = random_complex_matrix(n, n, &mut rng);
        let b = random_complex_matrix(n, n, &mut rng);
        let t = |m: &ComplexMatrix| partial_transpose(m, &layout, &factors).unwrap();
        let mut combo = a.clone();
        combo.axpy(2.5, &b);
        let mut expected = t(&a);
        expected.axpy(2.5, &t(&b));
        prop_assert!(t(&combo).distance(&expected) < 1e-12);
        prop_assert!(t(&t(&a)).distance(&a) < 1e-12);
        prop_assert!((t(&a).trace() - a.trace()).norm() < 1e-12);
        let h = random_hermitian(n, &mut rng);
        prop_assert!(t(&h).is_hermitian());
    }

    #[test]
    fn swap_of_kron(da in 1usize..5, db in 1usize..5, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let a = random_complex_matrix(da, da, &mut rng);
        let b = random_complex_matrix(db, db, &mut rng);
        let layout = SubsystemLayout::bipartite(da, db).unwrap();
        let swapped = permute_factors(&kron(&a, &b), &layout, &[1, 0]).unwrap();
        prop_assert!(swapped.distance(&kron(&b, &a)) < 1e-12);
    }

    #[test]
    fn eigendecomposition_and_projection(n in 1usize..40, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let m = random_hermitian(n, &mut rng);
        let e = herm_eig(&m).unwrap();
        let scale = m.frobenius_norm().max(1.0);
        prop_assert!(e.reconstruct().distance(&m) < 1e-10 * scale);
        prop_assert!(e.eigenvectors.unitarity_defect() < 1e-10);
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let p = psd_project(&m).unwrap();
        prop_assert!(psd_project(&p).unwrap().distance(&p) < 1e-10 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analytic_bounds_meet_at_fef(d in 2usize..4, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let b = weyl_basis(d).unwrap().conjugated(&random_unitary(d, &mut rng)).unwrap();
        let s = random_spectrum(d, &mut rng);
        let f = fef(&s);
        let p = protocol_success(&b, &s).unwrap();
        prop_assert!((p.success - f).abs() < 1e-10);
        prop_assert!(p.max_term_deviation < 1e-10);
        let c = build_certificate(&b, &s).unwrap();
        prop_assert!((c.trace_value - f).abs() < 1e-12);
        let e = build_ensemble(&b, &s, d * d).unwrap();
        let r = verify_dual_feasibility(&c, &e, 1e-9).unwrap();
        prop_assert!(r.passed);
        prop_assert!(r.max_decomposition_residual < 1e-12);
    }

    #[test]
    fn incomplete_bound_ordering(d in 2usize..4, extra in 0usize..16, seed in any::<u64>(), projector in any::<bool>()) {
        let n = d + 1 + extra % (d * d - d - 1);
        let mut rng = seeded_rng(seed);
        let b = weyl_basis(d).unwrap();
        let s = random_spectrum(d, &mut rng);
        let c = default_completion(&b, n).unwrap();
        let strategy = if projector { protocol::Strategy::Projector } else { protocol::Strategy::Completion };
        let r = incomplete_bounds(&b, &s, n, &c, strategy).unwrap();
        prop_assert!(fef(&s) <= r.lower + 1e-12);
        prop_assert!(r.lower <= r.upper + 1e-10);
        prop_assert!(r.upper <= 1.0);
        let cert = build_certificate_for(&b, &s, n).unwrap();
        let e = build_ensemble(&b, &s, n).unwrap();
        prop_assert!(verify_dual_feasibility(&cert, &e, 1e-9).unwrap().passed);
    }
}
