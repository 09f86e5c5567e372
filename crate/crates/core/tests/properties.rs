//! Invariants checked over generated inputs.

mod common;

use common::Audit;
use monogamy::bell::{chsh_forms, joint_table, local_2x2_membership_detail, Measurement, ProbabilityTable, Scenario};
use monogamy::entanglement::negativity;
use monogamy::extendibility::{check_extendible, Variant};
use monogamy::linalg::{hermitian_eig, kron, partial_trace, partial_transpose, ComplexMatrix};
use monogamy::sdp::{solve_feasibility, Constraint, SdpProblem, SdpStatus, SparseSymmetric};
use monogamy::states::{random_density, random_unitary};
use proptest::prelude::*;

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..=3, 2..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_of_product(da in 2usize..=3, db in 2usize..=3, s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_density(&[da], s1).unwrap();
        let b = random_density(&[db], s2).unwrap();
        let ab = a.tensor(&b);
        prop_assert!(ab.partial_trace(&[1]).unwrap().matrix().max_abs_diff(a.matrix()) < 1e-13);
        prop_assert!(ab.partial_trace(&[0]).unwrap().matrix().max_abs_diff(b.matrix()) < 1e-13);
    }

    #[test]
    fn partial_trace_preserves_trace(dims in dims_strategy(), seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let rho = random_density(&dims, seed).unwrap();
        let traced = pick.index(dims.len());
        let r = partial_trace(rho.op(), &[traced]).unwrap();
        prop_assert!((r.trace() - 1.0).abs() < 1e-13);
        prop_assert_eq!(r.dims().len(), dims.len() - 1);
    }

    #[test]
    fn partial_transpose_is_an_involution(dims in dims_strategy(), seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let rho = random_density(&dims, seed).unwrap();
        let i = pick.index(dims.len());
        let twice = partial_transpose(&partial_transpose(rho.op(), i).unwrap(), i).unwrap();
        prop_assert!(twice.matrix().max_abs_diff(rho.matrix()) == 0.0);
        prop_assert!((partial_transpose(rho.op(), i).unwrap().trace() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn eigendecomposition_reconstructs(dims in dims_strategy(), seed in any::<u64>()) {
        let rho = random_density(&dims, seed).unwrap();
        let eig = hermitian_eig(rho.op()).unwrap();
        let v = &eig.vectors;
        let n = v.rows();
        let d = ComplexMatrix::from_fn(n, n, |i, j| if i == j { eig.values[i].into() } else { 0.0.into() });
        let back = v.matmul(&d).matmul(&v.adjoint());
        prop_assert!(back.max_abs_diff(rho.matrix()) < 1e-12);
        prop_assert!(v.adjoint().matmul(v).max_abs_diff(&ComplexMatrix::identity(n)) < 1e-12);
    }

    #[test]
    fn negativity_is_local_unitary_invariant(seed in any::<u64>(), u1 in any::<u64>(), u2 in any::<u64>()) {
        let rho = random_density(&[2, 3], seed).unwrap();
        let u = kron(&random_unitary(2, u1), &random_unitary(3, u2));
        let moved = rho.conjugate_by(&u).unwrap();
        prop_assert!((negativity(&rho, 1).unwrap() - negativity(&moved, 1).unwrap()).abs() < 1e-11);
    }

    #[test]
    fn joint_tables_are_normalized_and_no_signaling(seed in any::<u64>(), na in 1usize..=4, nb in 1usize..=3) {
        let rho = random_density(&[2, 2], seed).unwrap();
        let alice: Vec<Measurement> = (0..na).map(|i| Measurement::random_projective(2, seed.wrapping_add(i as u64 + 1)).unwrap()).collect();
        let bob: Vec<Measurement> = (0..nb).map(|i| Measurement::random_projective(2, seed.wrapping_add(100 + i as u64)).unwrap()).collect();
        let t = joint_table(&rho, &Scenario::new(alice, bob).unwrap()).unwrap();
        prop_assert!(t.signaling() < 1e-12);
        for x in 0..na {
            for y in 0..nb {
                let total: f64 = (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).map(|(a, b)| t.get(x, y, a, b)).sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }
}

fn random_table(weights: &[f64]) -> ProbabilityTable {
    let total: f64 = weights.iter().sum();
    let mut p = vec![vec![vec![vec![0.0; 2]; 2]; 2]; 2];
    for (l, w) in weights.iter().enumerate() {
        let t = monogamy::bell::deterministic_table(l);
        for (x, px) in p.iter_mut().enumerate() {
            for (y, pxy) in px.iter_mut().enumerate() {
                for (a, pa) in pxy.iter_mut().enumerate() {
                    for (b, v) in pa.iter_mut().enumerate() {
                        *v += w / total * t.get(x, y, a, b);
                    }
                }
            }
        }
    }
    ProbabilityTable::new(p).unwrap()
}

fn random_problem(side: usize, rows: usize, entries: &[(usize, usize, f64)], rhs: &[f64]) -> SdpProblem {
    let mut cs = vec![Constraint::new(
        {
            let mut id = SparseSymmetric::new(side);
            (0..side).for_each(|i| id.push(i, i, 1.0));
            id
        },
        1.0,
    )];
    for r in 0..rows {
        let mut m = SparseSymmetric::new(side);
        for &(i, j, v) in entries.iter().skip(3 * r).take(3) {
            m.push(i % side, j % side, v);
        }
        cs.push(Constraint::new(m, rhs[r] / side as f64));
    }
    SdpProblem::new(side, cs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn convex_mixtures_of_strategies_are_local(weights in prop::collection::vec(0.01f64..1.0, 16)) {
        let t = random_table(&weights);
        let m = local_2x2_membership_detail(&t).unwrap();
        prop_assert!(m.member);
        prop_assert!(chsh_forms(&t).unwrap().iter().all(|f| *f <= 2.0 + 1e-9));
    }

    #[test]
    fn sdp_margin_is_monotone_and_deterministic(
        side in 2usize..=4,
        entries in prop::collection::vec((0usize..4, 0usize..4, -1.0f64..1.0), 6),
        rhs in prop::collection::vec(-0.3f64..0.3, 2),
    ) {
        let base = random_problem(side, 1, &entries, &rhs);
        let more = random_problem(side, 2, &entries, &rhs);
        let (Ok(a), Ok(b)) = (solve_feasibility(&base), solve_feasibility(&more)) else {
            return Ok(());
        };
        prop_assert!(b.margin <= a.margin + 1e-6, "{} then {}", a.margin, b.margin);
        let again = solve_feasibility(&base).unwrap();
        prop_assert_eq!(again.status, a.status);
        prop_assert!((again.margin - a.margin).abs() <= 1e-9);
        for (p, s) in [(&base, &a), (&more, &b)] {
            match s.status {
                SdpStatus::Feasible => prop_assert!(monogamy::sdp::verify_primal(s.witness.as_ref().unwrap(), p).unwrap()),
                SdpStatus::Infeasible => prop_assert!(monogamy::sdp::verify_farkas(s.certificate.as_ref().unwrap(), p).unwrap()),
                SdpStatus::Borderline => {}
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn extendibility_is_local_unitary_covariant(seed in any::<u64>(), u1 in any::<u64>(), u2 in any::<u64>()) {
        let rho = random_density(&[2, 2], seed).unwrap();
        let moved = rho.conjugate_by(&kron(&random_unitary(2, u1), &random_unitary(2, u2))).unwrap();
        let a = check_extendible(&rho, 2, Variant::PermutationInvariant).unwrap();
        let b = check_extendible(&moved, 2, Variant::PermutationInvariant).unwrap();
        let mut audit = Audit::default();
        audit.extension(&rho, &a);
        audit.extension(&moved, &b);
        prop_assert!(audit.failures.is_empty(), "{:?}", audit.failures);
        if a.margin.abs() > 1e-4 {
            prop_assert_eq!(a.status, b.status);
            prop_assert!((a.margin - b.margin).abs() < 1e-5, "{} vs {}", a.margin, b.margin);
        }
    }
}
