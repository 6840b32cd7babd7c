use std::collections::BTreeMap;

use lsness::aux::{build_generators, ReprParams};
use lsness::mpo::{build_density, check_defining_relation, check_sutherland, check_transfer_commutation, DensityMethod};
use lsness::observables::{doping, partition_function, Reduction, TransferContext, VertexOperator};
use lsness::oracle::LindbladModel;
use lsness::physical::{dim, hole_count, magnetization_operator, sector_states, PhysicalOperator};
use lsness::report::all_passed;
use num_complex::Complex64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn operator(n: usize) -> impl Strategy<Value = PhysicalOperator<Complex64>> {
    let d = dim(n);
    proptest::collection::vec(complex(), d * d).prop_map(move |v| {
        PhysicalOperator::from_entries(n, v.into_iter().enumerate().map(|(k, x)| (k / d, k % d, x))).unwrap()
    })
}

fn hermitian(n: usize) -> impl Strategy<Value = PhysicalOperator<Complex64>> {
    operator(n).prop_map(|a| a.add(&a.adjoint()).unwrap())
}

fn local(width: usize) -> impl Strategy<Value = BTreeMap<(usize, usize), Complex64>> {
    let d = 3usize.pow(width as u32);
    proptest::collection::vec(complex(), d * d)
        .prop_map(move |v| v.into_iter().enumerate().map(|(k, x)| ((k / d, k % d), x)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn liouvillian_preserves_trace_and_hermiticity(rho in hermitian(3), eps in 0.1f64..4.0) {
        let model = LindbladModel::new(3, eps).unwrap();
        let out = model.apply(&rho).unwrap();
        prop_assert!(out.trace().norm() < 1e-12 * rho.frobenius_norm().max(1.0));
        prop_assert!(out.sub(&out.adjoint()).unwrap().max_residual() < 1e-12 * rho.frobenius_norm().max(1.0));
    }

    #[test]
    fn liouvillian_closes_on_hole_sectors(v in proptest::collection::vec(complex(), 144), holes in 0usize..=3, eps in 0.1f64..4.0) {
        let states = sector_states(3, holes);
        let d = states.len();
        let rho = PhysicalOperator::from_entries(
            3,
            (0..d * d).map(|k| (states[k / d], states[k % d], v[k % v.len()])),
        ).unwrap();
        let out = LindbladModel::new(3, eps).unwrap().apply(&rho).unwrap();
        for (r, c) in out.entries().keys() {
            prop_assert_eq!(hole_count(*r, 3), holes);
            prop_assert_eq!(hole_count(*c, 3), holes);
        }
    }

    #[test]
    fn magnetization_is_a_weak_symmetry(rho in operator(2), eps in 0.1f64..4.0) {
        let model = LindbladModel::new(2, eps).unwrap();
        let m = magnetization_operator::<Complex64>(2);
        let lhs = m.commutator(&model.apply(&rho).unwrap()).unwrap();
        let rhs = model.apply(&m.commutator(&rho).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_residual() < 1e-12);
    }

    #[test]
    fn numeric_local_identities(eps in -3.0f64..3.0) {
        let lax = build_generators::<Complex64>(&ReprParams::new(eps, 4)).unwrap();
        prop_assert!(check_sutherland(&lax, 1e-10).passed);
        let reports = check_defining_relation::<Complex64>(3, &ReprParams::new(eps, 3), 1e-10).unwrap();
        prop_assert!(all_passed(&reports));
    }

    #[test]
    fn transfer_matrices_commute(a in (0.1f64..3.0, -2.0f64..2.0), b in (0.1f64..3.0, -2.0f64..2.0)) {
        prop_assert!(check_transfer_commutation(3, a, b, 1e-11).unwrap().passed);
    }

    #[test]
    fn partition_function_is_positive(n in 1usize..=10, eps in 0.05f64..6.0, mu in -10.0f64..10.0) {
        prop_assert!(partition_function(n, eps, mu).unwrap() > 0.0);
    }

    #[test]
    fn doping_routes_agree(eps in 0.2f64..3.0, mu in -3.0f64..3.0) {
        let d = doping(5, eps, mu).unwrap();
        prop_assert!((0.0..=1.0).contains(&d.sector_sum));
        prop_assert!((d.sector_sum - d.finite_difference).abs() < 1e-6);
    }

    #[test]
    fn reduction_is_exact(eps in 0.2f64..3.0, mu in -2.0f64..2.0, op in local(1), x in 1usize..=5) {
        let n = 5;
        let full = TransferContext::for_chain(n, eps, mu, Reduction::Full).unwrap();
        let red = TransferContext::for_chain(n, eps, mu, Reduction::Constrained).unwrap();
        let v = VertexOperator::from_local(1, &op).unwrap();
        let a = full.expectation(n, x, &v).unwrap();
        let b = red.expectation(n, x, &v).unwrap();
        prop_assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn auxiliary_and_physical_routes_agree(eps in 0.2f64..3.0, mu in -2.0f64..2.0, op in local(2), x in 1usize..=3) {
        let n = 4;
        let rho = build_density::<Complex64>(n, &ReprParams::new(eps, n as u32).with_mu(mu), DensityMethod::TwoLeg).unwrap();
        let phys = PhysicalOperator::local(n, x, 2, &op).matmul(&rho).unwrap().trace() / rho.trace();
        let ctx = TransferContext::for_chain(n, eps, mu, Reduction::Constrained).unwrap();
        let aux = ctx.expectation(n, x, &VertexOperator::from_local(2, &op).unwrap()).unwrap();
        prop_assert!((phys - aux).norm() < 1e-10 * phys.norm().max(1.0), "{} vs {}", phys, aux);
    }

    #[test]
    fn hermitian_observables_are_real(eps in 0.2f64..3.0, mu in -2.0f64..2.0, op in local(1), x in 1usize..=7) {
        let n = 7;
        let herm: BTreeMap<_, _> = op.iter().map(|(&(r, c), v)| ((r, c), v + op[&(c, r)].conj())).collect();
        let ctx = TransferContext::for_chain(n, eps, mu, Reduction::Constrained).unwrap();
        let v = ctx.expectation(n, x, &VertexOperator::from_local(1, &herm).unwrap()).unwrap();
        prop_assert!(v.im.abs() < 1e-10 * v.norm().max(1.0));
    }
}
