mod common;

use fman::algebra::{check_algebra_axioms, check_cyclic, dh_cyclic_predicate, make_dh_model};
use fman::connection::{build_natural_connection, check_connection_axioms, CounitChoice};
use fman::curvature::{obstruction_tensors, riemann_tensor};
use fman::expr::Expr;
use fman::symmetry::adapt_chart;
use proptest::prelude::*;
use rand::Rng;

const CYCLIC_TOL: f64 = 1e-8;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// The frame determinant test agrees with the block predicate.
    #[test]
    fn cyclicity_matches_block_predicate(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let sizes = common::random_sizes(&mut r, 5);
        let mut x = common::cyclic_dh_flow(&mut r, &sizes);
        // Break the predicate half the time, in one of the two possible ways.
        if r.gen_bool(0.5) {
            let starts: Vec<usize> = sizes.iter().scan(0, |o, &m| { let s = *o; *o += m; Some(s) }).collect();
            let long: Vec<usize> = starts.iter().zip(&sizes).filter(|(_, &m)| m >= 2).map(|(&s, _)| s).collect();
            if !long.is_empty() && (starts.len() < 2 || r.gen_bool(0.5)) {
                x[long[r.gen_range(0..long.len())] + 1] = 0.0;
            } else if starts.len() >= 2 {
                x[starts[1]] = x[starts[0]];
            }
        }
        let m = make_dh_model(&sizes, x.iter().map(|&v| Expr::Const(v)).collect()).unwrap();
        let rep = check_cyclic(&m, m.flow_field().unwrap(), &vec![0.0; x.len()], CYCLIC_TOL).unwrap();
        prop_assert_eq!(rep.passed(), dh_cyclic_predicate(&sizes, &x, CYCLIC_TOL));
    }

    /// Natural connections of random cyclic constant products satisfy every axiom.
    #[test]
    fn natural_connection_axioms_hold(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let (m, x) = common::random_cyclic_constant_model(&mut r, 4);
        let p = vec![0.0; m.dim()];
        prop_assert!(check_algebra_axioms(&m, &p, 1, 1e-10).unwrap().passed());
        let g = build_natural_connection(&m, &x, &p, 1, &CounitChoice::Default).unwrap();
        let rep = check_connection_axioms(&g, &m, &x, &p, 1e-9).unwrap();
        prop_assert!(rep.passed(), "{}", rep.to_text());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// The second-order obstruction equals the curvature combination, and the
    /// connection's curvature satisfies the first Bianchi identity.
    #[test]
    fn obstruction_couples_to_curvature(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let (m, _) = common::random_dh_model(&mut r, 4);
        let a = adapt_chart(&m).unwrap();
        let x = a.flow_field().unwrap().to_vec();
        let p = vec![0.0; a.dim()];
        let ob = obstruction_tensors(&a, &x, &p, 3).unwrap();
        prop_assert!(ob.max_c() < 1e-9);
        prop_assert!(ob.max_a() < 1e-9);
        prop_assert!(ob.b_identity_residual() < 1e-9);
        let g = build_natural_connection(&a, &x, &p, 2, &CounitChoice::Default).unwrap();
        prop_assert!(riemann_tensor(&g).unwrap().bianchi_residual() < 1e-9);
    }
}
