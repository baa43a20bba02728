mod common;

use fman::algebra::builtin_example;
use fman::connection::{build_natural_connection, check_connection_axioms, ChristoffelJet, CounitChoice};
use fman::expr::Expr;
use fman::jet::Jet;
use fman::metric::{
    check_dn, check_gfromnabla, check_invariance, check_nonlocal_conditions, check_riemannian_f,
    connection_from_metric, conservation_check, levi_civita, DensitySet, MetricJet,
};
use fman::{load_model, FModel};
use rand::Rng;

const FULL: &str = "full invariance g(Y o Z,W) - g(Y,Z o W)";
const PARTIAL: &str = "partial invariance g(X o Y,Z) - g(Y,X o Z)";

fn twocomponent() -> (FModel, Vec<Expr>) {
    let m = builtin_example("twocomponent").unwrap();
    let x = m.flow_field().unwrap().to_vec();
    (m, x)
}

fn constant_metric(m: &FModel, g: &[f64], p: &[f64], order: usize) -> MetricJet<f64> {
    let n = m.dim();
    let jets = g.iter().map(|&v| Jet::constant(n, order, v)).collect();
    MetricJet::from_jets(p.to_vec(), n, jets).unwrap()
}

#[test]
fn twocomponent_metric_passes_every_bridge() {
    let (m, x) = twocomponent();
    let p = [0.3, -0.2];
    let g = MetricJet::from_model(&m, &p, 3).unwrap();
    let inv = check_invariance(&g, &m, &x, 1e-10).unwrap();
    assert!(inv.residual(FULL).unwrap() < 1e-12, "{}", inv.to_text());
    assert!(check_dn(&g, &m, &x, 1e-10).unwrap().passed());
    assert!(check_riemannian_f(&g, &m, 1e-9).unwrap().passed());

    let gamma = connection_from_metric(&g, &m).unwrap();
    let rep = check_connection_axioms(&gamma, &m, &x, &p, 1e-10).unwrap();
    assert!(rep.residual("nabla e").unwrap() < 1e-10, "{}", rep.to_text());
    assert!(rep.residual("full symmetry of nabla o").unwrap() < 1e-10);
    assert!(check_gfromnabla(&g, &gamma, &m, 1e-10).unwrap().passed());

    let natural = build_natural_connection(&m, &x, &p, gamma.order, &CounitChoice::Default).unwrap();
    assert!(natural.max_diff(&gamma) < 1e-10);
}

#[test]
fn semiham_model_file_is_dubrovin_novikov() {
    let m = load_model(common::models_dir().join("semiham3.toml")).unwrap();
    let x = m.flow_field().unwrap().to_vec();
    let p = m.base.clone();
    let g = MetricJet::from_model(&m, &p, 3).unwrap();
    assert!(check_invariance(&g, &m, &x, 1e-10).unwrap().passed());
    assert!(check_dn(&g, &m, &x, 1e-10).unwrap().passed());
    assert!(check_riemannian_f(&g, &m, 1e-9).unwrap().passed());
}

#[test]
fn cyclic_metrics_are_invariant_and_perturbations_are_not() {
    let mut r = common::rng(2024);
    for _ in 0..20 {
        let (m, x) = common::random_cyclic_constant_model(&mut r, 4);
        let n = m.dim();
        let xv: Vec<f64> = x.iter().map(|e| e.as_constant().unwrap()).collect();
        let p = vec![0.0; n];
        let gv = common::hankel_metric(&m, &xv, &p, &mut r);
        let g = constant_metric(&m, &gv, &p, 1);
        let rep = check_invariance(&g, &m, &x, 1e-10).unwrap();
        assert!(rep.residual(FULL).unwrap() < 1e-10, "{}", rep.to_text());
        if n >= 2 {
            let mut bad = gv.clone();
            let d: f64 = r.gen_range(0.1..0.3);
            bad[1] += d;
            bad[n] += d;
            let g = constant_metric(&m, &bad, &p, 1);
            let rep = check_invariance(&g, &m, &x, 1e-10).unwrap();
            assert!(rep.residual(PARTIAL).unwrap() > 1e-6, "{}", rep.to_text());
        }
    }
}

#[test]
fn non_self_adjoint_flow_fails_dn() {
    let (m, x) = twocomponent();
    let p = [0.3, 0.5];
    let g = constant_metric(&m, &[1.0, 0.3, 0.3, 1.0], &p, 2);
    let rep = check_dn(&g, &m, &x, 1e-10).unwrap();
    assert!(rep.residual("DN1 g_ik V^k_j - g_jk V^k_i").unwrap() > 1e-3, "{}", rep.to_text());
}

#[test]
fn flat_metric_and_zero_connection_are_compatible() {
    let (m, _) = twocomponent();
    let p = [0.1, 0.2];
    let g = constant_metric(&m, &[1.0, 0.0, 0.0, 1.0], &p, 2);
    assert!(levi_civita(&g).unwrap().values().iter().all(|v: &f64| v.abs() < 1e-15));
    let zero = ChristoffelJet::zero(p.to_vec(), 2, 1);
    assert_eq!(check_gfromnabla(&g, &zero, &m, 1e-12).unwrap().max_residual(), 0.0);

    let mut r = common::rng(5);
    let mut rand_gamma = ChristoffelJet::zero(p.to_vec(), 2, 1);
    for i in 0..2 {
        for j in 0..2 {
            for k in j..2 {
                rand_gamma.set(i, j, k, Jet::constant(2, 1, r.gen_range(-1.0..1.0)));
            }
        }
    }
    assert!(check_gfromnabla(&g, &rand_gamma, &m, 1e-10).unwrap().max_residual() > 1e-3);
    assert!(check_riemannian_f(&g, &m, 1e-12).unwrap().passed());
}

#[test]
fn perturbed_metric_breaks_riemannian_condition() {
    let (m, _) = twocomponent();
    let coords = m.coords.clone();
    let g = vec![
        vec![Expr::parse("exp(2*r2)"), Expr::parse("0.2*r1*r2")],
        vec![Expr::parse("0.2*r1*r2"), Expr::parse("1 + 0.3*r1^2")],
    ];
    let g = MetricJet::from_exprs(&g, &coords, &[0.4, 0.3], 3).unwrap();
    assert!(!check_riemannian_f(&g, &m, 1e-9).unwrap().passed());
}

/// Unit affinor on a constant-curvature metric: the curvature condition
/// holds exactly when the sign equals the curvature.
#[test]
fn nonlocal_sign_matches_curvature() {
    let (m, x) = twocomponent();
    let p = [0.2, 0.1];
    let g = MetricJet::from_model(&m, &p, 3).unwrap();
    let e = m.e.clone();
    let cond = "R^ij_kh - sum eps (W^j_k W^i_h - W^i_k W^j_h)";
    let ok = check_nonlocal_conditions(&g, &m, &[(e.clone(), -1.0)], 1e-9).unwrap();
    assert!(ok.passed(), "{}", ok.to_text());
    let bad = check_nonlocal_conditions(&g, &m, &[(e.clone(), 1.0)], 1e-9).unwrap();
    assert!(bad.residual(cond).unwrap() > 1.0);

    let flat = constant_metric(&m, &[1.0, 0.0, 0.0, 1.0], &p, 3);
    assert!(check_nonlocal_conditions(&flat, &m, &[(e.clone(), 0.0)], 1e-12).unwrap().passed());
    assert!(!check_nonlocal_conditions(&flat, &m, &[(e, 0.5)], 1e-9).unwrap().passed());

    let w = m.field("w").unwrap().to_vec();
    let rep = check_nonlocal_conditions(&g, &m, &[(x, 0.3), (w, -0.7)], 1e-9).unwrap();
    assert!(rep.residual("[W_a, W_b]").unwrap() < 1e-12);
}

#[test]
fn twocomponent_densities_are_conserved() {
    let (m, x) = twocomponent();
    let p = [0.3, 0.6];
    let gamma = build_natural_connection(&m, &x, &p, 2, &CounitChoice::Default).unwrap();
    let d = DensitySet::from_model(&m);
    assert_eq!(d.len(), 2);
    let rep = conserve(&m, &x, &gamma, &d);
    assert!(rep.passed(), "{}", rep.to_text());
    assert!(rep.residual("3RC (implied by independent conservation laws)").is_some());

    let bad = DensitySet { names: vec!["q".into()], exprs: vec![Expr::parse("r1*r2")] };
    let rep = conserve(&m, &x, &gamma, &bad);
    assert!(rep.residual("flux closedness d(C_X^* dh)").unwrap() > 1e-3, "{}", rep.to_text());
}

fn conserve(m: &FModel, x: &[Expr], gamma: &ChristoffelJet<f64>, d: &DensitySet) -> fman::Report {
    conservation_check(m, x, gamma, d, 1e-9).unwrap()
}
