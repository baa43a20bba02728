mod common;

use fman::algebra::{builtin_example, check_algebra_axioms};
use fman::modelfile::model_to_toml;
use fman::{load_model, parse_model_str, Error};

#[test]
fn shipped_models_match_builtins() {
    for name in ["twocomponent", "nonregular2d", "onedim", "dh-2-1"] {
        let file = load_model(common::models_dir().join(format!("{name}.toml"))).unwrap();
        let builtin = builtin_example(name).unwrap();
        assert_eq!(file, builtin, "{name}");
    }
}

#[test]
fn every_shipped_model_is_valid() {
    for entry in std::fs::read_dir(common::models_dir()).unwrap() {
        let path = entry.unwrap().path();
        let m = load_model(&path).unwrap();
        let rep = check_algebra_axioms(&m, &m.base.clone(), 1, 1e-10).unwrap();
        assert!(rep.passed(), "{}: {}", path.display(), rep.to_text());
        assert_eq!(parse_model_str(&model_to_toml(&m)).unwrap(), m);
    }
}

#[test]
fn twocomponent_file_contents() {
    let m = load_model(common::models_dir().join("twocomponent.toml")).unwrap();
    assert_eq!(m.dim(), 2);
    assert_eq!(m.c_expr(0, 0, 0).as_constant(), Some(1.0));
    assert_eq!(m.c_expr(1, 1, 1).as_constant(), Some(1.0));
    assert!(m.c_expr(0, 1, 1).is_zero() && m.c_expr(1, 0, 1).is_zero());
    let x = m.flow_field().unwrap();
    assert_eq!(fman::expr::eval_f64(&x[0], &m.coords, &[0.5, 2.0]).unwrap(), 1.0 - (-2.0f64).exp());
}

#[test]
fn out_of_range_product_index_is_a_dimension_error() {
    let text = r#"
[model]
name = "bad"
dim = 2
coords = ["a", "b"]

[product]
c.3.1.1 = "1"

[unit]
e = ["1", "0"]
"#;
    let err = parse_model_str(text).unwrap_err();
    assert!(matches!(err, Error::Dimension(_)), "{err}");
}
