#![allow(dead_code)]

use fman::algebra::{make_dh_model, product_at, FModel};
use fman::expr::{BinOp, Expr};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn models_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("models")
}

/// Random block sizes with total dimension in 1..=max_n.
pub fn random_sizes(r: &mut impl Rng, max_n: usize) -> Vec<usize> {
    let n = r.gen_range(1..=max_n);
    let mut left = n;
    let mut sizes = Vec::new();
    while left > 0 {
        let m = r.gen_range(1..=left);
        sizes.push(m);
        left -= m;
    }
    sizes
}

/// Constant flow components satisfying the block cyclicity predicate.
pub fn cyclic_dh_flow(r: &mut impl Rng, sizes: &[usize]) -> Vec<f64> {
    let mut x = Vec::new();
    for (beta, &m) in sizes.iter().enumerate() {
        for i in 0..m {
            x.push(match i {
                0 => beta as f64 + r.gen_range(-0.3..0.3),
                1 => {
                    let s: f64 = r.gen_range(0.5..1.5);
                    if r.gen_bool(0.5) {
                        s
                    } else {
                        -s
                    }
                }
                _ => r.gen_range(-1.0..1.0),
            });
        }
    }
    x
}

/// Model with constant product given by the array `c` ((k*n+i)*n+j) and unit `e`.
pub fn constant_model(c: &[f64], e: &[f64]) -> FModel {
    let n = e.len();
    let names: Vec<String> = (1..=n).map(|i| format!("y{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut m = FModel::new("random-constant", &refs);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let v = c[(k * n + i) * n + j];
                if v != 0.0 {
                    m.set_c(k, i, j, Expr::Const(v));
                }
            }
        }
    }
    m.e = e.iter().map(|&v| Expr::Const(v)).collect();
    m
}

/// A block product with a cyclic constant flow, pulled back by a random
/// linear chart change, so c is constant but not block-structured.
pub fn random_cyclic_constant_model(r: &mut impl Rng, max_n: usize) -> (FModel, Vec<Expr>) {
    let sizes = random_sizes(r, max_n);
    let xv = cyclic_dh_flow(r, &sizes);
    let n = xv.len();
    let dh = make_dh_model(&sizes, xv.iter().map(|&v| Expr::Const(v)).collect()).unwrap();
    let c0 = product_at::<f64>(&dh, &vec![0.0; n], 0).unwrap().c_values();
    let e0: Vec<f64> = dh.e.iter().map(|e| e.as_constant().unwrap()).collect();
    let mut mm = DMatrix::<f64>::identity(n, n);
    for v in mm.iter_mut() {
        *v += r.gen_range(-0.4..0.4);
    }
    let inv = mm.clone().try_inverse().expect("perturbed identity is invertible");
    let mut c = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        for d in 0..n {
                            s += inv[(k, a)] * c0[(a * n + b) * n + d] * mm[(b, i)] * mm[(d, j)];
                        }
                    }
                }
                c[(k * n + i) * n + j] = s;
            }
        }
    }
    let e: Vec<f64> = (0..n).map(|k| (0..n).map(|a| inv[(k, a)] * e0[a]).sum()).collect();
    let x: Vec<Expr> = (0..n).map(|k| Expr::Const((0..n).map(|a| inv[(k, a)] * xv[a]).sum())).collect();
    let mut m = constant_model(&c, &e);
    m.add_field("X", x.clone());
    m.flow = Some("X".into());
    (m, x)
}

/// Row-major n×n metric with g(A^i e, A^j e) = φ(i+j) for A = X∘, φ random on
/// 0..n and continued by the characteristic recurrence of A.
pub fn hankel_metric(model: &FModel, x: &[f64], point: &[f64], r: &mut impl Rng) -> Vec<f64> {
    let n = model.dim();
    let pj = product_at::<f64>(model, point, 0).unwrap();
    let c = pj.c_values();
    let e: Vec<f64> = pj.e.iter().map(|j| j.value()).collect();
    let a = DMatrix::from_fn(n, n, |k, j| (0..n).map(|i| c[(k * n + i) * n + j] * x[i]).sum::<f64>());
    let mut cols = vec![nalgebra::DVector::from_vec(e)];
    for m in 1..=n {
        let next = &a * &cols[m - 1];
        cols.push(next);
    }
    let f = DMatrix::from_columns(&cols[..n]);
    let p = f.clone().lu().solve(&cols[n]).expect("cyclic frame");
    let mut phi: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    phi[0] += 2.0;
    for m in n..2 * n - 1 {
        let v = (0..n).map(|k| p[k] * phi[m - n + k]).sum();
        phi.push(v);
    }
    let h = DMatrix::from_fn(n, n, |i, j| phi[i + j]);
    let finv = f.try_inverse().expect("cyclic frame");
    let g = finv.transpose() * h * &finv;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = 0.5 * (g[(i, j)] + g[(j, i)]);
        }
    }
    out
}

fn rc(r: &mut impl Rng, s: f64) -> Expr {
    Expr::Const((r.gen_range(-s..s) * 1000.0_f64).round() / 1000.0)
}

/// Random quadratic polynomial in the given coordinates.
pub fn random_quadratic(r: &mut impl Rng, coords: &[String], constant: f64) -> Expr {
    let mut terms = vec![Expr::Const(constant)];
    for a in coords {
        terms.push(Expr::bin(BinOp::Mul, rc(r, 0.5), Expr::coord(a)));
    }
    let i = r.gen_range(0..coords.len());
    let j = r.gen_range(0..coords.len());
    terms.push(Expr::bin(BinOp::Mul, rc(r, 0.3), Expr::bin(BinOp::Mul, Expr::coord(&coords[i]), Expr::coord(&coords[j]))));
    Expr::sum(terms)
}

/// Block model with a random polynomial flow that is cyclic at the origin.
pub fn random_dh_model(r: &mut impl Rng, max_n: usize) -> (FModel, Vec<Expr>) {
    let sizes = random_sizes(r, max_n);
    let x0 = cyclic_dh_flow(r, &sizes);
    let n = x0.len();
    let coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let x: Vec<Expr> = x0.iter().map(|&v| random_quadratic(r, &coords, v)).collect();
    let m = make_dh_model(&sizes, x.clone()).unwrap();
    (m, x)
}

/// Evaluates the scaled determinant of n column vectors.
pub fn scaled_det(cols: &[Vec<f64>]) -> f64 {
    let n = cols.len();
    let m = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
    let norms: f64 = (0..n).map(|j| m.column(j).norm()).product();
    (m.determinant() / norms).abs()
}
