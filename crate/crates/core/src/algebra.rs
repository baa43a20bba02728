//! F-manifold chart models, pointwise product jets, axiom and cyclicity
//! checks, and the builtin examples.

use crate::error::{Error, Result};
use crate::expr::{eval_expr_jet, Expr};
use crate::jet::Jet;
use crate::report::Report;
use crate::scalar::Scalar;
use std::collections::BTreeMap;

/// One chart of an F-manifold. Indices are 0-based; `c[(k, i, j)]` is
/// c^k_{ij} with ∂_i∘∂_j = c^k_{ij} ∂_k, and missing entries read as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FModel {
    pub name: String,
    pub coords: Vec<String>,
    pub c: BTreeMap<(usize, usize, usize), Expr>,
    pub e: Vec<Expr>,
    pub fields: BTreeMap<String, Vec<Expr>>,
    /// Name of the designated flow field X, if any.
    pub flow: Option<String>,
    pub metric: Option<Vec<Vec<Expr>>>,
    pub densities: BTreeMap<String, Expr>,
    /// Cauchy data along the unit curve: one coefficient list per component.
    pub data: BTreeMap<String, Vec<Vec<f64>>>,
    pub base: Vec<f64>,
}

impl FModel {
    pub fn new(name: &str, coords: &[&str]) -> Self {
        let n = coords.len();
        FModel {
            name: name.to_string(),
            coords: coords.iter().map(|s| s.to_string()).collect(),
            c: BTreeMap::new(),
            e: vec![Expr::Const(0.0); n],
            fields: BTreeMap::new(),
            flow: None,
            metric: None,
            densities: BTreeMap::new(),
            data: BTreeMap::new(),
            base: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn set_c(&mut self, k: usize, i: usize, j: usize, e: Expr) {
        if e.is_zero() {
            self.c.remove(&(k, i, j));
        } else {
            self.c.insert((k, i, j), e);
        }
    }

    /// Sets c^k_{ij} and c^k_{ji} together.
    pub fn set_c_sym(&mut self, k: usize, i: usize, j: usize, e: Expr) {
        self.set_c(k, j, i, e.clone());
        self.set_c(k, i, j, e);
    }

    pub fn c_expr(&self, k: usize, i: usize, j: usize) -> Expr {
        self.c.get(&(k, i, j)).cloned().unwrap_or(Expr::Const(0.0))
    }

    pub fn add_field(&mut self, name: &str, comps: Vec<Expr>) {
        self.fields.insert(name.to_string(), comps);
    }

    /// Components of a named field; `e` names the unit when no field shadows it.
    pub fn field(&self, name: &str) -> Result<&[Expr]> {
        if let Some(f) = self.fields.get(name) {
            return Ok(f);
        }
        if name == "e" {
            return Ok(&self.e);
        }
        Err(Error::Model(format!("no field named `{name}`")))
    }

    /// The designated flow field, or the field named `X`.
    pub fn flow_field(&self) -> Result<&[Expr]> {
        let name = self.flow.as_deref().unwrap_or("X");
        self.field(name)
    }

    /// Checks component counts, index ranges and coordinate references.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::Dimension("a model needs at least one coordinate".into()));
        }
        for (i, a) in self.coords.iter().enumerate() {
            if self.coords[..i].contains(a) {
                return Err(Error::Model(format!("duplicate coordinate `{a}`")));
            }
        }
        let check_expr = |what: &str, e: &Expr| -> Result<()> {
            for name in e.coord_names() {
                if !self.coords.contains(&name) {
                    return Err(Error::Model(format!("{what}: unknown coordinate `{name}`")));
                }
            }
            Ok(())
        };
        for (&(k, i, j), e) in &self.c {
            if k >= n || i >= n || j >= n {
                return Err(Error::Dimension(format!(
                    "entry c.{}.{}.{} exceeds dimension {n}",
                    k + 1,
                    i + 1,
                    j + 1
                )));
            }
            check_expr(&format!("c.{}.{}.{}", k + 1, i + 1, j + 1), e)?;
        }
        if self.e.len() != n {
            return Err(Error::Dimension(format!("unit has {} components for dimension {n}", self.e.len())));
        }
        for e in &self.e {
            check_expr("unit", e)?;
        }
        for (name, f) in &self.fields {
            if f.len() != n {
                return Err(Error::Dimension(format!(
                    "field `{name}` has {} components for dimension {n}",
                    f.len()
                )));
            }
            for e in f {
                check_expr(&format!("field {name}"), e)?;
            }
        }
        if let Some(flow) = &self.flow {
            self.field(flow)?;
        }
        if let Some(g) = &self.metric {
            if g.len() != n || g.iter().any(|r| r.len() != n) {
                return Err(Error::Dimension(format!("metric must be {n}x{n}")));
            }
            for r in g {
                for e in r {
                    check_expr("metric", e)?;
                }
            }
        }
        for (name, h) in &self.densities {
            check_expr(&format!("density {name}"), h)?;
        }
        for (name, d) in &self.data {
            if d.len() != n {
                return Err(Error::Dimension(format!(
                    "data `{name}` has {} components for dimension {n}",
                    d.len()
                )));
            }
        }
        if self.base.len() != n {
            return Err(Error::Dimension(format!("base point has {} entries for dimension {n}", self.base.len())));
        }
        Ok(())
    }
}

/// Evaluates a list of expressions as jets at a point.
pub fn eval_exprs<T: Scalar>(
    exprs: &[Expr],
    coords: &[String],
    point: &[T],
    order: usize,
) -> Result<Vec<Jet<T>>> {
    exprs.iter().map(|e| Ok(eval_expr_jet(e, coords, point, order)?)).collect()
}

/// Jets of c^k_{ij} and e^i at a point; `c` is stored as `c[(k * n + i) * n + j]`.
#[derive(Debug, Clone)]
pub struct ProductJet<T: Scalar> {
    pub point: Vec<T>,
    pub order: usize,
    pub n: usize,
    pub c: Vec<Jet<T>>,
    pub e: Vec<Jet<T>>,
}

impl<T: Scalar> ProductJet<T> {
    pub fn c(&self, k: usize, i: usize, j: usize) -> &Jet<T> {
        &self.c[(k * self.n + i) * self.n + j]
    }

    pub fn truncate(&self, order: usize) -> Self {
        ProductJet {
            point: self.point.clone(),
            order: order.min(self.order),
            n: self.n,
            c: self.c.iter().map(|j| j.truncate(order)).collect(),
            e: self.e.iter().map(|j| j.truncate(order)).collect(),
        }
    }

    /// Constant parts of c^k_{ij}, same layout as `c`.
    pub fn c_values(&self) -> Vec<T> {
        self.c.iter().map(|j| j.value()).collect()
    }

    /// (u∘v)^k = c^k_{ij} u^i v^j; all jets must share the product's order.
    pub fn mul(&self, u: &[Jet<T>], v: &[Jet<T>]) -> Vec<Jet<T>> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut acc = Jet::zero(n, self.order);
                for i in 0..n {
                    for j in 0..n {
                        let c = self.c(k, i, j);
                        if c.max_abs() == T::zero() {
                            continue;
                        }
                        acc = &acc + &(&(c * &u[i]) * &v[j]);
                    }
                }
                acc
            })
            .collect()
    }

    /// Endomorphism A^i_j = c^i_{kj} x^k of multiplication by `x`, row-major.
    pub fn mult_operator(&self, x: &[Jet<T>]) -> Vec<Jet<T>> {
        let n = self.n;
        let mut a = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Jet::zero(n, self.order);
                for (k, xk) in x.iter().enumerate() {
                    acc = &acc + &(self.c(i, k, j) * xk);
                }
                a.push(acc);
            }
        }
        a
    }
}

/// Structure functions and unit as jets at `point`.
pub fn product_at<T: Scalar>(model: &FModel, point: &[T], order: usize) -> Result<ProductJet<T>> {
    let n = model.dim();
    if point.len() != n {
        return Err(Error::Dimension(format!("point has {} entries for dimension {n}", point.len())));
    }
    let zero = Jet::zero(n, order);
    let mut c = vec![zero; n * n * n];
    for (&(k, i, j), e) in &model.c {
        c[(k * n + i) * n + j] = eval_expr_jet(e, &model.coords, point, order)?;
    }
    let e = eval_exprs(&model.e, &model.coords, point, order)?;
    Ok(ProductJet { point: point.to_vec(), order, n, c, e })
}

pub fn to_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

/// Lie bracket [u, v]^k = u^j ∂_j v^k − v^j ∂_j u^k; order drops by one.
pub(crate) fn bracket<T: Scalar>(u: &[Jet<T>], v: &[Jet<T>]) -> Vec<Jet<T>> {
    let n = u.len();
    let order = u[0].order();
    (0..n)
        .map(|k| {
            let mut acc = Jet::zero(n, order - 1);
            for j in 0..n {
                let uj = u[j].truncate(order - 1);
                let vj = v[j].truncate(order - 1);
                acc = &acc + &(&uj * &v[k].partial(j).unwrap());
                acc = &acc - &(&vj * &u[k].partial(j).unwrap());
            }
            acc
        })
        .collect()
}

fn basis<T: Scalar>(n: usize, order: usize, a: usize) -> Vec<Jet<T>> {
    (0..n).map(|i| Jet::constant(n, order, if i == a { T::one() } else { T::zero() })).collect()
}

fn vec_max_abs<T: Scalar>(v: &[Jet<T>]) -> f64 {
    v.iter().fold(0.0, |m, j| m.max(j.value().as_f64().abs()))
}

/// Commutativity, associativity, unit and Hertling–Manin residuals.
pub fn check_algebra_axioms<T: Scalar>(
    model: &FModel,
    point: &[T],
    order: usize,
    tol: f64,
) -> Result<Report> {
    if order < 1 {
        return Err(Error::OrderTooLow { need: 1, got: order });
    }
    let n = model.dim();
    let pj = product_at(model, point, order)?;
    let p0 = pj.truncate(0);
    let c = |k, i, j| p0.c(k, i, j).value().as_f64();
    let e0: Vec<f64> = pj.e.iter().map(|j| j.value().as_f64()).collect();
    let scale = p0.c.iter().fold(1.0f64, |m, j| m.max(j.value().as_f64().abs()));

    let mut comm = 0.0f64;
    let mut assoc = 0.0f64;
    let mut unit = 0.0f64;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                comm = comm.max((c(k, i, j) - c(k, j, i)).abs());
                for m in 0..n {
                    let mut r = 0.0;
                    for s in 0..n {
                        r += c(k, s, j) * c(s, i, m) - c(k, s, i) * c(s, j, m);
                    }
                    assoc = assoc.max(r.abs());
                }
            }
            let ue: f64 = (0..n).map(|j| c(k, i, j) * e0[j]).sum();
            unit = unit.max((ue - if i == k { 1.0 } else { 0.0 }).abs());
        }
    }

    // P_U(W, Z) = [U, W∘Z] − [U, W]∘Z − W∘[U, Z]; HM defect on basis 4-tuples:
    // P_{X∘Y}(W,Z) − X∘P_Y(W,Z) − Y∘P_X(W,Z).
    let p1 = pj.truncate(1);
    let hm_p = |u: &[Jet<T>], w: &[Jet<T>], z: &[Jet<T>]| -> Vec<Jet<T>> {
        let wz = p1.mul(w, z);
        let a = bracket(u, &wz);
        let uw = bracket(u, w);
        let uz = bracket(u, z);
        let b = p0.mul(&uw, &truncate_vec(z, 0));
        let d = p0.mul(&truncate_vec(w, 0), &uz);
        (0..n).map(|k| &(&a[k] - &b[k]) - &d[k]).collect()
    };
    let mut hm = 0.0f64;
    for a in 0..n {
        for b in a..n {
            let x = basis::<T>(n, 1, a);
            let y = basis::<T>(n, 1, b);
            let xy = p1.mul(&x, &y);
            for cc in 0..n {
                for d in cc..n {
                    let w = basis::<T>(n, 1, cc);
                    let z = basis::<T>(n, 1, d);
                    let lhs = hm_p(&xy, &w, &z);
                    let py = hm_p(&y, &w, &z);
                    let px = hm_p(&x, &w, &z);
                    let r1 = p0.mul(&truncate_vec(&x, 0), &py);
                    let r2 = p0.mul(&truncate_vec(&y, 0), &px);
                    let res: Vec<Jet<T>> = (0..n).map(|k| &(&lhs[k] - &r1[k]) - &r2[k]).collect();
                    hm = hm.max(vec_max_abs(&res));
                }
            }
        }
    }

    let norm = scale.max(1.0);
    let mut rep = Report::new("algebra-axioms", to_f64(point), order, tol);
    rep.push("commutativity", comm / norm);
    rep.push("associativity", assoc / (norm * norm));
    rep.push("unit", unit / norm);
    rep.push("hertling-manin", hm / (norm * norm));
    rep.note("c^k_ij with d_i o d_j = c^k_ij d_k; residuals divided by max(1, max|c|) per factor of c");
    Ok(rep)
}

pub(crate) fn truncate_vec<T: Scalar>(v: &[Jet<T>], order: usize) -> Vec<Jet<T>> {
    v.iter().map(|j| j.truncate(order)).collect()
}

/// Cyclicity frame data at a point.
#[derive(Debug, Clone)]
pub struct CyclicFrame {
    /// Columns e, X, X∘X, …, row-major n×n.
    pub matrix: Vec<Vec<f64>>,
    pub det: f64,
    pub scaled_det: f64,
    pub min_singular_value: f64,
}

/// The matrix with columns e, X, …, X^{∘(n−1)} at a point.
pub fn cyclic_frame(model: &FModel, x: &[Expr], point: &[f64]) -> Result<CyclicFrame> {
    let n = model.dim();
    let pj = product_at::<f64>(model, point, 0)?;
    let xv = eval_exprs::<f64>(x, &model.coords, point, 0)?;
    let mut cols = vec![pj.e.clone()];
    for k in 1..n {
        let next = pj.mul(&xv, &cols[k - 1]);
        cols.push(next);
    }
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| cols[j][i].value());
    let det = m.determinant();
    let colnorm: f64 = (0..n).map(|j| m.column(j).norm()).product();
    let scaled_det = if colnorm > 0.0 { (det / colnorm).abs() } else { 0.0 };
    let sv = m.clone().svd(false, false).singular_values;
    let min_sv = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let matrix = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
    Ok(CyclicFrame { matrix, det, scaled_det, min_singular_value: min_sv })
}

/// Cyclicity of `x`: the frame e, X, … is degenerate iff its column-scaled
/// determinant is at most `tol`. The report item is `1 − scaled |det|` against
/// tolerance `1 − tol`, so the verdict means "cyclic".
pub fn check_cyclic(model: &FModel, x: &[Expr], point: &[f64], tol: f64) -> Result<Report> {
    let f = cyclic_frame(model, x, point)?;
    let mut rep = Report::new("cyclicity", point.to_vec(), 0, 1.0 - tol);
    rep.push("frame degeneracy (1 - |det|/prod|col|)", 1.0 - f.scaled_det);
    rep.note(format!("|det| = {:.16e}", f.det.abs()));
    rep.note(format!("smallest singular value = {:.16e}", f.min_singular_value));
    rep.note(format!("cyclic iff |det|/prod|col| > {tol:e}"));
    Ok(rep)
}

/// Block product with ∂_{i(α)}∘∂_{j(α)} = ∂_{(i+j−1)(α)} and unit Σ_α ∂_{1(α)};
/// coordinates are named `x1 … xn`.
pub fn make_dh_model(block_sizes: &[usize], x: Vec<Expr>) -> Result<FModel> {
    let n: usize = block_sizes.iter().sum();
    if block_sizes.is_empty() || block_sizes.contains(&0) {
        return Err(Error::Invalid("block sizes must be positive".into()));
    }
    if x.len() != n {
        return Err(Error::Dimension(format!("{} flow components for blocks summing to {n}", x.len())));
    }
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let label = block_sizes.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("-");
    let mut m = FModel::new(&format!("dh-{label}"), &refs);
    let mut off = 0;
    for &size in block_sizes {
        for i in 0..size {
            for j in 0..size {
                if i + j < size {
                    m.set_c(off + i + j, off + i, off + j, Expr::Const(1.0));
                }
            }
        }
        m.e[off] = Expr::Const(1.0);
        off += size;
    }
    m.add_field("X", x);
    m.flow = Some("X".into());
    m.validate()?;
    Ok(m)
}

/// Closed-form cyclicity predicate for block products: first components
/// pairwise distinct across blocks and second components nonzero.
pub fn dh_cyclic_predicate(block_sizes: &[usize], x: &[f64], tol: f64) -> bool {
    let mut firsts = Vec::new();
    let mut off = 0;
    for &m in block_sizes {
        firsts.push(x[off]);
        if m >= 2 && x[off + 1].abs() <= tol {
            return false;
        }
        off += m;
    }
    for a in 0..firsts.len() {
        for b in a + 1..firsts.len() {
            if (firsts[a] - firsts[b]).abs() <= tol {
                return false;
            }
        }
    }
    true
}

/// Names accepted by [`builtin_example`] (any block list works after `dh-`).
pub fn example_names() -> Vec<&'static str> {
    vec!["nonregular2d", "twocomponent", "onedim", "dh-2", "dh-1-1", "dh-2-1", "dh-3"]
}

pub fn builtin_example(name: &str) -> Result<FModel> {
    let m = match name {
        "nonregular2d" => nonregular2d(),
        "twocomponent" => twocomponent(),
        "onedim" => onedim(),
        _ => {
            let spec = name
                .strip_prefix("dh-")
                .ok_or_else(|| Error::UnknownExample(name.to_string()))?;
            let sizes: Vec<usize> = spec
                .split('-')
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::UnknownExample(name.to_string()))?;
            if sizes.is_empty() || sizes.contains(&0) {
                return Err(Error::UnknownExample(name.to_string()));
            }
            let x = default_dh_flow(&sizes);
            make_dh_model(&sizes, x)?
        }
    };
    m.validate()?;
    Ok(m)
}

/// Deterministic cyclic flow for the builtin block models: first components
/// separated by integers, second components at least 1.
fn default_dh_flow(sizes: &[usize]) -> Vec<Expr> {
    let mut x = Vec::new();
    let mut off = 0;
    for (beta, &m) in sizes.iter().enumerate() {
        let first = off + 1;
        for i in 0..m {
            let text = match i {
                0 if beta == 0 => format!("0.25*sin(x{first})"),
                0 => format!("{beta} + 0.25*sin(x{first})"),
                1 => format!("1 + 0.5*x{}^2", first + 1),
                _ => format!("0.3*x{}*x{first}", first + i),
            };
            x.push(Expr::parse(&text));
        }
        off += m;
    }
    x
}

fn nonregular2d() -> FModel {
    let mut m = FModel::new("nonregular2d", &["t", "s"]);
    m.set_c(0, 0, 0, Expr::Const(1.0));
    m.set_c_sym(1, 0, 1, Expr::Const(1.0));
    m.set_c(1, 1, 1, Expr::coord("s"));
    m.e = vec![Expr::Const(1.0), Expr::Const(0.0)];
    m.add_field("X", vec![Expr::Const(0.0), Expr::Const(1.0)]);
    m.flow = Some("X".into());
    m
}

/// Taylor coefficients of t + t e^{−t} to the given order.
fn twocomponent_data_first(order: usize) -> Vec<f64> {
    let mut c = vec![0.0; order + 1];
    let mut fact = 1.0;
    for m in 1..=order {
        if m >= 2 {
            fact *= (m - 1) as f64;
        }
        let sign = if (m - 1) % 2 == 0 { 1.0 } else { -1.0 };
        c[m] = sign / fact;
    }
    if order >= 1 {
        c[1] += 1.0;
    }
    c
}

fn twocomponent() -> FModel {
    let mut m = FModel::new("twocomponent", &["r1", "r2"]);
    m.set_c(0, 0, 0, Expr::Const(1.0));
    m.set_c(1, 1, 1, Expr::Const(1.0));
    m.e = vec![Expr::Const(1.0), Expr::Const(1.0)];
    m.add_field("X", vec![Expr::parse("1 - exp(-r2)"), Expr::Const(1.0)]);
    m.add_field("w", vec![Expr::parse("r2 + r1*exp(-r2)"), Expr::parse("1 + r2")]);
    m.flow = Some("X".into());
    m.metric = Some(vec![
        vec![Expr::parse("exp(2*r2)"), Expr::Const(0.0)],
        vec![Expr::Const(0.0), Expr::Const(1.0)],
    ]);
    m.densities.insert("h1".into(), Expr::parse("r2"));
    m.densities.insert("h2".into(), Expr::parse("r1*exp(r2)"));
    let order = 12;
    let mut second = vec![0.0; order + 1];
    second[0] = 1.0;
    second[1] = 1.0;
    m.data.insert("w".into(), vec![twocomponent_data_first(order), second]);
    m
}

fn onedim() -> FModel {
    let mut m = FModel::new("onedim", &["x"]);
    m.set_c(0, 0, 0, Expr::Const(1.0));
    m.e = vec![Expr::Const(1.0)];
    m.add_field("X", vec![Expr::coord("x")]);
    m.flow = Some("X".into());
    m.base = vec![1.0];
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonregular_product_jet() {
        let m = builtin_example("nonregular2d").unwrap();
        let p = product_at::<f64>(&m, &[0.0, 0.0], 1).unwrap();
        let css = p.c(1, 1, 1);
        assert_eq!(css.value(), 0.0);
        assert_eq!(css.coeff(&[0, 1]), 1.0);
    }

    #[test]
    fn builtins_satisfy_the_axioms() {
        for name in example_names() {
            let m = builtin_example(name).unwrap();
            let p: Vec<f64> = (0..m.dim()).map(|i| 0.2 + 0.1 * i as f64).collect();
            let r = check_algebra_axioms(&m, &p, 1, 1e-12).unwrap();
            assert!(r.passed(), "{name}: {}", r.to_text());
        }
    }

    #[test]
    fn hertling_manin_violation() {
        // v∘v = f(s) v satisfies the identity for every f; v∘v = t v does not:
        // P_{v∘v}(e,e) = −[tv, e] = v while 2 v∘P_v(e,e) = 0.
        let mut m = builtin_example("nonregular2d").unwrap();
        m.set_c(1, 1, 1, Expr::parse("s^2"));
        let r = check_algebra_axioms(&m, &[0.1, 0.5], 1, 1e-12).unwrap();
        assert!(r.passed());
        m.set_c(1, 1, 1, Expr::parse("t"));
        let r = check_algebra_axioms(&m, &[0.1, 0.5], 1, 1e-12).unwrap();
        assert_eq!(r.residual("hertling-manin").unwrap(), 1.0);
        assert!(r.residual("associativity").unwrap() <= 1e-12);
    }

    #[test]
    fn cyclicity_examples() {
        let nr = builtin_example("nonregular2d").unwrap();
        let f = cyclic_frame(&nr, nr.flow_field().unwrap(), &[0.3, 0.0]).unwrap();
        assert_eq!(f.det, 1.0);
        let two = builtin_example("twocomponent").unwrap();
        let equal = [Expr::Const(2.0), Expr::Const(2.0)];
        assert!(!check_cyclic(&two, &equal, &[0.0, 0.0], 1e-10).unwrap().passed());
        let dh = make_dh_model(&[2], vec![Expr::Const(1.0), Expr::Const(0.0)]).unwrap();
        assert!(!check_cyclic(&dh, dh.flow_field().unwrap(), &[0.0, 0.0], 1e-10).unwrap().passed());
        let dh = make_dh_model(&[2, 1], vec![Expr::Const(0.0), Expr::Const(1.0), Expr::Const(5.0)]).unwrap();
        assert!(check_cyclic(&dh, dh.flow_field().unwrap(), &[0.0; 3], 1e-10).unwrap().passed());
    }

    #[test]
    fn unit_contracts_to_identity() {
        let m = builtin_example("dh-2-1").unwrap();
        let p = product_at::<f64>(&m, &[0.1, 0.2, 0.3], 0).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                let s: f64 = (0..3).map(|j| p.c(k, i, j).value() * p.e[j].value()).sum();
                assert_eq!(s, if k == i { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn validation_errors() {
        let mut m = FModel::new("bad", &["a", "b"]);
        m.e = vec![Expr::Const(1.0)];
        assert!(matches!(m.validate(), Err(Error::Dimension(_))));
        let mut m = FModel::new("bad", &["a"]);
        m.e = vec![Expr::parse("z")];
        assert!(matches!(m.validate(), Err(Error::Model(_))));
        assert!(matches!(builtin_example("dh-0"), Err(Error::UnknownExample(_))));
    }
}
