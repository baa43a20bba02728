//! Symmetries of the flow: adapted charts, the power-series solver for
//! d(Y∘) = 0 from data on the unit curve, commuting-flow checks and the
//! Riemann-invariant (Tsarev) comparison.

use crate::algebra::{eval_exprs, product_at, to_f64, FModel};
use crate::connection::{build_natural_connection, ChristoffelJet, CounitChoice, PointData};
use crate::curvature::{check_3rc, require_adapted, riemann_tensor};
use crate::error::{Error, Result};
use crate::expr::{substitute, Expr};
use crate::jet::{layout, Jet, UniSeries};
use crate::report::Report;
use crate::scalar::Scalar;

/// Components of Y₀ along the unit curve, one series per component.
pub type CauchyData<T> = Vec<UniSeries<T>>;
/// Axis data: the a-th series is w^a restricted to the a-th coordinate line.
pub type TsarevData<T> = Vec<UniSeries<T>>;

/// A vector field given by truncated Taylor series around `point`.
#[derive(Debug, Clone)]
pub struct SeriesField<T: Scalar> {
    pub point: Vec<T>,
    pub order: usize,
    pub comps: Vec<Jet<T>>,
    /// Outcome of the 3RC test at the base point, when it could be run.
    pub compatible: Option<bool>,
}

impl<T: Scalar> SeriesField<T> {
    /// Value of the truncated series at `at`.
    pub fn eval(&self, at: &[T]) -> Vec<T> {
        let d: Vec<T> = at.iter().zip(&self.point).map(|(a, b)| *a - *b).collect();
        self.comps.iter().map(|j| j.shift(&d, 0).value()).collect()
    }

    /// Re-expansion around `at`, truncated to `order`.
    pub fn jets_at(&self, at: &[T], order: usize) -> Vec<Jet<T>> {
        let d: Vec<T> = at.iter().zip(&self.point).map(|(a, b)| *a - *b).collect();
        self.comps.iter().map(|j| j.shift(&d, order.min(self.order))).map(|j| j.extend(order)).collect()
    }

    /// Coefficients of t^m of the restriction to `point + t·dir`.
    pub fn restrict_to_line(&self, dir: &[T]) -> CauchyData<T> {
        self.comps.iter().map(|j| UniSeries::new(j.restrict_to_line(dir))).collect()
    }

    /// Largest coefficient difference against another series field.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let ord = self.order.min(other.order);
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| (&a.truncate(ord) - &b.truncate(ord)).max_abs().as_f64())
            .fold(0.0, f64::max)
    }
}

/// A vector field given either by expressions or by a series.
#[derive(Debug, Clone, Copy)]
pub enum FieldRef<'a, T: Scalar> {
    Exprs(&'a [Expr]),
    Series(&'a SeriesField<T>),
}

impl<'a, T: Scalar> FieldRef<'a, T> {
    pub fn jets(&self, model: &FModel, point: &[T], order: usize) -> Result<Vec<Jet<T>>> {
        match self {
            FieldRef::Exprs(e) => eval_exprs(e, &model.coords, point, order),
            FieldRef::Series(s) => Ok(s.jets_at(point, order)),
        }
    }
}

/// Linear chart change x = M y that makes the (constant) unit ∂/∂y¹.
#[derive(Debug, Clone)]
pub struct AdaptedChart {
    pub model: FModel,
    /// M, row-major; its first column is e.
    pub matrix: Vec<Vec<f64>>,
    pub inverse: Vec<Vec<f64>>,
}

fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn lincomb(coeffs: &[f64], terms: &[Expr]) -> Expr {
    fold_const(Expr::sum(coeffs.iter().zip(terms).map(|(c, t)| t.clone().scaled(*c)).collect()))
}

/// Collapses coordinate-free trees to a single constant.
fn fold_const(e: Expr) -> Expr {
    match e.as_constant() {
        Some(v) if !matches!(e, Expr::Const(_)) => Expr::Const(v),
        _ => e,
    }
}

impl AdaptedChart {
    pub fn is_identity(&self) -> bool {
        self.matrix
            .iter()
            .enumerate()
            .all(|(i, r)| r.iter().enumerate().all(|(j, v)| *v == if i == j { 1.0 } else { 0.0 }))
    }

    /// Old-chart coordinates of a new-chart point.
    pub fn to_original_point(&self, y: &[f64]) -> Vec<f64> {
        matvec(&self.matrix, y)
    }

    pub fn to_adapted_point(&self, x: &[f64]) -> Vec<f64> {
        matvec(&self.inverse, x)
    }

    /// Constant vector components, original → adapted.
    pub fn vector_to_adapted(&self, v: &[f64]) -> Vec<f64> {
        matvec(&self.inverse, v)
    }

    /// Vector field given in the original chart, rewritten in the adapted one.
    pub fn field_to_adapted(&self, original: &FModel, f: &[Expr]) -> Result<Vec<Expr>> {
        let subst = self.substituted(original, f)?;
        Ok(self.inverse.iter().map(|row| lincomb(row, &subst)).collect())
    }

    fn substituted(&self, original: &FModel, f: &[Expr]) -> Result<Vec<Expr>> {
        let images = self.images();
        f.iter().map(|e| Ok(substitute(e, &original.coords, &images)?)).collect()
    }

    fn images(&self) -> Vec<Expr> {
        let new: Vec<Expr> = self.model.coords.iter().map(|c| Expr::coord(c)).collect();
        self.matrix.iter().map(|row| lincomb(row, &new)).collect()
    }
}

/// Rewrites a model with constant unit in a linear chart where e = ∂/∂y¹.
pub fn adapt_chart(model: &FModel) -> Result<FModel> {
    Ok(adapted_chart(model)?.model)
}

/// As [`adapt_chart`], also returning the chart map.
///
/// M has columns e, ∂_m (m ≠ p), where p is the first index of largest |e^p|.
pub fn adapted_chart(model: &FModel) -> Result<AdaptedChart> {
    let n = model.dim();
    let mut e = Vec::with_capacity(n);
    for ex in &model.e {
        e.push(ex.as_constant().ok_or(Error::NonConstantUnit)?);
    }
    let p = (0..n).fold(0, |b, m| if e[m].abs() > e[b].abs() { m } else { b });
    if e[p] == 0.0 {
        return Err(Error::Invalid("unit vanishes".into()));
    }
    let cols: Vec<usize> = (0..n).filter(|&m| m != p).collect();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        matrix[i][0] = e[i];
    }
    for (a, &m) in cols.iter().enumerate() {
        matrix[m][a + 1] = 1.0;
    }
    let mn = nalgebra::DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
    let inv = mn.try_inverse().ok_or_else(|| Error::Singular("adapted chart matrix".into()))?;
    let inverse: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect();
    let identity = matrix
        .iter()
        .enumerate()
        .all(|(i, r)| r.iter().enumerate().all(|(j, v)| *v == if i == j { 1.0 } else { 0.0 }));
    if identity {
        return Ok(AdaptedChart { model: model.clone(), matrix, inverse });
    }
    let names: Vec<String> = (1..=n).map(|i| format!("y{i}")).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut out = FModel::new(&model.name, &refs);
    let mut chart = AdaptedChart { model: out.clone(), matrix, inverse };
    let images = chart.images();
    let sub = |e: &Expr| -> Result<Expr> { Ok(substitute(e, &model.coords, &images)?) };

    // c'^k_ij = (M⁻¹)^k_a c^a_bc M^b_i M^c_j
    let cs: Vec<Expr> = {
        let mut v = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    v.push(sub(&model.c_expr(a, b, c))?);
                }
            }
        }
        v
    };
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut terms = Vec::new();
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            let f = chart.inverse[k][a] * chart.matrix[b][i] * chart.matrix[c][j];
                            if f != 0.0 && !cs[(a * n + b) * n + c].is_zero() {
                                terms.push(cs[(a * n + b) * n + c].clone().scaled(f));
                            }
                        }
                    }
                }
                out.set_c(k, i, j, fold_const(Expr::sum(terms)));
            }
        }
    }
    out.e = (0..n).map(|i| Expr::Const(if i == 0 { 1.0 } else { 0.0 })).collect();
    chart.model = out.clone();
    for (name, f) in &model.fields {
        out.add_field(name, chart.field_to_adapted(model, f)?);
    }
    out.flow = model.flow.clone();
    if let Some(g) = &model.metric {
        let gs: Vec<Vec<Expr>> =
            g.iter().map(|r| r.iter().map(&sub).collect::<Result<_>>()).collect::<Result<_>>()?;
        let mut ng = vec![vec![Expr::Const(0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut terms = Vec::new();
                for a in 0..n {
                    for b in 0..n {
                        let f = chart.matrix[a][i] * chart.matrix[b][j];
                        if f != 0.0 {
                            terms.push(gs[a][b].clone().scaled(f));
                        }
                    }
                }
                ng[i][j] = fold_const(Expr::sum(terms));
            }
        }
        out.metric = Some(ng);
    }
    for (name, h) in &model.densities {
        out.densities.insert(name.clone(), sub(h)?);
    }
    for (name, d) in &model.data {
        let order = d.iter().map(|s| s.len()).max().unwrap_or(0);
        let mut nd = vec![vec![0.0; order]; n];
        for m in 0..order {
            let v: Vec<f64> = d.iter().map(|s| s.get(m).copied().unwrap_or(0.0)).collect();
            let w = matvec(&chart.inverse, &v);
            for k in 0..n {
                nd[k][m] = w[k];
            }
        }
        out.data.insert(name.clone(), nd);
    }
    out.base = chart.to_adapted_point(&model.base);
    out.validate()?;
    chart.model = out;
    Ok(chart)
}

/// Transverse right-hand sides F_l^k = c^k_lr ∂_1Y^r − Γ^k_lr Y^r as jets of
/// order K−1, for the transverse direction `l`.
fn transverse_rhs<T: Scalar>(
    c: &[Jet<T>],
    gamma: &ChristoffelJet<T>,
    y: &[Jet<T>],
    l: usize,
    n: usize,
    order: usize,
) -> Vec<Jet<T>> {
    let d1: Vec<Jet<T>> = y.iter().map(|j| j.partial(0).expect("order ≥ 1")).collect();
    let yt: Vec<Jet<T>> = y.iter().map(|j| j.truncate(order)).collect();
    (0..n)
        .map(|k| {
            let mut acc = Jet::zero(n, order);
            for r in 0..n {
                let cv = &c[(k * n + l) * n + r];
                if cv.max_abs() != T::zero() {
                    acc = &acc + &(cv * &d1[r]);
                }
                let g = gamma.get(k, l, r);
                if g.max_abs() != T::zero() {
                    acc = &acc - &(g * &yt[r]);
                }
            }
            acc
        })
        .collect()
}

/// Series solution of d(Y∘) = 0 in an adapted chart (e = ∂/∂y¹), with
/// Y(point + t ε₁) = data(t), to total degree `k`.
///
/// Works up the flag of coordinate subspaces: coefficients involving y² are
/// found from the equation in direction 2 restricted to the (y¹, y²)-plane,
/// then direction 3, and so on.
pub fn solve_symmetry_series<T: Scalar>(
    model: &FModel,
    x: &[Expr],
    point: &[T],
    data: &[UniSeries<T>],
    k: usize,
) -> Result<SeriesField<T>> {
    require_adapted(model)?;
    let n = model.dim();
    if data.len() != n {
        return Err(Error::Dimension(format!("{} data series for dimension {n}", data.len())));
    }
    if let Some(s) = data.iter().find(|s| s.order() < k) {
        return Err(Error::Invalid(format!("data order {} below series order {k}", s.order())));
    }
    let mut y: Vec<Jet<T>> = data
        .iter()
        .map(|s| {
            let mut j = Jet::zero(n, k);
            let mut ex = vec![0u8; n];
            for m in 0..=k {
                ex[0] = m as u8;
                j.set_coeff(&ex, s.coeff(m));
            }
            j
        })
        .collect();
    if n == 1 || k == 0 {
        return Ok(SeriesField { point: point.to_vec(), order: k, comps: y, compatible: None });
    }
    let gamma = build_natural_connection(model, x, point, k - 1, &CounitChoice::Default)?;
    let pj = product_at(model, point, k - 1)?;
    let lay = layout(n, k);
    for l in 1..n {
        for a in 1..=k {
            let f = transverse_rhs(&pj.c, &gamma, &y, l, n, k - 1);
            for idx in 0..lay.len() {
                let ex = lay.exponents(idx);
                if ex[l] as usize != a || ex[l + 1..].iter().any(|&v| v != 0) {
                    continue;
                }
                let mut prev = ex.to_vec();
                prev[l] -= 1;
                let div = T::lit(a as f64);
                for comp in 0..n {
                    let v = f[comp].coeff(&prev) / div;
                    y[comp].set_coeff(ex, v);
                }
            }
        }
    }
    let compatible = if k >= 2 {
        let r = riemann_tensor(&gamma)?;
        let c = to_f64(&pj.truncate(0).c_values());
        Some(check_3rc(&r, &c, 1e-9).passed())
    } else {
        None
    };
    Ok(SeriesField { point: point.to_vec(), order: k, comps: y, compatible })
}

/// Largest coefficient of ∂_iY − F_i over transverse i, as series of degree K−1.
pub fn transverse_discrepancy<T: Scalar>(model: &FModel, x: &[Expr], field: &SeriesField<T>) -> Result<f64> {
    require_adapted(model)?;
    let n = model.dim();
    let k = field.order;
    if n == 1 || k == 0 {
        return Ok(0.0);
    }
    let gamma = build_natural_connection(model, x, &field.point, k - 1, &CounitChoice::Default)?;
    let pj = product_at(model, &field.point, k - 1)?;
    let mut m = 0.0f64;
    for l in 1..n {
        let f = transverse_rhs(&pj.c, &gamma, &field.comps, l, n, k - 1);
        for comp in 0..n {
            let d = field.comps[comp].partial(l)?;
            m = m.max((&d - &f[comp]).max_abs().as_f64());
        }
    }
    Ok(m)
}

/// Symmetry series for a model with constant unit in any chart: data are the
/// original-chart components of Y along `point + t·e`.
pub fn solve_symmetry<T: Scalar>(
    model: &FModel,
    x: &[Expr],
    point: &[T],
    data: &[UniSeries<T>],
    k: usize,
) -> Result<SeriesField<T>> {
    let n = model.dim();
    let chart = adapted_chart(model)?;
    if chart.is_identity() {
        return solve_symmetry_series(model, x, point, data, k);
    }
    if data.len() != n {
        return Err(Error::Dimension(format!("{} data series for dimension {n}", data.len())));
    }
    let xa = chart.field_to_adapted(model, x)?;
    let y0: Vec<T> = chart.to_adapted_point(&to_f64(point)).into_iter().map(T::lit).collect();
    let mi: Vec<Vec<T>> = chart.inverse.iter().map(|r| r.iter().map(|v| T::lit(*v)).collect()).collect();
    let mm: Vec<Vec<T>> = chart.matrix.iter().map(|r| r.iter().map(|v| T::lit(*v)).collect()).collect();
    let ord = data.iter().map(|s| s.order()).min().unwrap_or(0);
    let adata: Vec<UniSeries<T>> = (0..n)
        .map(|a| {
            UniSeries::new(
                (0..=ord)
                    .map(|m| (0..n).fold(T::zero(), |s, b| s + mi[a][b] * data[b].coeff(m)))
                    .collect(),
            )
        })
        .collect();
    let sol = solve_symmetry_series(&chart.model, &xa, &y0, &adata, k)?;
    // Y_x(x) = M · Y_y(M⁻¹ x), re-expanded in x around `point`.
    let zero = vec![T::zero(); n];
    let re: Vec<Jet<T>> = sol.comps.iter().map(|j| j.compose_affine(&mi, &zero, n, k)).collect();
    let comps = (0..n)
        .map(|i| {
            (0..n).fold(Jet::zero(n, k), |acc, a| {
                if mm[i][a] == T::zero() {
                    acc
                } else {
                    &acc + &re[a].scale(mm[i][a])
                }
            })
        })
        .collect();
    Ok(SeriesField { point: point.to_vec(), order: k, comps, compatible: sol.compatible })
}

fn model_scale(pd: &PointData) -> f64 {
    let m = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    m(&pd.c).max(m(&pd.gamma)).max(1.0)
}

/// (d_∇ (Y∘))^i_jk at the point, layout `(i*n+j)*n+k`.
fn d_mult(pd: &PointData, y: &[f64], dy: &[Vec<f64>]) -> Vec<f64> {
    let n = pd.n;
    let b = |i: usize, k: usize| (0..n).map(|m| pd.c(i, m, k) * y[m]).sum::<f64>();
    let nb = |j: usize, i: usize, k: usize| {
        let mut v: f64 = (0..n).map(|m| pd.dc(j, i, m, k) * y[m] + pd.c(i, m, k) * dy[j][m]).sum();
        for l in 0..n {
            v += pd.g(i, j, l) * b(l, k) - pd.g(l, j, k) * b(i, l);
        }
        v
    };
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[(i * n + j) * n + k] = nb(j, i, k) - nb(k, i, j);
            }
        }
    }
    out
}

fn value_and_gradient<T: Scalar>(jets: &[Jet<T>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = jets.len();
    let v = jets.iter().map(|j| j.value().as_f64()).collect();
    let d = (0..n)
        .map(|a| jets.iter().map(|j| j.partial(a).map(|p| p.value().as_f64()).unwrap_or(0.0)).collect())
        .collect();
    (v, d)
}

/// Residuals of d(Y∘) = 0 and of ∇_U Y = U∘∇_e Y for the natural connection of `x`.
pub fn check_symmetry_equation<T: Scalar>(
    model: &FModel,
    x: &[Expr],
    y: FieldRef<'_, T>,
    point: &[T],
    tol: f64,
) -> Result<Report> {
    let n = model.dim();
    let gamma = build_natural_connection(model, x, point, 0, &CounitChoice::Default)?;
    let pd = PointData::new(model, point, &gamma)?;
    let (y0, dy) = value_and_gradient(&y.jets(model, point, 1)?);
    let dm = d_mult(&pd, &y0, &dy);
    let r_d = dm.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ny = |j: usize, i: usize| dy[j][i] + (0..n).map(|k| pd.g(i, j, k) * y0[k]).sum::<f64>();
    let nye: Vec<f64> = (0..n).map(|i| (0..n).map(|j| pd.e[j] * ny(j, i)).sum()).collect();
    let mut r_l = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let p: f64 = (0..n).map(|k| pd.c(i, j, k) * nye[k]).sum();
            r_l = r_l.max((ny(j, i) - p).abs());
        }
    }
    let s = model_scale(&pd);
    let mut rep = Report::new("symmetry-equation", to_f64(point), 1, tol);
    rep.push("d_nabla(Y o)", r_d / s);
    rep.push("nabla_U Y - U o nabla_e Y", r_l / s);
    rep.note("nabla is the natural connection of the flow field; residuals divided by max(1, |c|, |Gamma|)");
    Ok(rep)
}

/// Commutation of the flows of Y₁ and Y₂ (with the natural connection of `x`).
pub fn check_commuting_flows<T: Scalar>(
    model: &FModel,
    x: &[Expr],
    y1: FieldRef<'_, T>,
    y2: FieldRef<'_, T>,
    point: &[T],
    tol: f64,
) -> Result<Report> {
    let n = model.dim();
    let gamma = build_natural_connection(model, x, point, 0, &CounitChoice::Default)?;
    let pd = PointData::new(model, point, &gamma)?;
    let (a0, da) = value_and_gradient(&y1.jets(model, point, 1)?);
    let (b0, db) = value_and_gradient(&y2.jets(model, point, 1)?);
    let op = |y: &[f64]| -> Vec<f64> {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                m[i * n + k] = (0..n).map(|l| pd.c(i, l, k) * y[l]).sum();
            }
        }
        m
    };
    let (am, bm) = (op(&a0), op(&b0));
    let mut r_ab = 0.0f64;
    for i in 0..n {
        for k in 0..n {
            let v: f64 = (0..n).map(|l| am[i * n + l] * bm[l * n + k] - bm[i * n + l] * am[l * n + k]).sum();
            r_ab = r_ab.max(v.abs());
        }
    }
    let dam = d_mult(&pd, &a0, &da);
    let dbm = d_mult(&pd, &b0, &db);
    // (dA)(∂_u, B∂_v)^i = dA^i_{u l} B^l_v
    let mut r_d = 0.0f64;
    for i in 0..n {
        for u in 0..n {
            for v in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += dam[(i * n + u) * n + l] * bm[l * n + v] + dam[(i * n + v) * n + l] * bm[l * n + u]
                        - dbm[(i * n + u) * n + l] * am[l * n + v]
                        - dbm[(i * n + v) * n + l] * am[l * n + u];
                }
                r_d = r_d.max(s.abs());
            }
        }
    }
    let s = model_scale(&pd);
    let mag = a0.iter().chain(&b0).fold(1.0f64, |m, v| m.max(v.abs()));
    let mut rep = Report::new("commuting-flows", to_f64(point), 1, tol);
    rep.push("AB - BA", r_ab / (s * s * mag * mag));
    rep.push("(dA)(U,BV)+(dA)(V,BU)-(dB)(U,AV)-(dB)(V,AU)", r_d / (s * s * mag * mag));
    rep.note("A = Y1 o, B = Y2 o; d taken with the natural connection of the flow field");
    Ok(rep)
}

/// Tsarev report plus the coefficients a_ij = ∂_j v^i / (v^j − v^i) (row-major,
/// zero diagonal).
#[derive(Debug, Clone)]
pub struct TsarevReport {
    pub report: Report,
    pub a: Vec<f64>,
}

fn require_semisimple<T: Scalar>(model: &FModel, point: &[T]) -> Result<()> {
    let n = model.dim();
    let pj = product_at(model, point, 0)?;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let want = if k == i && i == j { 1.0 } else { 0.0 };
                if (pj.c(k, i, j).value().as_f64() - want).abs() > 1e-12 {
                    return Err(Error::NotSemisimple);
                }
            }
        }
    }
    Ok(())
}

/// Jets a_ij = ∂_j v^i / (v^j − v^i) at order `order` (row-major).
pub fn tsarev_coefficients<T: Scalar>(model: &FModel, x: &[Expr], point: &[T], order: usize) -> Result<Vec<Jet<T>>> {
    let n = model.dim();
    let v = eval_exprs(x, &model.coords, point, order + 1)?;
    let mut a = vec![Jet::zero(n, order); n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let num = v[i].partial(j)?;
            let den = (&v[j] - &v[i]).truncate(order);
            a[i * n + j] = num.checked_div(&den).map_err(|_| {
                Error::Invalid(format!("velocities {} and {} coincide at the point", i + 1, j + 1))
            })?;
        }
    }
    Ok(a)
}

/// Coefficients a_ij and residuals of ∂_j w^i = a_ij (w^j − w^i), i ≠ j.
pub fn tsarev_system<T: Scalar>(
    model: &FModel,
    x: &[Expr],
    w: FieldRef<'_, T>,
    point: &[T],
    tol: f64,
) -> Result<TsarevReport> {
    require_semisimple(model, point)?;
    let n = model.dim();
    let a = tsarev_coefficients(model, x, point, 0)?;
    let (w0, dw) = value_and_gradient(&w.jets(model, point, 1)?);
    let mut r = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = dw[j][i] - a[i * n + j].value().as_f64() * (w0[j] - w0[i]);
                r = r.max(v.abs());
            }
        }
    }
    let mut rep = Report::new("tsarev-system", to_f64(point), 1, tol);
    rep.push("d_j w^i - a_ij (w^j - w^i)", r);
    let av: Vec<f64> = a.iter().map(|j| j.value().as_f64()).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                rep.note(format!("a_{}{} = {:.16e}", i + 1, j + 1, av[i * n + j]));
            }
        }
    }
    Ok(TsarevReport { report: rep, a: av })
}

/// Reconstructs w from axis data (w^i on the i-th coordinate line through
/// `point`) via the Tsarev system, as series of total degree `k`.
pub fn tsarev_series<T: Scalar>(
    model: &FModel,
    x: &[Expr],
    phi: &[UniSeries<T>],
    point: &[T],
    k: usize,
) -> Result<SeriesField<T>> {
    require_semisimple(model, point)?;
    let n = model.dim();
    if phi.len() != n {
        return Err(Error::Dimension(format!("{} axis series for dimension {n}", phi.len())));
    }
    if let Some(s) = phi.iter().find(|s| s.order() < k) {
        return Err(Error::Invalid(format!("axis data order {} below series order {k}", s.order())));
    }
    let a = if k > 0 { tsarev_coefficients(model, x, point, k - 1)? } else { Vec::new() };
    let lay = layout(n, k);
    let mut w: Vec<Jet<T>> = (0..n).map(|i| Jet::constant(n, k, phi[i].coeff(0))).collect();
    for d in 1..=k {
        // products a_ij (w^j − w^i) only need w up to degree d−1
        let prods: Vec<Jet<T>> = (0..n * n)
            .map(|ij| {
                let (i, j) = (ij / n, ij % n);
                if i == j {
                    Jet::zero(n, k - 1)
                } else {
                    &a[ij] * &(&w[j] - &w[i]).truncate(k - 1)
                }
            })
            .collect();
        for idx in lay.degree_start(d)..lay.degree_start(d + 1).min(lay.len()) {
            let ex = lay.exponents(idx).to_vec();
            for i in 0..n {
                let v = if ex[i] as usize == d {
                    phi[i].coeff(d)
                } else {
                    let j = (0..n).find(|&j| j != i && ex[j] >= 1).expect("mixed index");
                    let mut prev = ex.clone();
                    prev[j] -= 1;
                    prods[i * n + j].coeff(&prev) / T::lit(ex[j] as f64)
                };
                w[i].set_coeff(&ex, v);
            }
        }
    }
    Ok(SeriesField { point: point.to_vec(), order: k, comps: w, compatible: None })
}

fn unit_direction<T: Scalar>(model: &FModel) -> Result<Vec<T>> {
    model
        .e
        .iter()
        .map(|e| e.as_constant().map(T::lit).ok_or(Error::NonConstantUnit))
        .collect()
}

/// Axis data → data along the unit curve through `point`.
pub fn transform_tsarev_to_e<T: Scalar>(
    model: &FModel,
    x: &[Expr],
    phi: &[UniSeries<T>],
    point: &[T],
    k: usize,
) -> Result<CauchyData<T>> {
    let w = tsarev_series(model, x, phi, point, k)?;
    Ok(w.restrict_to_line(&unit_direction::<T>(model)?))
}

/// Data along the unit curve through `point` → axis data.
pub fn transform_e_to_tsarev<T: Scalar>(
    model: &FModel,
    x: &[Expr],
    y0: &[UniSeries<T>],
    point: &[T],
    k: usize,
) -> Result<TsarevData<T>> {
    require_semisimple(model, point)?;
    let n = model.dim();
    let w = solve_symmetry(model, x, point, y0, k)?;
    Ok((0..n)
        .map(|i| {
            let dir: Vec<T> = (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect();
            UniSeries::new(w.comps[i].restrict_to_line(&dir))
        })
        .collect())
}
