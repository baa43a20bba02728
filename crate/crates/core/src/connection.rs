//! The natural connection of a cyclic field and its defining checks.

use crate::algebra::{eval_exprs, product_at, to_f64, FModel};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet;
use crate::linalg::solve_jet_system;
use crate::report::Report;
use crate::scalar::Scalar;

/// Jet-valued Christoffel symbols Γ^i_{jk} of a torsionless connection,
/// stored once per unordered pair (j, k). Convention: ∇_{∂_j}∂_k = Γ^i_{jk}∂_i.
#[derive(Debug, Clone)]
pub struct ChristoffelJet<T: Scalar> {
    pub point: Vec<T>,
    pub order: usize,
    pub n: usize,
    data: Vec<Jet<T>>,
}

impl<T: Scalar> ChristoffelJet<T> {
    fn npairs(n: usize) -> usize {
        n * (n + 1) / 2
    }

    fn slot(&self, i: usize, j: usize, k: usize) -> usize {
        i * Self::npairs(self.n) + sym_pair(self.n, j, k)
    }

    /// Builds from a full n³ array indexed `(i * n + j) * n + k`, averaging the
    /// (j, k) and (k, j) entries.
    pub fn from_full(point: Vec<T>, n: usize, full: &[Jet<T>]) -> Self {
        let order = full.first().map_or(0, |j| j.order());
        let mut data = Vec::with_capacity(n * Self::npairs(n));
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let a = &full[(i * n + j) * n + k];
                    let b = &full[(i * n + k) * n + j];
                    data.push((a + b).scale(T::lit(0.5)));
                }
            }
        }
        ChristoffelJet { point, order, n, data }
    }

    pub fn zero(point: Vec<T>, n: usize, order: usize) -> Self {
        let data = vec![Jet::zero(n, order); n * Self::npairs(n)];
        ChristoffelJet { point, order, n, data }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &Jet<T> {
        &self.data[self.slot(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: Jet<T>) {
        let s = self.slot(i, j, k);
        self.data[s] = v;
    }

    pub fn truncate(&self, order: usize) -> Self {
        ChristoffelJet {
            point: self.point.clone(),
            order: order.min(self.order),
            n: self.n,
            data: self.data.iter().map(|j| j.truncate(order)).collect(),
        }
    }

    /// Constant parts as a full n³ array indexed `(i * n + j) * n + k`.
    pub fn values(&self) -> Vec<T> {
        let n = self.n;
        let mut v = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    v.push(self.get(i, j, k).value());
                }
            }
        }
        v
    }

    /// Largest coefficient difference over all entries (common order).
    pub fn max_diff(&self, other: &Self) -> f64 {
        let ord = self.order.min(other.order);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (&a.truncate(ord) - &b.truncate(ord)).max_abs().as_f64())
            .fold(0.0, f64::max)
    }
}

fn sym_pair(n: usize, j: usize, k: usize) -> usize {
    let (a, b) = if j <= k { (j, k) } else { (k, j) };
    a * (2 * n - a + 1) / 2 + (b - a)
}

/// Counit used in the construction; any choice with θ(e) = 1 gives the same Γ.
#[derive(Debug, Clone)]
pub enum CounitChoice<T> {
    /// θ_i = e_i / |e|² at the base point.
    Default,
    Constant(Vec<T>),
    Exprs(Vec<Expr>),
}

/// Matrix of S ↦ S(·, A·) − S(A·, ·) on {S symmetric, S(e, ·) = 0}.
///
/// The operator acts on each output component separately, so only the scalar
/// block (rows: pairs j < k, columns: symmetric pairs of complement directions)
/// is stored; the full operator is `n` copies of it.
#[derive(Debug, Clone)]
pub struct MaOperator<T: Scalar> {
    pub n: usize,
    /// Coordinate direction dropped from the completion of e.
    pub dropped: usize,
    /// Kept coordinate directions completing e to a frame.
    pub complement: Vec<usize>,
    /// Dual coframe rows φ^a for the complement directions (jets, length n each).
    pub coframe: Vec<Vec<Jet<T>>>,
    pub rows: Vec<(usize, usize)>,
    pub cols: Vec<(usize, usize)>,
    pub scalar: Vec<Vec<Jet<T>>>,
}

impl<T: Scalar> MaOperator<T> {
    /// Dimension n²(n−1)/2 of domain and codomain.
    pub fn dim(&self) -> usize {
        self.n * self.cols.len()
    }

    /// Symmetric 2-form of basis column `c`: entry `[j][k]`.
    pub fn basis_form(&self, c: usize) -> Vec<Vec<Jet<T>>> {
        let (a, b) = self.cols[c];
        let n = self.n;
        (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| {
                        let t = &self.coframe[a][j] * &self.coframe[b][k];
                        if a == b {
                            t
                        } else {
                            &t + &(&self.coframe[b][j] * &self.coframe[a][k])
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// The full block-diagonal matrix, row `(i, r)` ↦ `i * rows + r`.
    pub fn full_matrix(&self) -> Vec<Vec<Jet<T>>> {
        let (r, c) = (self.rows.len(), self.cols.len());
        let proto = self.scalar.first().and_then(|row| row.first());
        let (nv, ord) = proto.map_or((self.n, 0), |j| (j.nvars(), j.order()));
        let mut m = vec![vec![Jet::zero(nv, ord); self.n * c]; self.n * r];
        for i in 0..self.n {
            for a in 0..r {
                for b in 0..c {
                    m[i * r + a][i * c + b] = self.scalar[a][b].clone();
                }
            }
        }
        m
    }
}

/// Assembles the restricted operator for the endomorphism `a` (row-major
/// A^i_j) and unit `e`, all jets of one shape.
pub fn assemble_ma<T: Scalar>(a: &[Jet<T>], e: &[Jet<T>]) -> Result<MaOperator<T>> {
    let n = e.len();
    if a.len() != n * n {
        return Err(Error::Dimension("endomorphism must be n x n".into()));
    }
    let (nv, ord) = (e[0].nvars(), e[0].order());
    let dropped = (0..n)
        .fold((0, -T::one()), |best, m| {
            let v = e[m].value().abs();
            if v > best.1 {
                (m, v)
            } else {
                best
            }
        })
        .0;
    if e[dropped].value() == T::zero() {
        return Err(Error::Invalid("unit vanishes at the point".into()));
    }
    let complement: Vec<usize> = (0..n).filter(|&m| m != dropped).collect();
    let ratio: Vec<Jet<T>> = complement
        .iter()
        .map(|&m| e[m].checked_div(&e[dropped]))
        .collect::<std::result::Result<_, _>>()?;
    let coframe: Vec<Vec<Jet<T>>> = complement
        .iter()
        .zip(&ratio)
        .map(|(&m, r)| {
            (0..n)
                .map(|j| {
                    if j == m {
                        Jet::one(nv, ord)
                    } else if j == dropped {
                        -r
                    } else {
                        Jet::zero(nv, ord)
                    }
                })
                .collect()
        })
        .collect();
    let rows: Vec<(usize, usize)> = (0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))).collect();
    let nc = complement.len();
    let cols: Vec<(usize, usize)> = (0..nc).flat_map(|a| (a..nc).map(move |b| (a, b))).collect();
    // φ^a(A ∂_k) = Σ_m φ^a_m A^m_k
    let phi_a: Vec<Vec<Jet<T>>> = coframe
        .iter()
        .map(|phi| {
            (0..n)
                .map(|k| {
                    let mut acc = Jet::zero(nv, ord);
                    for m in 0..n {
                        acc = &acc + &(&phi[m] * &a[m * n + k]);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let sym = |a_: usize, b_: usize, y1: &Jet<T>, y2: &Jet<T>, z1: &Jet<T>, z2: &Jet<T>| -> Jet<T> {
        // y1 = φ^a(Y), y2 = φ^b(Y), z1 = φ^a(Z), z2 = φ^b(Z)
        let t = y1 * z2;
        if a_ == b_ {
            t
        } else {
            &t + &(y2 * z1)
        }
    };
    let scalar: Vec<Vec<Jet<T>>> = rows
        .iter()
        .map(|&(j, k)| {
            cols.iter()
                .map(|&(p, q)| {
                    let s1 = sym(p, q, &coframe[p][j], &coframe[q][j], &phi_a[p][k], &phi_a[q][k]);
                    let s2 = sym(p, q, &coframe[p][k], &coframe[q][k], &phi_a[p][j], &phi_a[q][j]);
                    &s1 - &s2
                })
                .collect()
        })
        .collect();
    if !rows.is_empty() {
        let m0 = nalgebra::DMatrix::from_fn(rows.len(), cols.len(), |r, c| scalar[r][c].value().as_f64());
        let sv = m0.svd(false, false).singular_values;
        let max = sv.iter().cloned().fold(0.0f64, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 1e-13 * max.max(1e-300)) {
            return Err(Error::NotCyclic("A".into(), if max > 0.0 { min / max } else { 0.0 }));
        }
    }
    Ok(MaOperator { n, dropped, complement, coframe, rows, cols, scalar })
}

/// 2-norm condition number of the constant part of the scalar block.
pub fn ma_condition_number<T: Scalar>(op: &MaOperator<T>) -> f64 {
    if op.rows.is_empty() {
        return 1.0;
    }
    let m0 = nalgebra::DMatrix::from_fn(op.rows.len(), op.cols.len(), |r, c| op.scalar[r][c].value().as_f64());
    let sv = m0.svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// Natural connection of `x` at `point`, to jet order `order`, with the
/// coordinate connection as auxiliary connection.
pub fn build_natural_connection<T: Scalar>(
    model: &FModel,
    x: &[Expr],
    point: &[T],
    order: usize,
    theta: &CounitChoice<T>,
) -> Result<ChristoffelJet<T>> {
    build_natural_connection_with(model, x, point, order, theta, None)
}

/// As [`build_natural_connection`], with an optional constant symmetric
/// auxiliary connection (full n³ array indexed `(i * n + j) * n + k`).
pub fn build_natural_connection_with<T: Scalar>(
    model: &FModel,
    x: &[Expr],
    point: &[T],
    order: usize,
    theta: &CounitChoice<T>,
    aux: Option<&[T]>,
) -> Result<ChristoffelJet<T>> {
    let n = model.dim();
    if x.len() != n {
        return Err(Error::Dimension(format!("flow field has {} components for dimension {n}", x.len())));
    }
    let m = order;
    let pj = product_at(model, point, m + 1)?;
    let xj = eval_exprs(x, &model.coords, point, m + 1)?;
    let a_hi = pj.mult_operator(&xj);
    let da: Vec<Vec<Jet<T>>> = (0..n)
        .map(|v| a_hi.iter().map(|j| j.partial(v).unwrap()).collect())
        .collect();
    let de: Vec<Vec<Jet<T>>> = (0..n)
        .map(|v| pj.e.iter().map(|j| j.partial(v).unwrap()).collect())
        .collect();
    let a: Vec<Jet<T>> = a_hi.iter().map(|j| j.truncate(m)).collect();
    let e: Vec<Jet<T>> = pj.e.iter().map(|j| j.truncate(m)).collect();
    let zero = Jet::zero(n, m);

    let e0: Vec<T> = e.iter().map(|j| j.value()).collect();
    let theta_raw: Vec<Jet<T>> = match theta {
        CounitChoice::Default => {
            let norm2 = e0.iter().fold(T::zero(), |s, v| s + *v * *v);
            if norm2 == T::zero() {
                return Err(Error::Invalid("unit vanishes at the point".into()));
            }
            e0.iter().map(|v| Jet::constant(n, m, *v / norm2)).collect()
        }
        CounitChoice::Constant(v) => v.iter().map(|c| Jet::constant(n, m, *c)).collect(),
        CounitChoice::Exprs(ex) => eval_exprs(ex, &model.coords, point, m)?,
    };
    if theta_raw.len() != n {
        return Err(Error::Dimension("counit has the wrong number of components".into()));
    }
    let pairing = (0..n).fold(zero.clone(), |acc, i| &acc + &(&theta_raw[i] * &e[i]));
    if (pairing.value() - T::one()).abs().as_f64() > 1e-12 {
        return Err(Error::Invalid(format!(
            "counit pairs to {} with the unit, expected 1",
            pairing.value()
        )));
    }
    // Rescale so θ(e) = 1 holds as a jet, not only at the point.
    let th: Vec<Jet<T>> = theta_raw
        .iter()
        .map(|t| t.checked_div(&pairing))
        .collect::<std::result::Result<_, _>>()?;

    let gb = |i: usize, j: usize, k: usize| -> T { aux.map_or(T::zero(), |g| g[(i * n + j) * n + k]) };

    // (∇̄_k e)^i and (∇̄_e e)^i
    let nbe: Vec<Vec<Jet<T>>> = (0..n)
        .map(|k| {
            (0..n)
                .map(|i| {
                    let mut acc = de[k][i].clone();
                    for l in 0..n {
                        let g = gb(i, k, l);
                        if g != T::zero() {
                            acc = &acc + &e[l].scale(g);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let nbee: Vec<Jet<T>> = (0..n)
        .map(|i| (0..n).fold(zero.clone(), |acc, k| &acc + &(&e[k] * &nbe[k][i])))
        .collect();

    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut s0 = vec![zero.clone(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let t1 = &th[j] * &nbe[k][i];
                let t2 = &th[k] * &nbe[j][i];
                let t3 = &(&th[j] * &th[k]) * &nbee[i];
                s0[idx(i, j, k)] = &(&t3 - &t1) - &t2;
            }
        }
    }

    let op = assemble_ma(&a, &e)?;
    let rhs: Vec<Vec<Jet<T>>> = op
        .rows
        .iter()
        .map(|&(j, k)| {
            (0..n)
                .map(|i| {
                    let mut d = &da[j][i * n + k] - &da[k][i * n + j];
                    let mut ms = zero.clone();
                    for l in 0..n {
                        let (g1, g2) = (gb(i, j, l), gb(i, k, l));
                        if g1 != T::zero() {
                            d = &d + &a[l * n + k].scale(g1);
                        }
                        if g2 != T::zero() {
                            d = &d - &a[l * n + j].scale(g2);
                        }
                        ms = &ms + &(&s0[idx(i, j, l)] * &a[l * n + k]);
                        ms = &ms - &(&s0[idx(i, k, l)] * &a[l * n + j]);
                    }
                    -(&d + &ms)
                })
                .collect()
        })
        .collect();
    let sol = if op.rows.is_empty() { Vec::new() } else { solve_jet_system(op.scalar.clone(), rhs)? };

    let forms: Vec<Vec<Vec<Jet<T>>>> = (0..op.cols.len()).map(|c| op.basis_form(c)).collect();
    let mut full = vec![zero.clone(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut g = s0[idx(i, j, k)].add_scalar(gb(i, j, k));
                for (c, form) in forms.iter().enumerate() {
                    g = &g + &(&sol[c][i] * &form[j][k]);
                }
                full[idx(i, j, k)] = g;
            }
        }
    }
    Ok(ChristoffelJet::from_full(point.to_vec(), n, &full))
}

/// Pointwise data shared by the connection checks (all reals, f64).
pub(crate) struct PointData {
    pub n: usize,
    pub c: Vec<f64>,
    pub dc: Vec<Vec<f64>>,
    pub e: Vec<f64>,
    pub de: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
}

impl PointData {
    pub fn c(&self, k: usize, i: usize, j: usize) -> f64 {
        self.c[(k * self.n + i) * self.n + j]
    }
    pub fn dc(&self, v: usize, k: usize, i: usize, j: usize) -> f64 {
        self.dc[v][(k * self.n + i) * self.n + j]
    }
    pub fn g(&self, i: usize, j: usize, k: usize) -> f64 {
        self.gamma[(i * self.n + j) * self.n + k]
    }

    pub fn new<T: Scalar>(model: &FModel, point: &[T], gamma: &ChristoffelJet<T>) -> Result<Self> {
        let n = model.dim();
        let pj = product_at(model, point, 1)?;
        let c = pj.c.iter().map(|j| j.value().as_f64()).collect();
        let dc = (0..n)
            .map(|v| pj.c.iter().map(|j| j.partial(v).unwrap().value().as_f64()).collect())
            .collect();
        let e = pj.e.iter().map(|j| j.value().as_f64()).collect();
        let de = (0..n)
            .map(|v| pj.e.iter().map(|j| j.partial(v).unwrap().value().as_f64()).collect())
            .collect();
        Ok(PointData { n, c, dc, e, de, gamma: to_f64(&gamma.values()) })
    }

    /// T^k_{ijl} = (∇_i ∘)(∂_j, ∂_l) = ∇_i c^k_{jl}, indexed `((k*n+i)*n+j)*n+l`.
    pub fn covariant_c(&self) -> Vec<f64> {
        let n = self.n;
        let mut t = vec![0.0; n * n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        let mut v = self.dc(i, k, j, l);
                        for m in 0..n {
                            v += self.g(k, i, m) * self.c(m, j, l)
                                - self.g(m, i, j) * self.c(k, m, l)
                                - self.g(m, i, l) * self.c(k, j, m);
                        }
                        t[((k * n + i) * n + j) * n + l] = v;
                    }
                }
            }
        }
        t
    }
}

/// Residuals of the defining and derived properties of the natural connection.
pub fn check_connection_axioms<T: Scalar>(
    gamma: &ChristoffelJet<T>,
    model: &FModel,
    x: &[Expr],
    point: &[T],
    tol: f64,
) -> Result<Report> {
    let n = model.dim();
    let pd = PointData::new(model, point, gamma)?;
    let xj = eval_exprs(x, &model.coords, point, 1)?;
    let x0: Vec<f64> = xj.iter().map(|j| j.value().as_f64()).collect();
    let dx: Vec<Vec<f64>> = (0..n)
        .map(|v| xj.iter().map(|j| j.partial(v).unwrap().value().as_f64()).collect())
        .collect();
    let t = pd.covariant_c();
    let tt = |k: usize, i: usize, j: usize, l: usize| t[((k * n + i) * n + j) * n + l];

    let mut r_unit = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let v = pd.de[j][i] + (0..n).map(|k| pd.g(i, j, k) * pd.e[k]).sum::<f64>();
            r_unit = r_unit.max(v.abs());
        }
    }

    // A^i_j = c^i_{kj} X^k and its derivatives
    let a = |i: usize, j: usize| (0..n).map(|k| pd.c(i, k, j) * x0[k]).sum::<f64>();
    let da = |v: usize, i: usize, j: usize| {
        (0..n).map(|k| pd.dc(v, i, k, j) * x0[k] + pd.c(i, k, j) * dx[v][k]).sum::<f64>()
    };
    let nabla_a = |j: usize, i: usize, k: usize| {
        let mut v = da(j, i, k);
        for l in 0..n {
            v += pd.g(i, j, l) * a(l, k) - pd.g(l, j, k) * a(i, l);
        }
        v
    };
    let mut r_da = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                r_da = r_da.max((nabla_a(j, i, k) - nabla_a(k, i, j)).abs());
            }
        }
    }

    let mut r_sym = 0.0f64;
    let mut r_te = 0.0f64;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    r_sym = r_sym.max((tt(k, i, j, l) - tt(k, j, i, l)).abs());
                }
                let te1: f64 = (0..n).map(|m| pd.e[m] * tt(k, m, i, j)).sum();
                let te2: f64 = (0..n).map(|m| tt(k, i, m, j) * pd.e[m]).sum();
                r_te = r_te.max(te1.abs()).max(te2.abs());
            }
        }
    }

    let nabla_x = |j: usize, i: usize| dx[j][i] + (0..n).map(|k| pd.g(i, j, k) * x0[k]).sum::<f64>();
    let w0: Vec<f64> = (0..n).map(|i| (0..n).map(|j| pd.e[j] * nabla_x(j, i)).sum()).collect();
    let mut r_transport = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let prod: f64 = (0..n).map(|k| pd.c(i, j, k) * w0[k]).sum();
            r_transport = r_transport.max((nabla_x(j, i) - prod).abs());
        }
    }

    let mut r_assoc = 0.0f64;
    let mut r_hm = 0.0f64;
    for k in 0..n {
        for u in 0..n {
            for v in 0..n {
                for w in 0..n {
                    for z in 0..n {
                        let mut s = 0.0;
                        for m in 0..n {
                            s += tt(k, u, m, z) * pd.c(m, v, w) + pd.c(k, m, z) * tt(m, u, v, w)
                                - tt(k, u, v, m) * pd.c(m, w, z)
                                - pd.c(k, v, m) * tt(m, u, w, z);
                        }
                        r_assoc = r_assoc.max(s.abs());
                        // (R, S, P, Q) = (u, v, w, z)
                        let (r, s_, p, q) = (u, v, w, z);
                        let mut h = 0.0;
                        for m in 0..n {
                            h += pd.c(m, r, s_) * tt(k, m, p, q) - pd.c(m, p, q) * tt(k, m, r, s_)
                                + pd.c(k, m, q) * tt(m, p, r, s_)
                                + pd.c(k, m, p) * tt(m, q, r, s_)
                                - pd.c(k, m, r) * tt(m, s_, p, q)
                                - pd.c(k, m, s_) * tt(m, r, p, q);
                        }
                        r_hm = r_hm.max(h.abs());
                    }
                }
            }
        }
    }

    let scale = input_scale(&pd, &x0).max(1.0);
    let mut rep = Report::new("connection-axioms", to_f64(point), gamma.order, tol);
    rep.push("nabla e", r_unit / scale);
    rep.push("d_nabla(X o)", r_da / scale);
    rep.push("full symmetry of nabla o", r_sym / scale);
    rep.push("nabla_Y X - Y o nabla_e X", r_transport / scale);
    rep.push("T(e,.,.) and T(.,e,.)", r_te / scale);
    rep.push("covariant associativity", r_assoc / (scale * scale));
    rep.push("covariant Hertling-Manin", r_hm / (scale * scale));
    rep.note("nabla_{d_j} d_k = Gamma^i_jk d_i; T(U,Y,Z) = (nabla_U o)(Y,Z)");
    rep.note("residuals divided by max(1, input magnitude) per factor");
    Ok(rep)
}

fn input_scale(pd: &PointData, x0: &[f64]) -> f64 {
    let m = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    m(&pd.c).max(m(&pd.gamma)).max(m(&pd.e)).max(m(x0))
}
