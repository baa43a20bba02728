//! Riemann tensor of a jet connection, the 3RC integrability test and the
//! obstruction tensors of the transverse symmetry system.

use crate::algebra::{product_at, to_f64, FModel};
use crate::connection::{build_natural_connection, ChristoffelJet, CounitChoice};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::report::Report;
use crate::scalar::Scalar;

const CONVENTION: &str =
    "R^k_sij = d_i G^k_js - d_j G^k_is + G^k_ir G^r_js - G^k_jr G^r_is; R(d_i,d_j)d_s = R^k_sij d_k";

/// Curvature components at the base point, indexed `((k*n+s)*n+i)*n+j`.
#[derive(Debug, Clone)]
pub struct RiemannAtPoint {
    pub point: Vec<f64>,
    pub n: usize,
    pub r: Vec<f64>,
}

impl RiemannAtPoint {
    pub fn zero(point: Vec<f64>, n: usize) -> Self {
        RiemannAtPoint { point, n, r: vec![0.0; n * n * n * n] }
    }

    #[inline]
    pub fn get(&self, k: usize, s: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.r[((k * n + s) * n + i) * n + j]
    }

    /// Largest absolute component.
    pub fn norm(&self) -> f64 {
        self.r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |R^k_sij + R^k_ijs + R^k_jsi|.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.n;
        let mut m = 0.0f64;
        for k in 0..n {
            for s in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let v = self.get(k, s, i, j) + self.get(k, i, j, s) + self.get(k, j, s, i);
                        m = m.max(v.abs());
                    }
                }
            }
        }
        m
    }

    /// The vector R(U, V) Y.
    pub fn apply(&self, u: &[f64], v: &[f64], y: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut acc = 0.0;
                for s in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            acc += self.get(k, s, i, j) * y[s] * u[i] * v[j];
                        }
                    }
                }
                acc
            })
            .collect()
    }
}

/// Curvature of a jet connection at its base point (needs order ≥ 1).
pub fn riemann_tensor<T: Scalar>(gamma: &ChristoffelJet<T>) -> Result<RiemannAtPoint> {
    if gamma.order < 1 {
        return Err(Error::OrderTooLow { need: 1, got: gamma.order });
    }
    let n = gamma.n;
    let g = to_f64(&gamma.values());
    let gv = |k: usize, i: usize, j: usize| g[(k * n + i) * n + j];
    // dg[v][(k*n+i)*n+j] = ∂_v Γ^k_ij
    let dg: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            let mut out = Vec::with_capacity(n * n * n);
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        out.push(gamma.get(k, i, j).partial(v).map(|d| d.value().as_f64()).unwrap_or(0.0));
                    }
                }
            }
            Ok::<_, Error>(out)
        })
        .collect::<Result<_>>()?;
    let mut r = RiemannAtPoint::zero(to_f64(&gamma.point), n);
    for k in 0..n {
        for s in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = dg[i][(k * n + j) * n + s] - dg[j][(k * n + i) * n + s];
                    for q in 0..n {
                        v += gv(k, i, q) * gv(q, j, s) - gv(k, j, q) * gv(q, i, s);
                    }
                    r.r[((k * n + s) * n + i) * n + j] = v;
                }
            }
        }
    }
    Ok(r)
}

/// Raw residuals of the two equivalent 3RC forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeRc {
    /// W∘R(U,V)Z + U∘R(V,W)Z + V∘R(W,U)Z, component form.
    pub outside: f64,
    /// R(U,V)(W∘Z) + R(V,W)(U∘Z) + R(W,U)(V∘Z), component form.
    pub zinside: f64,
    pub outside_invariant: f64,
    pub zinside_invariant: f64,
    /// max(1, |R|·|c|), the normalization used in verdicts.
    pub scale: f64,
}

impl ThreeRc {
    pub fn outside_normalized(&self) -> f64 {
        self.outside.max(self.outside_invariant) / self.scale
    }

    pub fn zinside_normalized(&self) -> f64 {
        self.zinside.max(self.zinside_invariant) / self.scale
    }
}

fn circ(c: &[f64], n: usize, u: &[f64], v: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += c[(k * n + i) * n + j] * u[i] * v[j];
                }
            }
            acc
        })
        .collect()
}

/// Evaluates both 3RC forms; `c` is laid out `(k*n+i)*n+j` for c^k_ij.
pub fn three_rc_residuals(r: &RiemannAtPoint, c: &[f64]) -> ThreeRc {
    let n = r.n;
    let cc = |k: usize, i: usize, j: usize| c[(k * n + i) * n + j];
    let mut outside = 0.0f64;
    let mut zinside = 0.0f64;
    for a in 0..n {
        for l in 0..n {
            for m in 0..n {
                for i in 0..n {
                    for k in 0..n {
                        let mut o = 0.0;
                        let mut z = 0.0;
                        for s in 0..n {
                            o += r.get(s, l, m, i) * cc(a, k, s)
                                + r.get(s, l, i, k) * cc(a, m, s)
                                + r.get(s, l, k, m) * cc(a, i, s);
                            z += r.get(a, s, m, i) * cc(s, k, l)
                                + r.get(a, s, i, k) * cc(s, m, l)
                                + r.get(a, s, k, m) * cc(s, i, l);
                        }
                        outside = outside.max(o.abs());
                        zinside = zinside.max(z.abs());
                    }
                }
            }
        }
    }
    let basis: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut oi = 0.0f64;
    let mut zi = 0.0f64;
    for u in &basis {
        for v in &basis {
            for w in &basis {
                for z in &basis {
                    let a = circ(c, n, w, &r.apply(u, v, z));
                    let b = circ(c, n, u, &r.apply(v, w, z));
                    let d = circ(c, n, v, &r.apply(w, u, z));
                    let p = r.apply(u, v, &circ(c, n, w, z));
                    let q = r.apply(v, w, &circ(c, n, u, z));
                    let s = r.apply(w, u, &circ(c, n, v, z));
                    for k in 0..n {
                        oi = oi.max((a[k] + b[k] + d[k]).abs());
                        zi = zi.max((p[k] + q[k] + s[k]).abs());
                    }
                }
            }
        }
    }
    let cn = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ThreeRc {
        outside,
        zinside,
        outside_invariant: oi,
        zinside_invariant: zi,
        scale: (r.norm() * cn).max(1.0),
    }
}

/// 3RC test: verdicts use residuals divided by max(1, |R|·|c|).
pub fn check_3rc(r: &RiemannAtPoint, c: &[f64], tol: f64) -> Report {
    let t = three_rc_residuals(r, c);
    let mut rep = Report::new("3rc", r.point.clone(), 1, tol);
    rep.push("outside form (components)", t.outside / t.scale);
    rep.push("Z-inside form (components)", t.zinside / t.scale);
    rep.push("outside form (basis vectors)", t.outside_invariant / t.scale);
    rep.push("Z-inside form (basis vectors)", t.zinside_invariant / t.scale);
    rep.note(CONVENTION);
    rep.note(format!(
        "raw residuals: outside {:.16e}, Z-inside {:.16e}; normalization {:.16e}",
        t.outside.max(t.outside_invariant),
        t.zinside.max(t.zinside_invariant),
        t.scale
    ));
    rep
}

/// Coefficients of the formal cross-derivative of the transverse symmetry
/// system, indexed `((k*n+i)*n+j)*n+s`; entries with i or j equal to the
/// first coordinate are zero.
#[derive(Debug, Clone)]
pub struct ObstructionTensors {
    pub n: usize,
    pub point: Vec<f64>,
    /// Coefficient of the second e-derivative.
    pub c_coeff: Vec<f64>,
    /// Coefficient of the first e-derivative.
    pub a_coeff: Vec<f64>,
    /// Coefficient of Y itself.
    pub b_coeff: Vec<f64>,
    pub riemann: RiemannAtPoint,
    pub c: Vec<f64>,
    /// ∂_1 Γ^k_ij, layout `(k*n+i)*n+j`.
    pub d1_gamma: Vec<f64>,
    /// max |∂_1 c^k_ij|.
    pub d1_c: f64,
}

impl ObstructionTensors {
    fn idx(&self, k: usize, i: usize, j: usize, s: usize) -> usize {
        ((k * self.n + i) * self.n + j) * self.n + s
    }

    pub fn max_c(&self) -> f64 {
        max_abs(&self.c_coeff)
    }

    pub fn max_a(&self) -> f64 {
        max_abs(&self.a_coeff)
    }

    pub fn max_b(&self) -> f64 {
        max_abs(&self.b_coeff)
    }

    /// max |B^k_ijs − (−R^k_sij − (c^k_jr R^r_s1i − c^k_ir R^r_s1j))|.
    pub fn b_identity_residual(&self) -> f64 {
        let n = self.n;
        let r = &self.riemann;
        let c = |k: usize, i: usize, j: usize| self.c[(k * n + i) * n + j];
        let mut m = 0.0f64;
        for k in 0..n {
            for i in 1..n {
                for j in 1..n {
                    for s in 0..n {
                        let mut rhs = -r.get(k, s, i, j);
                        for q in 0..n {
                            rhs -= c(k, j, q) * r.get(q, s, 0, i) - c(k, i, q) * r.get(q, s, 0, j);
                        }
                        m = m.max((self.b_coeff[self.idx(k, i, j, s)] - rhs).abs());
                    }
                }
            }
        }
        m
    }

    /// max |R^k_s1j − ∂_1 Γ^k_js|.
    pub fn r1_residual(&self) -> f64 {
        let n = self.n;
        let mut m = 0.0f64;
        for k in 0..n {
            for s in 0..n {
                for j in 0..n {
                    let d = self.riemann.get(k, s, 0, j) - self.d1_gamma[(k * n + j) * n + s];
                    m = m.max(d.abs());
                }
            }
        }
        m
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Requires the unit to be the constant first coordinate vector.
pub(crate) fn require_adapted(model: &FModel) -> Result<()> {
    let mut consts = Vec::with_capacity(model.dim());
    for e in &model.e {
        consts.push(e.as_constant().ok_or(Error::NonConstantUnit)?);
    }
    let ok = consts.iter().enumerate().all(|(i, &v)| v == if i == 0 { 1.0 } else { 0.0 });
    if ok {
        Ok(())
    } else {
        Err(Error::NotAdapted)
    }
}

/// Obstruction tensors from the natural connection of `x`; `order` is the jet
/// order of the model data (≥ 2), the connection is built one order lower.
pub fn obstruction_tensors<T: Scalar>(
    model: &FModel,
    x: &[Expr],
    point: &[T],
    order: usize,
) -> Result<ObstructionTensors> {
    if order < 2 {
        return Err(Error::OrderTooLow { need: 2, got: order });
    }
    require_adapted(model)?;
    let gamma = build_natural_connection(model, x, point, order - 1, &CounitChoice::Default)?;
    obstruction_tensors_with(model, &gamma)
}

/// As [`obstruction_tensors`] with a supplied connection of order ≥ 1.
pub fn obstruction_tensors_with<T: Scalar>(
    model: &FModel,
    gamma: &ChristoffelJet<T>,
) -> Result<ObstructionTensors> {
    require_adapted(model)?;
    let n = model.dim();
    let pj = product_at(model, &gamma.point, 1)?;
    let c = to_f64(&pj.c_values());
    let dc: Vec<Vec<f64>> = (0..n)
        .map(|v| pj.c.iter().map(|j| j.partial(v).unwrap().value().as_f64()).collect())
        .collect();
    let riemann = riemann_tensor(gamma)?;
    let g = to_f64(&gamma.values());
    let dg: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            let mut out = Vec::with_capacity(n * n * n);
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        out.push(gamma.get(k, i, j).partial(v).unwrap().value().as_f64());
                    }
                }
            }
            out
        })
        .collect();
    let ci = |k: usize, i: usize, j: usize| c[(k * n + i) * n + j];
    let gi = |k: usize, i: usize, j: usize| g[(k * n + i) * n + j];
    let len = n * n * n * n;
    let (mut cc, mut aa, mut bb) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    for k in 0..n {
        for i in 1..n {
            for j in 1..n {
                for s in 0..n {
                    let idx = ((k * n + i) * n + j) * n + s;
                    let mut cv = 0.0;
                    let mut av = dc[i][(k * n + j) * n + s] - dc[j][(k * n + i) * n + s];
                    let mut bv = -(dg[i][(k * n + j) * n + s] - dg[j][(k * n + i) * n + s]);
                    for r in 0..n {
                        cv += ci(k, j, r) * ci(r, i, s) - ci(k, i, r) * ci(r, j, s);
                        av -= ci(k, j, r) * gi(r, i, s) - ci(k, i, r) * gi(r, j, s);
                        av -= gi(k, j, r) * ci(r, i, s) - gi(k, i, r) * ci(r, j, s);
                        bv -= ci(k, j, r) * dg[0][(r * n + i) * n + s] - ci(k, i, r) * dg[0][(r * n + j) * n + s];
                        bv += gi(k, j, r) * gi(r, i, s) - gi(k, i, r) * gi(r, j, s);
                    }
                    cc[idx] = cv;
                    aa[idx] = av;
                    bb[idx] = bv;
                }
            }
        }
    }
    Ok(ObstructionTensors {
        n,
        point: to_f64(&gamma.point),
        c_coeff: cc,
        a_coeff: aa,
        b_coeff: bb,
        riemann,
        c,
        d1_gamma: dg[0].clone(),
        d1_c: max_abs(&dc[0]),
    })
}

/// Report form of the obstruction tensors.
pub fn obstruction_report(ob: &ObstructionTensors, tol: f64) -> Report {
    let mut rep = Report::new("obstruction-tensors", ob.point.clone(), 1, tol);
    rep.push("C (second e-derivative coefficient)", ob.max_c());
    rep.push("A (first e-derivative coefficient)", ob.max_a());
    rep.push("B minus curvature combination", ob.b_identity_residual());
    rep.push("R^k_s1j - d_1 G^k_js", ob.r1_residual());
    rep.note(format!("max |B| = {:.16e}", ob.max_b()));
    rep.note(format!("max |d_1 c| = {:.16e}", ob.d1_c));
    rep.note(CONVENTION);
    rep
}
