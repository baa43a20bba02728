//! Generalized hodograph method: solve x·e + t·X(u) = Y(u) for u and check
//! that the result solves u_t = X∘u_x.

use crate::algebra::{eval_exprs, FModel};
use crate::error::{Error, Result};
use crate::expr::{eval_f64, Expr};
use crate::jet::Jet;
use crate::report::Report;
use crate::symmetry::SeriesField;
use rayon::prelude::*;

/// The symmetry field Y, as expressions or as a series.
#[derive(Debug, Clone)]
pub enum HodographField {
    Exprs(Vec<Expr>),
    Series(SeriesField<f64>),
}

#[derive(Debug, Clone)]
pub struct HodographProblem {
    pub model: FModel,
    pub x: Vec<Expr>,
    pub y: HodographField,
    pub newton_tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl HodographProblem {
    pub fn new(model: FModel, x: Vec<Expr>, y: HodographField) -> Self {
        HodographProblem { model, x, y, newton_tol: 1e-12, max_iter: 50, max_halvings: 20 }
    }

    /// Default initial guess: the model's base point.
    pub fn default_guess(&self) -> Vec<f64> {
        self.model.base.clone()
    }

    /// G(u) = Y(u) − t X(u) − x e(u), its Jacobian, and the scale
    /// max(1, |Y| + |t||X| + |x||e|).
    fn system(&self, u: &[f64], x: f64, t: f64) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let n = self.model.dim();
        let m = &self.model;
        let xj = eval_exprs::<f64>(&self.x, &m.coords, u, 1)?;
        let ej = eval_exprs::<f64>(&m.e, &m.coords, u, 1)?;
        let yj: Vec<Jet<f64>> = match &self.y {
            HodographField::Exprs(e) => eval_exprs(e, &m.coords, u, 1)?,
            HodographField::Series(s) => s.jets_at(u, 1),
        };
        let mut g = Vec::with_capacity(n);
        let mut jac = vec![0.0; n * n];
        for i in 0..n {
            let gi = &(&yj[i] - &xj[i].scale(t)) - &ej[i].scale(x);
            g.push(gi.value());
            for j in 0..n {
                jac[i * n + j] = gi.partial(j)?.value();
            }
        }
        let nm = |v: &[Jet<f64>]| v.iter().fold(0.0f64, |a, j| a.max(j.value().abs()));
        let scale = (nm(&yj) + t.abs() * nm(&xj) + x.abs() * nm(&ej)).max(1.0);
        Ok((g, jac, scale))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonResult {
    pub u: Vec<f64>,
    pub iterations: usize,
    /// max |G(u)| divided by the scale.
    pub residual: f64,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// |det J| / Π |columns|.
fn scaled_det(jac: &[f64], n: usize) -> f64 {
    let m = nalgebra::DMatrix::from_row_slice(n, n, jac);
    let cols: f64 = (0..n).map(|j| m.column(j).norm()).product();
    if cols == 0.0 {
        0.0
    } else {
        (m.determinant() / cols).abs()
    }
}

const SINGULAR: f64 = 1e-12;

/// Damped Newton solve of x·e + t·X(u) = Y(u) from `guess`.
pub fn hodograph_solve(problem: &HodographProblem, x: f64, t: f64, guess: &[f64]) -> Result<NewtonResult> {
    let n = problem.model.dim();
    if guess.len() != n {
        return Err(Error::Dimension(format!("guess has {} entries for dimension {n}", guess.len())));
    }
    let mut u = guess.to_vec();
    let (mut g, mut jac, mut scale) = problem.system(&u, x, t)?;
    for iter in 0..=problem.max_iter {
        let res = max_abs(&g) / scale;
        if res <= problem.newton_tol {
            let sd = scaled_det(&jac, n);
            if sd <= SINGULAR {
                return Err(Error::SingularJacobian(sd));
            }
            return Ok(NewtonResult { u, iterations: iter, residual: res });
        }
        if iter == problem.max_iter {
            return Err(Error::NoConvergence(iter, res));
        }
        let sd = scaled_det(&jac, n);
        let m = nalgebra::DMatrix::from_row_slice(n, n, &jac);
        let rhs = nalgebra::DVector::from_iterator(n, g.iter().map(|v| -v));
        let step = match m.lu().solve(&rhs) {
            Some(s) if sd > SINGULAR => s,
            _ => return Err(Error::SingularJacobian(sd)),
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=problem.max_halvings {
            let trial: Vec<f64> = (0..n).map(|i| u[i] + lambda * step[i]).collect();
            if let Ok(sys) = problem.system(&trial, x, t) {
                if max_abs(&sys.0) / sys.2 < res {
                    accepted = Some((trial, sys));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((trial, sys)) => {
                u = trial;
                (g, jac, scale) = sys;
            }
            None => return Err(Error::NoConvergence(iter + 1, res)),
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// One axis of a grid: `count` equally spaced values from `lo` to `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn value(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn step(&self) -> f64 {
        if self.count <= 1 {
            0.0
        } else {
            (self.hi - self.lo) / (self.count - 1) as f64
        }
    }

    /// Parses `lo:hi:count`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Invalid(format!("grid axis `{s}` is not lo:hi:count"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo = parts[0].trim().parse().map_err(|_| bad())?;
        let hi = parts[1].trim().parse().map_err(|_| bad())?;
        let count = parts[2].trim().parse().map_err(|_| bad())?;
        Ok(AxisSpec { lo, hi, count })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x: AxisSpec,
    pub t: AxisSpec,
}

impl GridSpec {
    /// Parses `XSPEC,TSPEC`.
    pub fn parse(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| Error::Invalid(format!("grid `{s}` is not XSPEC,TSPEC")))?;
        Ok(GridSpec { x: AxisSpec::parse(a)?, t: AxisSpec::parse(b)? })
    }

    /// The grid with every other node, spacing doubled.
    pub fn coarsened(&self) -> Self {
        let half = |a: AxisSpec| AxisSpec { count: (a.count - 1) / 2 + 1, hi: a.value(((a.count - 1) / 2) * 2), ..a };
        GridSpec { x: half(self.x), t: half(self.t) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeStatus {
    Converged,
    NoConvergence,
    SingularJacobian,
    EvaluationError(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridNode {
    pub x: f64,
    pub t: f64,
    pub u: Vec<f64>,
    pub status: NodeStatus,
    pub residual: f64,
    pub iterations: usize,
}

/// Node `(it, ix)` is stored at `it * x.count + ix`.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub spec: GridSpec,
    pub nodes: Vec<GridNode>,
}

impl GridSolution {
    pub fn node(&self, ix: usize, it: usize) -> &GridNode {
        &self.nodes[it * self.spec.x.count + ix]
    }

    pub fn converged(&self) -> usize {
        self.nodes.iter().filter(|n| n.status == NodeStatus::Converged).count()
    }

    /// A grid filled from a closed-form solution.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> Vec<f64>) -> Self {
        let mut nodes = Vec::with_capacity(spec.x.count * spec.t.count);
        for it in 0..spec.t.count {
            for ix in 0..spec.x.count {
                let (x, t) = (spec.x.value(ix), spec.t.value(it));
                nodes.push(GridNode { x, t, u: f(x, t), status: NodeStatus::Converged, residual: 0.0, iterations: 0 });
            }
        }
        GridSolution { spec, nodes }
    }

    pub fn csv(&self) -> String {
        let n = self.nodes.first().map_or(0, |nd| nd.u.len());
        let mut s = String::from("x,t");
        for i in 1..=n {
            s.push_str(&format!(",u{i}"));
        }
        s.push_str(",status,residual\n");
        for nd in &self.nodes {
            s.push_str(&format!("{},{}", crate::report::fmt17(nd.x), crate::report::fmt17(nd.t)));
            for v in &nd.u {
                s.push_str(&format!(",{}", crate::report::fmt17(*v)));
            }
            let st = match &nd.status {
                NodeStatus::Converged => "converged".to_string(),
                NodeStatus::NoConvergence => "no-convergence".to_string(),
                NodeStatus::SingularJacobian => "singular-jacobian".to_string(),
                NodeStatus::EvaluationError(e) => crate::report::csv_field(e),
            };
            s.push_str(&format!(",{st},{}\n", crate::report::fmt17(nd.residual)));
        }
        s
    }
}

fn solve_node(problem: &HodographProblem, x: f64, t: f64, guess: &[f64]) -> GridNode {
    match hodograph_solve(problem, x, t, guess) {
        Ok(r) => GridNode { x, t, u: r.u, status: NodeStatus::Converged, residual: r.residual, iterations: r.iterations },
        Err(e) => {
            let status = match e {
                Error::NoConvergence(..) => NodeStatus::NoConvergence,
                Error::SingularJacobian(_) => NodeStatus::SingularJacobian,
                other => NodeStatus::EvaluationError(other.to_string()),
            };
            GridNode { x, t, u: vec![f64::NAN; guess.len()], status, residual: f64::NAN, iterations: 0 }
        }
    }
}

/// Sweep order for warm starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Along x within each t row.
    RowMajor,
    /// Along t within each x column.
    ColumnMajor,
}

/// Solves on every grid node with warm starts from the previous node.
pub fn hodograph_grid(problem: &HodographProblem, spec: GridSpec, guess: &[f64]) -> Result<GridSolution> {
    hodograph_grid_sweep(problem, spec, guess, Sweep::RowMajor)
}

pub fn hodograph_grid_sweep(
    problem: &HodographProblem,
    spec: GridSpec,
    guess: &[f64],
    sweep: Sweep,
) -> Result<GridSolution> {
    let (nx, nt) = (spec.x.count, spec.t.count);
    if nx == 0 || nt == 0 {
        return Err(Error::Invalid("empty grid".into()));
    }
    let mut nodes: Vec<Option<GridNode>> = vec![None; nx * nt];
    let (outer, inner) = match sweep {
        Sweep::RowMajor => (nt, nx),
        Sweep::ColumnMajor => (nx, nt),
    };
    let mut line_start: Option<Vec<f64>> = None;
    for a in 0..outer {
        let mut prev: Option<Vec<f64>> = line_start.clone();
        for b in 0..inner {
            let (ix, it) = match sweep {
                Sweep::RowMajor => (b, a),
                Sweep::ColumnMajor => (a, b),
            };
            let start = prev.clone().unwrap_or_else(|| guess.to_vec());
            let node = solve_node(problem, spec.x.value(ix), spec.t.value(it), &start);
            if node.status == NodeStatus::Converged {
                if b == 0 {
                    line_start = Some(node.u.clone());
                }
                prev = Some(node.u.clone());
            }
            nodes[it * nx + ix] = Some(node);
        }
    }
    Ok(GridSolution { spec, nodes: nodes.into_iter().map(|n| n.expect("every node visited")).collect() })
}

/// Thread count from `FMAN_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("FMAN_THREADS").ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

/// Every node solved independently from `guess`, in parallel.
pub fn hodograph_grid_parallel(problem: &HodographProblem, spec: GridSpec, guess: &[f64]) -> Result<GridSolution> {
    let (nx, nt) = (spec.x.count, spec.t.count);
    if nx == 0 || nt == 0 {
        return Err(Error::Invalid("empty grid".into()));
    }
    let work = || -> Vec<GridNode> {
        (0..nx * nt)
            .into_par_iter()
            .map(|k| solve_node(problem, spec.x.value(k % nx), spec.t.value(k / nx), guess))
            .collect()
    };
    let nodes = match thread_cap() {
        Some(cap) => rayon::ThreadPoolBuilder::new()
            .num_threads(cap)
            .build()
            .map_err(|e| Error::Invalid(e.to_string()))?
            .install(work),
        None => work(),
    };
    Ok(GridSolution { spec, nodes })
}

/// PDE residual at the interior nodes of a grid and of its 2h coarsening.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeResidual {
    /// Max residual on the fine grid, sampled at the coarse interior nodes.
    pub fine: f64,
    /// Same nodes, differences with doubled spacing.
    pub coarse: f64,
    /// log2(coarse / fine).
    pub order: f64,
    pub nodes_used: usize,
}

/// ‖u_t − X(u)∘u_x‖∞ at node (ix, it) with central differences of spacing k·h.
fn node_residual(model: &FModel, x: &[Expr], g: &GridSolution, ix: usize, it: usize, k: usize) -> Result<Option<f64>> {
    let n = model.dim();
    let nd = [g.node(ix, it), g.node(ix - k, it), g.node(ix + k, it), g.node(ix, it - k), g.node(ix, it + k)];
    if nd.iter().any(|v| v.status != NodeStatus::Converged) {
        return Ok(None);
    }
    let hx = 2.0 * k as f64 * g.spec.x.step();
    let ht = 2.0 * k as f64 * g.spec.t.step();
    let u = &nd[0].u;
    let ux: Vec<f64> = (0..n).map(|i| (nd[2].u[i] - nd[1].u[i]) / hx).collect();
    let ut: Vec<f64> = (0..n).map(|i| (nd[4].u[i] - nd[3].u[i]) / ht).collect();
    let xv: Vec<f64> = x.iter().map(|e| eval_f64(e, &model.coords, u)).collect::<std::result::Result<_, _>>()?;
    let mut r = 0.0f64;
    for i in 0..n {
        let mut rhs = 0.0;
        for j in 0..n {
            for l in 0..n {
                let c = model.c.get(&(i, j, l));
                if let Some(c) = c {
                    rhs += eval_f64(c, &model.coords, u)? * xv[j] * ux[l];
                }
            }
        }
        r = r.max((ut[i] - rhs).abs());
    }
    Ok(Some(r))
}

/// Central-difference PDE residuals with h and 2h on the same nodes.
pub fn pde_residual(model: &FModel, x: &[Expr], grid: &GridSolution) -> Result<PdeResidual> {
    let (nx, nt) = (grid.spec.x.count, grid.spec.t.count);
    if nx < 5 || nt < 5 {
        return Err(Error::Invalid("need at least 5x5 nodes for the residual and its 2h comparison".into()));
    }
    let (mut fine, mut coarse, mut used) = (0.0f64, 0.0f64, 0usize);
    for it in (2..nt - 2).step_by(2) {
        for ix in (2..nx - 2).step_by(2) {
            if let (Some(a), Some(b)) =
                (node_residual(model, x, grid, ix, it, 1)?, node_residual(model, x, grid, ix, it, 2)?)
            {
                fine = fine.max(a);
                coarse = coarse.max(b);
                used += 1;
            }
        }
    }
    if used == 0 {
        return Err(Error::Invalid("no interior node with converged neighbours".into()));
    }
    Ok(PdeResidual { fine, coarse, order: (coarse / fine).log2(), nodes_used: used })
}

/// Max PDE residual with spacings h, 2h, …, 2^(levels−1)·h, all evaluated at
/// the same interior nodes (multiples of 2^(levels−1) away from the edges).
pub fn pde_residual_levels(model: &FModel, x: &[Expr], grid: &GridSolution, levels: usize) -> Result<Vec<f64>> {
    let (nx, nt) = (grid.spec.x.count, grid.spec.t.count);
    let s = 1usize << levels.saturating_sub(1);
    if levels == 0 || nx < 2 * s + 1 || nt < 2 * s + 1 {
        return Err(Error::Invalid(format!("grid too small for {levels} spacing levels")));
    }
    let mut out = vec![0.0f64; levels];
    let mut used = 0;
    for it in (s..nt - s).step_by(s) {
        for ix in (s..nx - s).step_by(s) {
            let r: Option<Vec<f64>> = (0..levels)
                .map(|l| node_residual(model, x, grid, ix, it, 1 << l))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .collect();
            if let Some(r) = r {
                for (o, v) in out.iter_mut().zip(r) {
                    *o = o.max(v);
                }
                used += 1;
            }
        }
    }
    if used == 0 {
        return Err(Error::Invalid("no interior node with converged neighbours".into()));
    }
    Ok(out)
}

/// Checks u_t = X∘u_x on a solved grid by central differences (independent
/// of the jet arithmetic); the verdict uses the fine-grid residual.
pub fn verify_hodograph_solution(model: &FModel, x: &[Expr], grid: &GridSolution, tol: f64) -> Result<Report> {
    let (nx, nt) = (grid.spec.x.count, grid.spec.t.count);
    if nx < 3 || nt < 3 {
        return Err(Error::Invalid("need at least 3x3 nodes".into()));
    }
    let mut rep = Report::new("hodograph-pde", vec![], 0, tol);
    let mut alg = 0.0f64;
    for nd in &grid.nodes {
        if nd.status == NodeStatus::Converged {
            alg = alg.max(nd.residual);
        }
    }
    if nx >= 5 && nt >= 5 {
        let p = pde_residual(model, x, grid)?;
        rep.push("u_t - X o u_x (central differences)", p.fine);
        rep.note(format!("residual with doubled spacing: {:.16e}", p.coarse));
        rep.note(format!("empirical order: {:.6}", p.order));
        rep.note(format!("interior nodes used: {}", p.nodes_used));
    } else {
        let mut r = 0.0f64;
        let mut used = 0;
        for it in 1..nt - 1 {
            for ix in 1..nx - 1 {
                if let Some(v) = node_residual(model, x, grid, ix, it, 1)? {
                    r = r.max(v);
                    used += 1;
                }
            }
        }
        if used == 0 {
            return Err(Error::Invalid("no interior node with converged neighbours".into()));
        }
        rep.push("u_t - X o u_x (central differences)", r);
    }
    rep.note(format!("converged nodes: {} of {}", grid.converged(), grid.nodes.len()));
    rep.note(format!("max algebraic residual: {:.16e}", alg));
    Ok(rep)
}
