//! Truncated multivariate Taylor series.
//!
//! A [`Jet`] stores every coefficient of total degree at most `order` in `nvars`
//! variables, densely, in graded-lexicographic order. Within one degree the
//! exponent of the first variable decreases, so the layout of order `k` is a
//! prefix of the layout of any order above `k`.

use crate::scalar::Scalar;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jet shape mismatch: ({0} vars, order {1}) vs ({2} vars, order {3})")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("division by a jet with zero constant term")]
    ZeroDivisor,
    #[error("{func} is undefined at constant term {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("partial derivative of an order-0 jet")]
    OrderZero,
    #[error("expected {expected} coefficients, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("variable index {0} out of range for {1} variables")]
    BadVariable(usize, usize),
}

/// Multi-index tables shared by all jets of one shape.
pub struct Layout {
    nvars: usize,
    order: usize,
    exps: Vec<u8>,
    degree_start: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    mul_row_start: Vec<usize>,
    mul_pairs: Vec<(u32, u32)>,
    raise: Vec<Vec<u32>>,
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Layout {
        let mut exps = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        let mut count = 0;
        for d in 0..=order {
            degree_start.push(count);
            let mut cur = vec![0u8; nvars];
            push_monomials(&mut cur, 0, d, &mut exps, &mut count);
        }
        degree_start.push(count);
        let len = count;
        let mut index = HashMap::with_capacity(len);
        for i in 0..len {
            index.insert(exps[i * nvars..(i + 1) * nvars].to_vec(), i);
        }
        let deg = |i: usize| -> usize {
            exps[i * nvars..(i + 1) * nvars].iter().map(|&x| x as usize).sum()
        };
        let mut mul_row_start = Vec::with_capacity(len + 1);
        let mut mul_pairs = Vec::new();
        let mut key = vec![0u8; nvars];
        for i in 0..len {
            mul_row_start.push(mul_pairs.len());
            let limit = degree_start[order - deg(i) + 1];
            for j in 0..limit {
                for v in 0..nvars {
                    key[v] = exps[i * nvars + v] + exps[j * nvars + v];
                }
                mul_pairs.push((j as u32, index[&key] as u32));
            }
        }
        mul_row_start.push(mul_pairs.len());
        let lower = if order == 0 { 0 } else { degree_start[order] };
        let mut raise = vec![Vec::with_capacity(lower); nvars];
        for (v, r) in raise.iter_mut().enumerate() {
            for i in 0..lower {
                key.copy_from_slice(&exps[i * nvars..(i + 1) * nvars]);
                key[v] += 1;
                r.push(index[&key] as u32);
            }
        }
        Layout { nvars, order, exps, degree_start, index, mul_row_start, mul_pairs, raise }
    }

    pub fn len(&self) -> usize {
        self.degree_start[self.order + 1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exps[i * self.nvars..(i + 1) * self.nvars]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.exponents(i).iter().map(|&x| x as usize).sum()
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }

    /// Start offset of the coefficients of total degree `d` (`d <= order + 1`).
    pub fn degree_start(&self, d: usize) -> usize {
        self.degree_start[d]
    }
}

fn push_monomials(cur: &mut [u8], pos: usize, left: usize, out: &mut Vec<u8>, count: &mut usize) {
    if pos + 1 == cur.len() {
        cur[pos] = left as u8;
        out.extend_from_slice(cur);
        *count += 1;
        return;
    }
    for a in (0..=left).rev() {
        cur[pos] = a as u8;
        push_monomials(cur, pos + 1, left - a, out, count);
    }
    cur[pos] = 0;
}

/// Number of coefficients of a jet: C(nvars + order, order).
pub fn jet_len(nvars: usize, order: usize) -> usize {
    let mut r: usize = 1;
    for k in 1..=order {
        r = r * (nvars + k) / k;
    }
    r
}

/// Shared layout for the given shape, built once per process.
pub fn layout(nvars: usize, order: usize) -> Arc<Layout> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
    assert!(nvars >= 1, "jets need at least one variable");
    assert!(order < 256, "jet order too large");
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(l) = cache.lock().unwrap().get(&(nvars, order)) {
        return l.clone();
    }
    let built = Arc::new(Layout::build(nvars, order));
    cache.lock().unwrap().entry((nvars, order)).or_insert(built).clone()
}

/// Analytic functions supported by [`Jet::apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Analytic {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Analytic {
    pub fn name(self) -> &'static str {
        match self {
            Analytic::Exp => "exp",
            Analytic::Log => "log",
            Analytic::Sin => "sin",
            Analytic::Cos => "cos",
            Analytic::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Analytic> {
        Some(match name {
            "exp" => Analytic::Exp,
            "log" => Analytic::Log,
            "sin" => Analytic::Sin,
            "cos" => Analytic::Cos,
            "sqrt" => Analytic::Sqrt,
            _ => return None,
        })
    }

    pub fn eval<T: Scalar>(self, x: T) -> T {
        match self {
            Analytic::Exp => x.exp(),
            Analytic::Log => x.ln(),
            Analytic::Sin => x.sin(),
            Analytic::Cos => x.cos(),
            Analytic::Sqrt => x.sqrt(),
        }
    }

    /// Taylor coefficients f^(k)(a)/k! for k = 0..=order.
    fn taylor<T: Scalar>(self, a: T, order: usize) -> Result<Vec<T>, JetError> {
        let mut c = Vec::with_capacity(order + 1);
        match self {
            Analytic::Exp => {
                let mut t = a.exp();
                for k in 0..=order {
                    if k > 0 {
                        t = t / T::lit(k as f64);
                    }
                    c.push(t);
                }
            }
            Analytic::Log => {
                if !(a > T::zero()) {
                    return Err(JetError::Domain { func: "log", value: a.as_f64() });
                }
                c.push(a.ln());
                let mut p = T::one();
                for k in 1..=order {
                    p = p / a;
                    let sign = if k % 2 == 1 { T::one() } else { -T::one() };
                    c.push(sign * p / T::lit(k as f64));
                }
            }
            Analytic::Sin | Analytic::Cos => {
                let (s, co) = (a.sin(), a.cos());
                let cycle = if self == Analytic::Sin { [s, co, -s, -co] } else { [co, -s, -co, s] };
                let mut f = T::one();
                for k in 0..=order {
                    if k > 0 {
                        f = f / T::lit(k as f64);
                    }
                    c.push(cycle[k % 4] * f);
                }
            }
            Analytic::Sqrt => {
                if a < T::zero() || (a == T::zero() && order > 0) {
                    return Err(JetError::Domain { func: "sqrt", value: a.as_f64() });
                }
                let mut t = a.sqrt();
                c.push(t);
                for k in 1..=order {
                    t = t * T::lit(0.5 - (k as f64 - 1.0)) / T::lit(k as f64) / a;
                    c.push(t);
                }
            }
        }
        Ok(c)
    }
}

/// Truncated Taylor expansion in `nvars` variables to total degree `order`.
#[derive(Clone)]
pub struct Jet<T> {
    layout: Arc<Layout>,
    coeffs: Vec<T>,
}

impl<T: Scalar> fmt::Debug for Jet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.nvars())
            .field("order", &self.order())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl<T: Scalar> Jet<T> {
    pub fn constant(nvars: usize, order: usize, c: T) -> Self {
        let layout = layout(nvars, order);
        let mut coeffs = vec![T::zero(); layout.len()];
        coeffs[0] = c;
        Jet { layout, coeffs }
    }

    pub fn zero(nvars: usize, order: usize) -> Self {
        Self::constant(nvars, order, T::zero())
    }

    pub fn one(nvars: usize, order: usize) -> Self {
        Self::constant(nvars, order, T::one())
    }

    /// The jet `value + x_i`.
    pub fn variable(nvars: usize, order: usize, i: usize, value: T) -> Result<Self, JetError> {
        if i >= nvars {
            return Err(JetError::BadVariable(i, nvars));
        }
        let mut j = Self::constant(nvars, order, value);
        if order >= 1 {
            j.coeffs[1 + i] = T::one();
        }
        Ok(j)
    }

    pub fn from_coeffs(nvars: usize, order: usize, coeffs: Vec<T>) -> Result<Self, JetError> {
        let layout = layout(nvars, order);
        if coeffs.len() != layout.len() {
            return Err(JetError::BadLength { expected: layout.len(), got: coeffs.len() });
        }
        Ok(Jet { layout, coeffs })
    }

    fn like(&self, coeffs: Vec<T>) -> Self {
        Jet { layout: self.layout.clone(), coeffs }
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    /// Constant term.
    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    /// Coefficient of the monomial with the given exponents (0 beyond the order).
    pub fn coeff(&self, exps: &[u8]) -> T {
        self.layout.index_of(exps).map_or(T::zero(), |i| self.coeffs[i])
    }

    pub fn set_coeff(&mut self, exps: &[u8], v: T) {
        if let Some(i) = self.layout.index_of(exps) {
            self.coeffs[i] = v;
        }
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    fn check_shape(&self, other: &Self) -> Result<(), JetError> {
        if self.nvars() != other.nvars() || self.order() != other.order() {
            return Err(JetError::ShapeMismatch(
                self.nvars(),
                self.order(),
                other.nvars(),
                other.order(),
            ));
        }
        Ok(())
    }

    /// Drops every coefficient above `order` (no-op if `order >= self.order()`).
    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order() {
            return self.clone();
        }
        let layout = layout(self.nvars(), order);
        let coeffs = self.coeffs[..layout.len()].to_vec();
        Jet { layout, coeffs }
    }

    /// Same polynomial viewed at a higher order (new coefficients zero).
    pub fn extend(&self, order: usize) -> Self {
        if order <= self.order() {
            return self.truncate(order);
        }
        let layout = layout(self.nvars(), order);
        let mut coeffs = vec![T::zero(); layout.len()];
        coeffs[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        Jet { layout, coeffs }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, JetError> {
        self.check_shape(other)?;
        Ok(self.like(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| *a + *b).collect()))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, JetError> {
        self.check_shape(other)?;
        Ok(self.like(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| *a - *b).collect()))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, JetError> {
        self.check_shape(other)?;
        let l = &*self.layout;
        let mut out = vec![T::zero(); l.len()];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == T::zero() {
                continue;
            }
            for &(j, k) in &l.mul_pairs[l.mul_row_start[i]..l.mul_row_start[i + 1]] {
                out[k as usize] = out[k as usize] + a * other.coeffs[j as usize];
            }
        }
        Ok(self.like(out))
    }

    pub fn scale(&self, s: T) -> Self {
        self.like(self.coeffs.iter().map(|c| *c * s).collect())
    }

    pub fn add_scalar(&self, s: T) -> Self {
        let mut r = self.clone();
        r.coeffs[0] = r.coeffs[0] + s;
        r
    }

    /// Horner evaluation of `sum_k taylor[k] * (self - value)^k`.
    fn compose_univariate(&self, taylor: &[T]) -> Self {
        let mut bar = self.clone();
        bar.coeffs[0] = T::zero();
        let mut r = Self::constant(self.nvars(), self.order(), taylor[taylor.len() - 1]);
        for k in (0..taylor.len() - 1).rev() {
            r = &r * &bar;
            r.coeffs[0] = r.coeffs[0] + taylor[k];
        }
        r
    }

    pub fn recip(&self) -> Result<Self, JetError> {
        let a0 = self.value();
        if a0 == T::zero() {
            return Err(JetError::ZeroDivisor);
        }
        let order = self.order();
        let mut taylor = Vec::with_capacity(order + 1);
        let mut t = a0.recip();
        for _ in 0..=order {
            taylor.push(t);
            t = -t / a0;
        }
        Ok(self.compose_univariate(&taylor))
    }

    /// `self / other`; the divisor needs a nonzero constant term.
    pub fn checked_div(&self, other: &Self) -> Result<Self, JetError> {
        self.check_shape(other)?;
        let r = other.recip()?;
        self.checked_mul(&r)
    }

    pub fn apply(&self, f: Analytic) -> Result<Self, JetError> {
        let taylor = f.taylor(self.value(), self.order())?;
        Ok(self.compose_univariate(&taylor))
    }

    pub fn exp(&self) -> Self {
        self.apply(Analytic::Exp).expect("exp is entire")
    }

    pub fn sin(&self) -> Self {
        self.apply(Analytic::Sin).expect("sin is entire")
    }

    pub fn cos(&self) -> Self {
        self.apply(Analytic::Cos).expect("cos is entire")
    }

    pub fn ln(&self) -> Result<Self, JetError> {
        self.apply(Analytic::Log)
    }

    pub fn sqrt(&self) -> Result<Self, JetError> {
        self.apply(Analytic::Sqrt)
    }

    /// Integer power by binary exponentiation; negative powers go through [`Jet::recip`].
    pub fn powi(&self, n: i32) -> Result<Self, JetError> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one(self.nvars(), self.order());
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &b;
            }
            e >>= 1;
            if e > 0 {
                b = &b * &b;
            }
        }
        Ok(acc)
    }

    /// Partial derivative in variable `i`; the result has order one less.
    pub fn partial(&self, i: usize) -> Result<Self, JetError> {
        if i >= self.nvars() {
            return Err(JetError::BadVariable(i, self.nvars()));
        }
        if self.order() == 0 {
            return Err(JetError::OrderZero);
        }
        let out_layout = layout(self.nvars(), self.order() - 1);
        let raise = &self.layout.raise[i];
        let coeffs = (0..out_layout.len())
            .map(|a| {
                let k = out_layout.exponents(a)[i] as f64 + 1.0;
                T::lit(k) * self.coeffs[raise[a] as usize]
            })
            .collect();
        Ok(Jet { layout: out_layout, coeffs })
    }

    /// Re-expands the polynomial under the affine substitution
    /// `x_i = offset_i + sum_j lin[i][j] * y_j`, returning a jet in `new_nvars`
    /// variables of order `new_order`.
    pub fn compose_affine(
        &self,
        lin: &[Vec<T>],
        offset: &[T],
        new_nvars: usize,
        new_order: usize,
    ) -> Self {
        let n = self.nvars();
        let k = self.order();
        let forms: Vec<Jet<T>> = (0..n)
            .map(|i| {
                let mut j = Jet::constant(new_nvars, new_order, offset[i]);
                if new_order >= 1 {
                    for (v, &a) in lin[i].iter().enumerate() {
                        j.coeffs[1 + v] = a;
                    }
                }
                j
            })
            .collect();
        let powers: Vec<Vec<Jet<T>>> = forms
            .iter()
            .map(|f| {
                let mut p = vec![Jet::one(new_nvars, new_order)];
                for m in 1..=k {
                    let next = &p[m - 1] * f;
                    p.push(next);
                }
                p
            })
            .collect();
        let mut out = vec![T::zero(); layout(new_nvars, new_order).len()];
        for (idx, &a) in self.coeffs.iter().enumerate() {
            if a == T::zero() {
                continue;
            }
            let exps = self.layout.exponents(idx);
            let mut term = Jet::constant(new_nvars, new_order, a);
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    term = &term * &powers[i][e as usize];
                }
            }
            for (o, t) in out.iter_mut().zip(&term.coeffs) {
                *o = *o + *t;
            }
        }
        Jet { layout: layout(new_nvars, new_order), coeffs: out }
    }

    /// The same polynomial re-centred at `base + delta`, truncated to `new_order`.
    pub fn shift(&self, delta: &[T], new_order: usize) -> Self {
        let n = self.nvars();
        let id: Vec<Vec<T>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
            .collect();
        self.compose_affine(&id, delta, n, new_order)
    }

    /// Coefficients of `t^m` of the polynomial restricted to the line `t * dir`.
    pub fn restrict_to_line(&self, dir: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.order() + 1];
        for (idx, &a) in self.coeffs.iter().enumerate() {
            let exps = self.layout.exponents(idx);
            let mut m = a;
            for (i, &e) in exps.iter().enumerate() {
                m = m * dir[i].powi(e as i32);
            }
            let d = self.layout.degree(idx);
            out[d] = out[d] + m;
        }
        out
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl<'a, T: Scalar> $trait<&'a Jet<T>> for &'a Jet<T> {
            type Output = Jet<T>;
            /// Panics on shape mismatch; use the `checked_*` form for fallible input.
            fn $method(self, rhs: &'a Jet<T>) -> Jet<T> {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl<T: Scalar> $trait<Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: Jet<T>) -> Jet<T> {
                (&self).$method(&rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl<T: Scalar> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.like(self.coeffs.iter().map(|c| -*c).collect())
    }
}

impl<T: Scalar> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        -&self
    }
}

/// Sum of jets of one shape; `zero` fixes the shape when the iterator is empty.
pub fn sum_jets<'a, T: Scalar, I: IntoIterator<Item = &'a Jet<T>>>(zero: Jet<T>, it: I) -> Jet<T> {
    it.into_iter().fold(zero, |acc, j| &acc + j)
}

/// One-variable truncated series (Cauchy data along curves).
#[derive(Debug, Clone, PartialEq)]
pub struct UniSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> UniSeries<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a series has at least its constant term");
        UniSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        UniSeries { coeffs: vec![T::zero(); order + 1] }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).copied().unwrap_or(T::zero())
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(order + 1, T::zero());
        UniSeries { coeffs: c }
    }

    pub fn to_jet(&self) -> Jet<T> {
        Jet::from_coeffs(1, self.order(), self.coeffs.clone()).expect("length matches")
    }

    pub fn from_jet(j: &Jet<T>) -> Self {
        assert_eq!(j.nvars(), 1, "univariate jet expected");
        UniSeries { coeffs: j.coeffs().to_vec() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let a = self.truncate(order).to_jet();
        let b = other.truncate(order).to_jet();
        Self::from_jet(&(&a * &b))
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        UniSeries { coeffs: (0..=order).map(|k| self.coeffs[k] + other.coeffs[k]).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        UniSeries { coeffs: (0..=order).map(|k| self.coeffs[k] - other.coeffs[k]).collect() }
    }

    pub fn scale(&self, s: T) -> Self {
        UniSeries { coeffs: self.coeffs.iter().map(|c| *c * s).collect() }
    }

    /// Term-wise integral with the given constant term; order grows by one.
    pub fn antiderivative(&self, value_at_zero: T) -> Self {
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(value_at_zero);
        for (k, a) in self.coeffs.iter().enumerate() {
            c.push(*a / T::lit((k + 1) as f64));
        }
        UniSeries { coeffs: c }
    }

    /// Term-wise derivative; order drops by one (an order-0 series gives 0).
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return UniSeries { coeffs: vec![T::zero()] };
        }
        UniSeries {
            coeffs: (1..self.coeffs.len()).map(|k| self.coeffs[k] * T::lit(k as f64)).collect(),
        }
    }

    pub fn eval(&self, t: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, c| acc * t + *c)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n).fold(T::zero(), |m, k| m.max((self.coeff(k) - other.coeff(k)).abs()))
    }
}
