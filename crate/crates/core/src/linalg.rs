//! Linear algebra over the jet ring.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::scalar::Scalar;

/// Solves `a · x = b` for `x` (with several right-hand sides as columns of `b`).
///
/// Gaussian elimination pivots on constant terms only; since the jet ring is
/// local, the system is solvable iff the constant part of `a` is invertible.
pub fn solve_jet_system<T: Scalar>(
    mut a: Vec<Vec<Jet<T>>>,
    mut b: Vec<Vec<Jet<T>>>,
) -> Result<Vec<Vec<Jet<T>>>> {
    let m = a.len();
    if b.len() != m || a.iter().any(|r| r.len() != m) {
        return Err(Error::Dimension("jet system must be square with matching right-hand side".into()));
    }
    let scale = a
        .iter()
        .flatten()
        .fold(T::zero(), |s, j| s.max(j.value().abs()));
    let threshold = scale * T::lit(1e-13);
    for col in 0..m {
        let (piv, pval) = (col..m)
            .map(|r| (r, a[r][col].value().abs()))
            .fold((col, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pval <= threshold || pval == T::zero() {
            return Err(Error::Singular(format!(
                "constant part has no pivot in column {col} (|pivot| = {:e})",
                pval.as_f64()
            )));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..m {
            if a[r][col].max_abs() == T::zero() {
                continue;
            }
            let f = a[r][col].checked_div(&a[col][col])?;
            for k in col..m {
                let t = &f * &a[col][k];
                a[r][k] = &a[r][k] - &t;
            }
            for k in 0..b[r].len() {
                let t = &f * &b[col][k];
                b[r][k] = &b[r][k] - &t;
            }
        }
    }
    let rhs = b.first().map_or(0, |r| r.len());
    let mut x: Vec<Vec<Jet<T>>> = vec![Vec::new(); m];
    for row in (0..m).rev() {
        let mut xr = Vec::with_capacity(rhs);
        for k in 0..rhs {
            let mut acc = b[row][k].clone();
            for c in row + 1..m {
                acc = &acc - &(&a[row][c] * &x[c][k]);
            }
            xr.push(acc.checked_div(&a[row][row])?);
        }
        x[row] = xr;
    }
    Ok(x)
}

/// Inverse of a square jet matrix.
pub fn invert_jet_matrix<T: Scalar>(a: Vec<Vec<Jet<T>>>) -> Result<Vec<Vec<Jet<T>>>> {
    let m = a.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let (nv, ord) = (a[0][0].nvars(), a[0][0].order());
    let id = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| Jet::constant(nv, ord, if i == j { T::one() } else { T::zero() }))
                .collect()
        })
        .collect();
    solve_jet_system(a, id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(i: usize, v: f64) -> Jet<f64> {
        Jet::variable(2, 3, i, v).unwrap()
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = vec![vec![var(0, 2.0), var(1, 0.5)], vec![var(1, -1.0).exp(), var(0, 1.0).sin().add_scalar(1.0)]];
        let inv = invert_jet_matrix(a.clone()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let p = &(&a[i][0] * &inv[0][j]) + &(&a[i][1] * &inv[1][j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p.value() - want).abs() < 1e-14);
                assert!(p.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
            }
        }
    }

    #[test]
    fn singular_constant_part_is_rejected() {
        let a = vec![vec![var(0, 0.0), Jet::one(2, 3)], vec![Jet::zero(2, 3), var(1, 0.0)]];
        assert!(matches!(invert_jet_matrix(a), Err(Error::Singular(_))));
        let bad = vec![vec![Jet::<f64>::one(2, 3)]];
        assert!(solve_jet_system(bad, vec![]).is_err());
    }
}
