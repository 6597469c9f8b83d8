//! Nonsingular M-matrix test and the weight solve `Aθ = 1`.

use crate::error::{validation, Error, Result};
use crate::matrix::SquareMatrix;

/// Pivots of Gaussian elimination without row exchanges.
///
/// Stops at the first pivot that is not strictly positive. The product of
/// the first `k` pivots is the `k`-th leading principal minor, so for a
/// Z-matrix all pivots positive is exactly the M-matrix condition.
fn positive_pivots(a: &SquareMatrix) -> Option<SquareMatrix> {
    let n = a.dim();
    let mut lu = a.clone();
    for k in 0..n {
        let piv = lu[(k, k)];
        if !(piv > 0.0) || !piv.is_finite() {
            return None;
        }
        for i in k + 1..n {
            let m = lu[(i, k)] / piv;
            lu[(i, k)] = m;
            for j in k + 1..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= m * v;
            }
        }
    }
    Some(lu)
}

/// Leading principal minors `det A[..k, ..k]` for `k = 1..=n`.
///
/// Computed from elimination pivots; once a pivot vanishes the remaining
/// minors are reported as `NaN` because elimination cannot continue.
pub fn leading_minors(a: &SquareMatrix) -> Vec<f64> {
    let n = a.dim();
    let mut lu = a.clone();
    let mut minors = Vec::with_capacity(n);
    let mut det = 1.0;
    for k in 0..n {
        let piv = lu[(k, k)];
        det *= piv;
        minors.push(det);
        if piv == 0.0 {
            minors.resize(n, f64::NAN);
            break;
        }
        for i in k + 1..n {
            let m = lu[(i, k)] / piv;
            for j in k + 1..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= m * v;
            }
        }
    }
    minors
}

/// True iff every off-diagonal is `≤ 0` and every leading principal minor
/// is `> 0`.
pub fn is_nonsingular_m_matrix(a: &SquareMatrix) -> bool {
    let n = a.dim();
    for i in 0..n {
        for j in 0..n {
            if i != j && !(a[(i, j)] <= 0.0) {
                return false;
            }
        }
    }
    positive_pivots(a).is_some()
}

/// Same test on row data; errors when the rows are not square.
pub fn is_nonsingular_m_matrix_rows(rows: &[Vec<f64>]) -> Result<bool> {
    let a = SquareMatrix::from_rows(rows).map_err(|e| validation(e.to_string()))?;
    Ok(is_nonsingular_m_matrix(&a))
}

/// Solves `Aθ = (1, …, 1)ᵀ` for a nonsingular M-matrix.
///
/// The inverse of an M-matrix is entrywise nonnegative with a positive
/// diagonal, so every component of the solution is positive.
pub fn solve_weights(a: &SquareMatrix) -> Result<Vec<f64>> {
    if !is_nonsingular_m_matrix(a) {
        return Err(Error::Certificate(format!("{a:?} is not a nonsingular M-matrix")));
    }
    let lu = positive_pivots(a).expect("checked above");
    let n = a.dim();
    let mut z = vec![1.0; n];
    for i in 0..n {
        for k in 0..i {
            z[i] -= lu[(i, k)] * z[k];
        }
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            z[i] -= lu[(i, k)] * z[k];
        }
        z[i] /= lu[(i, i)];
    }
    // One step of iterative refinement keeps the residual at rounding level
    // for badly scaled inputs.
    let r: Vec<f64> = a.mul_vec(&z).iter().map(|v| 1.0 - v).collect();
    let mut d = r;
    for i in 0..n {
        for k in 0..i {
            d[i] -= lu[(i, k)] * d[k];
        }
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            d[i] -= lu[(i, k)] * d[k];
        }
        d[i] /= lu[(i, i)];
    }
    for (zi, di) in z.iter_mut().zip(&d) {
        *zi += di;
    }
    Ok(z)
}
