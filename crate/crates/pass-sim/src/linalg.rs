//! Dense LU solves for the small systems that appear in receiver updates
//! (M x M complex covariances) and sensing-power allocation (K x K real).
//!
//! Partial pivoting with a relative singularity threshold of 1e-12 on the
//! pivot magnitude; matrices here are at most a few dozen rows.

use num_complex::Complex64;

use crate::error::Error;

const PIVOT_RTOL: f64 = 1e-12;

/// Solve A x = b for one or more right-hand sides, complex double precision.
/// `a` is row-major, consumed by the in-place factorization.
pub fn solve_complex_multi(
    mut a: Vec<Vec<Complex64>>,
    mut rhs: Vec<Vec<Complex64>>,
) -> Result<Vec<Vec<Complex64>>, Error> {
    let n = a.len();
    if n == 0 {
        return Ok(rhs);
    }
    let scale = a
        .iter()
        .flat_map(|row| row.iter().map(|v| v.norm()))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, a[r][col].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty column");
        if pivot_mag < PIVOT_RTOL * scale {
            return Err(Error::SingularCovariance);
        }
        if pivot_row != col {
            a.swap(col, pivot_row);
            rhs.swap(col, pivot_row);
        }
        let pivot = a[col][col];
        for r in col + 1..n {
            let factor = a[r][col] / pivot;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in col..n {
                let above = a[col][c];
                a[r][c] -= factor * above;
            }
            for j in 0..rhs[r].len() {
                let above = rhs[col][j];
                rhs[r][j] -= factor * above;
            }
        }
    }
    // Back substitution.
    for col in (0..n).rev() {
        let pivot = a[col][col];
        for j in 0..rhs[col].len() {
            let mut acc = rhs[col][j];
            for c in col + 1..n {
                acc -= a[col][c] * rhs[c][j];
            }
            rhs[col][j] = acc / pivot;
        }
    }
    Ok(rhs)
}

/// Solve A x = b for a single complex right-hand side.
pub fn solve_complex(
    a: Vec<Vec<Complex64>>,
    b: Vec<Complex64>,
) -> Result<Vec<Complex64>, Error> {
    let rhs: Vec<Vec<Complex64>> = b.into_iter().map(|v| vec![v]).collect();
    let out = solve_complex_multi(a, rhs)?;
    Ok(out.into_iter().map(|row| row[0]).collect())
}

/// Solve A x = b for a real system.
pub fn solve_real(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Vec<f64>, Error> {
    let ac = a
        .into_iter()
        .map(|row| row.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
        .collect();
    let bc = b.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let x = solve_complex(ac, bc)?;
    Ok(x.into_iter().map(|v| v.re).collect())
}
