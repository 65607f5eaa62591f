//! Small dense numerical routines shared across modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericError {
    #[error("singular linear system (pivot {pivot:.3e} below tolerance at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("dimension mismatch: matrix is {rows}x{cols}, rhs has length {rhs}")]
    Dimension { rows: usize, cols: usize, rhs: usize },
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
///
/// `a` is consumed as a row-major square matrix. Pivots below `tol` in
/// absolute value raise [`NumericError::Singular`].
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, tol: f64) -> Result<Vec<f64>, NumericError> {
    let n = a.len();
    if b.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(NumericError::Dimension {
            rows: n,
            cols: a.first().map_or(0, |r| r.len()),
            rhs: b.len(),
        });
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        let pivot = a[pivot_row][col];
        if pivot.abs() < tol {
            return Err(NumericError::Singular { column: col, pivot });
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Two-sided Student-t 95% confidence half-width for a sample.
///
/// Returns 0 for samples of size < 2.
pub fn student_t_ci95_half_width(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let se = (var / n as f64).sqrt();
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("valid dof")
        .inverse_cdf(0.975);
    t * se
}

/// Sample mean.
pub fn mean(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().sum::<f64>() / samples.len() as f64
}
