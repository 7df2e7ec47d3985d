//! Small dense symmetric linear algebra: Cholesky factorization, cyclic
//! Jacobi eigendecomposition and the symmetric-definite generalized
//! eigenproblem `A v = lambda B v` with B positive definite.
//!
//! Channel counts in this domain are tens, not thousands, so a dependency-free
//! Jacobi solver is accurate and fast enough; it is also fully deterministic,
//! which the model-reproducibility guarantees rely on.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
///
/// Fails with a numerical error if a pivot is not strictly positive.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = check_square(a)?;
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::Numerical(format!(
                        "cholesky pivot {i} is {sum:.3e}; matrix not positive definite"
                    )));
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn solve_lower(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        for k in 0..i {
            let v = x[k];
            x[i] -= l[[i, k]] * v;
        }
        x[i] /= l[[i, i]];
    }
    x
}

/// Solves `L^T x = b` for lower-triangular `L`.
pub fn solve_lower_transpose(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let v = x[k];
            x[i] -= l[[k, i]] * v;
        }
        x[i] /= l[[i, i]];
    }
    x
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues in ascending order
/// and eigenvectors as orthonormal columns. Column signs are canonicalized so
/// the entry of largest magnitude is positive.
pub fn eigh(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = check_square(a)?;
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);

    let frob: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-14 * frob.max(1e-300);
    let max_sweeps = 64;

    for _sweep in 0..max_sweeps {
        let off: f64 = off_diag_norm(&m);
        if off <= tol {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                // Rotation angle from the standard two-sided Jacobi formula.
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    if off_diag_norm(&m) > tol * 1e3 {
        return Err(Error::Numerical(
            "jacobi eigendecomposition did not converge".into(),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[i, i]].partial_cmp(&m[[j, j]]).unwrap());

    let mut values = Array1::<f64>::zeros(n);
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (out, &idx) in order.iter().enumerate() {
        values[out] = m[[idx, idx]];
        let mut best = 0usize;
        for k in 0..n {
            if v[[k, idx]].abs() > v[[best, idx]].abs() {
                best = k;
            }
        }
        let sign = if v[[best, idx]] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vectors[[k, out]] = sign * v[[k, idx]];
        }
    }
    Ok((values, vectors))
}

/// Generalized symmetric-definite eigenproblem `A w = lambda B w`.
///
/// `B` must be positive definite. Returns eigenvalues in ascending order and
/// eigenvectors as columns normalized so `w^T B w = 1`.
///
/// Solved by reduction with the Cholesky factor `B = L L^T`: the standard
/// symmetric problem `C y = lambda y` with `C = L^-1 A L^-T` has the same
/// eigenvalues, and `w = L^-T y`.
pub fn eigh_generalized(a: &Array2<f64>, b: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = check_square(a)?;
    if b.nrows() != n || b.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "generalized eigenproblem: A is {n}x{n}, B is {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    let l = cholesky(b)?;

    // C = L^-1 A L^-T, built column by column.
    let mut c = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let col = a.column(j).to_owned();
        let y = solve_lower(&l, &col);
        for i in 0..n {
            c[[i, j]] = y[i];
        }
    }
    for i in 0..n {
        let row = c.row(i).to_owned();
        let y = solve_lower(&l, &row);
        for j in 0..n {
            c[[i, j]] = y[j];
        }
    }
    // Symmetrize rounding noise before Jacobi.
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (c[[i, j]] + c[[j, i]]);
            c[[i, j]] = avg;
            c[[j, i]] = avg;
        }
    }

    let (values, y) = eigh(&c)?;
    let mut w = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let col = y.column(j).to_owned();
        let wj = solve_lower_transpose(&l, &col);
        for i in 0..n {
            w[[i, j]] = wj[i];
        }
    }
    Ok((values, w))
}

fn off_diag_norm(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += m[[i, j]] * m[[i, j]];
            }
        }
    }
    sum.sqrt()
}

fn check_square(a: &Array2<f64>) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}
