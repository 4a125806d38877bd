use super::{spectral_radius, Matrix};
use crate::error::{Error, Result};

/// Solves `M^T X M - X + W = 0` through the Kronecker-vectorized system
/// `(M^T (x) M^T - I) vec(X) = -vec(W)`.
pub fn solve_discrete_lyapunov(m: &Matrix, w: &Matrix) -> Result<Matrix> {
    if !m.is_square() || w.shape() != m.shape() {
        return Err(Error::Dimension(format!(
            "Lyapunov operands {:?} and {:?}",
            m.shape(),
            w.shape()
        )));
    }
    let rho = spectral_radius(m)?;
    if rho >= 1.0 {
        return Err(Error::NotStable(rho));
    }
    let n = m.rows();
    let nn = n * n;
    // Column-major vec: vec(M^T X M) = (M^T (x) M^T) vec(X).
    let mut k = Matrix::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            let mt_ij = m[(j, i)];
            if mt_ij == 0.0 {
                continue;
            }
            for p in 0..n {
                for q in 0..n {
                    k[(i * n + p, j * n + q)] = mt_ij * m[(q, p)];
                }
            }
        }
    }
    for d in 0..nn {
        k[(d, d)] -= 1.0;
    }
    let mut rhs = Matrix::zeros(nn, 1);
    for col in 0..n {
        for row in 0..n {
            rhs[(col * n + row, 0)] = -w[(row, col)];
        }
    }
    let v = k.solve(&rhs)?;
    let mut x = Matrix::zeros(n, n);
    for col in 0..n {
        for row in 0..n {
            x[(row, col)] = v[(col * n + row, 0)];
        }
    }
    Ok(x.symmetrize())
}

/// `M^T X M - X + W`, for residual checks.
pub fn lyapunov_residual(m: &Matrix, x: &Matrix, w: &Matrix) -> Matrix {
    let mtxm = &(&m.transpose() * x) * m;
    &(&mtxm - x) + w
}
