//! Dense linear algebra for the small systems handled here (n up to about 20).

mod complex;
mod eigen;
mod expm;
mod lyapunov;
mod matrix;
mod riccati;

pub use complex::ComplexMatrix;
pub use eigen::{
    eigenvalues, induced_2_norm, spectral_radius, symmetric_eigenvalues, Spectrum,
    QR_ITERATION_CAP,
};
pub use expm::mat_exp;
pub use lyapunov::{lyapunov_residual, solve_discrete_lyapunov};
pub use matrix::Matrix;
pub use riccati::{
    riccati_gain, riccati_step, solve_dare, solve_dual_dare, DareSolution, DOUBLING_CAP,
    RICCATI_TOLERANCE,
};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `||C_out (e^{i theta} I - G)^{-1} H||_2`.
pub fn complex_resolvent_norm(g: &Matrix, h: &Matrix, c_out: &Matrix, theta: f64) -> Result<f64> {
    let n = g.rows();
    if !g.is_square() || h.rows() != n || c_out.cols() != n {
        return Err(Error::Dimension("resolvent operand shapes".into()));
    }
    let mut m = ComplexMatrix::from_real(&g.scale(-1.0));
    let z = Complex64::from_polar(1.0, theta);
    for i in 0..n {
        m[(i, i)] += z;
    }
    let x = m.solve(&ComplexMatrix::from_real(h))?;
    let y = ComplexMatrix::from_real(c_out).matmul(&x)?;
    Ok(y.induced_2_norm())
}
