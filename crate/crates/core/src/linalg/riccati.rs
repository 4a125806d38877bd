use super::Matrix;
use crate::error::{Error, Result};

pub const RICCATI_TOLERANCE: f64 = 1e-10;
pub const DOUBLING_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct DareSolution {
    pub gain: Matrix,
    pub cost: Matrix,
    pub sweeps: usize,
}

/// Stabilizing solution of the discrete algebraic Riccati equation
/// `X = A^T X A - A^T X B (R + B^T X B)^{-1} B^T X A + Q`
/// and the gain `K = (R + B^T X B)^{-1} B^T X A`.
///
/// Runs the doubling form of the Riccati difference iteration: sweep k yields
/// the iterate after 2^k steps started from zero, so slowly converging plants
/// (closed-loop poles near the unit circle) finish in a few dozen sweeps.
pub fn solve_dare(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<DareSolution> {
    let n = a.rows();
    let m = b.cols();
    if !a.is_square()
        || b.rows() != n
        || q.shape() != (n, n)
        || r.shape() != (m, m)
    {
        return Err(Error::Dimension("DARE operand shapes".into()));
    }
    let id = Matrix::identity(n);
    let mut ak = a.clone();
    let mut gk = (b * &r.solve(&b.transpose())?).symmetrize();
    let mut hk = q.symmetrize();
    for sweep in 1..=DOUBLING_CAP {
        let w = (&id + &(&gk * &hk)).inverse()?;
        let wa = &w * &ak;
        let h_next = (&hk + &(&(&ak.transpose() * &hk) * &wa)).symmetrize();
        let g_next = (&gk + &(&(&ak * &w) * &(&gk * &ak.transpose()))).symmetrize();
        ak = &ak * &wa;
        gk = g_next;
        let change = (&h_next - &hk).frobenius_norm();
        let scale = h_next.frobenius_norm();
        hk = h_next;
        if !hk.is_finite() {
            return Err(Error::NonFinite);
        }
        if change <= RICCATI_TOLERANCE * scale {
            let gain = riccati_gain(a, b, r, &hk)?;
            return Ok(DareSolution {
                gain,
                cost: hk,
                sweeps: sweep,
            });
        }
    }
    Err(Error::Convergence {
        what: "Riccati doubling",
        iterations: DOUBLING_CAP,
    })
}

pub fn riccati_gain(a: &Matrix, b: &Matrix, r: &Matrix, x: &Matrix) -> Result<Matrix> {
    let btx = &b.transpose() * x;
    let lhs = r + &(&btx * b);
    lhs.solve(&(&btx * a))
}

/// One step of the Riccati difference iteration.
pub fn riccati_step(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, x: &Matrix) -> Result<Matrix> {
    let atx = &a.transpose() * x;
    let k = riccati_gain(a, b, r, x)?;
    let corr = &(&atx * b) * &k;
    Ok((&(&(&atx * a) - &corr) + q).symmetrize())
}

/// Observer gain by duality: `L = K(A^T, C^T, Bbar Qhat Bbar^T, Rhat)^T`.
pub fn solve_dual_dare(
    a: &Matrix,
    c: &Matrix,
    bbar: &Matrix,
    qhat: &Matrix,
    rhat: &Matrix,
) -> Result<DareSolution> {
    let w = &(bbar * qhat) * &bbar.transpose();
    let sol = solve_dare(&a.transpose(), &c.transpose(), &w, rhat)?;
    Ok(DareSolution {
        gain: sol.gain.transpose(),
        cost: sol.cost,
        sweeps: sol.sweeps,
    })
}
