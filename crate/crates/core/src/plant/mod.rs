//! Plant models, discretization and closed-loop assembly.

mod pid;
mod simulate;
mod tf;

pub use pid::{assemble_pid_closed_loop, pid_realization, PidGains, PidLoop, PidRealization};
pub use simulate::{
    simulate_ideal, simulate_pid_ideal, simulate_quantized, steady_state_peak, Excitation,
    Sample, SimFault, Trajectory,
};
pub use tf::{controllable_canonical, TransferFunction};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mat_exp, Matrix};

/// `dx/dt = A x + B u + Bbar d`, `y = C x + v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousPlant {
    pub a: Matrix,
    pub b: Matrix,
    pub bbar: Matrix,
    pub c: Matrix,
}

impl ContinuousPlant {
    pub fn new(a: Matrix, b: Matrix, bbar: Matrix, c: Matrix) -> Result<Self> {
        let p = ContinuousPlant { a, b, bbar, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.rows();
        if !self.a.is_square() {
            return Err(Error::Dimension(format!("A is {:?}, expected square", self.a.shape())));
        }
        if self.b.rows() != n {
            return Err(Error::Dimension(format!("B has {} rows, A has {n}", self.b.rows())));
        }
        if self.bbar.rows() != n {
            return Err(Error::Dimension(format!(
                "Bbar has {} rows, A has {n}",
                self.bbar.rows()
            )));
        }
        if self.c.cols() != n {
            return Err(Error::Dimension(format!("C has {} columns, A has {n}", self.c.cols())));
        }
        Ok(())
    }

    pub fn states(&self) -> usize {
        self.a.rows()
    }

    pub fn inputs(&self) -> usize {
        self.b.cols()
    }

    pub fn outputs(&self) -> usize {
        self.c.rows()
    }
}

/// `x[r+1] = A_tau x[r] + B_tau u[r] + Bbar_tau d[r]`, `y[r] = C x[r] + v[r]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePlant {
    pub a: Matrix,
    pub b: Matrix,
    pub bbar: Matrix,
    pub c: Matrix,
    pub tau: f64,
}

impl DiscretePlant {
    pub fn states(&self) -> usize {
        self.a.rows()
    }

    pub fn inputs(&self) -> usize {
        self.b.cols()
    }

    pub fn outputs(&self) -> usize {
        self.c.rows()
    }

    pub fn disturbances(&self) -> usize {
        self.bbar.cols()
    }
}

/// Zero-order-hold discretization. The input integrals come from the upper
/// right blocks of `exp([[A, B, Bbar], [0, 0, 0]] tau)`.
pub fn discretize(plant: &ContinuousPlant, tau: f64) -> Result<DiscretePlant> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Config(format!("sampling time must be positive, got {tau}")));
    }
    plant.validate()?;
    let n = plant.states();
    let m = plant.inputs();
    let q = plant.bbar.cols();
    let mut aug = Matrix::zeros(n + m + q, n + m + q);
    aug.set_block(0, 0, &plant.a);
    aug.set_block(0, n, &plant.b);
    aug.set_block(0, n + m, &plant.bbar);
    let e = mat_exp(&aug, tau)?;
    Ok(DiscretePlant {
        a: e.block(0, 0, n, n),
        b: e.block(0, n, n, m),
        bbar: e.block(0, n + m, n, q),
        c: plant.c.clone(),
        tau,
    })
}

/// Feedback gain `K` (m x n) and observer gain `L` (n x p).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainPair {
    pub k: Matrix,
    pub l: Matrix,
}

impl GainPair {
    pub fn new(k: Matrix, l: Matrix) -> Self {
        GainPair { k, l }
    }

    pub fn check(&self, dp: &DiscretePlant) -> Result<()> {
        let (n, m, p) = (dp.states(), dp.inputs(), dp.outputs());
        if self.k.shape() != (m, n) {
            return Err(Error::Dimension(format!(
                "K is {:?}, expected ({m}, {n})",
                self.k.shape()
            )));
        }
        if self.l.shape() != (n, p) {
            return Err(Error::Dimension(format!(
                "L is {:?}, expected ({n}, {p})",
                self.l.shape()
            )));
        }
        Ok(())
    }

    /// K entries then L entries, both row-major.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.k.as_slice().to_vec();
        v.extend_from_slice(self.l.as_slice());
        v
    }

    pub fn unflatten(v: &[f64], n: usize, m: usize, p: usize) -> Result<Self> {
        if v.len() != m * n + n * p {
            return Err(Error::Dimension(format!(
                "{} gain entries, expected {}",
                v.len(),
                m * n + n * p
            )));
        }
        Ok(GainPair {
            k: Matrix::from_vec(m, n, v[..m * n].to_vec())?,
            l: Matrix::from_vec(n, p, v[m * n..].to_vec())?,
        })
    }
}

/// `w[r+1] = G w[r] + H1 e1[r] + H2 e2[r]`, `y[r] = C_out w[r]` with
/// `w = [x; xhat]`, `e1 = [d; v]` and `e2 = [e_q1; e_q2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub g: Matrix,
    pub h1: Matrix,
    pub h2: Matrix,
    pub c_out: Matrix,
}

pub fn assemble_closed_loop(dp: &DiscretePlant, gains: &GainPair) -> Result<ClosedLoop> {
    gains.check(dp)?;
    let (n, m, p, q) = (dp.states(), dp.inputs(), dp.outputs(), dp.disturbances());
    let bk = &dp.b * &gains.k;
    let lc = &gains.l * &dp.c;
    let observer = &(&dp.a - &bk) - &lc;
    let neg_bk = -&bk;
    let g = Matrix::from_blocks(&[
        vec![Some(&dp.a), Some(&neg_bk)],
        vec![Some(&lc), Some(&observer)],
    ])?;
    let mut h1 = Matrix::zeros(2 * n, q + p);
    h1.set_block(0, 0, &dp.bbar);
    h1.set_block(n, q, &gains.l);
    let mut h2 = Matrix::zeros(2 * n, n + m);
    h2.set_block(0, n, &dp.b);
    h2.set_block(n, 0, &Matrix::identity(n));
    let mut c_out = Matrix::zeros(p, 2 * n);
    c_out.set_block(0, 0, &dp.c);
    Ok(ClosedLoop { g, h1, h2, c_out })
}

/// `A_tau - B_tau K`.
pub fn feedback_matrix(dp: &DiscretePlant, k: &Matrix) -> Matrix {
    &dp.a - &(&dp.b * k)
}

/// `A_tau - L C`.
pub fn observer_error_matrix(dp: &DiscretePlant, l: &Matrix) -> Matrix {
    &dp.a - &(l * &dp.c)
}

/// `A_tau - B_tau K - L C`, the matrix applied to `xhat` by the controller.
pub fn observer_update_matrix(dp: &DiscretePlant, gains: &GainPair) -> Matrix {
    &(&dp.a - &(&dp.b * &gains.k)) - &(&gains.l * &dp.c)
}
