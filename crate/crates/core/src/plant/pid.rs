use serde::{Deserialize, Serialize};

use super::DiscretePlant;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    pub fn new(kp: f64, ki: f64, kd: f64) -> Self {
        PidGains { kp, ki, kd }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.kp, self.ki, self.kd]
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        match v {
            [kp, ki, kd] => Ok(PidGains::new(*kp, *ki, *kd)),
            _ => Err(Error::Dimension(format!("{} PID gains, expected 3", v.len()))),
        }
    }
}

/// Two-state realization of the PID law with a trapezoidal integrator and a
/// backward-difference derivative:
/// `z[r+1] = Ahat z[r] + Bhat e[r]`, `out[r] = Chat z[r] + Dhat e[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PidRealization {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
}

pub fn pid_realization(gains: PidGains, tau: f64) -> PidRealization {
    let PidGains { kp, ki, kd } = gains;
    PidRealization {
        a: Matrix::from_rows(&[[0.0, 1.0], [0.0, 1.0]]).expect("static shape"),
        b: Matrix::column(&[0.0, 1.0]),
        c: Matrix::row(&[kd / tau, ki * tau - kd / tau]),
        d: Matrix::row(&[kp + ki * tau / 2.0 + kd / tau]),
    }
}

/// Plant in negative feedback with the PID realization, with the fixed-point
/// errors injected as `[x; z][r+1] = G [x; z][r] + H [e_q1; e_q2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PidLoop {
    pub g: Matrix,
    pub h: Matrix,
    pub c_out: Matrix,
}

pub fn assemble_pid_closed_loop(dp: &DiscretePlant, pid: &PidRealization) -> Result<PidLoop> {
    if dp.inputs() != 1 || dp.outputs() != 1 {
        return Err(Error::Unsupported(format!(
            "PID loops need a single-input single-output plant, got {} inputs and {} outputs",
            dp.inputs(),
            dp.outputs()
        )));
    }
    let n = dp.states();
    let dhat = pid.d[(0, 0)];
    let top_left = &dp.a - &(&dp.b * &dp.c).scale(dhat);
    let top_right = &dp.b * &pid.c;
    let bottom_left = -&(&pid.b * &dp.c);
    let g = Matrix::from_blocks(&[
        vec![Some(&top_left), Some(&top_right)],
        vec![Some(&bottom_left), Some(&pid.a)],
    ])?;
    let mut h = Matrix::zeros(n + 2, 3);
    h.set_block(n, 0, &Matrix::identity(2));
    h.set_block(0, 2, &dp.b);
    let mut c_out = Matrix::zeros(1, n + 2);
    c_out.set_block(0, 0, &dp.c);
    Ok(PidLoop { g, h, c_out })
}
