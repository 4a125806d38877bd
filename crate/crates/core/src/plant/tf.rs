use serde::{Deserialize, Serialize};

use super::ContinuousPlant;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Rational transfer function, coefficients in descending powers of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl TransferFunction {
    pub fn eval(&self, s: num_complex::Complex64) -> num_complex::Complex64 {
        let horner = |c: &[f64]| {
            c.iter()
                .fold(num_complex::Complex64::new(0.0, 0.0), |acc, &v| acc * s + v)
        };
        horner(&self.num) / horner(&self.den)
    }
}

/// Controllable canonical realization of a strictly proper transfer function.
/// The disturbance enters through the input channel.
pub fn controllable_canonical(tf: &TransferFunction) -> Result<ContinuousPlant> {
    let den: Vec<f64> = tf
        .den
        .iter()
        .copied()
        .skip_while(|&v| v == 0.0)
        .collect();
    let num: Vec<f64> = tf
        .num
        .iter()
        .copied()
        .skip_while(|&v| v == 0.0)
        .collect();
    if den.len() < 2 {
        return Err(Error::Config("denominator must have degree at least 1".into()));
    }
    let n = den.len() - 1;
    if num.len() > n {
        return Err(Error::Config(
            "transfer function must be strictly proper".into(),
        ));
    }
    let lead = den[0];
    let mut a = Matrix::zeros(n, n);
    for j in 0..n {
        a[(0, j)] = -den[j + 1] / lead;
    }
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    let mut b = Matrix::zeros(n, 1);
    b[(0, 0)] = 1.0;
    let mut c = Matrix::zeros(1, n);
    let offset = n - num.len();
    for (k, &v) in num.iter().enumerate() {
        c[(0, offset + k)] = v / lead;
    }
    ContinuousPlant::new(a, b.clone(), b, c)
}
