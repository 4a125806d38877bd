use super::Matrix;
use crate::error::{Error, Result};

const SERIES_ORDER: usize = 18;

/// `e^{At}` by scaling and squaring around a fixed-order Taylor core.
///
/// The argument is scaled until its 1-norm is at most 1/2, where the order-18
/// remainder is below 1e-22 relative.
pub fn mat_exp(a: &Matrix, t: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "exponential of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    let at = a.scale(t);
    let norm = at.one_norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let x = at.scale(2f64.powi(-squarings));

    // Horner form of sum_{k=0}^{N} X^k / k!
    let n = a.rows();
    let id = Matrix::identity(n);
    let mut acc = id.clone();
    for k in (1..=SERIES_ORDER).rev() {
        acc = &id + &(&x * &acc).scale(1.0 / k as f64);
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    if !acc.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(acc)
}
