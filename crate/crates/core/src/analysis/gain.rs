use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{complex_resolvent_norm, eigenvalues, spectral_radius, Matrix};

pub const HURWITZ_MARGIN: f64 = 1e-9;
pub const DEFAULT_GRID: usize = 1024;
const REFINE_TOLERANCE: f64 = 1e-9;
const REFINED_PEAKS: usize = 8;

/// All eigenvalues strictly inside the unit circle, with a small margin.
pub fn is_hurwitz(m: &Matrix) -> Result<bool> {
    Ok(spectral_radius(m)? < 1.0 - HURWITZ_MARGIN)
}

fn golden_max(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > REFINE_TOLERANCE {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// `max_theta ||C_out (e^{i theta} I - G)^{-1} H||` using a `grid`-point
/// scan of `[0, pi]` (the response is conjugate symmetric) plus the
/// arguments of the eigenvalues of `G`, each promising local maximum then
/// refined by golden-section search.
pub fn l2_gain_with_grid(g: &Matrix, h: &Matrix, c_out: &Matrix, grid: usize) -> Result<f64> {
    let rho = spectral_radius(g)?;
    if rho >= 1.0 - HURWITZ_MARGIN {
        return Err(Error::NotStable(rho));
    }
    let f = |theta: f64| complex_resolvent_norm(g, h, c_out, theta);
    let step = PI / (grid.max(2) - 1) as f64;
    let mut thetas: Vec<f64> = (0..grid.max(2)).map(|i| i as f64 * step).collect();
    for ev in eigenvalues(g)?.eigenvalues {
        let arg = ev.arg().abs();
        if !thetas.iter().any(|t| (t - arg).abs() < 1e-12) {
            thetas.push(arg);
        }
    }
    thetas.sort_by(f64::total_cmp);
    let values: Vec<f64> = thetas.iter().map(|&t| f(t)).collect::<Result<_>>()?;
    let mut best = values.iter().copied().fold(0.0, f64::max);
    let mut peaks: Vec<usize> = (0..thetas.len())
        .filter(|&i| {
            let left = i == 0 || values[i - 1] <= values[i];
            let right = i + 1 == thetas.len() || values[i + 1] <= values[i];
            left && right
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    for &i in peaks.iter().take(REFINED_PEAKS) {
        let lo = if i == 0 { 0.0 } else { thetas[i - 1] };
        let hi = if i + 1 == thetas.len() { PI } else { thetas[i + 1] };
        let (_, v) = golden_max(&f, lo, hi)?;
        best = best.max(v);
    }
    Ok(best)
}

pub fn l2_gain(g: &Matrix, h: &Matrix, c_out: &Matrix) -> Result<f64> {
    l2_gain_with_grid(g, h, c_out, DEFAULT_GRID)
}
