use num_complex::Complex64;

use super::Matrix;
use crate::error::{Error, Result};

/// QR sweeps allowed per eigenvalue before giving up.
pub const QR_ITERATION_CAP: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
}

impl Spectrum {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Eigenvalues ordered by real part, then imaginary part.
    pub fn sorted(&self) -> Vec<Complex64> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }
}

pub fn eigenvalues(a: &Matrix) -> Result<Spectrum> {
    if !a.is_square() {
        return Err(Error::Dimension("eigenvalues of a non-square matrix".into()));
    }
    let n = a.rows();
    let mut h = a.to_rows();
    balance(&mut h);
    to_hessenberg(&mut h);
    let eig = hessenberg_qr(&mut h)?;
    debug_assert_eq!(eig.len(), n);
    Ok(Spectrum { eigenvalues: eig })
}

pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    Ok(eigenvalues(a)?.spectral_radius())
}

fn balance(a: &mut [Vec<f64>]) {
    const RADIX: f64 = 2.0;
    let n = a.len();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let (mut r, mut c) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[i][j] *= g;
                }
                for row in a.iter_mut() {
                    row[i] *= f;
                }
            }
        }
    }
}

/// Reduction to upper Hessenberg form by stabilized elementary similarity
/// transforms. Entries below the subdiagonal are zeroed.
fn to_hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    for m in 1..n.saturating_sub(1) {
        let mut x = 0.0f64;
        let mut piv = m;
        for j in m..n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                piv = j;
            }
        }
        if piv != m {
            a.swap(piv, m);
            for row in a.iter_mut() {
                row.swap(piv, m);
            }
        }
        if x != 0.0 {
            for i in m + 1..n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = 0.0;
                    for j in m..n {
                        a[i][j] -= y * a[m][j];
                    }
                    for row in a.iter_mut() {
                        row[m] += y * row[i];
                    }
                }
            }
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix.
fn hessenberg_qr(a: &mut [Vec<f64>]) -> Result<Vec<Complex64>> {
    let n = a.len();
    let eps = f64::EPSILON;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l > 0 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() <= eps * s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nu][nu];
            if l == nu {
                out[nu] = Complex64::new(x + t, 0.0);
                nn -= 1;
            } else {
                let mut y = a[nu - 1][nu - 1];
                let mut w = a[nu][nu - 1] * a[nu - 1][nu];
                if l == nu - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        let z = p + z.copysign(p);
                        out[nu - 1] = Complex64::new(x + z, 0.0);
                        out[nu] = if z != 0.0 {
                            Complex64::new(x - w / z, 0.0)
                        } else {
                            Complex64::new(x + z, 0.0)
                        };
                    } else {
                        out[nu - 1] = Complex64::new(x + p, z);
                        out[nu] = Complex64::new(x + p, -z);
                    }
                    nn -= 2;
                } else {
                    if its >= QR_ITERATION_CAP {
                        return Err(Error::Convergence {
                            what: "Hessenberg QR",
                            iterations: its,
                        });
                    }
                    if its % 10 == 0 && its > 0 {
                        // exceptional shift
                        t += x;
                        for (i, row) in a.iter_mut().enumerate().take(nu + 1) {
                            row[i] -= x;
                        }
                        let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    francis_step(a, l, nu, x, y, w);
                }
            }
            if nn < 0 || l + 1 >= nn as usize {
                break;
            }
        }
    }
    Ok(out)
}

fn francis_step(a: &mut [Vec<f64>], l: usize, nu: usize, x0: f64, y0: f64, w: f64) {
    let eps = f64::EPSILON;
    let (mut p, mut q, mut r);
    let mut m = nu - 2;
    loop {
        let z = a[m][m];
        let rr = x0 - z;
        let ss = y0 - z;
        p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
        q = a[m + 1][m + 1] - z - rr - ss;
        r = a[m + 2][m + 1];
        let s = p.abs() + q.abs() + r.abs();
        p /= s;
        q /= s;
        r /= s;
        if m == l {
            break;
        }
        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
        if u <= eps * v {
            break;
        }
        m -= 1;
    }
    for i in m..nu - 1 {
        a[i + 2][i] = 0.0;
        if i != m {
            a[i + 2][i - 1] = 0.0;
        }
    }
    let mut x = 0.0;
    for k in m..nu {
        if k != m {
            p = a[k][k - 1];
            q = a[k + 1][k - 1];
            r = if k + 1 != nu { a[k + 2][k - 1] } else { 0.0 };
            x = p.abs() + q.abs() + r.abs();
            if x != 0.0 {
                p /= x;
                q /= x;
                r /= x;
            }
        }
        let s = (p * p + q * q + r * r).sqrt().copysign(p);
        if s == 0.0 {
            continue;
        }
        if k == m {
            if l != m {
                a[k][k - 1] = -a[k][k - 1];
            }
        } else {
            a[k][k - 1] = -s * x;
        }
        p += s;
        let xx = p / s;
        let yy = q / s;
        let zz = r / s;
        q /= p;
        r /= p;
        for j in k..=nu {
            let mut pp = a[k][j] + q * a[k + 1][j];
            if k + 1 != nu {
                pp += r * a[k + 2][j];
                a[k + 2][j] -= pp * zz;
            }
            a[k + 1][j] -= pp * yy;
            a[k][j] -= pp * xx;
        }
        let mmin = if nu < k + 3 { nu } else { k + 3 };
        for row in a.iter_mut().take(mmin + 1).skip(l) {
            let mut pp = xx * row[k] + yy * row[k + 1];
            if k + 1 != nu {
                pp += zz * row[k + 2];
                row[k + 2] -= pp * r;
            }
            row[k + 1] -= pp * q;
            row[k] -= pp;
        }
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    assert!(a.is_square(), "symmetric eigenvalues need a square matrix");
    let n = a.rows();
    let mut m = a.to_rows();
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += m[i][i] * m[i][i];
            for j in 0..n {
                if i != j {
                    off += m[i][j] * m[i][j];
                }
            }
        }
        if off <= 1e-32 * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in m.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (m[p][k], m[q][k]);
                    m[p][k] = c * pk - s * qk;
                    m[q][k] = s * pk + c * qk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    d.sort_by(f64::total_cmp);
    d
}

/// Largest singular value, `sqrt(lambda_max(A^T A))`.
pub fn induced_2_norm(a: &Matrix) -> f64 {
    let gram = if a.rows() >= a.cols() {
        &a.transpose() * a
    } else {
        a * &a.transpose()
    };
    symmetric_eigenvalues(&gram.symmetrize())
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(0.0)
        .sqrt()
}
