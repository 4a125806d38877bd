use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use super::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_real(m: &Matrix) -> Self {
        ComplexMatrix {
            rows: m.rows(),
            cols: m.cols(),
            data: m.as_slice().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension("complex product".into()));
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn conj_transpose(&self) -> ComplexMatrix {
        let mut t = ComplexMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].conj();
            }
        }
        t
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.rows != self.cols || rhs.rows != self.rows {
            return Err(Error::Dimension("complex solve needs a square system".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let scale = a.data.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm()))
                .expect("nonempty pivot range");
            if a[(p, k)].norm() <= 1e-14 * scale {
                return Err(Error::Singular("resolvent is singular".into()));
            }
            if p != k {
                a.swap_rows(p, k);
                b.swap_rows(p, k);
            }
            let piv = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / piv;
                if f.norm() == 0.0 {
                    continue;
                }
                for j in k..n {
                    let t = a[(k, j)];
                    a[(i, j)] -= f * t;
                }
                for j in 0..b.cols {
                    let t = b[(k, j)];
                    b[(i, j)] -= f * t;
                }
            }
        }
        for j in 0..b.cols {
            for i in (0..n).rev() {
                let mut s = b[(i, j)];
                for k in i + 1..n {
                    s -= a[(i, k)] * b[(k, j)];
                }
                b[(i, j)] = s / a[(i, i)];
            }
        }
        Ok(b)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Largest singular value, via the real symmetric embedding of `self^H self`.
    pub fn induced_2_norm(&self) -> f64 {
        let g = self.conj_transpose().matmul(self).expect("gram matrix");
        let q = g.rows;
        // [[Re, -Im], [Im, Re]] has the eigenvalues of g, each twice.
        let mut e = Matrix::zeros(2 * q, 2 * q);
        for i in 0..q {
            for j in 0..q {
                let z = g[(i, j)];
                e[(i, j)] = z.re;
                e[(i + q, j + q)] = z.re;
                e[(i, j + q)] = -z.im;
                e[(i + q, j)] = z.im;
            }
        }
        let lam = super::symmetric_eigenvalues(&e.symmetrize());
        lam.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}
