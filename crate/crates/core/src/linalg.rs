//! Minimal dense complex linear algebra.
//!
//! Covariance matrices here are at most a few dozen rows, so a plain
//! row-major `Vec<Complex64>` with partial-pivot elimination covers every
//! need without pulling in a BLAS binding.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(rows * cols, data.len());
        CMat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> CMat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows);
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry-wise deviation from the conjugate transpose.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in 0..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Principal submatrix on the given (sorted or not) index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> CMat {
        let mut out = CMat::zeros(idx.len(), idx.len());
        for (i, &r) in idx.iter().enumerate() {
            for (j, &c) in idx.iter().enumerate() {
                out[(i, j)] = self[(r, c)];
            }
        }
        out
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<CMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = CMat::identity(n);
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r1, &r2| {
                    a[(r1, col)]
                        .norm_sqr()
                        .total_cmp(&a[(r2, col)].norm_sqr())
                })
                .unwrap();
            let pivot = a[(pivot_row, col)];
            if pivot.norm_sqr() == 0.0 || !pivot.norm_sqr().is_finite() {
                return Err(Error::Numeric(format!(
                    "singular {n}x{n} matrix (pivot {col})"
                )));
            }
            if pivot_row != col {
                a.swap_rows(pivot_row, col);
                inv.swap_rows(pivot_row, col);
            }
            let inv_pivot = C64::new(1.0, 0.0) / pivot;
            for c in 0..n {
                a[(col, c)] *= inv_pivot;
                inv[(col, c)] *= inv_pivot;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[(r, col)];
                if factor == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..n {
                    let ac = a[(col, c)];
                    let ic = inv[(col, c)];
                    a[(r, c)] -= factor * ac;
                    inv[(r, c)] -= factor * ic;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, r1: usize, r2: usize) {
        if r1 == r2 {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(r1 * self.cols + c, r2 * self.cols + c);
        }
    }

    /// Whether `self + shift*I` admits a Cholesky factorization, i.e. the
    /// smallest eigenvalue of the Hermitian part is at least `-shift`.
    pub fn is_psd_within(&self, shift: f64) -> bool {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = self.clone();
        for i in 0..n {
            l[(i, i)] += shift;
        }
        // In-place LL^H; fails on a non-positive real pivot.
        for j in 0..n {
            let mut d = l[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if d <= 0.0 || !d.is_finite() {
                return false;
            }
            let d = d.sqrt();
            l[(j, j)] = C64::new(d, 0.0);
            for i in (j + 1)..n {
                let mut v = l[(i, j)];
                for k in 0..j {
                    let a = l[(i, k)];
                    let b = l[(j, k)].conj();
                    v -= a * b;
                }
                l[(i, j)] = v / d;
            }
        }
        true
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

/// `x^H A y` for conformable slices.
pub fn quad_form(x: &[C64], a: &CMat, y: &[C64]) -> C64 {
    assert_eq!(x.len(), a.rows());
    assert_eq!(y.len(), a.cols());
    let mut acc = C64::new(0.0, 0.0);
    for (r, xv) in x.iter().enumerate() {
        let row = a.row(r);
        let mut inner = C64::new(0.0, 0.0);
        for (av, yv) in row.iter().zip(y) {
            inner += av * yv;
        }
        acc += xv.conj() * inner;
    }
    acc
}

/// `x^H y`.
pub fn cdot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Rank-one Hermitian outer product `v v^H` scaled by `s`.
pub fn outer_scaled(v: &[C64], s: f64) -> CMat {
    let n = v.len();
    let mut out = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = v[i] * v[j].conj() * s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn inverse_solves_identity() {
        let a = CMat::from_rows(
            2,
            2,
            vec![c(2.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)],
        );
        let inv = a.inverse().unwrap();
        let prod = a.matmul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - c(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_matrix_reports_numeric_error() {
        let a = CMat::from_rows(
            2,
            2,
            vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)],
        );
        assert!(a.inverse().is_err());
    }

    #[test]
    fn psd_check_accepts_hermitian_psd_and_rejects_indefinite() {
        let psd = outer_scaled(&[c(1.0, 0.5), c(-0.3, 0.2)], 2.0);
        assert!(psd.is_psd_within(1e-12));
        let mut indef = CMat::identity(2);
        indef[(1, 1)] = c(-1.0, 0.0);
        assert!(!indef.is_psd_within(1e-12));
        assert!(indef.is_psd_within(1.5));
    }

    #[test]
    fn quad_form_matches_manual_expansion() {
        let a = CMat::from_rows(
            2,
            2,
            vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)],
        );
        let x = [c(1.0, 1.0), c(0.5, -0.5)];
        let q = quad_form(&x, &a, &x);
        // Hermitian matrix => real quadratic form.
        assert!(q.im.abs() < 1e-12);
        assert!(q.re > 0.0);
    }
}
