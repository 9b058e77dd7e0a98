//! Minimal dense linear algebra generic over [`Scalar`].
//!
//! The systems here are small (a few dozen to ~150 unknowns), so a plain
//! row-major matrix with partial-pivot LU covers every solve in the crate,
//! including solves in dual-number arithmetic where pivoting compares value
//! lanes only. Condition numbers are delegated to nalgebra's SVD.

use crate::error::CoreError;
use crate::scalar::Scalar;
use crate::Result;

/// Dense row-major matrix.
#[derive(Clone, Debug)]
pub struct Mat<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row);
        }
        Mat { rows: r, cols: c, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// y = A x.
    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![S::zero(); self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = S::zero();
            for (a, xv) in row.iter().zip(x) {
                acc += *a * *xv;
            }
            y[i] = acc;
        }
        y
    }
}

impl Mat<f64> {
    /// y = A x where x carries a generic scalar (A stays `f64`).
    pub fn matvec_s<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![S::zero(); self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = S::zero();
            for (a, xv) in row.iter().zip(x) {
                acc += *xv * *a;
            }
            y[i] = acc;
        }
        y
    }
}

impl<S> std::ops::Index<(usize, usize)> for Mat<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Mat<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting (pivot search on value lanes).
#[derive(Clone, Debug)]
pub struct LuFactor<S> {
    lu: Mat<S>,
    perm: Vec<usize>,
}

impl<S: Scalar> LuFactor<S> {
    pub fn new(mut a: Mat<S>, context: &'static str) -> Result<Self> {
        let n = a.rows;
        if a.cols != n {
            return Err(CoreError::invalid(format!("{context}: LU needs a square matrix")));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].value().abs();
            for i in k + 1..n {
                let cand = a[(i, k)].value().abs();
                if cand > best {
                    best = cand;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(CoreError::SingularMatrix { context, pivot: best, row: k });
            }
            if p != k {
                perm.swap(k, p);
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let m = a[(i, k)] / pivot;
                a[(i, k)] = m;
                for j in k + 1..n {
                    let akj = a[(k, j)];
                    let v = a[(i, j)] - m * akj;
                    a[(i, j)] = v;
                }
            }
        }
        Ok(LuFactor { lu: a, perm })
    }

    pub fn n(&self) -> usize {
        self.lu.rows
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.n();
        assert_eq!(b.len(), n);
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        // forward
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        // backward
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }
}

impl LuFactor<f64> {
    /// Solve with a real factorization against a generic-scalar right-hand
    /// side (coefficients stay `f64`, values carry tangents).
    pub fn solve_mixed<S: Scalar>(&self, b: &[S]) -> Vec<S> {
        let n = self.n();
        assert_eq!(b.len(), n);
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= x[j] * self.lu[(i, j)];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= x[j] * self.lu[(i, j)];
            }
            x[i] = acc * (1.0 / self.lu[(i, i)]);
        }
        x
    }
}

/// 2-norm condition number via SVD (largest over smallest singular value).
pub fn condition_number(a: &Mat<f64>) -> f64 {
    let m = nalgebra::DMatrix::from_row_slice(a.rows, a.cols, &a.data);
    let svd = m.svd(false, false);
    let mut smax = 0.0f64;
    let mut smin = f64::INFINITY;
    for &s in svd.singular_values.iter() {
        smax = smax.max(s);
        smin = smin.min(s);
    }
    if smin <= 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Smallest singular value via SVD.
pub fn min_singular_value(a: &Mat<f64>) -> f64 {
    let m = nalgebra::DMatrix::from_row_slice(a.rows, a.cols, &a.data);
    let svd = m.svd(false, false);
    svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dual;

    #[test]
    fn lu_solves_known_system() {
        let a = Mat::from_rows(vec![
            vec![4.0, -2.0, 1.0],
            vec![-2.0, 4.0, -2.0],
            vec![1.0, -2.0, 4.0],
        ]);
        let x_true = vec![1.0, 2.0, 3.0];
        let b = a.matvec(&x_true);
        let lu = LuFactor::new(a, "test").unwrap();
        let x = lu.solve(&b);
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn lu_detects_singular() {
        let a = Mat::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(LuFactor::new(a, "test").is_err());
    }

    #[test]
    fn dual_lu_differentiates_solve() {
        // A(theta) x = b with A = [[theta, 1],[1, 2]]; check dx/dtheta by duals vs FD
        type D = Dual<1>;
        let build = |th: D| {
            Mat::from_rows(vec![vec![th, D::constant(1.0)], vec![D::constant(1.0), D::constant(2.0)]])
        };
        let b = vec![D::constant(1.0), D::constant(0.0)];
        let th0 = 3.0;
        let x = LuFactor::new(build(D::seeded(th0, 0)), "t").unwrap().solve(&b);
        let h = 1e-7;
        let xp = LuFactor::new(build(D::constant(th0 + h)), "t").unwrap().solve(&b);
        let xm = LuFactor::new(build(D::constant(th0 - h)), "t").unwrap().solve(&b);
        for i in 0..2 {
            let fd = (xp[i].re - xm[i].re) / (2.0 * h);
            assert!((x[i].dx[0] - fd).abs() < 1e-6, "{} vs {}", x[i].dx[0], fd);
        }
    }

    #[test]
    fn condition_number_of_diagonal() {
        let mut a = Mat::zeros(3, 3);
        a[(0, 0)] = 10.0;
        a[(1, 1)] = 1.0;
        a[(2, 2)] = 0.001;
        assert!((condition_number(&a) - 10000.0).abs() < 1e-6);
    }
}
