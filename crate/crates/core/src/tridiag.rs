//! Banded storage for tridiagonal matrices and an O(n) direct solver.
//!
//! Row `i` of the matrix holds `sub[i - 1]`, `diag[i]`, `sup[i]`, so that
//! `sub[i]` is the entry `(i + 1, i)` and `sup[i]` the entry `(i, i + 1)`.

use crate::error::{FpError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        let off = n.saturating_sub(1);
        Self {
            sub: vec![0.0; off],
            diag: vec![0.0; n],
            sup: vec![0.0; off],
        }
    }

    pub fn from_diagonals(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let off = diag.len().saturating_sub(1);
        for d in [&sub, &sup] {
            if d.len() != off {
                return Err(FpError::DimensionMismatch {
                    expected: off,
                    found: d.len(),
                });
            }
        }
        Ok(Self { sub, diag, sup })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j == i + 1 {
            self.sup[i]
        } else if i == j + 1 {
            self.sub[j]
        } else {
            0.0
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            sub: self.sup.clone(),
            diag: self.diag.clone(),
            sup: self.sub.clone(),
        }
    }

    /// `alpha * self + beta * other`, entrywise on the three bands.
    pub fn combine(&self, alpha: f64, other: &Tridiagonal, beta: f64) -> Self {
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect()
        };
        Self {
            sub: mix(&self.sub, &other.sub),
            diag: mix(&self.diag, &other.diag),
            sup: mix(&self.sup, &other.sup),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let scale = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| s * x).collect() };
        Self {
            sub: scale(&self.sub),
            diag: scale(&self.diag),
            sup: scale(&self.sup),
        }
    }

    pub fn add_to_diag(&mut self, scale: f64, values: &[f64]) {
        for (d, v) in self.diag.iter_mut().zip(values) {
            *d += scale * v;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.len(), "matvec dimension mismatch");
        let n = self.len();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for i in 0..n.saturating_sub(1) {
            y[i] += self.sup[i] * x[i + 1];
            y[i + 1] += self.sub[i] * x[i];
        }
        y
    }

    /// `xᵀ self y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.sub[i - 1].abs();
                }
                if i + 1 < self.len() {
                    s += self.sup[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// `xᵀ self y` for a symmetric matrix, summed so that swapping `x` and
    /// `y` gives a bitwise identical result. Only `sup` is read.
    pub fn symmetric_form(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.len(), "symmetric_form dimension mismatch");
        assert_eq!(y.len(), self.len(), "symmetric_form dimension mismatch");
        let mut s = 0.0;
        for i in 0..self.len() {
            s += self.diag[i] * (x[i] * y[i]);
            if i + 1 < self.len() {
                s += self.sup[i] * (x[i] * y[i + 1] + x[i + 1] * y[i]);
            }
        }
        s
    }

    /// Largest `|T_ij + T_ji|` over the band.
    pub fn max_symmetric_part(&self) -> f64 {
        let diag = self.diag.iter().map(|d| (2.0 * d).abs());
        let off = self.sub.iter().zip(&self.sup).map(|(l, u)| (l + u).abs());
        diag.chain(off).fold(0.0, f64::max)
    }

    pub fn factor(&self) -> Result<TridiagonalLu> {
        TridiagonalLu::new(self)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.factor()?.solve_in_place(&mut x)?;
        Ok(x)
    }
}

/// LU factors with partial pivoting, in the elimination order of LAPACK's
/// `dgtsv`/`dgttrf`: row `i` may be swapped with row `i + 1`, which creates a
/// second super-diagonal.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    /// Multipliers `l[i]` applied to row `i + 1`.
    lower: Vec<f64>,
    diag: Vec<f64>,
    sup1: Vec<f64>,
    sup2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn new(m: &Tridiagonal) -> Result<Self> {
        let n = m.len();
        if n == 0 {
            return Err(FpError::param("empty tridiagonal system"));
        }
        let mut d = m.diag.clone();
        let mut du = m.sup.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut lower = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];

        for i in 0..n.saturating_sub(1) {
            let dl = m.sub[i];
            if d[i].abs() >= dl.abs() {
                if d[i] == 0.0 {
                    return Err(FpError::SingularPivot { row: i });
                }
                let fact = dl / d[i];
                lower[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl;
                lower[i] = fact;
                swapped[i] = true;
                d[i] = dl;
                let temp = d[i + 1];
                d[i + 1] = du[i] - fact * temp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du2[i];
                }
                du[i] = temp;
            }
        }
        if d[n - 1] == 0.0 {
            return Err(FpError::SingularPivot { row: n - 1 });
        }
        Ok(Self {
            lower,
            diag: d,
            sup1: du,
            sup2: du2,
            swapped,
        })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        let n = self.len();
        if b.len() != n {
            return Err(FpError::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        for i in 0..n.saturating_sub(1) {
            let fact = self.lower[i];
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - fact * b[i + 1];
            } else {
                b[i + 1] -= fact * b[i];
            }
        }
        b[n - 1] /= self.diag[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.sup1[n - 2] * b[n - 1]) / self.diag[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.sup1[i] * b[i + 1] - self.sup2[i] * b[i + 2]) / self.diag[i];
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(m: &Tridiagonal) -> Vec<Vec<f64>> {
        let n = m.len();
        (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect()
    }

    #[test]
    fn solves_diagonally_dominant_system() {
        let m = Tridiagonal::from_diagonals(
            vec![-1.0, -1.0, -1.0],
            vec![4.0, 4.0, 4.0, 4.0],
            vec![-1.0, -1.0, -1.0],
        )
        .unwrap();
        let x_true = vec![1.0, -2.0, 3.0, 0.5];
        let b = m.matvec(&x_true);
        let x = m.solve(&b).unwrap();
        for (a, e) in x.iter().zip(&x_true) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn pivoting_handles_zero_leading_diagonal() {
        // Unpivoted elimination divides by zero on the first row.
        let m = Tridiagonal::from_diagonals(
            vec![1.0, 2.0, 1.0],
            vec![0.0, 1.0, 3.0, 1.0],
            vec![2.0, -1.0, 5.0],
        )
        .unwrap();
        let x_true = vec![0.25, 1.5, -1.0, 2.0];
        let b = m.matvec(&x_true);
        let x = m.solve(&b).unwrap();
        for (a, e) in x.iter().zip(&x_true) {
            assert!((a - e).abs() < 1e-13, "{a} vs {e}");
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = Tridiagonal::from_diagonals(vec![1.0], vec![1.0, 1.0], vec![1.0]).unwrap();
        assert!(matches!(m.solve(&[1.0, 2.0]), Err(FpError::SingularPivot { .. })));
    }

    #[test]
    fn one_by_one_system() {
        let m = Tridiagonal::from_diagonals(vec![], vec![4.0], vec![]).unwrap();
        assert_eq!(m.solve(&[2.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn transpose_matches_dense_transpose() {
        let m = Tridiagonal::from_diagonals(vec![1.0, 2.0], vec![3.0, 4.0, 5.0], vec![6.0, 7.0])
            .unwrap();
        let d = dense(&m);
        let t = dense(&m.transpose());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d[i][j], t[j][i]);
            }
        }
    }

    #[test]
    fn rejects_mismatched_bands() {
        assert!(Tridiagonal::from_diagonals(vec![1.0], vec![1.0, 2.0, 3.0], vec![1.0, 1.0]).is_err());
    }
}
