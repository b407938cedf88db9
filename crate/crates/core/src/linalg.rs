//! Small dense complex vectors and matrices.
//!
//! Dimensions here are tiny (a handful of antennas) so everything is plain
//! column-major `Vec` storage without any BLAS.

use num_complex::Complex64;

pub type CVector = Vec<Complex64>;

/// `a^H b`.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    norm_sqr(a).sqrt()
}

/// `y ← y − c·x`.
pub fn axpy_neg(y: &mut [Complex64], c: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= c * xi;
    }
}

pub fn scale(v: &mut [Complex64], s: f64) {
    for x in v.iter_mut() {
        *x *= s;
    }
}

/// Dense column-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from equally long columns. `rows` is only used when `columns` is empty.
    pub fn from_columns<C: AsRef<[Complex64]>>(rows: usize, columns: &[C]) -> Self {
        let rows = columns.first().map_or(rows, |c| c.as_ref().len());
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            let c = c.as_ref();
            assert_eq!(c.len(), rows, "ragged columns");
            data.extend_from_slice(c);
        }
        CMatrix {
            rows,
            cols: columns.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex64]> {
        (0..self.cols).map(move |j| self.col(j))
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> CVector {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (j, vj) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.col(j)) {
                *o += a * vj;
            }
        }
        out
    }

    /// `self^H · v`.
    pub fn adjoint_mul_vec(&self, v: &[Complex64]) -> CVector {
        assert_eq!(v.len(), self.rows);
        self.columns().map(|c| dot(c, v)).collect()
    }

    /// `self · other`.
    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows);
        let cols: Vec<CVector> = other.columns().map(|c| self.mul_vec(c)).collect();
        CMatrix::from_columns(self.rows, &cols)
    }

    /// `self^H · other`.
    pub fn adjoint_mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.rows, other.rows);
        let mut out = CMatrix::zeros(self.cols, other.cols);
        for j in 0..other.cols {
            for i in 0..self.cols {
                out[(i, j)] = dot(self.col(i), other.col(j));
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Appends the columns of `other` to the right.
    pub fn hcat(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.rows, other.rows);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        CMatrix {
            rows: self.rows,
            cols: self.cols + other.cols,
            data,
        }
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[j * self.rows + i]
    }
}

/// Singular values in descending order, by one-sided (Hestenes) Jacobi.
///
/// Columns are rotated pairwise until mutually orthogonal; the singular values
/// are then the column norms. Small singular values come out with high
/// relative accuracy, which the rank tests rely on.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let mut cols: Vec<CVector> = a.columns().map(|c| c.to_vec()).collect();
    let n = cols.len();
    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norm_sqr(&cols[p]);
                let beta = norm_sqr(&cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // v' = e^{-iφ} v makes u^H v' real, then a real Jacobi rotation.
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                let u = &mut left[p];
                let v = &mut right[0];
                for (ui, vi) in u.iter_mut().zip(v.iter_mut()) {
                    let vp = *vi * phase;
                    let un = *ui * c - vp * s;
                    let vn = *ui * s + vp * c;
                    *ui = un;
                    *vi = vn;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_singular_values() {
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 0)] = c(0.0, 2.0);
        m[(1, 1)] = c(-5.0, 0.0);
        m[(2, 2)] = c(1.0, 1.0);
        let sv = singular_values(&m);
        assert!((sv[0] - 5.0).abs() < 1e-14);
        assert!((sv[1] - 2.0).abs() < 1e-14);
        assert!((sv[2] - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_known_values() {
        // [[1, i], [0, 1]]: σ² are the eigenvalues of A^H A = [[1, i], [-i, 2]],
        // i.e. (3 ± √5)/2.
        let m = CMatrix::from_columns(2, &[vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 1.0), c(1.0, 0.0)]]);
        let sv = singular_values(&m);
        let hi = ((3.0 + 5f64.sqrt()) / 2.0).sqrt();
        let lo = ((3.0 - 5f64.sqrt()) / 2.0).sqrt();
        assert!((sv[0] - hi).abs() < 1e-14);
        assert!((sv[1] - lo).abs() < 1e-14);
    }

    #[test]
    fn rank_deficiency_is_resolved() {
        let a = vec![c(1.0, 2.0), c(-0.5, 0.3), c(0.7, -1.1), c(0.2, 0.0)];
        let b: CVector = a.iter().map(|x| x * c(0.3, -2.0)).collect();
        let m = CMatrix::from_columns(4, &[a, b]);
        let sv = singular_values(&m);
        assert!(sv[1] < 1e-14 * sv[0]);
    }

    #[test]
    fn adjoint_products() {
        let a = CMatrix::from_columns(2, &[vec![c(1.0, 1.0), c(2.0, 0.0)], vec![c(0.0, -1.0), c(1.0, 3.0)]]);
        let direct = a.adjoint().mul(&a);
        let fused = a.adjoint_mul(&a);
        assert!(direct.max_abs_diff(&fused) < 1e-15);
        let v = vec![c(0.5, 0.5), c(-1.0, 2.0)];
        let lhs = a.adjoint_mul_vec(&v);
        let rhs = a.adjoint().mul_vec(&v);
        for (x, y) in lhs.iter().zip(&rhs) {
            assert!((x - y).norm() < 1e-15);
        }
    }
}
