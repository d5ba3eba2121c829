//! Small dense linear algebra: a Gauss–Jordan inverse generic over
//! [`Scalar`] (so jets can be inverted) and f64 helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::jets::Scalar;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative nondegeneracy threshold: `|det| > TOL · scaleⁿ`.
pub const SINGULAR_TOL: f64 = 1e-12;

fn check_determinant(det: f64, scale: f64, n: usize) -> Result<()> {
    if !(det.abs() > SINGULAR_TOL * scale.powi(n as i32)) || scale == 0.0 {
        return Err(Error::SingularMetric { det, scale });
    }
    Ok(())
}

/// Inverse of a square matrix of scalars by Gauss–Jordan elimination with
/// partial pivoting on the value parts. Fails with `SingularMetric` when the
/// value-part determinant is below the relative threshold.
pub fn invert<S: Scalar>(m: &[Vec<S>]) -> Result<Vec<Vec<S>>> {
    let n = m.len();
    let scale = m
        .iter()
        .flatten()
        .map(|s| s.value().abs())
        .fold(0.0, f64::max);
    let proto = m[0][0].clone();
    let mut a: Vec<Vec<S>> = m.to_vec();
    let mut inv: Vec<Vec<S>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| proto.constant_like(if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r][col].value().abs().total_cmp(&a[s][col].value().abs()))
            .unwrap_or(col);
        if pivot != col {
            a.swap(pivot, col);
            inv.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col].value();
        det *= p;
        if p == 0.0 {
            return Err(Error::SingularMetric { det: 0.0, scale });
        }
        let recip = proto.constant_like(1.0).div(&a[col][col]);
        for j in 0..n {
            a[col][j] = a[col][j].mul(&recip);
            inv[col][j] = inv[col][j].mul(&recip);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r][col].clone();
            for j in 0..n {
                let t = factor.mul(&a[col][j]);
                a[r][j] = a[r][j].sub(&t);
                let t = factor.mul(&inv[col][j]);
                inv[r][j] = inv[r][j].sub(&t);
            }
        }
    }
    check_determinant(det, scale, n)?;
    Ok(inv)
}

/// Inverse by LU with partial pivoting, with the same nondegeneracy test.
pub fn inverse(m: &Matrix) -> Result<Matrix> {
    let n = m.nrows();
    let scale = m.amax();
    let lu = m.clone().lu();
    let det = lu.determinant();
    check_determinant(det, scale, n)?;
    lu.try_inverse().ok_or(Error::SingularMetric { det, scale })
}

/// Solve `m x = b` with the same nondegeneracy test.
pub fn solve(m: &Matrix, b: &Vector) -> Result<Vector> {
    let scale = m.amax();
    let lu = m.clone().lu();
    let det = lu.determinant();
    check_determinant(det, scale, m.nrows())?;
    lu.solve(b).ok_or(Error::SingularMetric { det, scale })
}

/// Bilinear pairing `aᵀ g b`.
pub fn pair(g: &Matrix, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[i] * g[(i, j)] * b[j];
        }
    }
    s
}

pub fn mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, c| m.max(c.abs()))
}

pub fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: f64, v: &[f64]) -> Vec<f64> {
    v.iter().map(|c| a * c).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::{Jet, JetSpace};

    #[test]
    fn involutive_diagonal() {
        let g = Matrix::from_diagonal(&Vector::from_vec(vec![-1.0, 1.0, 1.0]));
        assert_eq!(inverse(&g).unwrap(), g);
        let rows: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| g[(i, j)]).collect()).collect();
        let inv = invert(&rows).unwrap();
        assert_eq!(inv, rows);
    }

    #[test]
    fn residual_of_random_inverse() {
        let m = Matrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, -1.5, 0.2, -0.1, 0.2, 0.9]);
        let inv = inverse(&m).unwrap();
        let err = (&m * &inv - Matrix::identity(3, 3)).amax();
        assert!(err < 1e-14);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0 + 1e-14]);
        assert!(matches!(inverse(&m), Err(Error::SingularMetric { .. })));
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(invert(&rows), Err(Error::SingularMetric { .. })));
    }

    #[test]
    fn jet_inverse_differentiates_correctly() {
        // d/dt of A(t)^{-1} = -A^{-1} A' A^{-1}
        let space = JetSpace::get(1);
        let t = Jet::variable(space, 3, 0, 0.2);
        let c = |v: f64| Jet::constant(space, 3, v);
        let a = vec![vec![t.add_scalar(2.0), t.clone()], vec![t.scale(0.5), c(1.0) - t.clone()]];
        let inv = invert(&a).unwrap();
        let h = 1e-6;
        let value_inv = |tv: f64| {
            inverse(&Matrix::from_row_slice(2, 2, &[tv + 2.0, tv, 0.5 * tv, 1.0 - tv])).unwrap()
        };
        let fd = (value_inv(0.2 + h) - value_inv(0.2 - h)) / (2.0 * h);
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[i][j].partial(&[0]).unwrap() - fd[(i, j)]).abs() < 1e-8);
            }
        }
    }
}
