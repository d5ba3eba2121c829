//! Pointwise tensors of a metric: fundamental tensor, Cartan tensor, inverse
//! metric and Legendre map.

use crate::batch::{self, Execution};
use crate::error::Result;
use crate::jets::Jet;
use crate::linalg::{self, Matrix};
use crate::metric::{MetricDefinition, TangentSample};

/// `g_v = ½ ∂²L/∂y∂y` at a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalTensor {
    pub g: Matrix,
    pub basepoint: TangentSample,
}

impl FundamentalTensor {
    pub fn pair(&self, a: &[f64], b: &[f64]) -> f64 {
        linalg::pair(&self.g, a, b)
    }

    pub fn lower(&self, a: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.g, a)
    }

    pub fn determinant(&self) -> f64 {
        self.g.determinant()
    }
}

/// `C_v = ¼ ∂³L/∂y∂y∂y`, stored flat as `c[(i*n + j)*n + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartanTensor {
    pub dim: usize,
    pub c: Vec<f64>,
    pub basepoint: TangentSample,
    /// Largest asymmetry seen before symmetrization.
    pub symmetrization_drift: f64,
}

impl CartanTensor {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    /// `C(u, v, w)`.
    pub fn apply(&self, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    s += self.get(i, j, k) * u[i] * v[j] * w[k];
                }
            }
        }
        s
    }

    /// The matrix `C(u, ·, ·)`.
    pub fn contract(&self, u: &[f64]) -> Matrix {
        let n = self.dim;
        Matrix::from_fn(n, n, |j, k| (0..n).map(|i| u[i] * self.get(i, j, k)).sum())
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.c)
    }
}

pub(crate) fn fiber_hessian(l: &Jet, n: usize) -> Result<Matrix> {
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = 0.5 * l.partial(&[n + i, n + j])?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

pub fn fundamental_tensor(m: &MetricDefinition, v: &TangentSample) -> Result<FundamentalTensor> {
    m.require_admissible(v)?;
    let l = m.jet(v, 2)?;
    Ok(FundamentalTensor {
        g: fiber_hessian(&l, m.dim)?,
        basepoint: v.clone(),
    })
}

pub fn cartan_tensor(m: &MetricDefinition, v: &TangentSample) -> Result<CartanTensor> {
    m.require_admissible(v)?;
    let n = m.dim;
    let l = m.jet(v, 3)?;
    let mut raw = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                raw[(i * n + j) * n + k] = 0.25 * l.partial(&[n + i, n + j, n + k])?;
            }
        }
    }
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut c = vec![0.0; n * n * n];
    let mut drift: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let perms = [
                    raw[idx(i, j, k)],
                    raw[idx(i, k, j)],
                    raw[idx(j, i, k)],
                    raw[idx(j, k, i)],
                    raw[idx(k, i, j)],
                    raw[idx(k, j, i)],
                ];
                let mean = perms.iter().sum::<f64>() / 6.0;
                for p in perms {
                    drift = drift.max((p - mean).abs());
                }
                c[idx(i, j, k)] = mean;
            }
        }
    }
    Ok(CartanTensor {
        dim: n,
        c,
        basepoint: v.clone(),
        symmetrization_drift: drift,
    })
}

/// Covector `w ↦ g_v(v, w)`, i.e. `½ ∂L/∂y`.
pub fn legendre(m: &MetricDefinition, v: &TangentSample) -> Result<Vec<f64>> {
    m.require_admissible(v)?;
    let n = m.dim;
    let l = m.jet(v, 1)?;
    (0..n).map(|i| Ok(0.5 * l.partial(&[n + i])?)).collect()
}

/// `g⁻¹`, failing with `SingularMetric` when `|det g| ≤ 1e-12·scaleⁿ`.
pub fn inverse_metric(g: &FundamentalTensor) -> Result<Matrix> {
    linalg::inverse(&g.g)
}

/// Fundamental tensors of many samples; the order of results matches the
/// input.
pub fn fundamental_tensors(
    m: &MetricDefinition,
    samples: &[TangentSample],
    exec: Execution,
) -> Vec<Result<FundamentalTensor>> {
    batch::map(exec, samples.len(), |i| fundamental_tensor(m, &samples[i]))
}
