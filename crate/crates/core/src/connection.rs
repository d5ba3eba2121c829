//! Chern connection of a metric: geodesic spray, nonlinear connection,
//! Christoffel symbols, curvature, and derivatives of anisotropic scalars.
//!
//! Everything is computed from jets of `L`:
//!
//! * `g = ½ ∂y∂y L`, inverted as a jet matrix,
//! * spray `Gⁱ = ¼ gⁱˡ (∂²L/∂yˡ∂xᵏ yᵏ − ∂L/∂xˡ)`, nonlinear connection
//!   `Nⁱⱼ = ∂Gⁱ/∂yʲ`,
//! * horizontal derivatives `δ/δxⁱ = ∂/∂xⁱ − Nᵐᵢ ∂/∂yᵐ`,
//! * `Γᵏᵢⱼ = ½ gᵏˡ (δᵢ gₗⱼ + δⱼ gᵢₗ − δₗ gᵢⱼ)`.
//!
//! A jet of `L` of order `k` yields the spray to order `k − 2` and the
//! Christoffel symbols to order `k − 3`; curvature needs `k = 4`.

use crate::batch::{self, Execution};
use crate::curve::{self, DiscreteCurve};
use crate::error::{Error, Result};
use crate::jets::{self, Jet, SeededVariables};
use crate::linalg::{self, Matrix};
use crate::metric::{MetricDefinition, TangentSample};

/// Spray coefficients `Gⁱ` and nonlinear connection `Nⁱⱼ` at a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SprayValue {
    pub g: Vec<f64>,
    pub n: Matrix,
}

/// Chern Christoffel symbols at a sample, `Γᵏᵢⱼ = gamma[(k*n + i)*n + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelField {
    pub dim: usize,
    pub gamma: Vec<f64>,
    pub basepoint: TangentSample,
    /// Largest `|Γᵏᵢⱼ − Γᵏⱼᵢ|` before symmetrization.
    pub torsion_drift: f64,
}

impl ChristoffelField {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.dim + i) * self.dim + j]
    }

    /// `Γᵏᵢⱼ Xⁱ Yʲ`.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += self.get(k, i, j) * x[i] * y[j];
                    }
                }
                s
            })
            .collect()
    }
}

/// Metric, inverse, spray and nonlinear connection at one sample.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    pub g: Matrix,
    pub ginv: Matrix,
    pub spray: Vec<f64>,
    pub nonlinear: Matrix,
}

/// `Rˡₖᵢⱼ` stored as `r[((l*n + k)*n + i)*n + j]`; `R(X, Y)Z = Rˡₖᵢⱼ Zᵏ Xⁱ Yʲ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    pub dim: usize,
    pub r: Vec<f64>,
}

impl CurvatureTensor {
    pub fn get(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim;
        self.r[((l * n + k) * n + i) * n + j]
    }

    /// `R(X, Y)Z`.
    pub fn apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|l| {
                let mut s = 0.0;
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            s += self.get(l, k, i, j) * z[k] * x[i] * y[j];
                        }
                    }
                }
                s
            })
            .collect()
    }
}

/// Coefficients of the Jacobi equation along a geodesic with velocity `v`:
/// `nonlinear = N(v)` (so `D J = J̇ + N J`) and `jacobi = K` with
/// `K w = R_v(v, w)v`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiCoefficients {
    pub nonlinear: Matrix,
    pub jacobi: Matrix,
}

struct SprayJets {
    n: usize,
    vars: SeededVariables,
    g: Vec<Vec<Jet>>,
    ginv: Vec<Vec<Jet>>,
    spray: Vec<Jet>,
}

fn spray_jets(m: &MetricDefinition, v: &TangentSample, order: usize) -> Result<SprayJets> {
    m.require_admissible(v)?;
    let n = m.dim;
    let vars = jets::seed_any_order(v, order)?;
    let l = m.eval(&vars.x, &vars.y)?;
    let ly: Vec<Jet> = (0..n).map(|i| l.diff(n + i)).collect();
    let mut g: Vec<Vec<Jet>> = vec![Vec::with_capacity(n); n];
    for i in 0..n {
        for j in 0..n {
            let entry = if j < i { g[j][i].clone() } else { ly[i].diff(n + j).scale(0.5) };
            g[i].push(entry);
        }
    }
    let ginv = linalg::invert(&g)?;
    let rhs: Vec<Jet> = (0..n)
        .map(|a| {
            let mut acc = l.diff(a).scale(-1.0);
            for k in 0..n {
                acc = acc.add_jet(&ly[a].diff(k).mul_jet(&vars.y[k]));
            }
            acc
        })
        .collect();
    let spray = (0..n)
        .map(|i| {
            let mut acc = ginv[i][0].mul_jet(&rhs[0]);
            for a in 1..n {
                acc = acc.add_jet(&ginv[i][a].mul_jet(&rhs[a]));
            }
            acc.scale(0.25)
        })
        .collect();
    Ok(SprayJets {
        n,
        vars,
        g,
        ginv,
        spray,
    })
}

fn to_matrix(rows: &[Vec<Jet>]) -> Matrix {
    let n = rows.len();
    Matrix::from_fn(n, n, |i, j| rows[i][j].value())
}

/// Spray coefficients only (cheapest path, used by geodesic integration).
pub fn spray_coefficients(m: &MetricDefinition, v: &TangentSample) -> Result<Vec<f64>> {
    let sj = spray_jets(m, v, 2)?;
    Ok(sj.spray.iter().map(Jet::value).collect())
}

pub fn spray(m: &MetricDefinition, v: &TangentSample) -> Result<SprayValue> {
    let geo = local_geometry(m, v)?;
    Ok(SprayValue {
        g: geo.spray,
        n: geo.nonlinear,
    })
}

pub fn local_geometry(m: &MetricDefinition, v: &TangentSample) -> Result<LocalGeometry> {
    let sj = spray_jets(m, v, 3)?;
    let n = sj.n;
    let nonlinear = Matrix::from_fn(n, n, |i, j| {
        sj.spray[i]
            .partial(&[n + j])
            .expect("order-1 spray jet has first derivatives")
    });
    Ok(LocalGeometry {
        g: to_matrix(&sj.g),
        ginv: to_matrix(&sj.ginv),
        spray: sj.spray.iter().map(Jet::value).collect(),
        nonlinear,
    })
}

/// Christoffel jets of order `order − 3` plus the nonlinear connection jets
/// of the same order.
fn christoffel_jets(m: &MetricDefinition, v: &TangentSample, order: usize) -> Result<(Vec<Jet>, Vec<Vec<Jet>>, f64)> {
    let sj = spray_jets(m, v, order)?;
    let n = sj.n;
    let nl: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| sj.spray[i].diff(n + j)).collect())
        .collect();
    // δ_p g_ab
    let mut dg: Vec<Jet> = Vec::with_capacity(n * n * n);
    for p in 0..n {
        for a in 0..n {
            for b in 0..n {
                let gab = &sj.g[a][b];
                let mut acc = gab.diff(p);
                for mm in 0..n {
                    acc = acc.sub_jet(&nl[mm][p].mul_jet(&gab.diff(n + mm)));
                }
                dg.push(acc);
            }
        }
    }
    let d = |p: usize, a: usize, b: usize| &dg[(p * n + a) * n + b];
    let mut raw: Vec<Jet> = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc: Option<Jet> = None;
                for l in 0..n {
                    let bracket = d(i, l, j).add_jet(d(j, i, l)).sub_jet(d(l, i, j));
                    let term = sj.ginv[k][l].mul_jet(&bracket);
                    acc = Some(match acc {
                        None => term,
                        Some(s) => s.add_jet(&term),
                    });
                }
                raw.push(acc.expect("n >= 1").scale(0.5));
            }
        }
    }
    let idx = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
    let mut drift: f64 = 0.0;
    let mut gamma = raw.clone();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (&raw[idx(k, i, j)], &raw[idx(k, j, i)]);
                drift = drift.max((a.value() - b.value()).abs());
                gamma[idx(k, i, j)] = a.add_jet(b).scale(0.5);
            }
        }
    }
    Ok((gamma, nl, drift))
}

pub fn christoffel(m: &MetricDefinition, v: &TangentSample) -> Result<ChristoffelField> {
    let (gamma, _, drift) = christoffel_jets(m, v, 3)?;
    Ok(ChristoffelField {
        dim: m.dim,
        gamma: gamma.iter().map(Jet::value).collect(),
        basepoint: v.clone(),
        torsion_drift: drift,
    })
}

/// `Rˡₖᵢⱼ = δᵢΓˡⱼₖ − δⱼΓˡᵢₖ + ΓˡᵢₘΓᵐⱼₖ − ΓˡⱼₘΓᵐᵢₖ` from order-4 jets.
pub fn curvature_tensor(m: &MetricDefinition, v: &TangentSample) -> Result<CurvatureTensor> {
    let (gamma, nl, _) = christoffel_jets(m, v, 4)?;
    let n = m.dim;
    let idx = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
    let g0: Vec<f64> = gamma.iter().map(Jet::value).collect();
    let nv: Vec<Vec<f64>> = nl.iter().map(|row| row.iter().map(Jet::value).collect()).collect();
    // δ_p Γᵏᵢⱼ
    let mut dgamma = vec![0.0; n * n * n * n];
    for p in 0..n {
        for c in 0..n * n * n {
            let jet = &gamma[c];
            let mut s = jet.partial(&[p])?;
            for mm in 0..n {
                s -= nv[mm][p] * jet.partial(&[n + mm])?;
            }
            dgamma[p * n * n * n + c] = s;
        }
    }
    let dg = |p: usize, k: usize, i: usize, j: usize| dgamma[p * n * n * n + idx(k, i, j)];
    let mut r = vec![0.0; n * n * n * n];
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = dg(i, l, j, k) - dg(j, l, i, k);
                    for mm in 0..n {
                        s += g0[idx(l, i, mm)] * g0[idx(mm, j, k)] - g0[idx(l, j, mm)] * g0[idx(mm, i, k)];
                    }
                    r[((l * n + k) * n + i) * n + j] = s;
                }
            }
        }
    }
    Ok(CurvatureTensor { dim: n, r })
}

/// `R_v(X, Y)Z`.
pub fn chern_curvature(m: &MetricDefinition, v: &TangentSample, x: &[f64], y: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    check_len(m, &[x, y, z])?;
    Ok(curvature_tensor(m, v)?.apply(x, y, z))
}

/// `N(v)` and the Jacobi matrix `K` with `K w = R_v(v, w)v`, from the spray
/// curvature `Rⁱₖ = 2∂ₓₖGⁱ − yʲ∂ₓⱼ∂ᵧₖGⁱ + 2Gʲ∂ᵧⱼ∂ᵧₖGⁱ − NⁱⱼNʲₖ`, `K = −R`.
pub fn jacobi_coefficients(m: &MetricDefinition, v: &TangentSample) -> Result<JacobiCoefficients> {
    let sj = spray_jets(m, v, 4)?;
    let n = sj.n;
    let y = &v.y;
    let gv: Vec<f64> = sj.spray.iter().map(Jet::value).collect();
    let mut nl = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            nl[(i, j)] = sj.spray[i].partial(&[n + j])?;
        }
    }
    let mut k_mat = Matrix::zeros(n, n);
    for i in 0..n {
        let gi = &sj.spray[i];
        for k in 0..n {
            let mut r = 2.0 * gi.partial(&[k])?;
            for j in 0..n {
                r -= y[j] * gi.partial(&[j, n + k])?;
                r += 2.0 * gv[j] * gi.partial(&[n + j, n + k])?;
                r -= nl[(i, j)] * nl[(j, k)];
            }
            k_mat[(i, k)] = -r;
        }
    }
    debug_assert_eq!(sj.vars.dim(), n);
    Ok(JacobiCoefficients {
        nonlinear: nl,
        jacobi: k_mat,
    })
}

/// `R_v(v, w)v`.
pub fn jacobi_operator(m: &MetricDefinition, v: &TangentSample, w: &[f64]) -> Result<Vec<f64>> {
    check_len(m, &[w])?;
    Ok(linalg::mat_vec(&jacobi_coefficients(m, v)?.jacobi, w))
}

fn check_len(m: &MetricDefinition, vs: &[&[f64]]) -> Result<()> {
    for v in vs {
        if v.len() != m.dim {
            return Err(Error::DimensionMismatch {
                expected: m.dim,
                found: v.len(),
            });
        }
    }
    Ok(())
}

/// First derivatives of an anisotropic scalar `f` at `v`, with the
/// horizontal derivative and both gradients taken with respect to `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropicDerivatives {
    pub value: f64,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    /// `δf/δxⁱ = ∂f/∂xⁱ − Nᵐᵢ ∂f/∂yᵐ`.
    pub horizontal: Vec<f64>,
    /// `∇^ν f` with `g_v(∇^ν f, ·) = ∂^ν f_v`.
    pub vertical_gradient: Vec<f64>,
    /// `∇^h f` with `g_v(∇^h f, ·) = ∇_· f(v)`.
    pub horizontal_gradient: Vec<f64>,
}

pub fn anisotropic_derivatives_with(
    f: &MetricDefinition,
    geo: &LocalGeometry,
    v: &TangentSample,
) -> Result<AnisotropicDerivatives> {
    let n = f.dim;
    f.require_admissible(v)?;
    let jet = f.jet(v, 1)?;
    let dx: Vec<f64> = (0..n).map(|i| jet.partial(&[i])).collect::<Result<_>>()?;
    let dy: Vec<f64> = (0..n).map(|i| jet.partial(&[n + i])).collect::<Result<_>>()?;
    let horizontal: Vec<f64> = (0..n)
        .map(|i| dx[i] - (0..n).map(|mm| geo.nonlinear[(mm, i)] * dy[mm]).sum::<f64>())
        .collect();
    Ok(AnisotropicDerivatives {
        value: jet.value(),
        vertical_gradient: linalg::mat_vec(&geo.ginv, &dy),
        horizontal_gradient: linalg::mat_vec(&geo.ginv, &horizontal),
        dx,
        dy,
        horizontal,
    })
}

pub fn anisotropic_derivatives(
    f: &MetricDefinition,
    m: &MetricDefinition,
    v: &TangentSample,
) -> Result<AnisotropicDerivatives> {
    if f.dim != m.dim {
        return Err(Error::DimensionMismatch {
            expected: m.dim,
            found: f.dim,
        });
    }
    let geo = local_geometry(m, v)?;
    anisotropic_derivatives_with(f, &geo, v)
}

/// `∇_X f(v)` for the Chern connection of `m`.
pub fn horizontal_derivative(f: &MetricDefinition, x: &[f64], v: &TangentSample, m: &MetricDefinition) -> Result<f64> {
    check_len(m, &[x])?;
    Ok(linalg::dot(&anisotropic_derivatives(f, m, v)?.horizontal, x))
}

pub fn vertical_gradient(f: &MetricDefinition, v: &TangentSample, m: &MetricDefinition) -> Result<Vec<f64>> {
    Ok(anisotropic_derivatives(f, m, v)?.vertical_gradient)
}

pub fn horizontal_gradient(f: &MetricDefinition, v: &TangentSample, m: &MetricDefinition) -> Result<Vec<f64>> {
    Ok(anisotropic_derivatives(f, m, v)?.horizontal_gradient)
}

/// `D X = Ẋ + Γ(U)(γ̇, X)` along `curve`, with reference field `U` and `X`
/// sampled on the curve's nodes; `Ẋ` by fourth-order differences.
pub fn covariant_derivative_along(
    curve: &DiscreteCurve,
    reference: &[Vec<f64>],
    field: &[Vec<f64>],
    m: &MetricDefinition,
) -> Result<Vec<Vec<f64>>> {
    for len in [reference.len(), field.len()] {
        if len != curve.len() {
            return Err(Error::GridMismatch {
                expected: curve.len(),
                found: len,
            });
        }
    }
    let dot = curve::differentiate_field(field, curve.h)?;
    batch::try_map(Execution::default(), curve.len(), |i| {
        let u = TangentSample::new(curve.xs[i].clone(), reference[i].clone());
        let gamma = christoffel(m, &u)?;
        Ok(linalg::add(&dot[i], &gamma.apply(&curve.ys[i], &field[i])))
    })
}

/// Independent reference computations used to validate the connection.
pub mod oracle {
    use super::*;
    use crate::jets::finite_difference;
    use crate::tensors;

    /// Coefficient matrix `A(x)` of a quadratic metric `yᵀA(x)y`, recovered
    /// from plain evaluations by polarization.
    pub fn quadratic_coefficients(m: &MetricDefinition, x: &[f64]) -> Result<Matrix> {
        let n = m.dim;
        let e = |i: usize| {
            let mut y = vec![0.0; n];
            y[i] = 1.0;
            y
        };
        let val = |y: Vec<f64>| m.eval(x, &y);
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = val(e(i))?;
        }
        for i in 0..n {
            for j in i + 1..n {
                let both = val(linalg::add(&e(i), &e(j)))?;
                let v = 0.5 * (both - a[(i, i)] - a[(j, j)]);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        Ok(a)
    }

    /// Levi-Civita symbols of `A(x)` by the textbook formula, with `∂A`
    /// from Richardson-extrapolated central differences.
    pub fn levi_civita(m: &MetricDefinition, x: &[f64]) -> Result<Vec<f64>> {
        let n = m.dim;
        let a = quadratic_coefficients(m, x)?;
        let ainv = linalg::inverse(&a)?;
        let mut da = vec![Matrix::zeros(n, n); n];
        for (p, dap) in da.iter_mut().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    let f = |pt: &[f64]| quadratic_coefficients(m, pt).map(|q| q[(i, j)]).unwrap_or(f64::NAN);
                    let mut alpha = vec![0u8; n];
                    alpha[p] = 1;
                    dap[(i, j)] = finite_difference::richardson(&f, x, &alpha, 1e-2);
                }
            }
        }
        let mut gamma = vec![0.0; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += ainv[(k, l)] * (da[i][(l, j)] + da[j][(i, l)] - da[l][(i, j)]);
                    }
                    gamma[(k * n + i) * n + j] = 0.5 * s;
                }
            }
        }
        Ok(gamma)
    }

    /// Residual of almost g-compatibility for the linear reference field
    /// `V(x) = v₀ + B(x − x₀)` and constant fields `X, Y, Z` at `x₀`:
    /// `X(g_V(Y,Z)) − g_V(∇_X Y, Z) − g_V(Y, ∇_X Z) − 2C_V(∇_X V, Y, Z)`,
    /// the outer derivative by a central difference of step `h`.
    #[allow(clippy::too_many_arguments)]
    pub fn compatibility_residual(
        m: &MetricDefinition,
        x0: &[f64],
        v0: &[f64],
        b: &Matrix,
        x: &[f64],
        y: &[f64],
        z: &[f64],
        h: f64,
    ) -> Result<f64> {
        let field = |pt: &[f64]| {
            let shift = linalg::sub(pt, x0);
            TangentSample::new(pt.to_vec(), linalg::add(v0, &linalg::mat_vec(b, &shift)))
        };
        let g_at = |s: f64| -> Result<f64> {
            let pt = linalg::axpy(s, x, x0);
            Ok(tensors::fundamental_tensor(m, &field(&pt))?.pair(y, z))
        };
        let outer = (g_at(h)? - g_at(-h)?) / (2.0 * h);
        let v = field(x0);
        let g = tensors::fundamental_tensor(m, &v)?;
        let c = tensors::cartan_tensor(m, &v)?;
        let gamma = christoffel(m, &v)?;
        let nabla_y = gamma.apply(x, y);
        let nabla_z = gamma.apply(x, z);
        let nabla_v = linalg::add(&linalg::mat_vec(b, x), &gamma.apply(x, &v.y));
        Ok(outer - g.pair(&nabla_y, z) - g.pair(y, &nabla_z) - 2.0 * c.apply(&nabla_v, y, z))
    }
}
