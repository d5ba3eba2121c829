//! Parametrized submanifolds through the start of a geodesic: tangent
//! frames, `g_N`-orthogonal splitting, second fundamental forms.

use nalgebra::SymmetricEigen;

use crate::connection::{self, ChristoffelField};
use crate::error::{Error, Result};
use crate::expr::{Expr, Scope, Var};
use crate::jets::{Jet, JetSpace};
use crate::linalg::{self, Matrix};
use crate::metric::{MetricDefinition, TangentSample};
use crate::tensors;

/// Immersion `u ∈ ℝᵈ ↦ p(u)` in chart coordinates, written in `u0..`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmanifoldPatch {
    pub params: usize,
    pub map: Vec<Expr>,
    pub u0: Vec<f64>,
}

/// Vector field along a patch, also written in `u0..`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalField {
    pub map: Vec<Expr>,
}

fn parse_components(components: &[&str], params: usize) -> Result<Vec<Expr>> {
    components
        .iter()
        .map(|c| Expr::parse(c, Scope::params(params)).map_err(Error::from))
        .collect()
}

/// Values and first/second `u`-derivatives of a map at `u`.
struct Derivatives {
    value: Vec<f64>,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<Vec<f64>>>,
}

fn differentiate(map: &[Expr], u: &[f64]) -> Result<Derivatives> {
    let d = u.len();
    if d == 0 {
        let value = map
            .iter()
            .map(|e| e.eval_real(&[], &[], &[]).map_err(Error::from))
            .collect::<Result<_>>()?;
        return Ok(Derivatives {
            value,
            first: Vec::new(),
            second: Vec::new(),
        });
    }
    let space = JetSpace::get(d);
    let vars: Vec<Jet> = (0..d).map(|i| Jet::variable(space, 2, i, u[i])).collect();
    let proto = vars[0].clone();
    let jets: Vec<Jet> = map
        .iter()
        .map(|e| {
            e.eval(&proto, &|v| match v {
                Var::U(i) => vars.get(i).cloned(),
                _ => None,
            })
            .map_err(Error::from)
        })
        .collect::<Result<_>>()?;
    let value = jets.iter().map(Jet::value).collect();
    let first = (0..d)
        .map(|a| jets.iter().map(|j| j.partial(&[a])).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let second = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| jets.iter().map(|j| j.partial(&[a, b])).collect::<Result<_>>())
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    Ok(Derivatives { value, first, second })
}

impl SubmanifoldPatch {
    pub fn parse(components: &[&str], params: usize, u0: Vec<f64>) -> Result<Self> {
        if u0.len() != params {
            return Err(Error::DimensionMismatch {
                expected: params,
                found: u0.len(),
            });
        }
        Ok(SubmanifoldPatch {
            params,
            map: parse_components(components, params)?,
            u0,
        })
    }

    /// Zero-dimensional patch.
    pub fn point(x: &[f64]) -> Self {
        SubmanifoldPatch {
            params: 0,
            map: x.iter().map(|&c| Expr::constant(c)).collect(),
            u0: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.map.len()
    }

    pub fn position(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.map
            .iter()
            .map(|e| e.eval_real(&[], &[], u).map_err(Error::from))
            .collect()
    }

    pub fn basepoint(&self) -> Result<Vec<f64>> {
        self.position(&self.u0)
    }

    /// `∂p/∂u_α` at `u0`.
    pub fn tangent_basis(&self) -> Result<Vec<Vec<f64>>> {
        Ok(differentiate(&self.map, &self.u0)?.first)
    }
}

impl NormalField {
    pub fn parse(components: &[&str], params: usize) -> Result<Self> {
        Ok(NormalField {
            map: parse_components(components, params)?,
        })
    }

    pub fn constant(v: &[f64]) -> Self {
        NormalField {
            map: v.iter().map(|&c| Expr::constant(c)).collect(),
        }
    }

    pub fn value(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.map
            .iter()
            .map(|e| e.eval_real(&[], &[], u).map_err(Error::from))
            .collect()
    }
}

/// Everything about `P` at its basepoint needed for the second fundamental
/// forms, with respect to the reference vector `N`.
#[derive(Debug, Clone)]
pub struct EndpointFrame {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
    pub tangent: Vec<Vec<f64>>,
    pub g: Matrix,
    /// Inverse of `g_N` restricted to `T_pP`, in the tangent basis.
    pub restricted_inverse: Matrix,
    pub gamma: ChristoffelField,
    /// `∂_α N` of the extension, rescaled to match `normal`.
    pub normal_derivatives: Option<Vec<Vec<f64>>>,
    pub hessian: Vec<Vec<Vec<f64>>>,
}

/// Relative tolerance on `g_N(N, T_α)` for the orthogonality precondition.
pub const NORMAL_TOL: f64 = 1e-8;

impl EndpointFrame {
    /// Frame of `patch` at `u0` with reference `n`; when a normal field is
    /// given, `n` must be a positive or negative multiple of its value at
    /// `u0` and its derivatives are rescaled by the same factor.
    pub fn new(m: &MetricDefinition, patch: &SubmanifoldPatch, normal: Option<&NormalField>, n: &[f64]) -> Result<Self> {
        if patch.dim() != m.dim || n.len() != m.dim {
            return Err(Error::DimensionMismatch {
                expected: m.dim,
                found: patch.dim().min(n.len()),
            });
        }
        let der = differentiate(&patch.map, &patch.u0)?;
        let sample = TangentSample::new(der.value.clone(), n.to_vec());
        let g = tensors::fundamental_tensor(m, &sample)?.g;
        let d = patch.params;
        let gp = Matrix::from_fn(d, d, |a, b| linalg::pair(&g, &der.first[a], &der.first[b]));
        let restricted_inverse = if d == 0 {
            Matrix::zeros(0, 0)
        } else {
            linalg::inverse(&gp).map_err(|_| Error::DegenerateRestriction { det: gp.determinant() })?
        };
        let scale = g.amax().max(1.0) * linalg::norm(n);
        for t in &der.first {
            let pairing = linalg::pair(&g, n, t);
            if pairing.abs() > NORMAL_TOL * scale * linalg::norm(t) {
                return Err(Error::NonNormal { pairing });
            }
        }
        let normal_derivatives = match normal {
            None => None,
            Some(field) => {
                let nd = differentiate(&field.map, &patch.u0)?;
                let base = &nd.value;
                let c = linalg::dot(base, n) / linalg::dot(base, base);
                if linalg::norm(&linalg::axpy(-c, base, n)) > 1e-8 * linalg::norm(n) {
                    return Err(Error::Precondition(
                        "reference vector is not a multiple of the normal field at the basepoint".into(),
                    ));
                }
                Some(nd.first.iter().map(|v| linalg::scale(c, v)).collect())
            }
        };
        Ok(EndpointFrame {
            point: der.value,
            normal: n.to_vec(),
            tangent: der.first,
            g,
            restricted_inverse,
            gamma: connection::christoffel(m, &sample)?,
            normal_derivatives,
            hessian: der.second,
        })
    }

    pub fn params(&self) -> usize {
        self.tangent.len()
    }

    /// Coordinates of the `g_N`-tangential part of `x` in the tangent basis.
    pub fn coefficients(&self, x: &[f64]) -> Vec<f64> {
        let d = self.params();
        let rhs: Vec<f64> = self.tangent.iter().map(|t| linalg::pair(&self.g, t, x)).collect();
        (0..d)
            .map(|a| (0..d).map(|b| self.restricted_inverse[(a, b)] * rhs[b]).sum())
            .collect()
    }

    fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.normal.len()];
        for (c, t) in coeffs.iter().zip(&self.tangent) {
            out = linalg::axpy(*c, t, &out);
        }
        out
    }

    pub fn tan(&self, x: &[f64]) -> Vec<f64> {
        self.combine(&self.coefficients(x))
    }

    pub fn nor(&self, x: &[f64]) -> Vec<f64> {
        linalg::sub(x, &self.tan(x))
    }

    /// `𝒮_N(U) = tan_N(∇^N_U N)`.
    pub fn normal_sff(&self, u: &[f64]) -> Result<Vec<f64>> {
        let dn = self
            .normal_derivatives
            .as_ref()
            .ok_or_else(|| Error::Precondition("normal second fundamental form needs a normal field".into()))?;
        let a = self.coefficients(u);
        let mut along = self.gamma.apply(u, &self.normal);
        for (c, v) in a.iter().zip(dn) {
            along = linalg::axpy(*c, v, &along);
        }
        Ok(self.tan(&along))
    }

    /// `S_N(U, W) = nor_N(∇^N_U W)` with `W` extended by constant
    /// coefficients in the parametrization.
    pub fn sff(&self, u: &[f64], w: &[f64]) -> Vec<f64> {
        let a = self.coefficients(u);
        let c = self.coefficients(w);
        let mut acc = self.gamma.apply(u, w);
        for (al, ca) in a.iter().enumerate() {
            for (be, cb) in c.iter().enumerate() {
                acc = linalg::axpy(ca * cb, &self.hessian[al][be], &acc);
            }
        }
        self.nor(&acc)
    }

    /// Basis of the `g_N`-orthogonal complement of `T_pP`: `N`, then `ℓ`
    /// with `g(ℓ, N) = 1`, then vectors orthogonal to `N`, `ℓ` and `T_pP`.
    pub fn complement_basis(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.normal.len();
        let d = self.params();
        let k = n - d;
        let lowered: Vec<Vec<f64>> = self.tangent.iter().map(|t| linalg::mat_vec(&self.g, t)).collect();
        let mut bbt = Matrix::zeros(n, n);
        for v in &lowered {
            for i in 0..n {
                for j in 0..n {
                    bbt[(i, j)] += v[i] * v[j];
                }
            }
        }
        let eig = SymmetricEigen::new(bbt);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let complement: Vec<Vec<f64>> = order[..k].iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
        let nn = &self.normal;
        let gn = |x: &[f64]| linalg::pair(&self.g, x, nn);
        let best = complement
            .iter()
            .max_by(|a, b| gn(a).abs().total_cmp(&gn(b).abs()))
            .ok_or_else(|| Error::Precondition("empty normal complement".into()))?;
        let pairing = gn(best);
        if pairing.abs() <= 1e-10 * linalg::norm(nn) * self.g.amax() {
            return Err(Error::Precondition("normal complement is degenerate".into()));
        }
        let ell = linalg::scale(1.0 / pairing, best);
        let gll = linalg::pair(&self.g, &ell, &ell);
        let mut spread = Matrix::zeros(n, n);
        for c in &complement {
            let beta = gn(c);
            let alpha = linalg::pair(&self.g, c, &ell) - beta * gll;
            let e = linalg::sub(&linalg::sub(c, &linalg::scale(beta, &ell)), &linalg::scale(alpha, nn));
            for i in 0..n {
                for j in 0..n {
                    spread[(i, j)] += e[i] * e[j];
                }
            }
        }
        let eig = SymmetricEigen::new(spread);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut basis = vec![nn.clone(), ell];
        for &i in order.iter().take(k.saturating_sub(2)) {
            basis.push(eig.eigenvectors.column(i).iter().copied().collect());
        }
        Ok(basis)
    }
}

/// `S^P_N(U, W)` at the basepoint of `patch`.
pub fn second_fundamental_form(
    m: &MetricDefinition,
    patch: &SubmanifoldPatch,
    n: &[f64],
    u: &[f64],
    w: &[f64],
) -> Result<Vec<f64>> {
    Ok(EndpointFrame::new(m, patch, None, n)?.sff(u, w))
}

/// `𝒮^P_N(U)` at the basepoint of `patch`.
pub fn normal_second_fundamental_form(
    m: &MetricDefinition,
    patch: &SubmanifoldPatch,
    normal: &NormalField,
    n: &[f64],
    u: &[f64],
) -> Result<Vec<f64>> {
    EndpointFrame::new(m, patch, Some(normal), n)?.normal_sff(u)
}

/// Circle of geodesic radius `rho` on the unit-sphere factor of the
/// static chart `(t, θ, φ)`, through the point `p0 ∈ S²` and centred at
/// distance `rho` along the unit tangent `d0`. The normal field points at
/// the centre with unit time component, so it is lightlike; the geodesic it
/// starts reaches the centre, a focal point, after parameter `rho`.
#[derive(Debug, Clone)]
pub struct SphereCircle {
    pub patch: SubmanifoldPatch,
    pub normal: NormalField,
    /// Chart velocity `N(u0)`.
    pub velocity: Vec<f64>,
}

pub fn sphere_circle(time: f64, p0: [f64; 3], d0: [f64; 3], rho: f64) -> Result<SphereCircle> {
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    if (dot(p0, p0) - 1.0).abs() > 1e-12 || (dot(d0, d0) - 1.0).abs() > 1e-12 || dot(p0, d0).abs() > 1e-12 {
        return Err(Error::Precondition("p0, d0 must be orthonormal".into()));
    }
    let (cr, sr) = (rho.cos(), rho.sin());
    let c: [f64; 3] = std::array::from_fn(|i| cr * p0[i] + sr * d0[i]);
    let a1: [f64; 3] = std::array::from_fn(|i| (p0[i] - cr * c[i]) / sr);
    let a2 = [c[1] * a1[2] - c[2] * a1[1], c[2] * a1[0] - c[0] * a1[2], c[0] * a1[1] - c[1] * a1[0]];
    let p: Vec<String> = (0..3)
        .map(|i| format!("({:?} + {:?}*cos(u0) + {:?}*sin(u0))", cr * c[i], sr * a1[i], sr * a2[i]))
        .collect();
    let s = format!("sqrt({}^2 + {}^2)", p[0], p[1]);
    let d: Vec<String> = (0..3).map(|i| format!("(({:?} - {:?}*{})/{:?})", c[i], cr, p[i], sr)).collect();
    let theta = format!("acos({})", p[2]);
    let phi = format!("atan2({}, {})", p[1], p[0]);
    let n_theta = format!("({}*{}*{} + {}*{}*{})/{} - {}*{}", d[0], p[2], p[0], d[1], p[2], p[1], s, d[2], s);
    let n_phi = format!("(-{}*{} + {}*{})/({}^2)", d[0], p[1], d[1], p[0], s);
    let t = format!("{time:?}");
    let patch = SubmanifoldPatch::parse(&[&t, &theta, &phi], 1, vec![0.0])?;
    let normal = NormalField::parse(&["1", &n_theta, &n_phi], 1)?;
    let velocity = normal.value(&[0.0])?;
    Ok(SphereCircle { patch, normal, velocity })
}

/// Unit vector of `S²` at colatitude `theta`, azimuth `phi`, and the unit
/// tangent there pointing along `(dθ, dφ)` (not normalized input).
pub fn sphere_point(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

pub fn sphere_direction(theta: f64, phi: f64, d_theta: f64, d_phi: f64) -> [f64; 3] {
    let e_theta = [theta.cos() * phi.cos(), theta.cos() * phi.sin(), -theta.sin()];
    let e_phi = [-phi.sin(), phi.cos(), 0.0];
    let v: [f64; 3] = std::array::from_fn(|i| d_theta * e_theta[i] + d_phi * theta.sin() * e_phi[i]);
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    std::array::from_fn(|i| v[i] / norm)
}
