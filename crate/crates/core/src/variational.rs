//! Variations of `E_λ`, the index form, Jacobi fields, focal points, and
//! the transfer of Jacobi fields between `L` and `λL`.
//!
//! Throughout, `′` is the covariant derivative along the curve with the
//! velocity as reference: `X′ = Ẋ + N(γ̇)X`, since `Γ(γ̇)(γ̇, X) = N(γ̇)X`.

use nalgebra::SVD;

use crate::batch::{self, Execution};
use crate::conformal;
use crate::connection::{self, JacobiCoefficients};
use crate::curve::{self, DiscreteCurve};
use crate::error::{Error, Result};
use crate::geodesics::{self, Reparametrization, LIGHTLIKE_TOL};
use crate::linalg::{self, Matrix};
use crate::metric::{MetricDefinition, TangentSample};
use crate::submanifold::{EndpointFrame, NormalField, SubmanifoldPatch};

/// Field along a curve: values, chart time derivatives, and optionally the
/// transverse acceleration `D_β̇ β̇` of the variation at `s = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationField {
    pub w: Vec<Vec<f64>>,
    pub wdot: Vec<Vec<f64>>,
    pub accel: Option<Vec<Vec<f64>>>,
}

impl VariationField {
    /// From a closure returning `(W(t), Ẇ(t))`.
    pub fn from_fn(curve: &DiscreteCurve, f: impl Fn(f64) -> (Vec<f64>, Vec<f64>)) -> Self {
        let (w, wdot) = curve.times().into_iter().map(f).unzip();
        VariationField { w, wdot, accel: None }
    }

    /// From nodal values; derivatives by fourth-order differences.
    pub fn from_values(curve: &DiscreteCurve, w: Vec<Vec<f64>>) -> Result<Self> {
        check_grid(curve, w.len())?;
        let wdot = curve::differentiate_field(&w, curve.h)?;
        Ok(VariationField { w, wdot, accel: None })
    }

    pub fn with_accel(mut self, accel: Vec<Vec<f64>>) -> Self {
        self.accel = Some(accel);
        self
    }
}

fn check_grid(curve: &DiscreteCurve, found: usize) -> Result<()> {
    if found != curve.len() {
        return Err(Error::GridMismatch {
            expected: curve.len(),
            found,
        });
    }
    Ok(())
}

/// Per-node geometry of `L` along a curve together with `λ` data.
#[derive(Debug, Clone)]
pub struct NodeGeometry {
    pub g: Matrix,
    /// `N(γ̇)`.
    pub a: Matrix,
    pub spray: Vec<f64>,
    pub lambda: f64,
    /// `d/dt λ(γ̇)`.
    pub lambda_rate: f64,
    pub grad_h: Vec<f64>,
    pub grad_v: Vec<f64>,
}

impl NodeGeometry {
    fn pair(&self, a: &[f64], b: &[f64]) -> f64 {
        linalg::pair(&self.g, a, b)
    }

    /// `X′ = Ẋ + N(γ̇)X`.
    fn prime(&self, x: &[f64], xdot: &[f64]) -> Vec<f64> {
        linalg::add(xdot, &linalg::mat_vec(&self.a, x))
    }
}

fn node_geometry(m: &MetricDefinition, lambda: Option<&MetricDefinition>, v: &TangentSample, acc: &[f64]) -> Result<NodeGeometry> {
    let geo = connection::local_geometry(m, v)?;
    let n = m.dim;
    let (value, rate, grad_h, grad_v) = match lambda {
        None => (1.0, 0.0, vec![0.0; n], vec![0.0; n]),
        Some(lam) => {
            let d = connection::anisotropic_derivatives_with(lam, &geo, v)?;
            let rate = linalg::dot(&d.dx, &v.y) + linalg::dot(&d.dy, acc);
            (d.value, rate, d.horizontal_gradient, d.vertical_gradient)
        }
    };
    Ok(NodeGeometry {
        g: geo.g,
        a: geo.nonlinear,
        spray: geo.spray,
        lambda: value,
        lambda_rate: rate,
        grad_h,
        grad_v,
    })
}

/// [`NodeGeometry`] at every node, in parallel.
pub fn geometry_along(curve: &DiscreteCurve, m: &MetricDefinition, lambda: Option<&MetricDefinition>) -> Result<Vec<NodeGeometry>> {
    batch::try_map(Execution::default(), curve.len(), |i| {
        node_geometry(m, lambda, &curve.node(i), &curve.accs[i])
    })
}

fn require_lightlike(curve: &DiscreteCurve, m: &MetricDefinition) -> Result<()> {
    let mut worst: f64 = 0.0;
    for v in curve.nodes() {
        worst = worst.max(m.value_checked(&v)?.abs() / v.y_norm().powi(2));
    }
    if worst > LIGHTLIKE_TOL {
        return Err(Error::NotLightlike { max_abs_l: worst });
    }
    Ok(())
}

/// `E′_λ(0) = ∫ g(W, −D(λγ̇)) dt + [λ g(γ̇, W)]` for a lightlike curve.
pub fn first_variation(
    curve: &DiscreteCurve,
    field: &VariationField,
    lambda: Option<&MetricDefinition>,
    m: &MetricDefinition,
) -> Result<f64> {
    check_grid(curve, field.w.len())?;
    require_lightlike(curve, m)?;
    let geo = geometry_along(curve, m, lambda)?;
    let scaled: Vec<Vec<f64>> = geo.iter().zip(&curve.ys).map(|(g, y)| linalg::scale(g.lambda, y)).collect();
    let dscaled = curve::differentiate_field(&scaled, curve.h)?;
    let integrand: Vec<f64> = (0..curve.len())
        .map(|i| {
            let d = linalg::axpy(2.0 * geo[i].lambda, &geo[i].spray, &dscaled[i]);
            -geo[i].pair(&field.w[i], &d)
        })
        .collect();
    let last = curve.len() - 1;
    let boundary = geo[last].lambda * geo[last].pair(&curve.ys[last], &field.w[last])
        - geo[0].lambda * geo[0].pair(&curve.ys[0], &field.w[0]);
    Ok(curve::simpson(&integrand, curve.h) + boundary)
}

/// `E″_λ(0)` for a lightlike geodesic of `λL`:
/// `∫ λ(−g(R(γ̇,W)W, γ̇) + g(W′,W′)) + 2∫ g(W′,γ̇)(g(W,∇ʰλ) + g(W′,∇^νλ))
///  + [λ g(a, γ̇)]`, where `a` defaults to `Γ(γ̇)(W, W)` (the transverse
/// acceleration of `γ + sW`).
pub fn second_variation(
    curve: &DiscreteCurve,
    field: &VariationField,
    lambda: Option<&MetricDefinition>,
    m: &MetricDefinition,
) -> Result<f64> {
    check_grid(curve, field.w.len())?;
    require_lightlike(curve, m)?;
    let geo = geometry_along(curve, m, lambda)?;
    let curvature = batch::try_map(Execution::default(), curve.len(), |i| {
        let r = connection::curvature_tensor(m, &curve.node(i))?;
        Ok::<_, Error>(r.apply(&curve.ys[i], &field.w[i], &field.w[i]))
    })?;
    let integrand: Vec<f64> = (0..curve.len())
        .map(|i| {
            let g = &geo[i];
            let (w, y) = (&field.w[i], &curve.ys[i]);
            let wp = g.prime(w, &field.wdot[i]);
            g.lambda * (-g.pair(&curvature[i], y) + g.pair(&wp, &wp))
                + 2.0 * g.pair(&wp, y) * (g.pair(w, &g.grad_h) + g.pair(&wp, &g.grad_v))
        })
        .collect();
    let accel = |i: usize| -> Result<Vec<f64>> {
        match &field.accel {
            Some(a) => Ok(a[i].clone()),
            None => Ok(connection::christoffel(m, &curve.node(i))?.apply(&field.w[i], &field.w[i])),
        }
    };
    let last = curve.len() - 1;
    let boundary = geo[last].lambda * geo[last].pair(&accel(last)?, &curve.ys[last])
        - geo[0].lambda * geo[0].pair(&accel(0)?, &curve.ys[0]);
    Ok(curve::simpson(&integrand, curve.h) + boundary)
}

fn endpoint_frame(
    m: &MetricDefinition,
    patch: &SubmanifoldPatch,
    normal: Option<&NormalField>,
    x: &[f64],
    y: &[f64],
) -> Result<EndpointFrame> {
    let base = patch.basepoint()?;
    let gap = linalg::norm(&linalg::sub(&base, x));
    if gap > 1e-8 * (1.0 + linalg::norm(x)) {
        return Err(Error::Precondition(format!("submanifold misses the curve endpoint by {gap:e}")));
    }
    EndpointFrame::new(m, patch, normal, y)
}

/// Index form of a lightlike geodesic of `λL` between `P` and `Q` (`None`
/// for an endpoint fixed as a point), with second fundamental forms of `L`.
#[allow(clippy::too_many_arguments)]
pub fn index_form(
    curve: &DiscreteCurve,
    v: &VariationField,
    w: &VariationField,
    p: Option<&SubmanifoldPatch>,
    q: Option<&SubmanifoldPatch>,
    lambda: Option<&MetricDefinition>,
    m: &MetricDefinition,
) -> Result<f64> {
    check_grid(curve, v.w.len())?;
    check_grid(curve, w.w.len())?;
    let geo = geometry_along(curve, m, lambda)?;
    let curvature = batch::try_map(Execution::default(), curve.len(), |i| {
        let r = connection::curvature_tensor(m, &curve.node(i))?;
        Ok::<_, Error>(r.apply(&curve.ys[i], &v.w[i], &w.w[i]))
    })?;
    let integrand: Vec<f64> = (0..curve.len())
        .map(|i| {
            let g = &geo[i];
            let y = &curve.ys[i];
            let (vi, wi) = (&v.w[i], &w.w[i]);
            let vp = g.prime(vi, &v.wdot[i]);
            let wp = g.prime(wi, &w.wdot[i]);
            g.lambda * (-g.pair(&curvature[i], y) + g.pair(&vp, &wp))
                + g.pair(&vp, y) * g.pair(wi, &g.grad_h)
                + g.pair(&wp, y) * g.pair(vi, &g.grad_h)
                + g.pair(&vp, y) * g.pair(&wp, &g.grad_v)
                + g.pair(&wp, y) * g.pair(&vp, &g.grad_v)
        })
        .collect();
    let last = curve.len() - 1;
    let mut boundary = 0.0;
    if let Some(q) = q {
        let frame = endpoint_frame(m, q, None, &curve.xs[last], &curve.ys[last])?;
        let s = frame.sff(&v.w[last], &w.w[last]);
        boundary += geo[last].lambda * geo[last].pair(&s, &curve.ys[last]);
    }
    if let Some(p) = p {
        let frame = endpoint_frame(m, p, None, &curve.xs[0], &curve.ys[0])?;
        let s = frame.sff(&v.w[0], &w.w[0]);
        boundary -= geo[0].lambda * geo[0].pair(&s, &curve.ys[0]);
    }
    Ok(curve::simpson(&integrand, curve.h) + boundary)
}

/// Jacobi field along a curve: `J`, `J′ = DJ` and their chart derivatives
/// at the nodes, for Hermite dense output.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiSolution {
    pub t0: f64,
    pub h: f64,
    pub j: Vec<Vec<f64>>,
    pub jp: Vec<Vec<f64>>,
    pub jdot: Vec<Vec<f64>>,
    pub jpdot: Vec<Vec<f64>>,
}

impl JacobiSolution {
    pub fn value(&self, t: f64) -> Vec<f64> {
        curve::hermite_eval(self.t0, self.h, &self.j, &self.jdot, t)
    }

    pub fn derivative(&self, t: f64) -> Vec<f64> {
        curve::hermite_eval(self.t0, self.h, &self.jp, &self.jpdot, t)
    }

    pub fn len(&self) -> usize {
        self.j.len()
    }

    pub fn is_empty(&self) -> bool {
        self.j.is_empty()
    }
}

/// `N(γ̇)` and `K` at nodes and midpoints (`2N + 1` entries).
#[derive(Debug, Clone)]
pub struct JacobiCoefficientsAlong {
    pub t0: f64,
    pub h: f64,
    pub coeffs: Vec<JacobiCoefficients>,
}

pub fn jacobi_coefficients_along(curve: &DiscreteCurve, m: &MetricDefinition) -> Result<JacobiCoefficientsAlong> {
    let count = 2 * curve.intervals() + 1;
    let coeffs = batch::try_map(Execution::default(), count, |k| {
        let v = if k % 2 == 0 {
            curve.node(k / 2)
        } else {
            curve.sample(curve.t0 + 0.5 * k as f64 * curve.h)
        };
        connection::jacobi_coefficients(m, &v)
    })?;
    Ok(JacobiCoefficientsAlong {
        t0: curve.t0,
        h: curve.h,
        coeffs,
    })
}

/// RK4 on `J̇ = J′ − AJ`, `J̇′ = KJ − AJ′`.
pub fn integrate_jacobi_with(along: &JacobiCoefficientsAlong, j0: &[f64], jp0: &[f64]) -> JacobiSolution {
    let rhs = |k: usize, j: &[f64], p: &[f64]| {
        let c = &along.coeffs[k];
        let aj = linalg::mat_vec(&c.nonlinear, j);
        let ap = linalg::mat_vec(&c.nonlinear, p);
        (linalg::sub(p, &aj), linalg::sub(&linalg::mat_vec(&c.jacobi, j), &ap))
    };
    let steps = (along.coeffs.len() - 1) / 2;
    let h = along.h;
    let (mut j, mut p) = (j0.to_vec(), jp0.to_vec());
    let mut out = JacobiSolution {
        t0: along.t0,
        h,
        j: Vec::with_capacity(steps + 1),
        jp: Vec::with_capacity(steps + 1),
        jdot: Vec::with_capacity(steps + 1),
        jpdot: Vec::with_capacity(steps + 1),
    };
    for i in 0..=steps {
        let (k1j, k1p) = rhs(2 * i, &j, &p);
        out.j.push(j.clone());
        out.jp.push(p.clone());
        out.jdot.push(k1j.clone());
        out.jpdot.push(k1p.clone());
        if i == steps {
            break;
        }
        let (k2j, k2p) = rhs(2 * i + 1, &linalg::axpy(0.5 * h, &k1j, &j), &linalg::axpy(0.5 * h, &k1p, &p));
        let (k3j, k3p) = rhs(2 * i + 1, &linalg::axpy(0.5 * h, &k2j, &j), &linalg::axpy(0.5 * h, &k2p, &p));
        let (k4j, k4p) = rhs(2 * i + 2, &linalg::axpy(h, &k3j, &j), &linalg::axpy(h, &k3p, &p));
        for c in 0..j.len() {
            j[c] += h / 6.0 * (k1j[c] + 2.0 * k2j[c] + 2.0 * k3j[c] + k4j[c]);
            p[c] += h / 6.0 * (k1p[c] + 2.0 * k2p[c] + 2.0 * k3p[c] + k4p[c]);
        }
    }
    out
}

/// Jacobi field of `m` along the geodesic `curve` with `J(t0) = j0`,
/// `J′(t0) = jp0`.
pub fn integrate_jacobi(curve: &DiscreteCurve, m: &MetricDefinition, j0: &[f64], jp0: &[f64]) -> Result<JacobiSolution> {
    let along = jacobi_coefficients_along(curve, m)?;
    Ok(integrate_jacobi_with(&along, j0, jp0))
}

/// Rank threshold: singular values below `RANK_TOL · σ_max` count as zero.
pub const RANK_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct FocalPoint {
    pub parameter: f64,
    pub multiplicity: usize,
    /// `σ_min / σ_max` of the Jacobi matrix there.
    pub sigma_ratio: f64,
}

/// Result of a focal-point scan: the points and the Jacobi basis used.
#[derive(Debug, Clone)]
pub struct FocalSearch {
    pub points: Vec<FocalPoint>,
    /// First `tangent_count` fields start tangent to `P`, the rest vanish.
    pub basis: Vec<JacobiSolution>,
    pub tangent_count: usize,
    pub frame: EndpointFrame,
}

impl FocalSearch {
    pub fn matrix(&self, t: f64) -> Matrix {
        let cols: Vec<Vec<f64>> = self.basis.iter().map(|b| b.value(t)).collect();
        let n = cols.len();
        Matrix::from_fn(n, n, |i, k| cols[k][i])
    }

    pub fn singular_values(&self, t: f64) -> Vec<f64> {
        let mut s: Vec<f64> = SVD::new(self.matrix(t), false, false).singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    fn ratio(&self, t: f64) -> f64 {
        let s = self.singular_values(t);
        s.last().copied().unwrap_or(0.0) / s[0].max(f64::MIN_POSITIVE)
    }

    fn multiplicity(&self, t: f64) -> usize {
        let s = self.singular_values(t);
        s.iter().filter(|&&x| x < RANK_TOL * s[0]).count()
    }

    /// Kernel vector of the Jacobi matrix at `t` (right singular vector of
    /// the smallest singular value): coefficients of the basis fields.
    pub fn kernel_coefficients(&self, t: f64) -> Vec<f64> {
        let svd = SVD::new(self.matrix(t), false, true);
        let vt = svd.v_t.expect("requested");
        let (idx, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        vt.row(idx).iter().copied().collect()
    }

    /// The combination `Σ c_k J_k` as a single solution.
    pub fn combine(&self, coeffs: &[f64]) -> JacobiSolution {
        let first = &self.basis[0];
        let lin = |pick: &dyn Fn(&JacobiSolution) -> &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            (0..first.len())
                .map(|i| {
                    let mut acc = vec![0.0; first.j[0].len()];
                    for (c, b) in coeffs.iter().zip(&self.basis) {
                        acc = linalg::axpy(*c, &pick(b)[i], &acc);
                    }
                    acc
                })
                .collect()
        };
        JacobiSolution {
            t0: first.t0,
            h: first.h,
            j: lin(&|b| &b.j),
            jp: lin(&|b| &b.jp),
            jdot: lin(&|b| &b.jdot),
            jpdot: lin(&|b| &b.jpdot),
        }
    }
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-13 * (1.0 + a.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

/// `P`-focal points of the geodesic `curve` of `m` in `(t0, t_end]`.
///
/// Builds `n` `P`-Jacobi fields (`J = T_α, J′ = 𝒮(T_α)` and `J = 0, J′`
/// spanning the normal complement), scans `det M(t)` for sign changes and
/// `σ_min/σ_max` for dips, refines by bisection / golden section, and counts
/// the multiplicity as the number of singular values below
/// `RANK_TOL·σ_max`.
pub fn find_focal_points(
    curve: &DiscreteCurve,
    m: &MetricDefinition,
    patch: &SubmanifoldPatch,
    normal: Option<&NormalField>,
) -> Result<FocalSearch> {
    if patch.params > 0 && normal.is_none() {
        return Err(Error::Precondition("a positive-dimensional P needs its normal field".into()));
    }
    let frame = endpoint_frame(m, patch, normal, &curve.xs[0], &curve.ys[0])?;
    let mut initial: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for t in &frame.tangent {
        initial.push((t.clone(), frame.normal_sff(t)?));
    }
    for q in frame.complement_basis()? {
        initial.push((vec![0.0; m.dim], q));
    }
    let along = jacobi_coefficients_along(curve, m)?;
    let basis = batch::map(Execution::default(), initial.len(), |k| {
        integrate_jacobi_with(&along, &initial[k].0, &initial[k].1)
    });
    let mut search = FocalSearch {
        points: Vec::new(),
        basis,
        tangent_count: frame.params(),
        frame,
    };
    search.points = scan(&search, curve);
    Ok(search)
}

fn scan(search: &FocalSearch, curve: &DiscreteCurve) -> Vec<FocalPoint> {
    let nodes = curve.len();
    let times = curve.times();
    let dets: Vec<f64> = batch::map(Execution::default(), nodes, |i| search.matrix(times[i]).determinant());
    let ratios: Vec<f64> = batch::map(Execution::default(), nodes, |i| search.ratio(times[i]));
    let mut candidates: Vec<f64> = Vec::new();
    for i in 2..nodes {
        if dets[i - 1] == 0.0 || dets[i - 1].signum() != dets[i].signum() {
            let (mut lo, mut hi) = (times[i - 1], times[i]);
            let s_lo = dets[i - 1].signum();
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if search.matrix(mid).determinant().signum() == s_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-14 * (1.0 + hi.abs()) {
                    break;
                }
            }
            candidates.push(0.5 * (lo + hi));
        }
    }
    for i in 2..nodes - 1 {
        if ratios[i] <= ratios[i - 1] && ratios[i] <= ratios[i + 1] && ratios[i] < 1e-2 {
            let t = golden_min(&|t| search.ratio(t), times[i - 1], times[i + 1]);
            if search.ratio(t) < RANK_TOL {
                candidates.push(t);
            }
        }
    }
    let end = times[nodes - 1];
    if ratios[nodes - 1] < RANK_TOL {
        candidates.push(end);
    }
    candidates.sort_by(f64::total_cmp);
    let mut points: Vec<FocalPoint> = Vec::new();
    for t in candidates {
        let ratio = search.ratio(t);
        if ratio >= RANK_TOL {
            continue;
        }
        let point = FocalPoint {
            parameter: t,
            multiplicity: search.multiplicity(t),
            sigma_ratio: ratio,
        };
        match points.last_mut() {
            Some(prev) if (t - prev.parameter).abs() <= 2.0 * curve.h => {
                if ratio < prev.sigma_ratio {
                    *prev = point;
                }
            }
            _ => points.push(point),
        }
    }
    points
}

/// `J`, `J′` of a solution along `γ̃` carried to `γ` through `φ`, the
/// correction `h`, and `Ĵ = J + hγ̇` with `Ĵ′`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferredJacobi {
    pub j: Vec<Vec<f64>>,
    pub jp: Vec<Vec<f64>>,
    /// `J(λ)(γ) = g(J, ∇ʰλ) + g(J′, ∇^νλ)`.
    pub source: Vec<f64>,
    pub h: Vec<f64>,
    pub hdot: Vec<f64>,
    pub jhat: Vec<Vec<f64>>,
    pub jhat_prime: Vec<Vec<f64>>,
}

/// Carry a Jacobi field of `L` along `γ̃ = γ ∘ φ` to `γ` and correct it
/// into a Jacobi field of `λL`: `J(t) = J̃(φ⁻¹(t))`, `J′ = J̃′/λ(γ̇)`,
/// `λḣ + J(λ)(γ)` constant with `h(a) = h(b) = 0`.
pub fn transfer_jacobi(
    tilde: &JacobiSolution,
    gamma: &DiscreteCurve,
    rep: &Reparametrization,
    lambda: &MetricDefinition,
    m: &MetricDefinition,
) -> Result<TransferredJacobi> {
    let span = gamma.t_end() - gamma.t0;
    let phi_end = *rep.phi.last().expect("non-empty");
    if (rep.phi[0] - gamma.t0).abs() > 1e-12 * (1.0 + span) || (phi_end - gamma.t_end()).abs() > 1e-6 * span {
        return Err(Error::Precondition(format!(
            "reparametrization covers [{}, {}], curve spans [{}, {}]",
            rep.phi[0],
            phi_end,
            gamma.t0,
            gamma.t_end()
        )));
    }
    let geo = geometry_along(gamma, m, Some(lambda))?;
    let nodes = gamma.len();
    let mut j = Vec::with_capacity(nodes);
    let mut jp = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let mu = rep.inverse(gamma.time(i)).clamp(rep.mu0, rep.mu1());
        j.push(tilde.value(mu));
        jp.push(linalg::scale(1.0 / geo[i].lambda, &tilde.derivative(mu)));
    }
    let source: Vec<f64> = (0..nodes)
        .map(|i| geo[i].pair(&j[i], &geo[i].grad_h) + geo[i].pair(&jp[i], &geo[i].grad_v))
        .collect();
    let ratio: Vec<f64> = source.iter().zip(&geo).map(|(s, g)| s / g.lambda).collect();
    let integral = curve::cumulative(&ratio, gamma.h);
    let total = integral[nodes - 1];
    let steps = (nodes - 1) as f64;
    let h: Vec<f64> = (0..nodes)
        .map(|i| if i == nodes - 1 { 0.0 } else { total * (i as f64 / steps) - integral[i] })
        .collect();
    let hdot: Vec<f64> = (0..nodes).map(|i| total / span - ratio[i]).collect();
    let mut jhat = Vec::with_capacity(nodes);
    let mut jhat_prime = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let y = &gamma.ys[i];
        let g = &geo[i];
        jhat.push(linalg::axpy(h[i], y, &j[i]));
        let coef = hdot[i] - h[i] * g.lambda_rate / g.lambda;
        jhat_prime.push(linalg::axpy(coef, y, &jp[i]));
    }
    Ok(TransferredJacobi {
        j,
        jp,
        source,
        h,
        hdot,
        jhat,
        jhat_prime,
    })
}

fn max_norm_interior(fields: &[Vec<f64>]) -> f64 {
    fields[1..fields.len() - 1].iter().map(|v| linalg::norm(v)).fold(0.0, f64::max)
}

/// `max |(λJ′)′ − λR(γ̇, J)γ̇|` over interior nodes (base metric `m`).
pub fn jacobi_equation_residual(
    curve: &DiscreteCurve,
    j: &[Vec<f64>],
    jp: &[Vec<f64>],
    lambda: Option<&MetricDefinition>,
    m: &MetricDefinition,
) -> Result<f64> {
    check_grid(curve, j.len())?;
    check_grid(curve, jp.len())?;
    let geo = geometry_along(curve, m, lambda)?;
    let k = batch::try_map(Execution::default(), curve.len(), |i| connection::jacobi_coefficients(m, &curve.node(i)))?;
    let scaled: Vec<Vec<f64>> = (0..curve.len()).map(|i| linalg::scale(geo[i].lambda, &jp[i])).collect();
    let dot = curve::differentiate_field(&scaled, curve.h)?;
    let res: Vec<Vec<f64>> = (0..curve.len())
        .map(|i| {
            let lhs = geo[i].prime(&scaled[i], &dot[i]);
            let rhs = linalg::scale(geo[i].lambda, &linalg::mat_vec(&k[i].jacobi, &j[i]));
            linalg::sub(&lhs, &rhs)
        })
        .collect();
    Ok(max_norm_interior(&res))
}

/// Interior residual of the `λL`-Jacobi characterization along `γ` in
/// terms of `L`:
/// `λR(γ̇,V)γ̇ − (λV′)′ + g(V′,γ̇)∇ʰλ − (g(V,∇ʰλ)γ̇)′ − (g(V′,γ̇)∇^νλ)′
///  − (g(V′,∇^νλ)γ̇)′`.
pub fn scaled_jacobi_residual(
    curve: &DiscreteCurve,
    v: &[Vec<f64>],
    vp: &[Vec<f64>],
    lambda: &MetricDefinition,
    m: &MetricDefinition,
) -> Result<f64> {
    check_grid(curve, v.len())?;
    check_grid(curve, vp.len())?;
    let geo = geometry_along(curve, m, Some(lambda))?;
    let k = batch::try_map(Execution::default(), curve.len(), |i| connection::jacobi_coefficients(m, &curve.node(i)))?;
    let flux: Vec<Vec<f64>> = (0..curve.len())
        .map(|i| {
            let g = &geo[i];
            let y = &curve.ys[i];
            let mut f = linalg::scale(g.lambda, &vp[i]);
            f = linalg::axpy(g.pair(&v[i], &g.grad_h), y, &f);
            f = linalg::axpy(g.pair(&vp[i], y), &g.grad_v, &f);
            linalg::axpy(g.pair(&vp[i], &g.grad_v), y, &f)
        })
        .collect();
    let dot = curve::differentiate_field(&flux, curve.h)?;
    let res: Vec<Vec<f64>> = (0..curve.len())
        .map(|i| {
            let g = &geo[i];
            let y = &curve.ys[i];
            let mut r = linalg::scale(g.lambda, &linalg::mat_vec(&k[i].jacobi, &v[i]));
            r = linalg::axpy(g.pair(&vp[i], y), &g.grad_h, &r);
            linalg::sub(&r, &g.prime(&flux[i], &dot[i]))
        })
        .collect();
    Ok(max_norm_interior(&res))
}

/// Boundary residual at `a` for `W` ranging over the tangent basis of `P`:
/// `max_α |λ g(−𝒮_{γ̇(a)}(V) + V′, T_α) + g(V′, γ̇) g(∇^νλ, T_α)|`.
pub fn scaled_boundary_residual(
    curve: &DiscreteCurve,
    v0: &[f64],
    vp0: &[f64],
    patch: &SubmanifoldPatch,
    normal: &NormalField,
    lambda: &MetricDefinition,
    m: &MetricDefinition,
) -> Result<f64> {
    let frame = endpoint_frame(m, patch, Some(normal), &curve.xs[0], &curve.ys[0])?;
    let g = node_geometry(m, Some(lambda), &curve.node(0), &curve.accs[0])?;
    let shape = frame.normal_sff(v0)?;
    let inner = linalg::sub(vp0, &shape);
    let along = g.pair(vp0, &curve.ys[0]);
    Ok(frame
        .tangent
        .iter()
        .map(|t| (g.lambda * g.pair(&inner, t) + along * g.pair(&g.grad_v, t)).abs())
        .fold(0.0, f64::max))
}

/// One matched pair of focal parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FocalPairing {
    pub l_parameter: f64,
    /// `φ(μ₀)`.
    pub mapped: f64,
    pub scaled_parameter: Option<f64>,
    pub error: f64,
    pub l_multiplicity: usize,
    pub scaled_multiplicity: usize,
}

#[derive(Debug, Clone)]
pub struct CorrespondenceReport {
    pub l_side: Vec<FocalPoint>,
    pub scaled_side: Vec<FocalPoint>,
    pub pairs: Vec<FocalPairing>,
    pub max_error: f64,
    /// Every point paired within `tol` with equal multiplicity, and the
    /// two lists have the same length.
    pub consistent: bool,
    pub reparametrization: Reparametrization,
    pub tilde: DiscreteCurve,
}

/// Focal points of `γ̃ = γ ∘ φ` under `L` against those of `γ` under `λL`.
pub fn verify_focal_correspondence(
    gamma: &DiscreteCurve,
    patch: &SubmanifoldPatch,
    normal: Option<&NormalField>,
    lambda: &MetricDefinition,
    m: &MetricDefinition,
    tol: f64,
) -> Result<CorrespondenceReport> {
    let (scaled, _) = conformal::scale_metric(m, lambda, 16, 0)?;
    let (rep, tilde) = geodesics::reparametrize_conformal(gamma, lambda, gamma.t0, None)?;
    let l_side = find_focal_points(&tilde, m, patch, normal)?.points;
    let scaled_side = find_focal_points(gamma, &scaled, patch, normal)?.points;
    let mut pairs = Vec::new();
    let mut max_error: f64 = 0.0;
    let mut consistent = l_side.len() == scaled_side.len();
    for p in &l_side {
        let mapped = rep.phi_at(p.parameter);
        let nearest = scaled_side
            .iter()
            .min_by(|a, b| (a.parameter - mapped).abs().total_cmp(&(b.parameter - mapped).abs()));
        let (scaled_parameter, error, mult) = match nearest {
            Some(q) => (Some(q.parameter), (q.parameter - mapped).abs(), q.multiplicity),
            None => (None, f64::INFINITY, 0),
        };
        consistent &= error <= tol && mult == p.multiplicity;
        max_error = max_error.max(error);
        pairs.push(FocalPairing {
            l_parameter: p.parameter,
            mapped,
            scaled_parameter,
            error,
            l_multiplicity: p.multiplicity,
            scaled_multiplicity: mult,
        });
    }
    Ok(CorrespondenceReport {
        l_side,
        scaled_side,
        pairs,
        max_error,
        consistent,
        reparametrization: rep,
        tilde,
    })
}
