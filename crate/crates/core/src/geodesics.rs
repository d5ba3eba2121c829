//! Geodesic integration, lightcone projection, energy, and the conformal
//! reparametrization `φ̇ = λ(γ̇ ∘ φ)` that turns a lightlike geodesic of
//! `λL` into one of `L`.

use crate::batch::{self, Execution};
use crate::connection;
use crate::curve::{self, DiscreteCurve};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metric::{MetricDefinition, TangentSample};
use crate::tensors;

/// `|L(v)| ≤ LIGHTLIKE_TOL · |v|²` counts as lightlike.
pub const LIGHTLIKE_TOL: f64 = 1e-8;

pub fn is_lightlike(m: &MetricDefinition, v: &TangentSample) -> Result<bool> {
    let l = m.value(v)?;
    Ok(l.abs() <= LIGHTLIKE_TOL * v.y_norm().powi(2))
}

fn acceleration(m: &MetricDefinition, x: &[f64], y: &[f64], t: f64) -> Result<Vec<f64>> {
    let v = TangentSample::new(x.to_vec(), y.to_vec());
    if !m.admissible(&v) {
        return Err(Error::DomainExit { t });
    }
    Ok(linalg::scale(-2.0, &connection::spray_coefficients(m, &v)?))
}

/// Classical RK4 on `ẋ = y, ẏ = −2G(x, y)` over `t_span` with step at
/// most `h`. Every stage is checked for admissibility.
pub fn integrate_geodesic(
    m: &MetricDefinition,
    x0: &[f64],
    v0: &[f64],
    t_span: (f64, f64),
    h: f64,
) -> Result<DiscreteCurve> {
    let start = TangentSample::new(x0.to_vec(), v0.to_vec());
    m.require_admissible(&start)?;
    let (t0, t1) = t_span;
    let (steps, h) = curve::uniform_steps(t1 - t0, h).map_err(|_| Error::ParameterRange { start: t0, end: t1 })?;
    let mut xs = Vec::with_capacity(steps + 1);
    let mut ys = Vec::with_capacity(steps + 1);
    let mut accs = Vec::with_capacity(steps + 1);
    let (mut x, mut y) = (x0.to_vec(), v0.to_vec());
    let mut a = acceleration(m, &x, &y, t0)?;
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let k1x = y.clone();
        let k1y = a.clone();
        let x2 = linalg::axpy(0.5 * h, &k1x, &x);
        let y2 = linalg::axpy(0.5 * h, &k1y, &y);
        let k2y = acceleration(m, &x2, &y2, t + 0.5 * h)?;
        let x3 = linalg::axpy(0.5 * h, &y2, &x);
        let y3 = linalg::axpy(0.5 * h, &k2y, &y);
        let k3y = acceleration(m, &x3, &y3, t + 0.5 * h)?;
        let x4 = linalg::axpy(h, &y3, &x);
        let y4 = linalg::axpy(h, &k3y, &y);
        let k4y = acceleration(m, &x4, &y4, t + h)?;
        let nx: Vec<f64> = (0..x.len())
            .map(|k| x[k] + h / 6.0 * (k1x[k] + 2.0 * y2[k] + 2.0 * y3[k] + y4[k]))
            .collect();
        let ny: Vec<f64> = (0..y.len())
            .map(|k| y[k] + h / 6.0 * (k1y[k] + 2.0 * k2y[k] + 2.0 * k3y[k] + k4y[k]))
            .collect();
        xs.push(std::mem::replace(&mut x, nx));
        ys.push(std::mem::replace(&mut y, ny));
        accs.push(std::mem::take(&mut a));
        a = acceleration(m, &x, &y, t + h)?;
    }
    xs.push(x);
    ys.push(y);
    accs.push(a);
    Ok(DiscreteCurve { t0, h, xs, ys, accs })
}

/// Newton iteration on `δ ↦ L(v + δw)` with step halving to stay inside the
/// domain; returns the lightlike vector `v + δ*w` once `|L| ≤ 1e-12·|v|²`
/// or the Newton step drops below rounding level.
pub fn project_to_lightcone(m: &MetricDefinition, v: &TangentSample, w: &[f64]) -> Result<TangentSample> {
    m.require_admissible(v)?;
    let scale = v.y_norm().powi(2);
    let tol = 1e-12 * scale;
    let pairing = linalg::dot(&tensors::legendre(m, v)?, w);
    if pairing.abs() <= 1e-12 * v.y_norm() * linalg::norm(w) * tensors::fundamental_tensor(m, v)?.g.amax().max(1.0) {
        return Err(Error::TransversalityFailure { pairing });
    }
    let at = |delta: f64| v.with_y(linalg::axpy(delta, w, &v.y));
    let mut delta = 0.0;
    let mut f = m.value(v)?;
    for _ in 0..50 {
        if f.abs() <= tol {
            return Ok(at(delta));
        }
        let u = at(delta);
        let slope = 2.0 * linalg::dot(&tensors::legendre(m, &u)?, w);
        if slope == 0.0 || !slope.is_finite() {
            return Err(Error::TransversalityFailure { pairing: slope });
        }
        let mut step = -f / slope;
        if (step * linalg::norm(w)).abs() <= 4.0 * f64::EPSILON * v.y_norm() {
            // The iterate sits within rounding distance of the cone; near a
            // domain boundary where L vanishes like a fractional power this
            // happens before |L| reaches the tolerance.
            return Ok(at(delta));
        }
        let mut accepted = false;
        for _ in 0..60 {
            let cand = at(delta + step);
            if m.admissible(&cand) {
                if let Ok(fc) = m.value(&cand) {
                    if fc.is_finite() && fc.abs() < f.abs() {
                        delta += step;
                        f = fc;
                        accepted = true;
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if f.abs() <= tol {
        return Ok(at(delta));
    }
    Err(Error::NoConvergence {
        iterations: 50,
        residual: f.abs(),
    })
}

/// `E_λ = ½ ∫ λ(γ̇) L(γ̇) dt` by composite Simpson on the nodes.
pub fn energy(curve: &DiscreteCurve, m: &MetricDefinition, lambda: Option<&MetricDefinition>) -> Result<f64> {
    let vals: Vec<f64> = curve
        .nodes()
        .iter()
        .map(|v| {
            let l = m.value_checked(v)?;
            let s = match lambda {
                Some(lam) => lam.value_checked(v)?,
                None => 1.0,
            };
            Ok(s * l)
        })
        .collect::<Result<_>>()?;
    Ok(0.5 * curve::simpson(&vals, curve.h))
}

/// `max |D_γ̇(λ(γ̇)γ̇)|` over interior nodes, Euclidean norm of chart
/// components. The time derivative uses fourth-order differences of the
/// nodal values, the connection term is `λ·2G(γ̇)` for the base metric.
pub fn pregeodesic_residual(curve: &DiscreteCurve, m: &MetricDefinition, lambda: Option<&MetricDefinition>) -> Result<f64> {
    let nodes = curve.nodes();
    let lam: Vec<f64> = nodes
        .iter()
        .map(|v| lambda.map_or(Ok(1.0), |l| l.value_checked(v)))
        .collect::<Result<_>>()?;
    let field: Vec<Vec<f64>> = nodes.iter().zip(&lam).map(|(v, &l)| linalg::scale(l, &v.y)).collect();
    let deriv = curve::differentiate_field(&field, curve.h)?;
    let sprays = batch::try_map(Execution::default(), nodes.len(), |i| connection::spray_coefficients(m, &nodes[i]))?;
    let mut worst: f64 = 0.0;
    for i in 1..nodes.len() - 1 {
        let r = linalg::axpy(2.0 * lam[i], &sprays[i], &deriv[i]);
        worst = worst.max(linalg::norm(&r));
    }
    Ok(worst)
}

/// Solution of `φ̇(μ) = λ(γ̇(φ(μ)))`, `φ(μ₀) = a`, on a uniform `μ` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparametrization {
    pub mu0: f64,
    pub h: f64,
    pub phi: Vec<f64>,
    pub phidot: Vec<f64>,
    pub phiddot: Vec<f64>,
}

impl Reparametrization {
    pub fn mu1(&self) -> f64 {
        self.mu0 + self.h * (self.phi.len() - 1) as f64
    }

    pub fn phi_at(&self, mu: f64) -> f64 {
        curve::hermite_scalar(self.mu0, self.h, &self.phi, &self.phidot, mu)
    }

    pub fn phidot_at(&self, mu: f64) -> f64 {
        curve::hermite_scalar(self.mu0, self.h, &self.phidot, &self.phiddot, mu)
    }

    /// `ψ = φ⁻¹` by Newton on the dense output.
    pub fn inverse(&self, t: f64) -> f64 {
        let (a, b) = (self.phi[0], *self.phi.last().expect("non-empty"));
        let mut mu = self.mu0 + (t - a) / (b - a) * (self.mu1() - self.mu0);
        for _ in 0..30 {
            let step = (self.phi_at(mu) - t) / self.phidot_at(mu);
            mu -= step;
            if step.abs() <= 1e-15 * (1.0 + mu.abs()) {
                break;
            }
        }
        mu
    }

    pub fn is_monotone(&self) -> bool {
        self.phi.windows(2).all(|w| w[1] > w[0]) && self.phidot.iter().all(|&d| d > 0.0)
    }
}

fn lambda_along(curve: &DiscreteCurve, lambda: &MetricDefinition, t: f64) -> Result<f64> {
    let v = curve.sample(t.clamp(curve.t0, curve.t_end()));
    let value = lambda.value_checked(&v)?;
    if !(value > 0.0) {
        return Err(Error::PositivityFailure { value });
    }
    Ok(value)
}

/// `d/dt λ(γ̇(t)) = ∂ₓλ·γ̇ + ∂ᵧλ·γ̈`.
fn lambda_rate(curve: &DiscreteCurve, lambda: &MetricDefinition, t: f64) -> Result<f64> {
    let t = t.clamp(curve.t0, curve.t_end());
    let v = curve.sample(t);
    let acc = curve.acceleration(t);
    let n = v.dim();
    let jet = lambda.jet(&v, 1)?;
    let mut s = 0.0;
    for i in 0..n {
        s += jet.partial(&[i])? * v.y[i] + jet.partial(&[n + i])? * acc[i];
    }
    Ok(s)
}

/// `∫_a^b dt/λ(γ̇)`, the parameter length of `γ̃`.
pub fn reparametrized_length(curve: &DiscreteCurve, lambda: &MetricDefinition) -> Result<f64> {
    let vals: Vec<f64> = (0..curve.len())
        .map(|i| lambda_along(curve, lambda, curve.time(i)).map(|l| 1.0 / l))
        .collect::<Result<_>>()?;
    Ok(curve::simpson(&vals, curve.h))
}

/// Integrate `φ̇ = λ(γ̇ ∘ φ)` from `φ(μ₀) = a` (the convention fixing the
/// free constant) up to `μ₁` (default: where `φ` reaches `b`), and emit
/// `γ̃ = γ ∘ φ` on the same number of intervals as `γ`.
pub fn reparametrize_conformal(
    curve: &DiscreteCurve,
    lambda: &MetricDefinition,
    mu0: f64,
    mu1: Option<f64>,
) -> Result<(Reparametrization, DiscreteCurve)> {
    let reach = reparametrized_length(curve, lambda)?;
    let span = match mu1 {
        Some(end) => {
            if end - mu0 > reach * (1.0 + 1e-9) || end <= mu0 {
                return Err(Error::ParameterRange {
                    start: mu0,
                    end: mu0 + reach,
                });
            }
            end - mu0
        }
        None => reach,
    };
    let steps = curve.intervals();
    let h = span / steps as f64;
    let rhs = |t: f64| lambda_along(curve, lambda, t);
    let mut phi = Vec::with_capacity(steps + 1);
    let mut p = curve.t0;
    phi.push(p);
    for _ in 0..steps {
        let k1 = rhs(p)?;
        let k2 = rhs(p + 0.5 * h * k1)?;
        let k3 = rhs(p + 0.5 * h * k2)?;
        let k4 = rhs(p + h * k3)?;
        p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        phi.push(p);
    }
    let overshoot = p - curve.t_end();
    if overshoot > 1e-6 * (curve.t_end() - curve.t0) {
        return Err(Error::ParameterRange {
            start: mu0,
            end: mu0 + reach,
        });
    }
    let phidot: Vec<f64> = phi.iter().map(|&t| rhs(t)).collect::<Result<_>>()?;
    let rates: Vec<f64> = phi.iter().map(|&t| lambda_rate(curve, lambda, t)).collect::<Result<_>>()?;
    let phiddot: Vec<f64> = phidot.iter().zip(&rates).map(|(d, r)| d * r).collect();
    let mut xs = Vec::with_capacity(steps + 1);
    let mut ys = Vec::with_capacity(steps + 1);
    let mut accs = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        let t = phi[j].clamp(curve.t0, curve.t_end());
        let y = curve.velocity(t);
        let a = curve.acceleration(t);
        xs.push(curve.position(t));
        accs.push(
            (0..y.len())
                .map(|k| phiddot[j] * y[k] + phidot[j] * phidot[j] * a[k])
                .collect(),
        );
        ys.push(linalg::scale(phidot[j], &y));
    }
    let rep = Reparametrization {
        mu0,
        h,
        phi,
        phidot,
        phiddot,
    };
    if !rep.is_monotone() {
        return Err(Error::PositivityFailure {
            value: rep.phidot.iter().cloned().fold(f64::INFINITY, f64::min),
        });
    }
    Ok((rep, DiscreteCurve { t0: mu0, h, xs, ys, accs }))
}
