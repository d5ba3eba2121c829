//! Anisotropic conformal changes: lightcone coincidence, the anisotropy
//! factor `μ(v) = g²_v(v, w) / g¹_v(v, w)`, and construction of `λL`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geodesics;
use crate::linalg;
use crate::metric::{MetricDefinition, TangentSample};
use crate::tensors;

/// Two metrics compared over a seeded sample budget.
#[derive(Debug, Clone)]
pub struct ConformalPair {
    pub l1: MetricDefinition,
    pub l2: MetricDefinition,
    pub samples: usize,
    pub seed: u64,
}

impl ConformalPair {
    pub fn new(l1: MetricDefinition, l2: MetricDefinition, samples: usize, seed: u64) -> Result<Self> {
        if l1.dim != l2.dim {
            return Err(Error::DimensionMismatch {
                expected: l1.dim,
                found: l2.dim,
            });
        }
        Ok(ConformalPair { l1, l2, samples, seed })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceReport {
    pub verdict: bool,
    /// Largest `|L_other(v*)| / |v*|²` over projected lightcone points.
    pub max_violation: f64,
    /// Lightcone points found for `L1`, `L2`.
    pub projected: (usize, usize),
}

/// Coincidence threshold on the normalized violation.
pub const COINCIDENCE_TOL: f64 = 1e-8;

/// Basis vector maximizing `|g_v(v, e_i)|`, with that pairing.
pub fn auto_transversal(m: &MetricDefinition, v: &TangentSample) -> Result<(Vec<f64>, f64)> {
    let ell = tensors::legendre(m, v)?;
    let (i, best) = ell
        .iter()
        .enumerate()
        .map(|(i, c)| (i, c.abs()))
        .fold((0, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
    let mut w = vec![0.0; m.dim];
    w[i] = 1.0;
    Ok((w, best.max(0.0) * ell[i].signum()))
}

fn cone_points(m: &MetricDefinition, count: usize, seed: u64) -> Result<Vec<TangentSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let v = m.sample(&mut rng)?;
        let (w, _) = auto_transversal(m, &v)?;
        if let Ok(p) = project_tight(m, &v, &w) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Projection continued past the library tolerance while `|L|` keeps
/// shrinking, so coincident cones show violations near machine precision.
fn project_tight(m: &MetricDefinition, v: &TangentSample, w: &[f64]) -> Result<TangentSample> {
    let mut p = geodesics::project_to_lightcone(m, v, w)?;
    let mut f = m.value(&p)?.abs();
    for _ in 0..20 {
        if f == 0.0 {
            break;
        }
        let slope = 2.0 * linalg::dot(&tensors::legendre(m, &p)?, w);
        let mut step = -m.value(&p)? / slope;
        let mut improved = false;
        for _ in 0..30 {
            let cand = p.with_y(linalg::axpy(step, w, &p.y));
            if let Ok(fc) = m.value(&cand) {
                if m.admissible(&cand) && fc.abs() < f {
                    p = cand;
                    f = fc.abs();
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok(p)
}

/// Project samples of each metric onto its lightcone and evaluate the other
/// metric there.
pub fn lightcones_coincide(pair: &ConformalPair) -> Result<CoincidenceReport> {
    let c1 = cone_points(&pair.l1, pair.samples, pair.seed)?;
    let c2 = cone_points(&pair.l2, pair.samples, pair.seed.wrapping_add(1))?;
    for (pts, m) in [(&c1, &pair.l1), (&c2, &pair.l2)] {
        if pts.is_empty() {
            return Err(Error::LightconeEmpty { metric: m.name.clone() });
        }
    }
    let mut worst: f64 = 0.0;
    for (pts, other) in [(&c1, &pair.l2), (&c2, &pair.l1)] {
        for p in pts {
            let viol = if other.admissible(p) {
                other.value(p)?.abs() / p.y_norm().powi(2)
            } else {
                f64::INFINITY
            };
            worst = worst.max(viol);
        }
    }
    Ok(CoincidenceReport {
        verdict: worst <= COINCIDENCE_TOL,
        max_violation: worst,
        projected: (c1.len(), c2.len()),
    })
}

/// `μ(v)` and the transversal vector used.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropyFactor {
    pub mu: f64,
    /// Transversal vector used; empty when the quotient was used.
    pub w: Vec<f64>,
}

/// Below this `|L1(v)| / |v|²` the factor comes from the tensors; above it
/// from the quotient `L2/L1`, which is exact there but loses digits as
/// `L1 → 0`.
pub const ON_CONE_TOL: f64 = 1e-8;

/// `μ(v)`: on the cone of `L1`, `g²_v(v, w) / g¹_v(v, w)` (`w = None` picks
/// the basis vector maximizing `|g¹_v(v, w)|`); off it, `L2(v)/L1(v)`.
pub fn anisotropy_factor(pair: &ConformalPair, v: &TangentSample, w: Option<&[f64]>) -> Result<AnisotropyFactor> {
    let l1 = pair.l1.value_checked(v)?;
    if l1.abs() > ON_CONE_TOL * v.y_norm().powi(2) {
        return Ok(AnisotropyFactor {
            mu: pair.l2.value_checked(v)? / l1,
            w: Vec::new(),
        });
    }
    tensor_anisotropy_factor(pair, v, w)
}

/// `g²_v(v, w) / g¹_v(v, w)` regardless of where `v` lies.
pub fn tensor_anisotropy_factor(pair: &ConformalPair, v: &TangentSample, w: Option<&[f64]>) -> Result<AnisotropyFactor> {
    let ell1 = tensors::legendre(&pair.l1, v)?;
    let ell2 = tensors::legendre(&pair.l2, v)?;
    let w = match w {
        Some(w) => w.to_vec(),
        None => auto_transversal(&pair.l1, v)?.0,
    };
    let p1 = linalg::dot(&ell1, &w);
    let tol = 1e-12 * linalg::norm(&ell1).max(f64::MIN_POSITIVE) * linalg::norm(&w);
    if !(p1.abs() > tol) {
        return Err(Error::NoTransversalW { best: p1.abs() });
    }
    Ok(AnisotropyFactor {
        mu: linalg::dot(&ell2, &w) / p1,
        w,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleReport {
    pub samples: usize,
    pub min_lambda: f64,
    pub min_abs_det: f64,
    /// `min |det g^{λL}| < 1e-10`: nondegeneracy fails somewhere sampled.
    pub nondegeneracy_warning: bool,
}

/// The composite `λ·L`, with `λ` checked positive and both factors checked
/// homogeneous on `samples` seeded draws from `L`'s domain.
pub fn scale_metric(
    m: &MetricDefinition,
    lambda: &MetricDefinition,
    samples: usize,
    seed: u64,
) -> Result<(MetricDefinition, ScaleReport)> {
    if m.dim != lambda.dim {
        return Err(Error::DimensionMismatch {
            expected: m.dim,
            found: lambda.dim,
        });
    }
    if lambda.degree != 0 {
        return Err(Error::Precondition(format!(
            "conformal factor {} has degree {}, expected 0",
            lambda.name, lambda.degree
        )));
    }
    for f in [m, lambda] {
        let rep = f.validate_homogeneity(samples.clamp(1, 50), seed)?;
        if !rep.pass {
            return Err(Error::Precondition(format!(
                "{} fails homogeneity (relative error {:e})",
                f.name, rep.max_relative_error
            )));
        }
    }
    let mut domain: Vec<Expr> = m.domain.clone();
    domain.extend(lambda.domain.iter().cloned());
    let composite = MetricDefinition {
        name: format!("{}*{}", lambda.name, m.name),
        dim: m.dim,
        degree: m.degree,
        body: Expr::product(lambda.body.clone(), m.body.clone()),
        domain,
        chart_box: m.chart_box.clone(),
    };
    let mut min_lambda = f64::INFINITY;
    let mut min_det = f64::INFINITY;
    for v in m.samples(samples, seed)? {
        let l = lambda.value_checked(&v)?;
        if !(l > 0.0) {
            return Err(Error::PositivityFailure { value: l });
        }
        min_lambda = min_lambda.min(l);
        min_det = min_det.min(tensors::fundamental_tensor(&composite, &v)?.determinant().abs());
    }
    Ok((
        composite,
        ScaleReport {
            samples,
            min_lambda,
            min_abs_det: min_det,
            nondegeneracy_warning: min_det < 1e-10,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::finite_difference;
    use crate::registry;

    fn pair(a: MetricDefinition, b: MetricDefinition) -> ConformalPair {
        ConformalPair::new(a, b, 40, 7).unwrap()
    }

    #[test]
    fn doubled_metric_shares_cone() {
        let m = registry::minkowski3();
        let (two, _) = scale_metric(&m, &MetricDefinition::constant(3, 2.0), 20, 1).unwrap();
        let r = lightcones_coincide(&pair(m, two)).unwrap();
        assert!(r.verdict && r.max_violation <= 1e-15, "{r:?}");
    }

    #[test]
    fn minkowski_and_bogoslovsky_share_cone() {
        let r = lightcones_coincide(&pair(registry::minkowski2_future(), registry::bogoslovsky())).unwrap();
        assert!(r.verdict && r.projected == (40, 40), "{r:?}");
    }

    #[test]
    fn different_slopes_do_not() {
        let a = MetricDefinition::parse("a", "-y0^2 + y1^2", 2, 2, &[]).unwrap();
        let b = MetricDefinition::parse("b", "-2*y0^2 + y1^2", 2, 2, &[]).unwrap();
        let r = lightcones_coincide(&pair(a, b)).unwrap();
        assert!(!r.verdict && r.max_violation > 0.1, "{r:?}");
    }

    #[test]
    fn factor_closed_form() {
        let p = pair(registry::minkowski2_future(), registry::bogoslovsky());
        let v = TangentSample::new(vec![0.0, 0.0], vec![2.0, 1.0]);
        let mu = anisotropy_factor(&p, &v, None).unwrap().mu;
        assert!((mu - (1.0f64 / 3.0).powf(0.3)).abs() < 1e-14);
        let doubled = pair(registry::minkowski3(), registry::minkowski3());
        let v = TangentSample::new(vec![0.0; 3], vec![1.0, 1.0, 0.0]);
        assert!(anisotropy_factor(&doubled, &v, Some(&[0.0, 0.0, 1.0])).is_err());
    }

    #[test]
    fn composite_hessian_matches_fd() {
        let m = registry::einstein_static();
        let lam = registry::anisotropic_lambda();
        let (ll, rep) = scale_metric(&m, &lam, 30, 3).unwrap();
        assert!(!rep.nondegeneracy_warning && rep.min_lambda >= 1.0);
        for v in m.samples(5, 4).unwrap() {
            let g = tensors::fundamental_tensor(&ll, &v).unwrap();
            let f = |y: &[f64]| lam.eval(&v.x, y).unwrap() * m.eval(&v.x, y).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let mut alpha = [0u8; 6];
                    alpha[3 + i] += 1;
                    alpha[3 + j] += 1;
                    let fy = |y: &[f64]| f(&y[3..]);
                    let pt: Vec<f64> = v.x.iter().chain(&v.y).copied().collect();
                    let fd = 0.5 * finite_difference::richardson(&fy, &pt, &alpha, 1e-2);
                    assert!((fd - g.g[(i, j)]).abs() <= 1e-6 * fd.abs().max(1.0));
                }
            }
            let mu = anisotropy_factor(&pair(m.clone(), ll.clone()), &v, None).unwrap().mu;
            assert!((mu - lam.value(&v).unwrap()).abs() <= 1e-9);
        }
    }

    #[test]
    fn rejects_non_positive_lambda() {
        let m = registry::minkowski3();
        let neg = MetricDefinition::constant(3, -1.0);
        assert!(matches!(scale_metric(&m, &neg, 5, 1), Err(Error::PositivityFailure { .. })));
    }
}
