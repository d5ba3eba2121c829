//! Built-in metrics and conformal factors.

use std::f64::consts::PI;

use crate::metric::MetricDefinition;

/// Chart box for a polar angle, kept away from the coordinate poles.
const POLAR: (f64, f64) = (0.3, PI - 0.3);
const AZIMUTH: (f64, f64) = (-PI, PI);

fn build(name: &str, body: &str, dim: usize, degree: i32, domain: &[&str]) -> MetricDefinition {
    MetricDefinition::parse(name, body, dim, degree, domain).expect("built-in metric parses")
}

/// `-y0² + y1²`.
pub fn minkowski2() -> MetricDefinition {
    build("minkowski2", "-y0^2 + y1^2", 2, 2, &[])
}

/// `-y0² + y1²` restricted to the future cone interior `y0 > |y1|`.
pub fn minkowski2_future() -> MetricDefinition {
    build("minkowski2_future", "-y0^2 + y1^2", 2, 2, &["y0 - y1", "y0 + y1"])
}

/// `-y0² + y1² + y2²`.
pub fn minkowski3() -> MetricDefinition {
    build("minkowski3", "-y0^2 + y1^2 + y2^2", 3, 2, &[])
}

/// Static product `ℝ × S²` in chart `(t, θ, φ)`.
pub fn einstein_static() -> MetricDefinition {
    build(
        "einstein_static",
        "-y0^2 + y1^2 + sin(x1)^2 * y2^2",
        3,
        2,
        &["sin(x1)"],
    )
    .with_chart_box(vec![(-1.0, 1.0), POLAR, AZIMUTH])
}

/// Static product `ℝ × S³` in chart `(t, χ, θ, φ)`.
pub fn einstein_static4() -> MetricDefinition {
    build(
        "einstein_static4",
        "-y0^2 + y1^2 + sin(x1)^2 * (y2^2 + sin(x2)^2 * y3^2)",
        4,
        2,
        &["sin(x1)", "sin(x2)"],
    )
    .with_chart_box(vec![(-1.0, 1.0), POLAR, POLAR, AZIMUTH])
}

/// Bogoslovsky-type metric with `b = 0.3`, negative on its domain
/// `y0 > |y1|` so that it shares the lightcone of [`minkowski2_future`].
pub fn bogoslovsky() -> MetricDefinition {
    build(
        "bogoslovsky",
        "-pow(y0 - y1, 1.3) * pow(y0 + y1, 0.7)",
        2,
        2,
        &["y0 - y1", "y0 + y1"],
    )
}

/// Bogoslovsky-type metric whose prefactor and exponent vary with `x`.
pub fn bogoslovsky_warped() -> MetricDefinition {
    build(
        "bogoslovsky_warped",
        "-(1 + 0.2*sin(x0)*cos(x1)) * pow(y0 - y1, 1.3 + 0.1*sin(x0 + x1)) * pow(y0 + y1, 0.7 - 0.1*sin(x0 + x1))",
        2,
        2,
        &["y0 - y1", "y0 + y1"],
    )
}

/// Minkowski plus an `x`-dependent quartic anisotropy: a genuinely Finsler
/// metric without domain restrictions.
pub fn quartic_finsler() -> MetricDefinition {
    build(
        "quartic_finsler",
        "-y0^2 + y1^2 + y2^2 + 0.1*(1 + 0.5*sin(x1))*y1^2*y2^2/(y0^2 + y1^2 + y2^2)",
        3,
        2,
        &[],
    )
}

/// `λ = 1 + 0.1·(y1)²/Σ(yⁱ)²` on a 3-manifold (in the `(t, θ, φ)` chart the
/// distinguished slot is the polar one).
pub fn anisotropic_lambda() -> MetricDefinition {
    build(
        "anisotropic_lambda",
        "1 + 0.1*y1^2/(y0^2 + y1^2 + y2^2)",
        3,
        0,
        &[],
    )
}

/// `λ = ((y0 - y1)/(y0 + y1))^0.3`, the factor turning Minkowski into
/// [`bogoslovsky`].
pub fn bogoslovsky_factor() -> MetricDefinition {
    build(
        "bogoslovsky_factor",
        "pow((y0 - y1)/(y0 + y1), 0.3)",
        2,
        0,
        &["y0 - y1", "y0 + y1"],
    )
}

pub const METRIC_NAMES: &[&str] = &[
    "minkowski2",
    "minkowski2_future",
    "minkowski3",
    "einstein_static",
    "einstein_static4",
    "bogoslovsky",
    "bogoslovsky_warped",
    "quartic_finsler",
];

pub const LAMBDA_NAMES: &[&str] = &["anisotropic_lambda", "bogoslovsky_factor"];

/// Look up a metric or conformal factor by name.
pub fn get(name: &str) -> Option<MetricDefinition> {
    Some(match name {
        "minkowski2" => minkowski2(),
        "minkowski2_future" => minkowski2_future(),
        "minkowski3" => minkowski3(),
        "einstein_static" => einstein_static(),
        "einstein_static4" => einstein_static4(),
        "bogoslovsky" => bogoslovsky(),
        "bogoslovsky_warped" => bogoslovsky_warped(),
        "quartic_finsler" => quartic_finsler(),
        "anisotropic_lambda" => anisotropic_lambda(),
        "bogoslovsky_factor" => bogoslovsky_factor(),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::TangentSample;

    #[test]
    fn every_entry_is_homogeneous() {
        for name in METRIC_NAMES.iter().chain(LAMBDA_NAMES) {
            let m = get(name).unwrap();
            let r = m.validate_homogeneity(100, 3).unwrap();
            assert!(r.pass, "{name}: {r:?}");
        }
    }

    #[test]
    fn registry_matches_dsl_re_expression() {
        let pairs = [
            (einstein_static(), "-(y0*y0) + y1*y1 + (sin(x1)*y2)^2"),
            (bogoslovsky(), "-exp(1.3*log(y0-y1) + 0.7*log(y0+y1))"),
            (minkowski3(), "y1^2 + y2^2 - y0^2"),
        ];
        for (m, alt) in pairs {
            let other = MetricDefinition::parse("alt", alt, m.dim, 2, &[]).unwrap();
            for v in m.samples(50, 11).unwrap() {
                let a = m.value(&v).unwrap();
                let b = other.value(&v).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{}: {a} vs {b}", m.name);
            }
        }
    }

    #[test]
    fn bogoslovsky_is_minkowski_times_factor() {
        let v = TangentSample::new(vec![0.0, 0.0], vec![2.0, 1.0]);
        let l1 = minkowski2_future().value(&v).unwrap();
        let l2 = bogoslovsky().value(&v).unwrap();
        let mu = bogoslovsky_factor().value(&v).unwrap();
        assert!((mu - (1.0f64 / 3.0).powf(0.3)).abs() < 1e-15);
        assert!((l2 - mu * l1).abs() < 1e-14);
    }
}
