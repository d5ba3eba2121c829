//! Metric definitions: a scalar expression over `(x, y)` together with the
//! strict-positivity predicates that cut out its conic domain.

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::expr::{Expr, Scope, Var};
use crate::jets::{self, Jet, Scalar};

/// Bound on rejection-sampling attempts before a domain is declared too thin.
pub const MAX_REJECTIONS: usize = 10_000;

/// A chart point `x` and a fiber vector `y` at it.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl TangentSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        TangentSample { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Same base point, fiber vector multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        TangentSample {
            x: self.x.clone(),
            y: self.y.iter().map(|v| v * s).collect(),
        }
    }

    pub fn with_y(&self, y: Vec<f64>) -> Self {
        TangentSample { x: self.x.clone(), y }
    }

    pub fn y_norm(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// An evaluable anisotropic scalar: a metric `L` (degree 2) or a conformal
/// factor `λ` (degree 0).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricDefinition {
    pub name: String,
    pub dim: usize,
    pub degree: i32,
    pub body: Expr,
    pub domain: Vec<Expr>,
    /// Sampling box for chart coordinates, one `(lo, hi)` per axis.
    pub chart_box: Vec<(f64, f64)>,
}

impl fmt::Display for MetricDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (n={}, degree {}): {}", self.name, self.dim, self.degree, self.body)
    }
}

/// Result of [`MetricDefinition::validate_homogeneity`].
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneityReport {
    pub samples: usize,
    pub max_relative_error: f64,
    pub pass: bool,
}

impl MetricDefinition {
    /// Parse a body and its domain predicates for an `n`-dimensional manifold.
    pub fn parse(name: &str, body: &str, dim: usize, degree: i32, domain: &[&str]) -> Result<Self> {
        let scope = Scope::tangent(dim);
        let body = Expr::parse(body, scope)?;
        let domain = domain
            .iter()
            .map(|d| Expr::parse(d, scope))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(MetricDefinition {
            name: name.to_string(),
            dim,
            degree,
            body,
            domain,
            chart_box: vec![(-1.0, 1.0); dim],
        })
    }

    /// Constant anisotropic function (degree 0).
    pub fn constant(dim: usize, value: f64) -> Self {
        MetricDefinition {
            name: format!("const({value})"),
            dim,
            degree: 0,
            body: Expr::constant(value),
            domain: Vec::new(),
            chart_box: vec![(-1.0, 1.0); dim],
        }
    }

    pub fn with_chart_box(mut self, chart_box: Vec<(f64, f64)>) -> Self {
        assert_eq!(chart_box.len(), self.dim);
        self.chart_box = chart_box;
        self
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn with_domain(mut self, domain: Vec<Expr>) -> Self {
        self.domain = domain;
        self
    }

    /// Read the plain-text metric format:
    ///
    /// ```text
    /// # comment
    /// name=bogoslovsky
    /// dim=2
    /// degree=2
    /// domain=y0-y1;y0+y1
    /// box=-1,1;-1,1
    /// -pow(y0-y1, 1.3) * pow(y0+y1, 0.7)
    /// ```
    ///
    /// Header lines are `key=value`; every other non-blank line is part of
    /// the body.
    pub fn from_text(text: &str, default_name: &str) -> Result<Self> {
        let mut dim = None;
        let mut degree = 2;
        let mut name = default_name.to_string();
        let mut domain_src: Vec<String> = Vec::new();
        let mut chart_box = None;
        let mut body = String::new();
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let header = line.split_once('=').filter(|(k, _)| {
                matches!(k.trim(), "dim" | "degree" | "domain" | "name" | "box")
            });
            match header {
                Some((key, value)) => {
                    let value = value.trim();
                    match key.trim() {
                        "dim" => {
                            dim = Some(value.parse::<usize>().map_err(|_| {
                                Error::MetricFile(format!("dim must be a positive integer, got '{value}'"))
                            })?)
                        }
                        "degree" => {
                            degree = value.parse::<i32>().map_err(|_| {
                                Error::MetricFile(format!("degree must be an integer, got '{value}'"))
                            })?
                        }
                        "domain" => domain_src.extend(
                            value.split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from),
                        ),
                        "name" => name = value.to_string(),
                        "box" => chart_box = Some(parse_box(value)?),
                        _ => unreachable!(),
                    }
                }
                None => {
                    body.push_str(line);
                    body.push(' ');
                }
            }
        }
        let dim = dim.ok_or_else(|| Error::MetricFile("missing 'dim=' header".into()))?;
        if dim == 0 {
            return Err(Error::MetricFile("dim must be positive".into()));
        }
        if body.trim().is_empty() {
            return Err(Error::MetricFile("missing metric body".into()));
        }
        let domain: Vec<&str> = domain_src.iter().map(String::as_str).collect();
        let mut m = MetricDefinition::parse(&name, body.trim(), dim, degree, &domain)?;
        if let Some(b) = chart_box {
            if b.len() != dim {
                return Err(Error::MetricFile(format!("box has {} intervals, dim is {dim}", b.len())));
            }
            m.chart_box = b;
        }
        Ok(m)
    }

    /// Render in the format accepted by [`MetricDefinition::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = format!("name={}\ndim={}\ndegree={}\n", self.name, self.dim, self.degree);
        if !self.domain.is_empty() {
            let preds: Vec<String> = self.domain.iter().map(|d| d.to_string()).collect();
            out.push_str(&format!("domain={}\n", preds.join(";")));
        }
        let boxes: Vec<String> = self.chart_box.iter().map(|(lo, hi)| format!("{lo:?},{hi:?}")).collect();
        out.push_str(&format!("box={}\n", boxes.join(";")));
        out.push_str(&format!("{}\n", self.body));
        out
    }

    fn check_dim(&self, v: &TangentSample) -> Result<()> {
        if v.x.len() != self.dim || v.y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: if v.x.len() != self.dim { v.x.len() } else { v.y.len() },
            });
        }
        Ok(())
    }

    /// Evaluate over any scalar type with `x`, `y` bound.
    pub fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S> {
        let proto = &y[0];
        Ok(self.body.eval(proto, &|v| match v {
            Var::X(i) => x.get(i).cloned(),
            Var::Y(i) => y.get(i).cloned(),
            Var::U(_) => None,
        })?)
    }

    /// Plain value at a sample (no domain check).
    pub fn value(&self, v: &TangentSample) -> Result<f64> {
        self.check_dim(v)?;
        self.eval(&v.x, &v.y)
    }

    /// Value at a sample, rejecting inadmissible samples.
    pub fn value_checked(&self, v: &TangentSample) -> Result<f64> {
        self.require_admissible(v)?;
        self.eval(&v.x, &v.y)
    }

    /// Jet of the body at `v`, truncated at `order`, over the `2n` variables
    /// `(x, y)`.
    pub fn jet(&self, v: &TangentSample, order: usize) -> Result<Jet> {
        self.check_dim(v)?;
        let vars = jets::seed_any_order(v, order)?;
        self.eval(&vars.x, &vars.y)
    }

    /// Every domain predicate strictly positive and `y ≠ 0`.
    pub fn admissible(&self, v: &TangentSample) -> bool {
        if v.x.len() != self.dim || v.y.len() != self.dim {
            return false;
        }
        if v.y.iter().all(|&c| c == 0.0) || v.y.iter().chain(&v.x).any(|c| !c.is_finite()) {
            return false;
        }
        self.domain.iter().all(|p| {
            p.eval_real(&v.x, &v.y, &[])
                .map(|value| value > 0.0)
                .unwrap_or(false)
        })
    }

    pub fn require_admissible(&self, v: &TangentSample) -> Result<()> {
        self.check_dim(v)?;
        if self.admissible(v) {
            Ok(())
        } else {
            Err(Error::Inadmissible(format!("{} at x={:?}, y={:?}", self.name, v.x, v.y)))
        }
    }

    /// Draw an admissible sample: `x` uniform in the chart box, `y` uniform on
    /// the unit sphere scaled by a factor in `[0.5, 2]`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<TangentSample> {
        for _ in 0..MAX_REJECTIONS {
            let x: Vec<f64> = self
                .chart_box
                .iter()
                .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..hi) } else { lo })
                .collect();
            let mut y: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(rng)).collect();
            let norm = y.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm < 1e-12 {
                continue;
            }
            let scale = rng.random_range(0.5..2.0) / norm;
            y.iter_mut().for_each(|c| *c *= scale);
            let v = TangentSample::new(x, y);
            if self.admissible(&v) && self.value(&v).is_ok() {
                return Ok(v);
            }
        }
        Err(Error::ThinDomain {
            attempts: MAX_REJECTIONS,
        })
    }

    /// `count` admissible samples from a seeded generator.
    pub fn samples(&self, count: usize, seed: u64) -> Result<Vec<TangentSample>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }

    /// Compare `m(x, s·y)` with `s^degree · m(x, y)` at random admissible
    /// samples and `s ∈ [0.5, 2]`. The error is relative to
    /// `max(|s^degree m|, |s y|^degree)` so samples near the zero set do not
    /// blow it up.
    pub fn validate_homogeneity(&self, samples: usize, seed: u64) -> Result<HomogeneityReport> {
        if samples == 0 {
            return Err(Error::Precondition("homogeneity check needs at least one sample".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let v = self.sample(&mut rng)?;
            let s: f64 = rng.random_range(0.5..2.0);
            let sv = v.scaled(s);
            let expected = s.powi(self.degree) * self.value(&v)?;
            let got = self.value(&sv)?;
            let scale = expected.abs().max(sv.y_norm().powi(self.degree));
            worst = worst.max((got - expected).abs() / scale);
        }
        Ok(HomogeneityReport {
            samples,
            max_relative_error: worst,
            pass: worst <= 1e-9,
        })
    }
}

fn parse_box(value: &str) -> Result<Vec<(f64, f64)>> {
    value
        .split(';')
        .map(|pair| {
            let (lo, hi) = pair
                .split_once(',')
                .ok_or_else(|| Error::MetricFile(format!("box interval '{pair}' must be 'lo,hi'")))?;
            let lo: f64 = lo
                .trim()
                .parse()
                .map_err(|_| Error::MetricFile(format!("bad box bound '{lo}'")))?;
            let hi: f64 = hi
                .trim()
                .parse()
                .map_err(|_| Error::MetricFile(format!("bad box bound '{hi}'")))?;
            if hi < lo {
                return Err(Error::MetricFile(format!("empty box interval [{lo}, {hi}]")));
            }
            Ok((lo, hi))
        })
        .collect()
}
