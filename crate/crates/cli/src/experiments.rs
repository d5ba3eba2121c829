//! The seven experiment pipelines.

use std::fmt::Write as _;
use std::str::FromStr;

use finslab_core::conformal::{self, ConformalPair};
use finslab_core::curve::DiscreteCurve;
use finslab_core::geodesics;
use finslab_core::linalg;
use finslab_core::submanifold::{self, NormalField, SubmanifoldPatch};
use finslab_core::tensors;
use finslab_core::variational::{self, FocalPoint, VariationField};
use finslab_core::{registry, Error as CoreError, MetricDefinition, TangentSample};
use thiserror::Error;

use crate::config::{Config, ConfigError, Section};
use crate::report::Report;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("computation failed: {0}")]
    Compute(#[from] CoreError),
}

type HResult<T> = Result<T, HarnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Tensors,
    Geodesic,
    Lightcone,
    ConformalPregeodesic,
    Variation,
    Focal,
    FocalCorrespondence,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Tensors,
        Experiment::Geodesic,
        Experiment::Lightcone,
        Experiment::ConformalPregeodesic,
        Experiment::Variation,
        Experiment::Focal,
        Experiment::FocalCorrespondence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Tensors => "tensors",
            Experiment::Geodesic => "geodesic",
            Experiment::Lightcone => "lightcone",
            Experiment::ConformalPregeodesic => "conformal-pregeodesic",
            Experiment::Variation => "variation",
            Experiment::Focal => "focal",
            Experiment::FocalCorrespondence => "focal-correspondence",
        }
    }

    /// Tolerance of the headline assertion when neither config nor command
    /// line sets one.
    pub fn default_tol(self) -> f64 {
        match self {
            Experiment::Tensors => 1e-9,
            Experiment::Geodesic => 1e-8,
            Experiment::Lightcone => 1e-8,
            Experiment::ConformalPregeodesic => 1e-6,
            Experiment::Variation => 1e-6,
            Experiment::Focal => 1e-5,
            Experiment::FocalCorrespondence => 1e-4,
        }
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| ConfigError::Unknown {
            what: "experiment",
            name: s.to_string(),
        })
    }
}

/// Command-line overrides of the `[run]` section.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub step: Option<f64>,
    pub tol: Option<f64>,
}

/// Resolved run parameters.
#[derive(Debug, Clone, Copy)]
struct Run {
    seed: u64,
    step: f64,
    tol: f64,
}

fn resolve_run(cfg: &Config, exp: Experiment, opts: RunOptions) -> HResult<Run> {
    let section = cfg.section("run");
    let mut seed = 0;
    let mut step = 1e-3;
    let mut tol = exp.default_tol();
    if let Some(s) = section {
        if let Some(name) = s.get("experiment") {
            if name != exp.name() {
                return Err(s.invalid("experiment", name, format!("config is for '{name}', asked to run '{}'", exp.name())).into());
            }
        }
        if let Some(v) = s.get("seed") {
            seed = v.parse().map_err(|_| s.invalid("seed", v, "expected an unsigned integer"))?;
        }
        step = s.positive_or("step", step)?;
        tol = s.positive_or("tol", tol)?;
    }
    if let Some(v) = opts.seed {
        seed = v;
    }
    for (name, v) in [("--step", opts.step), ("--tol", opts.tol)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::Invalid {
                    section: "command line".into(),
                    key: name.into(),
                    value: v.to_string(),
                    reason: "must be positive".into(),
                }
                .into());
            }
        }
    }
    step = opts.step.unwrap_or(step);
    tol = opts.tol.unwrap_or(tol);
    Ok(Run { seed, step, tol })
}

/// Run one experiment from its configuration.
pub fn run_experiment(exp: Experiment, cfg: &Config, opts: RunOptions) -> HResult<Report> {
    let run = resolve_run(cfg, exp, opts)?;
    let report = match exp {
        Experiment::Tensors => tensors_experiment(cfg, run),
        Experiment::Geodesic => geodesic_experiment(cfg, run),
        Experiment::Lightcone => lightcone_experiment(cfg, run),
        Experiment::ConformalPregeodesic => pregeodesic_experiment(cfg, run),
        Experiment::Variation => variation_experiment(cfg, run),
        Experiment::Focal => focal_experiment(cfg, run),
        Experiment::FocalCorrespondence => correspondence_experiment(cfg, run),
    }?;
    Ok(report)
}

// ---------------------------------------------------------------- inputs

fn metric_from(cfg: &Config, section: &str, lambda: bool, dim_hint: Option<usize>) -> HResult<MetricDefinition> {
    let s = cfg.require(section)?;
    let sources = ["builtin", "file", "body"].iter().filter(|k| s.has(k)).count();
    if sources != 1 {
        return Err(s.invalid("builtin|file|body", "", "give exactly one metric source").into());
    }
    let m = if let Some(name) = s.get("builtin") {
        registry::get(name).ok_or_else(|| ConfigError::Unknown {
            what: "built-in metric",
            name: name.to_string(),
        })?
    } else if let Some(path) = s.get("file") {
        let full = cfg.resolve(path);
        let text = std::fs::read_to_string(&full).map_err(|source| ConfigError::Io {
            what: "metric file",
            path: full.clone(),
            source,
        })?;
        MetricDefinition::from_text(&text, section).map_err(|e| s.invalid("file", &full.display().to_string(), e.to_string()))?
    } else {
        let body = s.require("body")?;
        let dim = match (s.get("dim"), dim_hint) {
            (Some(d), _) => d.parse().map_err(|_| s.invalid("dim", d, "expected a positive integer"))?,
            (None, Some(d)) => d,
            (None, None) => return Err(s.require("dim").unwrap_err().into()),
        };
        let degree = match s.get("degree") {
            Some(d) => d.parse().map_err(|_| s.invalid("degree", d, "expected an integer"))?,
            None if lambda => 0,
            None => 2,
        };
        let domain: Vec<String> = if s.has("domain") { s.items("domain")? } else { Vec::new() };
        let domain: Vec<&str> = domain.iter().map(String::as_str).collect();
        MetricDefinition::parse(section, body, dim, degree, &domain).map_err(|e| s.invalid("body", body, e.to_string()))?
    };
    if let Some(d) = dim_hint {
        if m.dim != d {
            return Err(s.invalid("dim", &m.dim.to_string(), format!("dimension must be {d}")).into());
        }
    }
    if lambda && m.degree != 0 {
        return Err(s.invalid("degree", &m.degree.to_string(), "a conformal factor must be 0-homogeneous").into());
    }
    Ok(m)
}

fn vector(s: &Section, key: &str, dim: usize) -> HResult<Vec<f64>> {
    let v = s.list(key)?;
    if v.len() != dim {
        return Err(s.invalid(key, &format!("{v:?}"), format!("expected {dim} components")).into());
    }
    Ok(v)
}

/// Initial data of the geodesic: `x0`, `v0`, span, optionally projected onto
/// the lightcone of `target`.
struct GeodesicStart {
    x0: Vec<f64>,
    v0: Vec<f64>,
    span: f64,
}

fn geodesic_start(cfg: &Config, target: &MetricDefinition, defaults: Option<(&[f64], &[f64])>) -> HResult<GeodesicStart> {
    let s = cfg.require("geodesic")?;
    let dim = target.dim;
    let (x0, v0) = match defaults {
        Some((x, v)) if !s.has("x0") && !s.has("v0") => (x.to_vec(), v.to_vec()),
        _ => (vector(s, "x0", dim)?, vector(s, "v0", dim)?),
    };
    let span = s.f64("span")?;
    if !(span > 0.0) {
        return Err(s.invalid("span", &span.to_string(), "must be positive").into());
    }
    let v0 = match s.get("lightlike").unwrap_or("require") {
        "project" => {
            let start = TangentSample::new(x0.clone(), v0);
            let (w, _) = conformal::auto_transversal(target, &start)?;
            geodesics::project_to_lightcone(target, &start, &w)?.y
        }
        "require" => {
            let start = TangentSample::new(x0.clone(), v0.clone());
            if !geodesics::is_lightlike(target, &start)? {
                let l = target.value(&start)?;
                return Err(s.invalid("v0", &format!("{v0:?}"), format!("not lightlike (L = {l:e}); set lightlike = project")).into());
            }
            v0
        }
        "any" => v0,
        other => return Err(s.invalid("lightlike", other, "expected require, project or any").into()),
    };
    Ok(GeodesicStart { x0, v0, span })
}

enum Submanifold {
    Point(SubmanifoldPatch),
    WithNormal(SubmanifoldPatch, NormalField),
}

impl Submanifold {
    fn patch(&self) -> &SubmanifoldPatch {
        match self {
            Submanifold::Point(p) | Submanifold::WithNormal(p, _) => p,
        }
    }

    fn normal(&self) -> Option<&NormalField> {
        match self {
            Submanifold::Point(_) => None,
            Submanifold::WithNormal(_, n) => Some(n),
        }
    }

    /// Start point and velocity the submanifold prescribes, if any.
    fn start(&self) -> HResult<Option<(Vec<f64>, Vec<f64>)>> {
        match self {
            Submanifold::Point(_) => Ok(None),
            Submanifold::WithNormal(p, n) => Ok(Some((p.basepoint()?, n.value(&p.u0)?))),
        }
    }
}

fn submanifold_from(cfg: &Config, dim: usize, x0: Option<&[f64]>) -> HResult<Submanifold> {
    let s = cfg.require("submanifold")?;
    let kind = s.require("kind")?;
    match kind {
        "point" => {
            let p = match (s.has("point"), x0) {
                (true, _) | (false, None) => vector(s, "point", dim)?,
                (false, Some(x)) => x.to_vec(),
            };
            Ok(Submanifold::Point(SubmanifoldPatch::point(&p)))
        }
        "sphere-circle" => {
            if dim != 3 {
                return Err(s.invalid("kind", kind, "sphere circles live in the 3-dimensional static chart").into());
            }
            let time = s.f64_or("time", 0.0)?;
            let theta = s.f64("theta")?;
            let phi = s.f64("phi")?;
            let dir = s.list("direction")?;
            if dir.len() != 2 {
                return Err(s.invalid("direction", &format!("{dir:?}"), "expected (dθ, dφ)").into());
            }
            let rho = s.positive_or("rho", 1.0)?;
            let p0 = submanifold::sphere_point(theta, phi);
            let d0 = submanifold::sphere_direction(theta, phi, dir[0], dir[1]);
            let c = submanifold::sphere_circle(time, p0, d0, rho)?;
            Ok(Submanifold::WithNormal(c.patch, c.normal))
        }
        "patch" => {
            let params = s.usize_or("params", 1)?;
            let map = s.items("map")?;
            let normal = s.items("normal")?;
            let u0 = if params == 0 { Vec::new() } else { vector(s, "u0", params)? };
            let map_refs: Vec<&str> = map.iter().map(String::as_str).collect();
            let normal_refs: Vec<&str> = normal.iter().map(String::as_str).collect();
            let patch = SubmanifoldPatch::parse(&map_refs, params, u0).map_err(|e| s.invalid("map", &map.join("; "), e.to_string()))?;
            if patch.dim() != dim {
                return Err(s.invalid("map", &map.join("; "), format!("expected {dim} components")).into());
            }
            let normal = NormalField::parse(&normal_refs, params).map_err(|e| s.invalid("normal", &normal.join("; "), e.to_string()))?;
            Ok(Submanifold::WithNormal(patch, normal))
        }
        other => Err(s.invalid("kind", other, "expected point, sphere-circle or patch").into()),
    }
}

fn lambda_composite(m: &MetricDefinition, lam: &MetricDefinition, seed: u64) -> HResult<MetricDefinition> {
    Ok(conformal::scale_metric(m, lam, 16, seed)?.0)
}

fn max_norm_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(p, q)| linalg::norm(&linalg::sub(p, q))).fold(0.0, f64::max)
}

fn focal_listing(side: &str, points: &[FocalPoint], paired: &[(Option<f64>, f64)]) -> String {
    let mut out = String::new();
    for (i, p) in points.iter().enumerate() {
        let (other, err) = paired.get(i).copied().unwrap_or((None, f64::NAN));
        let other = other.map_or("none".to_string(), |v| format!("{v:?}"));
        let _ = writeln!(
            out,
            "side={side} parameter={:?} multiplicity={} paired_parameter={other} pairing_error={err:?}",
            p.parameter, p.multiplicity
        );
    }
    out
}

// ----------------------------------------------------------- experiments

fn tensors_experiment(cfg: &Config, run: Run) -> HResult<Report> {
    let m = metric_from(cfg, "metric", false, None)?;
    let s = cfg.section("tensors");
    let samples = s.map_or(Ok(200), |s| s.usize_or("samples", 200))?;
    let secondary = s.map_or(Ok(1e-10), |s| s.positive_or("homogeneity_tol", 1e-10))?;
    cfg.ensure_consumed()?;
    let mut report = Report::new(Experiment::Tensors.name(), run.seed, run.step);
    let vs = m.samples(samples, run.seed)?;
    let (mut value, mut homog, mut vert, mut cart, mut drift) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for v in &vs {
        let l = m.value(v)?;
        let g = tensors::fundamental_tensor(&m, v)?;
        value = value.max((g.pair(&v.y, &v.y) - l).abs() / l.abs().max(1.0));
        let g2 = tensors::fundamental_tensor(&m, &v.scaled(2.0))?;
        // g is 0-homogeneous for degree 2; in general g_{2v} = 2^{deg-2} g_v
        let factor = 2f64.powi(m.degree - 2);
        homog = homog.max((&g2.g - &g.g * factor).amax());
        let c = tensors::cartan_tensor(&m, v)?;
        vert = vert.max(c.contract(&v.y).amax());
        drift = drift.max(c.symmetrization_drift);
        let c2 = tensors::cartan_tensor(&m, &v.scaled(2.0))?;
        let cf = 2f64.powi(3 - m.degree);
        cart = cart.max(c2.c.iter().zip(&c.c).map(|(a, b)| (cf * a - b).abs()).fold(0.0, f64::max));
    }
    let hom = m.validate_homogeneity(samples.clamp(1, 50), run.seed)?;
    report.check("g_vv_minus_L", value, run.tol);
    report.check("g_2v_minus_g_v", homog, secondary);
    report.check("cartan_contracted_with_v", vert, secondary);
    report.check("cartan_homogeneity", cart, secondary);
    report.check("cartan_symmetry_drift", drift, secondary);
    report.check("metric_homogeneity", hom.max_relative_error, 1e-10);
    Ok(report)
}

fn geodesic_experiment(cfg: &Config, run: Run) -> HResult<Report> {
    let m = metric_from(cfg, "metric", false, None)?;
    let start = geodesic_start(cfg, &m, None)?;
    let s = cfg.require("geodesic")?;
    let convergence = s.bool_or("convergence", false)?;
    let slope_tol = s.positive_or("slope_tol", 0.3)?;
    cfg.ensure_consumed()?;
    let mut report = Report::new(Experiment::Geodesic.name(), run.seed, run.step);
    let c = geodesics::integrate_geodesic(&m, &start.x0, &start.v0, (0.0, start.span), run.step)?;
    let l0 = m.value(&c.node(0))?;
    let mut drift = 0.0f64;
    for v in c.nodes() {
        drift = drift.max((m.value(&v)? - l0).abs());
    }
    report.check("L_drift", drift, run.tol);
    if convergence {
        // self-convergence: differences of successive halvings shrink by 2^4
        let ends: Vec<Vec<f64>> = [4.0, 2.0, 1.0, 0.5]
            .iter()
            .map(|k| {
                geodesics::integrate_geodesic(&m, &start.x0, &start.v0, (0.0, start.span), k * run.step)
                    .map(|c| c.xs.last().cloned().unwrap_or_default())
            })
            .collect::<Result<_, _>>()?;
        let diffs: Vec<f64> = ends.windows(2).map(|w| linalg::norm(&linalg::sub(&w[0], &w[1]))).collect();
        let slope = (diffs[0] / diffs[1]).log2();
        let slope2 = (diffs[1] / diffs[2]).log2();
        report.check("rk4_order_deviation", (slope - 4.0).abs().max((slope2 - 4.0).abs()), slope_tol);
    }
    report.curves.push(("geodesic".into(), c.to_csv()));
    Ok(report)
}

fn lightcone_experiment(cfg: &Config, run: Run) -> HResult<Report> {
    let l1 = metric_from(cfg, "metric", false, None)?;
    let l2 = metric_from(cfg, "metric2", false, Some(l1.dim))?;
    let s = cfg.section("lightcone");
    let samples = s.map_or(Ok(200), |s| s.usize_or("samples", 200))?;
    let closed = match s.and_then(|s| s.get("closed_form").map(|v| (s, v))) {
        Some((s, src)) => Some(
            MetricDefinition::parse("closed_form", src, l1.dim, 0, &[]).map_err(|e| s.invalid("closed_form", src, e.to_string()))?,
        ),
        None => None,
    };
    let mu_tol = s.map_or(Ok(1e-8), |s| s.positive_or("mu_tol", 1e-8))?;
    let spread_tol = s.map_or(Ok(1e-9), |s| s.positive_or("spread_tol", 1e-9))?;
    cfg.ensure_consumed()?;
    let mut report = Report::new(Experiment::Lightcone.name(), run.seed, run.step);
    let pair = ConformalPair::new(l1.clone(), l2.clone(), samples, run.seed)?;
    let coincidence = conformal::lightcones_coincide(&pair)?;
    report.check_flag("coincidence_verdict", coincidence.verdict);
    report.check("cone_violation", coincidence.max_violation, run.tol);
    if coincidence.verdict {
        // off the cone: samples of both domains plus near-cone offsets;
        // on the cone: projected samples, where μ comes from the tensors
        let mut off_cone: Vec<TangentSample> = l1.samples(samples, run.seed.wrapping_add(2))?;
        off_cone.retain(|v| l2.admissible(v));
        let mut on_cone = Vec::new();
        for (k, v) in l1.samples(samples / 5, run.seed.wrapping_add(3))?.into_iter().enumerate() {
            let (w, _) = conformal::auto_transversal(&l1, &v)?;
            let Ok(p) = geodesics::project_to_lightcone(&l1, &v, &w) else {
                continue;
            };
            let eps = 10f64.powi(-2 - (k % 5) as i32) * p.y_norm();
            for sign in [1.0, -1.0] {
                let q = p.with_y(linalg::axpy(sign * eps, &w, &p.y));
                if l1.admissible(&q) && l2.admissible(&q) {
                    off_cone.push(q);
                    break;
                }
            }
            if clearly_inside(&l2, &p) {
                on_cone.push(p);
            }
        }
        let mut mu_err = 0.0f64;
        for v in &off_cone {
            let mu = conformal::anisotropy_factor(&pair, v, None)?.mu;
            if let Some(c) = &closed {
                mu_err = mu_err.max((mu - c.value(v)?).abs());
            }
        }
        let n = l1.dim;
        let mut spread = 0.0f64;
        for v in &on_cone {
            let mu = conformal::tensor_anisotropy_factor(&pair, v, None)?.mu;
            if let Some(c) = &closed {
                mu_err = mu_err.max((mu - c.value(v)?).abs());
            }
            for i in 0..n {
                let mut w = vec![0.3; n];
                w[i] = 1.0;
                if let Ok(f) = conformal::tensor_anisotropy_factor(&pair, v, Some(&w)) {
                    spread = spread.max((f.mu - mu).abs());
                }
            }
        }
        if closed.is_some() {
            report.check("mu_vs_closed_form", mu_err, mu_tol);
        }
        // on-cone points are absent when the cone is the boundary of the
        // domain of the second metric
        if !on_cone.is_empty() {
            report.check("mu_transversal_spread", spread, spread_tol);
        }
    }
    Ok(report)
}

/// Admissible with every domain predicate above `1e-6·max(1, |y|)`, so the
/// tensors are not evaluated on a boundary that happens to round inside.
fn clearly_inside(m: &MetricDefinition, v: &TangentSample) -> bool {
    let margin = 1e-6 * v.y_norm().max(1.0);
    m.admissible(v) && m.domain.iter().all(|p| p.eval_real(&v.x, &v.y, &[]).is_ok_and(|d| d > margin))
}

fn inverse_factor(lam: &MetricDefinition) -> HResult<MetricDefinition> {
    let domain: Vec<String> = lam.domain.iter().map(|d| d.to_string()).collect();
    let domain: Vec<&str> = domain.iter().map(String::as_str).collect();
    Ok(MetricDefinition::parse("inverse_factor", &format!("1/({})", lam.body), lam.dim, 0, &domain)?)
}

fn pregeodesic_experiment(cfg: &Config, run: Run) -> HResult<Report> {
    let m = metric_from(cfg, "metric", false, None)?;
    let lam = metric_from(cfg, "lambda", true, Some(m.dim))?;
    let scaled = lambda_composite(&m, &lam, run.seed)?;
    let start = geodesic_start(cfg, &scaled, None)?;
    let s = cfg.section("pregeodesic");
    let round_tol = s.map_or(Ok(1e-8), |s| s.positive_or("round_trip_tol", 1e-8))?;
    cfg.ensure_consumed()?;
    let mut report = Report::new(Experiment::ConformalPregeodesic.name(), run.seed, run.step);
    let gamma = geodesics::integrate_geodesic(&scaled, &start.x0, &start.v0, (0.0, start.span), run.step)?;
    report.check("lambdaL_pregeodesic_residual", geodesics::pregeodesic_residual(&gamma, &m, Some(&lam))?, run.tol);
    let (rep, tilde) = geodesics::reparametrize_conformal(&gamma, &lam, 0.0, None)?;
    report.check("reparametrized_L_geodesic_residual", geodesics::pregeodesic_residual(&tilde, &m, None)?, run.tol);
    report.check_flag("phi_monotone", rep.is_monotone());
    let inv = inverse_factor(&lam)?;
    let (back, round) = geodesics::reparametrize_conformal(&tilde, &inv, 0.0, None)?;
    let mut param = 0.0f64;
    for i in 0..gamma.len() {
        let t = gamma.time(i);
        param = param.max((rep.phi_at(back.phi_at(t)) - t).abs());
    }
    report.check("round_trip_parameter", param, round_tol);
    report.check("round_trip_position", max_norm_diff(&round.xs, &gamma.xs), round_tol);
    report.curves.push(("gamma".into(), gamma.to_csv()));
    report.curves.push(("gamma_tilde".into(), tilde.to_csv()));
    Ok(report)
}

fn shifted(c: &DiscreteCurve, w: &VariationField, s: f64) -> DiscreteCurve {
    let mut out = c.clone();
    for i in 0..c.len() {
        out.xs[i] = linalg::axpy(s, &w.w[i], &c.xs[i]);
        out.ys[i] = linalg::axpy(s, &w.wdot[i], &c.ys[i]);
    }
    out
}

/// Smooth probe fields `W_k` with components `a·sin(ω t + δ)`.
fn probe_field(c: &DiscreteCurve, k: usize, amplitude: f64) -> VariationField {
    let n = c.dim();
    VariationField::from_fn(c, |t| {
        let mut w = vec![0.0; n];
        let mut wd = vec![0.0; n];
        for i in 0..n {
            let om = 1.0 + k as f64 + 0.5 * i as f64;
            let ph = 0.3 * (i + k) as f64;
            w[i] = amplitude * (om * t + ph).sin();
            wd[i] = amplitude * om * (om * t + ph).cos();
        }
        (w, wd)
    })
}

fn variation_experiment(cfg: &Config, run: Run) -> HResult<Report> {
    let m = metric_from(cfg, "metric", false, None)?;
    let lam = match cfg.section("lambda") {
        Some(_) => Some(metric_from(cfg, "lambda", true, Some(m.dim))?),
        None => None,
    };
    let target = match &lam {
        Some(l) => lambda_composite(&m, l, run.seed)?,
        None => m.clone(),
    };
    let start = geodesic_start(cfg, &target, None)?;
    let s = cfg.section("variation");
    let count = s.map_or(Ok(3), |s| s.usize_or("fields", 3))?;
    let amplitude = s.map_or(Ok(0.05), |s| s.positive_or("amplitude", 0.05))?;
    let s1 = s.map_or(Ok(1e-4), |s| s.positive_or("first_step", 1e-4))?;
    let s2 = s.map_or(Ok(1e-3), |s| s.positive_or("second_step", 1e-3))?;
    let second_tol = s.map_or(Ok(1e-5), |s| s.positive_or("second_tol", 1e-5))?;
    cfg.ensure_consumed()?;
    let mut report = Report::new(Experiment::Variation.name(), run.seed, run.step);
    let c = geodesics::integrate_geodesic(&target, &start.x0, &start.v0, (0.0, start.span), run.step)?;
    let lam_ref = lam.as_ref();
    let mut fields = Vec::new();
    for k in 0..count {
        let w = probe_field(&c, k, amplitude);
        let e = |s: f64| geodesics::energy(&shifted(&c, &w, s), &m, lam_ref);
        let d1 = |s: f64| -> Result<f64, CoreError> { Ok((e(s)? - e(-s)?) / (2.0 * s)) };
        let d2 = |s: f64| -> Result<f64, CoreError> { Ok((e(s)? - 2.0 * e(0.0)? + e(-s)?) / (s * s)) };
        let fd1 = (4.0 * d1(0.5 * s1)? - d1(s1)?) / 3.0;
        let fd2 = (4.0 * d2(0.5 * s2)? - d2(s2)?) / 3.0;
        let first = variational::first_variation(&c, &w, lam_ref, &m)?;
        let second = variational::second_variation(&c, &w, lam_ref, &m)?;
        report.check(format!("first_variation_{k}"), (first - fd1).abs(), run.tol);
        report.check(format!("second_variation_{k}"), (second - fd2).abs(), second_tol);
        fields.push(w);
    }
    if fields.len() >= 2 {
        let ab = variational::index_form(&c, &fields[0], &fields[1], None, None, lam_ref, &m)?;
        let ba = variational::index_form(&c, &fields[1], &fields[0], None, None, lam_ref, &m)?;
        report.check("index_form_symmetry", (ab - ba).abs(), 1e-9 * (1.0 + ab.abs()));
    }
    report.curves.push(("gamma".into(), c.to_csv()));
    Ok(report)
}

/// Largest `|g(J′, γ̇)|` over the basis fields other than the one with
/// `g(J′(a), γ̇(a)) = 1`.
fn kernel_characterization(search: &variational::FocalSearch, c: &DiscreteCurve, m: &MetricDefinition) -> HResult<f64> {
    let skip = search.tangent_count + 1;
    let geo = variational::geometry_along(c, m, None)?;
    let mut worst = 0.0f64;
    for (k, field) in search.basis.iter().enumerate() {
        if k == skip {
            continue;
        }
        for (i, g) in geo.iter().enumerate() {
            worst = worst.max(linalg::pair(&g.g, &field.jp[i], &c.ys[i]).abs());
        }
    }
    Ok(worst)
}

fn expected_points(cfg: &Config) -> HResult<Option<(Vec<f64>, Vec<f64>)>> {
    let Some(s) = cfg.section("expect") else {
        return Ok(None);
    };
    let params = if s.require("parameters")?.trim().is_empty() { Vec::new() } else { s.list("parameters")? };
    let mults = match s.list_opt("multiplicities")? {
        Some(m) => m,
        None => vec![1.0; params.len()],
    };
    if mults.len() != params.len() {
        return Err(s.invalid("multiplicities", &format!("{mults:?}"), "one per expected parameter").into());
    }
    Ok(Some((params, mults)))
}

fn focal_experiment(cfg: &Config, run: Run) -> HResult<Report> {
    let m = metric_from(cfg, "metric", false, None)?;
    let x0_hint = cfg.section("geodesic").and_then(|s| s.list("x0").ok());
    let sub = submanifold_from(cfg, m.dim, x0_hint.as_deref())?;
    let prescribed = sub.start()?;
    let start = geodesic_start(cfg, &m, prescribed.as_ref().map(|(x, v)| (x.as_slice(), v.as_slice())))?;
    let expect = expected_points(cfg)?;
    cfg.ensure_consumed()?;
    let mut report = Report::new(Experiment::Focal.name(), run.seed, run.step);
    let c = geodesics::integrate_geodesic(&m, &start.x0, &start.v0, (0.0, start.span), run.step)?;
    let search = variational::find_focal_points(&c, &m, sub.patch(), sub.normal())?;
    report.check("kernel_characterization", kernel_characterization(&search, &c, &m)?, 1e-7);
    if let Some((params, mults)) = expect {
        report.check(
            "focal_count_mismatch",
            (search.points.len() as f64 - params.len() as f64).abs(),
            0.0,
        );
        for (k, (want, mult)) in params.iter().zip(&mults).enumerate() {
            let nearest = search
                .points
                .iter()
                .min_by(|a, b| (a.parameter - want).abs().total_cmp(&(b.parameter - want).abs()));
            let (err, got) = nearest.map_or((f64::INFINITY, 0), |p| ((p.parameter - want).abs(), p.multiplicity));
            report.check(format!("focal_{k}_parameter_error"), err, run.tol);
            report.check(format!("focal_{k}_multiplicity_mismatch"), (got as f64 - mult).abs(), 0.0);
        }
    }
    report.attachments.push(("focal.txt".into(), focal_listing("L", &search.points, &[])));
    report.curves.push(("gamma".into(), c.to_csv()));
    Ok(report)
}

fn correspondence_experiment(cfg: &Config, run: Run) -> HResult<Report> {
    let m = metric_from(cfg, "metric", false, None)?;
    let lam = metric_from(cfg, "lambda", true, Some(m.dim))?;
    let scaled = lambda_composite(&m, &lam, run.seed)?;
    let x0_hint = cfg.section("geodesic").and_then(|s| s.list("x0").ok());
    let sub = submanifold_from(cfg, m.dim, x0_hint.as_deref())?;
    let prescribed = sub.start()?;
    let start = geodesic_start(cfg, &scaled, prescribed.as_ref().map(|(x, v)| (x.as_slice(), v.as_slice())))?;
    let s = cfg.section("correspondence");
    let transfer = s.map_or(Ok(true), |s| s.bool_or("transfer", true))?;
    let expect = expected_points(cfg)?;
    cfg.ensure_consumed()?;
    let mut report = Report::new(Experiment::FocalCorrespondence.name(), run.seed, run.step);
    let gamma = geodesics::integrate_geodesic(&scaled, &start.x0, &start.v0, (0.0, start.span), run.step)?;
    let corr = variational::verify_focal_correspondence(&gamma, sub.patch(), sub.normal(), &lam, &m, run.tol)?;
    report.check("focal_count_mismatch", (corr.l_side.len() as f64 - corr.scaled_side.len() as f64).abs(), 0.0);
    let mut mult_mismatch = 0usize;
    for (k, p) in corr.pairs.iter().enumerate() {
        report.check(format!("pairing_{k}_error"), p.error, run.tol);
        mult_mismatch += usize::from(p.l_multiplicity != p.scaled_multiplicity);
    }
    report.check("multiplicity_mismatch", mult_mismatch as f64, 0.0);
    if let Some((params, _)) = expect {
        report.check("expected_count_mismatch", (corr.l_side.len() as f64 - params.len() as f64).abs(), 0.0);
        for (k, want) in params.iter().enumerate() {
            let err = corr.l_side.get(k).map_or(f64::INFINITY, |p| (p.parameter - want).abs());
            report.check(format!("l_side_{k}_parameter_error"), err, 1e-5);
        }
    }
    let l_pairs: Vec<(Option<f64>, f64)> = corr.pairs.iter().map(|p| (p.scaled_parameter, p.error)).collect();
    let mut listing = focal_listing("L", &corr.l_side, &l_pairs);
    let reverse: Vec<(Option<f64>, f64)> = corr
        .scaled_side
        .iter()
        .map(|q| {
            let back = corr.reparametrization.inverse(q.parameter);
            let nearest = corr
                .l_side
                .iter()
                .min_by(|a, b| (a.parameter - back).abs().total_cmp(&(b.parameter - back).abs()));
            nearest.map_or((None, f64::NAN), |p| (Some(p.parameter), (corr.reparametrization.phi_at(p.parameter) - q.parameter).abs()))
        })
        .collect();
    listing.push_str(&focal_listing("lambdaL", &corr.scaled_side, &reverse));
    report.attachments.push(("focal.txt".into(), listing));
    if transfer {
        if let Some(first) = corr.l_side.first() {
            transfer_checks(&mut report, &m, &lam, &scaled, &start, &sub, &corr, first.parameter, run)?;
        }
    }
    report.curves.push(("gamma".into(), gamma.to_csv()));
    report.curves.push(("gamma_tilde".into(), corr.tilde.to_csv()));
    Ok(report)
}

/// Re-integrate `γ` up to the first focal parameter, take the kernel field
/// of the `L` side there, transfer it and test the `λL` Jacobi problem.
#[allow(clippy::too_many_arguments)]
fn transfer_checks(
    report: &mut Report,
    m: &MetricDefinition,
    lam: &MetricDefinition,
    scaled: &MetricDefinition,
    start: &GeodesicStart,
    sub: &Submanifold,
    corr: &variational::CorrespondenceReport,
    mu: f64,
    run: Run,
) -> HResult<()> {
    let b = corr.reparametrization.phi_at(mu);
    let gamma = geodesics::integrate_geodesic(scaled, &start.x0, &start.v0, (0.0, b), run.step)?;
    let (rep, tilde) = geodesics::reparametrize_conformal(&gamma, lam, 0.0, None)?;
    let search = variational::find_focal_points(&tilde, m, sub.patch(), sub.normal())?;
    let jt = search.combine(&search.kernel_coefficients(tilde.t_end()));
    let tr = variational::transfer_jacobi(&jt, &gamma, &rep, lam, m)?;
    report.check(
        "transfer_L_jacobi_residual",
        variational::jacobi_equation_residual(&tilde, &jt.j, &jt.jp, None, m)?,
        1e-6,
    );
    report.check(
        "transfer_reparametrized_jacobi_residual",
        variational::jacobi_equation_residual(&gamma, &tr.j, &tr.jp, Some(lam), m)?,
        1e-6,
    );
    report.check(
        "transfer_scaled_jacobi_residual",
        variational::scaled_jacobi_residual(&gamma, &tr.jhat, &tr.jhat_prime, lam, m)?,
        1e-5,
    );
    if let Some(normal) = sub.normal() {
        report.check(
            "transfer_boundary_residual",
            variational::scaled_boundary_residual(&gamma, &tr.jhat[0], &tr.jhat_prime[0], sub.patch(), normal, lam, m)?,
            1e-6,
        );
    }
    let ends = tr.h[0].abs().max(tr.h.last().map_or(0.0, |h| h.abs()));
    report.check("transfer_h_endpoints", ends, 0.0);
    let scale = tr.jhat.iter().map(|v| linalg::norm(v)).fold(0.0, f64::max);
    let end = tr.jhat.last().map_or(f64::NAN, |v| linalg::norm(v));
    report.check("transfer_vanishes_at_focal_point", end / scale.max(f64::MIN_POSITIVE), 1e-6);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("nope".parse::<Experiment>().is_err());
    }

    #[test]
    fn identity_factor_pairs_identically() {
        let cfg = Config::parse(
            "[metric]\nbuiltin = einstein_static\n[lambda]\nbody = 1\n[geodesic]\nx0 = 0, pi/2, 0\nv0 = 1, 0, 1\nspan = 4\n\
             [submanifold]\nkind = point\n",
        )
        .unwrap();
        let r = run_experiment(Experiment::FocalCorrespondence, &cfg, RunOptions::default()).unwrap();
        assert!(r.passed(), "{}", r.to_records());
        let focal = &r.attachments[0].1;
        let field = |line: &str, key: &str| -> f64 {
            let v = line.split(' ').find_map(|kv| kv.strip_prefix(key)).unwrap();
            v.parse().unwrap()
        };
        assert_eq!(focal.lines().count(), 2, "{focal}");
        for line in focal.lines() {
            let p = field(line, "parameter=");
            let q = field(line, "paired_parameter=");
            assert!((p - std::f64::consts::PI).abs() < 1e-6 && (p - q).abs() < 1e-10, "{line}");
        }
    }

    #[test]
    fn wrong_experiment_in_run_section() {
        let cfg = Config::parse("[run]\nexperiment = focal\n[metric]\nbuiltin = minkowski3\n").unwrap();
        let err = run_experiment(Experiment::Tensors, &cfg, RunOptions::default()).unwrap_err();
        assert!(matches!(err, HarnessError::Config(_)));
    }

    #[test]
    fn non_lightlike_start_is_a_config_error() {
        let cfg = Config::parse("[metric]\nbuiltin = minkowski3\n[geodesic]\nx0 = 0,0,0\nv0 = 1,0,0\nspan = 1\n").unwrap();
        let err = run_experiment(Experiment::Geodesic, &cfg, RunOptions::default()).unwrap_err();
        assert!(matches!(err, HarnessError::Config(ConfigError::Invalid { .. })), "{err}");
    }
}
