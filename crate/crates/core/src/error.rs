use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("jet order {0} outside the supported range 2..=4")]
    OrderOutOfRange(usize),

    #[error("derivative of degree {requested} requested from a jet of order {order}")]
    DerivativeOrder { requested: usize, order: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("tangent sample is not admissible: {0}")]
    Inadmissible(String),

    #[error("metric is singular: |det g| = {det:e} at scale {scale:e}")]
    SingularMetric { det: f64, scale: f64 },

    #[error("no admissible sample found after {attempts} attempts")]
    ThinDomain { attempts: usize },

    #[error("metric file: {0}")]
    MetricFile(String),

    #[error("trajectory left the domain at t = {t}")]
    DomainExit { t: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (|L| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("direction is not transversal to the lightcone: |g_v(v, w)| = {pairing:e}")]
    TransversalityFailure { pairing: f64 },

    #[error("curve is not lightlike: max |L| = {max_abs_l:e}")]
    NotLightlike { max_abs_l: f64 },

    #[error("field sampled on {found} nodes, curve has {expected}")]
    GridMismatch { expected: usize, found: usize },

    #[error("reparametrization left the parameter range; reachable sub-interval [{start}, {end}]")]
    ParameterRange { start: f64, end: f64 },

    #[error("conformal factor is not positive: λ = {value} at a sampled vector")]
    PositivityFailure { value: f64 },

    #[error("no transversal direction: max |g_v(v, w)| = {best:e}")]
    NoTransversalW { best: f64 },

    #[error("lightcone of {metric} is empty on the sampled component")]
    LightconeEmpty { metric: String },

    #[error("metric restricted to the submanifold is degenerate (|det| = {det:e})")]
    DegenerateRestriction { det: f64 },

    #[error("normal vector is not g_N-orthogonal to the submanifold (max pairing {pairing:e})")]
    NonNormal { pairing: f64 },

    #[error("{0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
