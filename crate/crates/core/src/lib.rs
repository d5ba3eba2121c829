//! Numerical engine for pseudo-Finsler geometry.
//!
//! Metrics are scalar expressions `L(x, y)` evaluated over truncated Taylor
//! jets, so every tensor (fundamental tensor, Cartan tensor, spray, Chern
//! Christoffel symbols, curvature) comes from exact derivatives. On top of
//! that sit lightlike geodesic integration, anisotropic conformal changes
//! `L ↦ λL`, Jacobi fields, second fundamental forms and focal points.

// Index loops mirror the tensor notation; `!(a > b)` is used on purpose so
// NaN takes the rejecting branch.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod batch;
pub mod conformal;
pub mod connection;
pub mod curve;
pub mod error;
pub mod expr;
pub mod geodesics;
pub mod jets;
pub mod linalg;
pub mod metric;
pub mod registry;
pub mod submanifold;
pub mod tensors;
pub mod variational;

pub use error::{Error, Result};
pub use metric::{MetricDefinition, TangentSample};
