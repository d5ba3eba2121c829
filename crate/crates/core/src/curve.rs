//! Curves sampled on a uniform grid, with cubic Hermite dense output and the
//! quadrature / differencing rules used along them.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metric::TangentSample;

/// Curve on the uniform grid `t_i = t0 + i·h`, `i = 0..=N`.
///
/// `accs` holds `ẍ` at the nodes so that velocities can be interpolated to
/// the same order as positions.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    pub t0: f64,
    pub h: f64,
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
    pub accs: Vec<Vec<f64>>,
}

/// Number of steps and effective step covering `span` with steps of at
/// most `h`.
pub fn uniform_steps(span: f64, h: f64) -> Result<(usize, f64)> {
    if !(h > 0.0) || !(span > 0.0) || !span.is_finite() {
        return Err(Error::ParameterRange { start: 0.0, end: span });
    }
    let n = ((span / h) - 1e-9).ceil().max(1.0) as usize;
    Ok((n, span / n as f64))
}

/// Cubic Hermite basis on `[0, 1]`: value at `s` of the interpolant with
/// endpoint values `p0, p1` and endpoint derivatives `m0, m1` (already
/// multiplied by the interval length).
fn hermite(p0: f64, m0: f64, p1: f64, m1: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * m1
}

/// Derivative in `s` of [`hermite`].
fn hermite_ds(p0: f64, m0: f64, p1: f64, m1: f64, s: f64) -> f64 {
    let s2 = s * s;
    (6.0 * s2 - 6.0 * s) * p0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * p1 + (3.0 * s2 - 2.0 * s) * m1
}

/// Hermite interpolation of vector data `(values, slopes)` on a uniform grid.
pub fn hermite_eval(t0: f64, h: f64, values: &[Vec<f64>], slopes: &[Vec<f64>], t: f64) -> Vec<f64> {
    let (i, s) = locate(t0, h, values.len(), t);
    (0..values[i].len())
        .map(|k| hermite(values[i][k], h * slopes[i][k], values[i + 1][k], h * slopes[i + 1][k], s))
        .collect()
}

/// Time derivative of [`hermite_eval`].
pub fn hermite_derivative(t0: f64, h: f64, values: &[Vec<f64>], slopes: &[Vec<f64>], t: f64) -> Vec<f64> {
    let (i, s) = locate(t0, h, values.len(), t);
    (0..values[i].len())
        .map(|k| hermite_ds(values[i][k], h * slopes[i][k], values[i + 1][k], h * slopes[i + 1][k], s) / h)
        .collect()
}

/// Scalar Hermite interpolation.
pub fn hermite_scalar(t0: f64, h: f64, values: &[f64], slopes: &[f64], t: f64) -> f64 {
    let (i, s) = locate(t0, h, values.len(), t);
    hermite(values[i], h * slopes[i], values[i + 1], h * slopes[i + 1], s)
}

/// Interval index and local coordinate; clamps to the grid.
fn locate(t0: f64, h: f64, nodes: usize, t: f64) -> (usize, f64) {
    let last = nodes - 2;
    let r = (t - t0) / h;
    let i = (r.floor().max(0.0) as usize).min(last);
    (i, (r - i as f64).clamp(0.0, 1.0))
}

impl DiscreteCurve {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.xs.first().map_or(0, Vec::len)
    }

    pub fn intervals(&self) -> usize {
        self.len() - 1
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.h
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.intervals())
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn node(&self, i: usize) -> TangentSample {
        TangentSample::new(self.xs[i].clone(), self.ys[i].clone())
    }

    pub fn nodes(&self) -> Vec<TangentSample> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        hermite_eval(self.t0, self.h, &self.xs, &self.ys, t)
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        hermite_eval(self.t0, self.h, &self.ys, &self.accs, t)
    }

    pub fn acceleration(&self, t: f64) -> Vec<f64> {
        hermite_derivative(self.t0, self.h, &self.ys, &self.accs, t)
    }

    /// `(γ(t), γ̇(t))` from dense output.
    pub fn sample(&self, t: f64) -> TangentSample {
        TangentSample::new(self.position(t), self.velocity(t))
    }

    /// CSV dump: header `t,x0..,y0..`, one row per node, shortest
    /// round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("t");
        for i in 0..n {
            let _ = write!(out, ",x{i}");
        }
        for i in 0..n {
            let _ = write!(out, ",y{i}");
        }
        out.push('\n');
        for i in 0..self.len() {
            let _ = write!(out, "{:?}", self.time(i));
            for c in self.xs[i].iter().chain(&self.ys[i]) {
                let _ = write!(out, ",{c:?}");
            }
            out.push('\n');
        }
        out
    }
}

/// Composite Simpson rule on a uniform grid; an odd interval count closes
/// with Simpson's 3/8 rule on the last three intervals.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (values[0] + values[1]),
        2 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        3 => 3.0 * h / 8.0 * (values[0] + 3.0 * values[1] + 3.0 * values[2] + values[3]),
        _ => {
            let even = if n.is_multiple_of(2) { n } else { n - 3 };
            let mut s = values[0] + values[even];
            for (i, v) in values.iter().enumerate().take(even).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = h / 3.0 * s;
            if even < n {
                let v = &values[even..];
                total += 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
            }
            total
        }
    }
}

/// Running integral `∫_{t0}^{t_i} f` at every node, fourth order: each
/// interval uses the cubic through its four nearest nodes.
pub fn cumulative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len().saturating_sub(1);
    let mut out = vec![0.0; n + 1];
    if n < 3 {
        for i in 0..n {
            out[i + 1] = out[i] + 0.5 * h * (values[i] + values[i + 1]);
        }
        return out;
    }
    let f = values;
    for i in 0..n {
        let piece = if i == 0 {
            h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if i == n - 1 {
            h / 24.0 * (f[n - 3] - 5.0 * f[n - 2] + 19.0 * f[n - 1] + 9.0 * f[n])
        } else {
            h / 24.0 * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
        };
        out[i + 1] = out[i] + piece;
    }
    out
}

/// Fourth-order finite-difference derivative of nodal data (five-point
/// stencils, one-sided near the ends). Needs at least five nodes.
pub fn differentiate(values: &[f64], h: f64) -> Result<Vec<f64>> {
    let len = values.len();
    if len < 5 {
        return Err(Error::GridMismatch { expected: 5, found: len });
    }
    let f = values;
    let n = len - 1;
    let d = |i: usize| -> f64 {
        if i == 0 {
            (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
        } else if i == 1 {
            (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
        } else if i == n - 1 {
            (3.0 * f[n] + 10.0 * f[n - 1] - 18.0 * f[n - 2] + 6.0 * f[n - 3] - f[n - 4]) / (12.0 * h)
        } else if i == n {
            (25.0 * f[n] - 48.0 * f[n - 1] + 36.0 * f[n - 2] - 16.0 * f[n - 3] + 3.0 * f[n - 4]) / (12.0 * h)
        } else {
            (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h)
        }
    };
    Ok((0..len).map(d).collect())
}

/// Componentwise [`differentiate`] of a vector field sampled at nodes.
pub fn differentiate_field(field: &[Vec<f64>], h: f64) -> Result<Vec<Vec<f64>>> {
    let n = field.first().map_or(0, Vec::len);
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|k| differentiate(&field.iter().map(|v| v[k]).collect::<Vec<_>>(), h))
        .collect::<Result<_>>()?;
    Ok((0..field.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
}
