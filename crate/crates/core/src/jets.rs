//! Truncated multivariate Taylor series ("jets") up to total order 4.
//!
//! A [`Jet`] stores the Taylor coefficients `f^(α)(p) / α!` of a scalar
//! function around a point `p`, for every multi-index `α` of total degree at
//! most the jet's order. Arithmetic and the elementary functions are exact at
//! the truncation order, so mixed partials extracted from a jet carry no
//! discretisation error.
//!
//! Coefficients are laid out in graded order (all monomials of degree 0, then
//! degree 1, ...), which makes a jet of order `k - 1` a prefix of a jet of
//! order `k` over the same variables. Differentiation therefore lowers the
//! order by one without any re-indexing of the remaining table.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::metric::TangentSample;

/// Highest truncation order supported by the engine.
pub const MAX_ORDER: usize = 4;

/// Monomial bookkeeping for a fixed number of variables, shared by every jet
/// over those variables.
pub struct JetSpace {
    vars: usize,
    monomials: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// `count[k]`: number of monomials of degree `<= k`.
    count: [usize; MAX_ORDER + 1],
    /// Coefficient convolution triples `(a, b, c)`, sorted by `deg(c)`.
    products: Vec<(u32, u32, u32)>,
    /// `product_len[k]`: number of triples with `deg(c) <= k`.
    product_len: [usize; MAX_ORDER + 1],
    /// `raise[v][i]`: index of monomial `i + e_v` (valid for `deg(i) < MAX_ORDER`).
    raise: Vec<Vec<u32>>,
    factorial: Vec<f64>,
}

impl JetSpace {
    fn build(vars: usize) -> JetSpace {
        let mut monomials: Vec<Vec<u8>> = vec![vec![0; vars]];
        let mut count = [0usize; MAX_ORDER + 1];
        count[0] = 1;
        let mut previous: Vec<Vec<u8>> = vec![vec![0; vars]];
        for degree in 1..=MAX_ORDER {
            // Monomials of degree d are obtained from degree d-1 by bumping a
            // variable at or after the last nonzero position; this enumerates
            // each one exactly once in lexicographic order.
            let mut next = Vec::new();
            for m in &previous {
                let last = m.iter().rposition(|&e| e > 0).unwrap_or(0);
                for v in last..vars {
                    let mut bumped = m.clone();
                    bumped[v] += 1;
                    next.push(bumped);
                }
            }
            monomials.extend(next.iter().cloned());
            count[degree] = monomials.len();
            previous = next;
        }
        let index: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();

        let degree_of = |m: &[u8]| m.iter().map(|&e| e as usize).sum::<usize>();
        let mut products = Vec::new();
        for (a, ma) in monomials.iter().enumerate() {
            let da = degree_of(ma);
            for (b, mb) in monomials.iter().enumerate() {
                if da + degree_of(mb) > MAX_ORDER {
                    continue;
                }
                let sum: Vec<u8> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                let c = index[&sum];
                products.push((a as u32, b as u32, c as u32));
            }
        }
        products.sort_by_key(|&(_, _, c)| (degree_of(&monomials[c as usize]), c));
        let mut product_len = [0usize; MAX_ORDER + 1];
        for (k, len) in product_len.iter_mut().enumerate() {
            *len = products
                .iter()
                .take_while(|&&(_, _, c)| degree_of(&monomials[c as usize]) <= k)
                .count();
        }

        let raise = (0..vars)
            .map(|v| {
                monomials
                    .iter()
                    .map(|m| {
                        if degree_of(m) >= MAX_ORDER {
                            u32::MAX
                        } else {
                            let mut up = m.clone();
                            up[v] += 1;
                            index[&up] as u32
                        }
                    })
                    .collect()
            })
            .collect();

        let factorial = (0..=MAX_ORDER)
            .scan(1.0, |acc, k| {
                if k > 0 {
                    *acc *= k as f64;
                }
                Some(*acc)
            })
            .collect();

        JetSpace {
            vars,
            monomials,
            index,
            count,
            products,
            product_len,
            raise,
            factorial,
        }
    }

    /// Shared space for `vars` variables. Spaces are built once and live for
    /// the rest of the process.
    pub fn get(vars: usize) -> &'static JetSpace {
        static SPACES: OnceLock<Mutex<HashMap<usize, &'static JetSpace>>> = OnceLock::new();
        let mut cache = SPACES
            .get_or_init(|| Mutex::new(HashMap::new()))
            .lock()
            .unwrap_or_else(|poisoned| poisoned.into_inner());
        cache
            .entry(vars)
            .or_insert_with(|| Box::leak(Box::new(JetSpace::build(vars))))
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    /// Number of stored coefficients for a jet of the given order.
    pub fn len(&self, order: usize) -> usize {
        self.count[order]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn monomial(&self, i: usize) -> &[u8] {
        &self.monomials[i]
    }

    fn position(&self, multi_index: &[u8]) -> Option<usize> {
        self.index.get(multi_index).copied()
    }
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetSpace")
            .field("vars", &self.vars)
            .field("monomials", &self.monomials.len())
            .finish()
    }
}

/// Truncated Taylor expansion of a scalar in `space.vars()` variables.
#[derive(Clone)]
pub struct Jet {
    space: &'static JetSpace,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("vars", &self.space.vars)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.space.vars == other.space.vars && self.order == other.order && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn constant(space: &'static JetSpace, order: usize, value: f64) -> Jet {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut coeffs = vec![0.0; space.len(order)];
        coeffs[0] = value;
        Jet { space, order, coeffs }
    }

    /// The coordinate function of variable `var`, expanded around `value`.
    pub fn variable(space: &'static JetSpace, order: usize, var: usize, value: f64) -> Jet {
        assert!(var < space.vars, "variable {var} out of range");
        let mut jet = Jet::constant(space, order, value);
        if order >= 1 {
            jet.coeffs[1 + var] = 1.0;
        }
        jet
    }

    pub fn space(&self) -> &'static JetSpace {
        self.space
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Raw Taylor coefficients in graded order.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Drop all terms above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet {
            space: self.space,
            order,
            coeffs: self.coeffs[..self.space.len(order)].to_vec(),
        }
    }

    /// The true mixed partial `∂^|α| f / ∂x^α`, undoing the factorial
    /// normalisation of the stored coefficient.
    pub fn derivative(&self, multi_index: &[u8]) -> Result<f64> {
        if multi_index.len() != self.space.vars {
            return Err(Error::DimensionMismatch {
                expected: self.space.vars,
                found: multi_index.len(),
            });
        }
        let degree: usize = multi_index.iter().map(|&e| e as usize).sum();
        if degree > self.order {
            return Err(Error::DerivativeOrder {
                requested: degree,
                order: self.order,
            });
        }
        let i = self
            .space
            .position(multi_index)
            .expect("every multi-index within the order is tabulated");
        let scale: f64 = multi_index
            .iter()
            .map(|&e| self.space.factorial[e as usize])
            .product();
        Ok(scale * self.coeffs[i])
    }

    /// Partial derivative of a listed set of variables (repeats allowed),
    /// e.g. `&[2, 2]` for `∂²/∂v₂²`.
    pub fn partial(&self, vars: &[usize]) -> Result<f64> {
        let mut multi_index = vec![0u8; self.space.vars];
        for &v in vars {
            if v >= self.space.vars {
                return Err(Error::DimensionMismatch {
                    expected: self.space.vars,
                    found: v + 1,
                });
            }
            multi_index[v] += 1;
        }
        self.derivative(&multi_index)
    }

    /// Exact jet of `∂f/∂v` at one order lower.
    ///
    /// # Panics
    /// If the jet has order 0.
    pub fn diff(&self, var: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let len = self.space.len(order);
        let raise = &self.space.raise[var];
        let coeffs = (0..len)
            .map(|i| {
                let up = raise[i] as usize;
                (self.space.monomials[i][var] as f64 + 1.0) * self.coeffs[up]
            })
            .collect();
        Jet {
            space: self.space,
            order,
            coeffs,
        }
    }

    fn check_space(&self, other: &Jet) {
        assert!(
            std::ptr::eq(self.space, other.space),
            "jets over different variable sets"
        );
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        self.check_space(other);
        let order = self.order.min(other.order);
        let len = self.space.len(order);
        let coeffs = self.coeffs[..len]
            .iter()
            .zip(&other.coeffs[..len])
            .map(|(&a, &b)| f(a, b))
            .collect();
        Jet {
            space: self.space,
            order,
            coeffs,
        }
    }

    pub fn add_jet(&self, other: &Jet) -> Jet {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub_jet(&self, other: &Jet) -> Jet {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul_jet(&self, other: &Jet) -> Jet {
        self.check_space(other);
        let order = self.order.min(other.order);
        let mut coeffs = vec![0.0; self.space.len(order)];
        for &(a, b, c) in &self.space.products[..self.space.product_len[order]] {
            coeffs[c as usize] += self.coeffs[a as usize] * other.coeffs[b as usize];
        }
        Jet {
            space: self.space,
            order,
            coeffs,
        }
    }

    pub fn scale(&self, factor: f64) -> Jet {
        Jet {
            space: self.space,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add_scalar(&self, value: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    /// `f(self)` for a univariate `f` given its derivatives at the value part:
    /// `derivs[j] = f^(j)(u₀)` for `j = 0..=order`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        debug_assert!(derivs.len() > self.order);
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        // Horner in the nilpotent increment: Σ f^(j)/j! δ^j.
        let mut acc = Jet::constant(self.space, self.order, derivs[self.order] / self.space.factorial[self.order]);
        for j in (0..self.order).rev() {
            acc = acc.mul_jet(&delta);
            acc.coeffs[0] += derivs[j] / self.space.factorial[j];
        }
        acc
    }

    pub fn recip(&self) -> Jet {
        let u = self.value();
        let r = 1.0 / u;
        let derivs = [r, -r * r, 2.0 * r * r * r, -6.0 * r.powi(4), 24.0 * r.powi(5)];
        self.compose(&derivs)
    }

    pub fn div_jet(&self, other: &Jet) -> Jet {
        self.mul_jet(&other.recip())
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&[e; MAX_ORDER + 1])
    }

    pub fn ln(&self) -> Jet {
        let u = self.value();
        let r = 1.0 / u;
        let derivs = [u.ln(), r, -r * r, 2.0 * r.powi(3), -6.0 * r.powi(4)];
        self.compose(&derivs)
    }

    /// Real power `u^p`; the caller guarantees `u > 0` unless `p` is an integer.
    pub fn powf(&self, p: f64) -> Jet {
        let u = self.value();
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut falling = 1.0;
        for (j, d) in derivs.iter_mut().enumerate() {
            *d = falling * u.powf(p - j as f64);
            falling *= p - j as f64;
        }
        self.compose(&derivs)
    }

    pub fn powi(&self, p: i32) -> Jet {
        match p {
            0 => Jet::constant(self.space, self.order, 1.0),
            1 => self.clone(),
            p if p < 0 => self.powi(-p).recip(),
            p => {
                let half = self.powi(p / 2);
                let sq = half.mul_jet(&half);
                if p % 2 == 1 {
                    sq.mul_jet(self)
                } else {
                    sq
                }
            }
        }
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c, s, c])
    }

    pub fn asin(&self) -> Jet {
        let u = self.value();
        let w = 1.0 - u * u;
        let derivs = [
            u.asin(),
            w.powf(-0.5),
            u * w.powf(-1.5),
            (1.0 + 2.0 * u * u) * w.powf(-2.5),
            (9.0 * u + 6.0 * u.powi(3)) * w.powf(-3.5),
        ];
        self.compose(&derivs)
    }

    pub fn acos(&self) -> Jet {
        let asin = self.asin();
        let mut out = asin.scale(-1.0);
        out.coeffs[0] = self.value().acos();
        out
    }

    pub fn atan(&self) -> Jet {
        let u = self.value();
        let q = 1.0 / (1.0 + u * u);
        let derivs = [
            u.atan(),
            q,
            -2.0 * u * q * q,
            (6.0 * u * u - 2.0) * q.powi(3),
            24.0 * u * (1.0 - u * u) * q.powi(4),
        ];
        self.compose(&derivs)
    }

    /// Two-argument arctangent `atan2(self, x)` with the branch of the value part.
    pub fn atan2(&self, x: &Jet) -> Jet {
        let (y0, x0) = (self.value(), x.value());
        let mut out = if x0.abs() >= y0.abs() {
            self.div_jet(x).atan()
        } else {
            x.div_jet(self).atan().scale(-1.0)
        };
        out.coeffs[0] = y0.atan2(x0);
        out
    }
}

macro_rules! jet_binop {
    ($tr:ident, $method:ident, $inner:ident) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                self.$inner(rhs)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$inner(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$inner(rhs)
            }
        }
    };
}

jet_binop!(Add, add, add_jet);
jet_binop!(Sub, sub, sub_jet);
jet_binop!(Mul, mul, mul_jet);
jet_binop!(Div, div, div_jet);

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Arithmetic shared by plain reals and jets, so one expression evaluator and
/// one linear-algebra routine serve both.
pub trait Scalar: Clone + fmt::Debug {
    fn constant_like(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, factor: f64) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn powf(&self, p: f64) -> Self;
    fn powi(&self, p: i32) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn asin(&self) -> Self;
    fn acos(&self) -> Self;
    fn atan(&self) -> Self;
    fn atan2(&self, x: &Self) -> Self;
}

impl Scalar for f64 {
    fn constant_like(&self, c: f64) -> f64 {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, other: &f64) -> f64 {
        self + other
    }
    fn sub(&self, other: &f64) -> f64 {
        self - other
    }
    fn mul(&self, other: &f64) -> f64 {
        self * other
    }
    fn div(&self, other: &f64) -> f64 {
        self / other
    }
    fn neg(&self) -> f64 {
        -self
    }
    fn scale(&self, factor: f64) -> f64 {
        self * factor
    }
    fn exp(&self) -> f64 {
        f64::exp(*self)
    }
    fn ln(&self) -> f64 {
        f64::ln(*self)
    }
    fn sqrt(&self) -> f64 {
        f64::sqrt(*self)
    }
    fn powf(&self, p: f64) -> f64 {
        f64::powf(*self, p)
    }
    fn powi(&self, p: i32) -> f64 {
        f64::powi(*self, p)
    }
    fn sin(&self) -> f64 {
        f64::sin(*self)
    }
    fn cos(&self) -> f64 {
        f64::cos(*self)
    }
    fn asin(&self) -> f64 {
        f64::asin(*self)
    }
    fn acos(&self) -> f64 {
        f64::acos(*self)
    }
    fn atan(&self) -> f64 {
        f64::atan(*self)
    }
    fn atan2(&self, x: &f64) -> f64 {
        f64::atan2(*self, *x)
    }
}

impl Scalar for Jet {
    fn constant_like(&self, c: f64) -> Jet {
        Jet::constant(self.space, self.order, c)
    }
    fn value(&self) -> f64 {
        self.coeffs[0]
    }
    fn add(&self, other: &Jet) -> Jet {
        self.add_jet(other)
    }
    fn sub(&self, other: &Jet) -> Jet {
        self.sub_jet(other)
    }
    fn mul(&self, other: &Jet) -> Jet {
        self.mul_jet(other)
    }
    fn div(&self, other: &Jet) -> Jet {
        self.div_jet(other)
    }
    fn neg(&self) -> Jet {
        Jet::scale(self, -1.0)
    }
    fn scale(&self, factor: f64) -> Jet {
        Jet::scale(self, factor)
    }
    fn exp(&self) -> Jet {
        Jet::exp(self)
    }
    fn ln(&self) -> Jet {
        Jet::ln(self)
    }
    fn sqrt(&self) -> Jet {
        Jet::sqrt(self)
    }
    fn powf(&self, p: f64) -> Jet {
        Jet::powf(self, p)
    }
    fn powi(&self, p: i32) -> Jet {
        Jet::powi(self, p)
    }
    fn sin(&self) -> Jet {
        Jet::sin(self)
    }
    fn cos(&self) -> Jet {
        Jet::cos(self)
    }
    fn asin(&self) -> Jet {
        Jet::asin(self)
    }
    fn acos(&self) -> Jet {
        Jet::acos(self)
    }
    fn atan(&self) -> Jet {
        Jet::atan(self)
    }
    fn atan2(&self, x: &Jet) -> Jet {
        Jet::atan2(self, x)
    }
}

/// Chart and fiber coordinate jets for a tangent sample: variables
/// `0..n` are `x⁰..x^{n-1}`, variables `n..2n` are `y⁰..y^{n-1}`.
#[derive(Debug, Clone)]
pub struct SeededVariables {
    pub x: Vec<Jet>,
    pub y: Vec<Jet>,
}

impl SeededVariables {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Index of the jet variable for `x^i`.
    pub fn x_var(&self, i: usize) -> usize {
        i
    }

    /// Index of the jet variable for `y^i`.
    pub fn y_var(&self, i: usize) -> usize {
        self.x.len() + i
    }
}

/// Seed `2n` jet variables at `sample`.
pub fn seed(sample: &TangentSample, order: usize) -> Result<SeededVariables> {
    if !(2..=MAX_ORDER).contains(&order) {
        return Err(Error::OrderOutOfRange(order));
    }
    seed_any_order(sample, order)
}

/// As [`seed`] but without the public order floor; internal pipelines use
/// order 1 where only gradients are needed.
pub(crate) fn seed_any_order(sample: &TangentSample, order: usize) -> Result<SeededVariables> {
    let n = sample.dim();
    if sample.y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sample.y.len(),
        });
    }
    let space = JetSpace::get(2 * n);
    let x = (0..n)
        .map(|i| Jet::variable(space, order, i, sample.x[i]))
        .collect();
    let y = (0..n)
        .map(|i| Jet::variable(space, order, n + i, sample.y[i]))
        .collect();
    Ok(SeededVariables { x, y })
}

/// Central finite-difference derivatives with two levels of Richardson
/// extrapolation. Independent of the jet code and used to cross-check it.
pub mod finite_difference {
    /// Central stencil for the `m`-th derivative (m ≤ 4), as (offset, weight)
    /// pairs in units of the step.
    fn stencil(m: usize) -> &'static [(f64, f64)] {
        match m {
            0 => &[(0.0, 1.0)],
            1 => &[(-1.0, -0.5), (1.0, 0.5)],
            2 => &[(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
            3 => &[(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
            4 => &[(-2.0, 1.0), (-1.0, -4.0), (0.0, 6.0), (1.0, -4.0), (2.0, 1.0)],
            _ => panic!("finite-difference stencil only up to order 4"),
        }
    }

    /// Tensor-product central difference of `f` at `point` for the
    /// multi-index `alpha`, with step `h`. Error O(h²).
    pub fn central(f: &dyn Fn(&[f64]) -> f64, point: &[f64], alpha: &[u8], h: f64) -> f64 {
        let active: Vec<(usize, usize)> = alpha
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .map(|(i, &m)| (i, m as usize))
            .collect();
        let order: usize = active.iter().map(|&(_, m)| m).sum();
        let mut total = 0.0;
        let mut probe = point.to_vec();
        let mut counters = vec![0usize; active.len()];
        loop {
            let mut weight = 1.0;
            probe.copy_from_slice(point);
            for (slot, &(var, m)) in active.iter().enumerate() {
                let (offset, w) = stencil(m)[counters[slot]];
                probe[var] += offset * h;
                weight *= w;
            }
            total += weight * f(&probe);
            // odometer over the stencil product
            let mut slot = 0;
            loop {
                if slot == active.len() {
                    return total / h.powi(order as i32);
                }
                counters[slot] += 1;
                if counters[slot] < stencil(active[slot].1).len() {
                    break;
                }
                counters[slot] = 0;
                slot += 1;
            }
        }
    }

    /// Central difference with two Richardson levels (error O(h⁶)).
    pub fn richardson(f: &dyn Fn(&[f64]) -> f64, point: &[f64], alpha: &[u8], h: f64) -> f64 {
        let d1 = central(f, point, alpha, h);
        let d2 = central(f, point, alpha, h / 2.0);
        let d4 = central(f, point, alpha, h / 4.0);
        let r1 = (4.0 * d2 - d1) / 3.0;
        let r2 = (4.0 * d4 - d2) / 3.0;
        (16.0 * r2 - r1) / 15.0
    }

    /// Largest stencil reach, in units of `h`, for a multi-index.
    pub fn reach(alpha: &[u8]) -> f64 {
        if alpha.iter().any(|&m| m >= 3) {
            2.0
        } else {
            1.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(x: &[f64], y: &[f64]) -> TangentSample {
        TangentSample::new(x.to_vec(), y.to_vec())
    }

    #[test]
    fn space_sizes_match_binomials() {
        // C(m + k, k) monomials of degree <= k in m variables
        let s = JetSpace::get(6);
        assert_eq!(s.len(0), 1);
        assert_eq!(s.len(1), 7);
        assert_eq!(s.len(2), 28);
        assert_eq!(s.len(4), 210);
        assert_eq!(JetSpace::get(8).len(4), 495);
    }

    #[test]
    fn seeding_identity() {
        let vars = seed(&sample(&[0.0, 0.0], &[1.0, 0.0]), 2).unwrap();
        let y1 = &vars.y[0];
        assert_eq!(y1.value(), 1.0);
        assert_eq!(y1.partial(&[vars.y_var(0)]).unwrap(), 1.0);
        for v in [0, 1, 3] {
            assert_eq!(y1.partial(&[v]).unwrap(), 0.0);
        }
        assert_eq!(y1.partial(&[2, 2]).unwrap(), 0.0);
    }

    #[test]
    fn bilinear_monomial() {
        let vars = seed(&sample(&[0.0, 0.0], &[2.0, 3.0]), 2).unwrap();
        let f = &vars.y[0] * &vars.y[1];
        assert_eq!(f.value(), 6.0);
        assert_eq!(f.partial(&[2, 3]).unwrap(), 1.0);
    }

    #[test]
    fn fourth_power_derivative() {
        let vars = seed(&sample(&[0.0], &[1.0]), 4).unwrap();
        let f = vars.y[0].powi(4);
        assert_eq!(f.partial(&[1, 1, 1, 1]).unwrap(), 24.0);
        assert_eq!(f.partial(&[1, 1, 1]).unwrap(), 24.0);
    }

    #[test]
    fn constant_has_no_derivatives() {
        let space = JetSpace::get(4);
        let c = Jet::constant(space, 4, 3.5);
        for i in 1..space.len(4) {
            let alpha = space.monomial(i).to_vec();
            assert_eq!(c.derivative(&alpha).unwrap(), 0.0);
        }
    }

    #[test]
    fn quadratic_form_second_derivative() {
        let vars = seed(&sample(&[0.0, 0.0], &[0.7, -0.2]), 3).unwrap();
        let f = vars.y[0].powi(2).neg() + vars.y[1].powi(2);
        assert_eq!(f.partial(&[2, 2]).unwrap(), -2.0);
        assert_eq!(f.partial(&[3, 3]).unwrap(), 2.0);
        assert_eq!(f.partial(&[2, 2, 2]).unwrap(), 0.0);
    }

    #[test]
    fn derivative_beyond_order_is_rejected() {
        let vars = seed(&sample(&[0.0], &[1.0]), 2).unwrap();
        assert!(matches!(
            vars.y[0].partial(&[1, 1, 1]),
            Err(Error::DerivativeOrder { requested: 3, order: 2 })
        ));
    }

    #[test]
    fn order_out_of_range() {
        assert!(matches!(seed(&sample(&[0.0], &[1.0]), 5), Err(Error::OrderOutOfRange(5))));
        assert!(matches!(seed(&sample(&[0.0], &[1.0]), 1), Err(Error::OrderOutOfRange(1))));
    }

    #[test]
    fn diff_lowers_order_exactly() {
        let vars = seed(&sample(&[0.3], &[1.2]), 4).unwrap();
        let f = vars.x[0].sin().mul_jet(&vars.y[0].powi(3));
        let df = f.diff(1);
        assert_eq!(df.order(), 3);
        for alpha in [[0u8, 0], [1, 0], [0, 2], [2, 1], [1, 2]] {
            let mut up = alpha;
            up[1] += 1;
            let a = df.derivative(&alpha).unwrap();
            let b = f.derivative(&up).unwrap();
            assert!((a - b).abs() <= 1e-13 * b.abs().max(1.0), "{alpha:?}: {a} vs {b}");
        }
    }

    #[test]
    fn elementary_functions_match_finite_differences() {
        let point = [0.4, 0.3];
        let funcs: Vec<(&str, Box<dyn Fn(&Jet, &Jet) -> Jet>, Box<dyn Fn(f64, f64) -> f64>)> = vec![
            ("exp", Box::new(|a, b| a.mul_jet(b).exp()), Box::new(|a, b| (a * b).exp())),
            ("ln", Box::new(|a, b| a.add_jet(b).add_scalar(1.0).ln()), Box::new(|a, b| (a + b + 1.0).ln())),
            ("powf", Box::new(|a, b| a.add_scalar(1.0).powf(1.3).mul_jet(b)), Box::new(|a, b| (a + 1.0).powf(1.3) * b)),
            ("asin", Box::new(|a, b| a.mul_jet(b).asin()), Box::new(|a, b| (a * b).asin())),
            ("acos", Box::new(|a, b| a.sub_jet(b).acos()), Box::new(|a, b| (a - b).acos())),
            ("atan", Box::new(|a, b| a.div_jet(b).atan()), Box::new(|a, b| (a / b).atan())),
            ("atan2", Box::new(|a, b| a.atan2(b)), Box::new(|a, b| a.atan2(b))),
            ("atan2-steep", Box::new(|a, b| a.add_scalar(1.0).atan2(&b.scale(0.5))), Box::new(|a, b| (a + 1.0).atan2(0.5 * b))),
            ("sin-cos", Box::new(|a, b| a.sin().mul_jet(&b.cos())), Box::new(|a, b| a.sin() * b.cos())),
        ];
        let space = JetSpace::get(2);
        let a = Jet::variable(space, 4, 0, point[0]);
        let b = Jet::variable(space, 4, 1, point[1]);
        for (name, jet_f, real_f) in &funcs {
            let jet = jet_f(&a, &b);
            let real = |p: &[f64]| real_f(p[0], p[1]);
            for i in 0..space.len(4) {
                let alpha = space.monomial(i).to_vec();
                let order: usize = alpha.iter().map(|&e| e as usize).sum();
                let h: f64 = [1e-2, 1e-2, 2e-2, 3e-2, 4e-2][order];
                let fd = finite_difference::richardson(&real, &point, &alpha, h);
                let exact = jet.derivative(&alpha).unwrap();
                assert!(
                    (fd - exact).abs() <= 1e-6 * exact.abs().max(1.0),
                    "{name} {alpha:?}: jet {exact} fd {fd}"
                );
            }
        }
    }

    #[test]
    fn arithmetic_is_deterministic() {
        let vars = seed(&sample(&[0.1, 0.2], &[1.5, 0.5]), 4).unwrap();
        let f = || {
            (&vars.y[0] - &vars.y[1])
                .powf(1.3)
                .mul_jet(&(&vars.y[0] + &vars.y[1]).powf(0.7))
                .mul_jet(&vars.x[0].cos())
        };
        assert_eq!(f(), f());
    }
}
