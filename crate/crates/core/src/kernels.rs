//! Trapezoid multipliers, de la Vallee Poussin block kernels and dyadic
//! frequency blocks.
//!
//! On the frequency side every block is a tensor product of one-dimensional
//! multipliers `k_m - k_{m-1}`. On the space side each factor has a closed
//! form. For scale `m >= 2` it is a dilation of the fixed profile [`profile_g`]:
//!
//! ```text
//! J_m(x) = 2^(m-2) * G(pi * 2^(m-2) * x)
//! ```
//!
//! Scales 0 and 1 involve the unit triangle `k_0`, which is not a member of
//! the trapezoid family, so they get their own branches:
//!
//! ```text
//! J_0(x) = sinc^2(x)                 (transform of the triangle)
//! J_1(x) = 2 cos(2 pi x) sinc^2(x)   (transform of the tent k_1 - k_0)
//! ```
//!
//! with `sinc(x) = sin(pi x) / (pi x)`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Below this magnitude of the trigonometric argument the quadratic Taylor
/// surrogate replaces the quotient form.
const TAYLOR_CUTOFF: f64 = 1e-4;

/// Dyadic block label `s` in `Z_+^d`. Ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(s: Vec<u32>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Validation("multi-index must have d >= 1 entries".into()));
        }
        Ok(Self(s))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// `s_1 + ... + s_d`.
    pub fn l1(&self) -> u64 {
        self.0.iter().map(|&v| v as u64).sum()
    }

    /// Inner product `(s, w)`.
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.0.iter().zip(w).map(|(&s, &g)| s as f64 * g).sum()
    }

    pub fn max_entry(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(s: Vec<u32>) -> Self {
        Self(s)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Trapezoid multiplier `k_m(lambda)`, with `k_0` the unit triangle and
/// `k_{-1} = 0`.
pub fn multiplier_k(m: i32, lambda: f64) -> f64 {
    let a = lambda.abs();
    match m {
        m if m < 0 => 0.0,
        0 => (1.0 - a).max(0.0),
        m => {
            let top = (2.0f64).powi(m);
            if a < 0.5 * top {
                1.0
            } else if a <= top {
                2.0 * (1.0 - a / top)
            } else {
                0.0
            }
        }
    }
}

/// One-dimensional block multiplier `k_m - k_{m-1}`.
pub fn factor_multiplier(m: u32, lambda: f64) -> f64 {
    let m = m as i32;
    multiplier_k(m, lambda) - multiplier_k(m - 1, lambda)
}

/// Tensor block multiplier `prod_j (k_{s_j} - k_{s_j - 1})(lambda_j)`.
pub fn block_multiplier(s: &MultiIndex, lambda: &[f64]) -> Result<f64> {
    check_dim(s.dim(), lambda.len())?;
    Ok(block_multiplier_unchecked(s.as_slice(), lambda))
}

pub(crate) fn block_multiplier_unchecked(s: &[u32], lambda: &[f64]) -> f64 {
    s.iter().zip(lambda).map(|(&m, &l)| factor_multiplier(m, l)).product()
}

/// Normalized profile `G(t) = sin^2 t (2 cos 2t + 1)(cos 2t + cos 4t - 1) / t^2`,
/// continuous with `G(0) = 3`.
pub fn profile_g(t: f64) -> f64 {
    if t.abs() < TAYLOR_CUTOFF {
        return 3.0 - 35.0 * t * t;
    }
    profile_g_numerator(t) / (t * t)
}

/// The `pi`-periodic numerator of [`profile_g`].
pub(crate) fn profile_g_numerator(t: f64) -> f64 {
    let c2 = (2.0 * t).cos();
    let s = t.sin();
    s * s * (2.0 * c2 + 1.0) * (c2 + (4.0 * t).cos() - 1.0)
}

/// `sinc^2(x) = (sin(pi x) / (pi x))^2`, the transform of the unit triangle.
pub fn sinc_sq(x: f64) -> f64 {
    let t = PI * x;
    if t.abs() < TAYLOR_CUTOFF {
        return 1.0 - t * t / 3.0;
    }
    let v = t.sin() / t;
    v * v
}

/// Space-side factor for one coordinate at scale `m`.
pub fn kernel_factor(m: u32, x: f64) -> f64 {
    match m {
        0 => sinc_sq(x),
        1 => 2.0 * (2.0 * PI * x).cos() * sinc_sq(x),
        m => {
            let b = (2.0f64).powi(m as i32 - 2);
            b * profile_g(PI * b * x)
        }
    }
}

/// `sup_x |J_m(x)|`, attained at the origin because the multiplier is
/// non-negative; equals the area under `k_m - k_{m-1}`.
pub fn factor_peak(m: u32) -> f64 {
    match m {
        0 => 1.0,
        1 => 2.0,
        m => 3.0 * (2.0f64).powi(m as i32 - 2),
    }
}

/// Coefficients `(P, B)` of the envelope `|J_m(x)| <= min(P, B / x^2)`.
pub fn factor_envelope_coeffs(m: u32) -> (f64, f64) {
    let pi2 = PI * PI;
    match m {
        0 => (1.0, 1.0 / pi2),
        1 => (2.0, 2.0 / pi2),
        m => {
            let b = (2.0f64).powi(m as i32 - 2);
            (3.0 * b, 9.0 / (pi2 * b))
        }
    }
}

/// Envelope value `min(P, B / x^2)` of [`kernel_factor`].
pub fn factor_envelope(m: u32, x: f64) -> f64 {
    let (peak, b) = factor_envelope_coeffs(m);
    if x == 0.0 {
        peak
    } else {
        peak.min(b / (x * x))
    }
}

/// Block kernel `A*_s(x) = prod_j J_{s_j}(x_j)`.
pub fn eval_a_star(s: &MultiIndex, x: &[f64]) -> Result<f64> {
    check_dim(s.dim(), x.len())?;
    Ok(eval_a_star_unchecked(s.as_slice(), x))
}

pub(crate) fn eval_a_star_unchecked(s: &[u32], x: &[f64]) -> f64 {
    s.iter().zip(x).map(|(&m, &xj)| kernel_factor(m, xj)).product()
}

/// Dyadic block index of one frequency coordinate: the unique `m` with
/// `eta(m) 2^(m-1) <= |lambda| < 2^m`.
pub fn block_of(lambda: f64) -> u32 {
    let a = lambda.abs();
    if a < 1.0 {
        return 0;
    }
    let mut m = (a.log2().floor() as i64 + 1).max(1) as u32;
    // log2 rounding near powers of two
    while a >= (2.0f64).powi(m as i32) {
        m += 1;
    }
    while m > 1 && a < (2.0f64).powi(m as i32 - 1) {
        m -= 1;
    }
    m
}

/// Membership of `lambda` in the half-open block `Q*_{2^s}`.
pub fn block_contains(s: &MultiIndex, lambda: &[f64]) -> Result<bool> {
    check_dim(s.dim(), lambda.len())?;
    Ok(s.as_slice().iter().zip(lambda).all(|(&m, &l)| {
        let a = l.abs();
        let lo = if m == 0 { 0.0 } else { (2.0f64).powi(m as i32 - 1) };
        lo <= a && a < (2.0f64).powi(m as i32)
    }))
}

/// The dyadic block `Q*_{2^s}`: `eta(s_j) 2^{s_j - 1} <= |lambda_j| < 2^{s_j}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrequencyBlock {
    s: MultiIndex,
}

impl FrequencyBlock {
    pub fn new(s: MultiIndex) -> Self {
        Self { s }
    }

    /// The block holding `lambda`.
    pub fn containing(lambda: &[f64]) -> Result<Self> {
        Ok(Self {
            s: MultiIndex::new(lambda.iter().map(|&l| block_of(l)).collect())?,
        })
    }

    pub fn index(&self) -> &MultiIndex {
        &self.s
    }

    /// Half-open range `[lo, hi)` of `|lambda_j|`.
    pub fn annulus(&self, j: usize) -> (f64, f64) {
        let m = self.s.as_slice()[j];
        let lo = if m == 0 { 0.0 } else { (2.0f64).powi(m as i32 - 1) };
        (lo, (2.0f64).powi(m as i32))
    }

    pub fn contains(&self, lambda: &[f64]) -> Result<bool> {
        block_contains(&self.s, lambda)
    }
}
