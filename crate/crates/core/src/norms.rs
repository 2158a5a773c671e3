//! Norms of block kernels and block sums.
//!
//! Single-block `L_p` norms reduce to three one-dimensional reference
//! integrals (one per factor class), each computed once per exponent and
//! cached. Block sums get a composite midpoint rule over a box with a
//! certified envelope tail, an exact `L_2` route through the frequency side,
//! and a sup-norm lower bound from a structured search.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocksum::BlockSum;
use crate::cross::pairwise_sum;
use crate::error::{Error, Result};
use crate::kernels::{
    factor_envelope, factor_envelope_coeffs, factor_peak, kernel_factor, profile_g, profile_g_numerator, MultiIndex,
};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// The three shapes a one-dimensional kernel factor can take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum FactorClass {
    /// Scale 0: `sinc^2(x)`.
    Triangle,
    /// Scale 1: `2 cos(2 pi x) sinc^2(x)`.
    Tent,
    /// Scales >= 2, in the normalized variable: `G(t)`.
    Dilated,
}

impl FactorClass {
    /// Value of the factor (in its own variable).
    fn eval(self, x: f64) -> f64 {
        match self {
            FactorClass::Triangle => kernel_factor(0, x),
            FactorClass::Tent => kernel_factor(1, x),
            FactorClass::Dilated => profile_g(x),
        }
    }

    /// Periodic numerator `h` with `factor(x) = h(x) / x^2`.
    fn numerator(self, x: f64) -> f64 {
        match self {
            FactorClass::Triangle => (PI * x).sin().powi(2) / (PI * PI),
            FactorClass::Tent => 2.0 * (PI * x).sin().powi(2) * (2.0 * PI * x).cos() / (PI * PI),
            FactorClass::Dilated => profile_g_numerator(x),
        }
    }

    fn period(self) -> f64 {
        match self {
            FactorClass::Dilated => PI,
            _ => 1.0,
        }
    }

    /// Zeros of the numerator inside one period, endpoints included.
    fn breakpoints(self) -> Vec<f64> {
        match self {
            FactorClass::Triangle => vec![0.0, 1.0],
            FactorClass::Tent => vec![0.0, 0.25, 0.75, 1.0],
            FactorClass::Dilated => {
                // cos 2t + cos 4t - 1 = 0  <=>  2c^2 + c - 2 = 0 with c = cos 2t
                let ta = (((17.0f64).sqrt() - 1.0) / 4.0).acos() / 2.0;
                vec![0.0, ta, PI / 3.0, 2.0 * PI / 3.0, PI - ta, PI]
            }
        }
    }
}

/// `int_0^inf |factor|^p` with its certified error.
#[derive(Debug, Clone, Copy)]
struct HalfLineIntegral {
    value: f64,
    error: f64,
}

const REFERENCE_TAIL_TOL: f64 = 1e-10;
const REFERENCE_NODES: usize = 32;

fn pow_abs(v: f64, p: f64) -> f64 {
    if p == 1.0 {
        v.abs()
    } else if p == 2.0 {
        v * v
    } else if p.fract() == 0.0 && p <= 64.0 {
        v.abs().powi(p as i32)
    } else {
        v.abs().powf(p)
    }
}

fn inv_pow(t: f64, two_p: f64) -> f64 {
    if two_p.fract() == 0.0 && two_p <= 128.0 {
        t.powi(-(two_p as i32))
    } else {
        t.powf(-two_p)
    }
}

/// Whole periods are integrated with Gauss-Legendre on the zero-free pieces;
/// beyond `M` periods the integral lies between two telescoping sums whose
/// gap is `H (M P)^{-2p}` with `H = int_0^P |h|^p`, and the midpoint of the
/// two estimates is used.
fn half_line_integral(class: FactorClass, p: f64) -> HalfLineIntegral {
    let (gx, gw) = gauss_legendre(REFERENCE_NODES);
    let period = class.period();
    let br = class.breakpoints();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in br.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        for (x, wt) in gx.iter().zip(&gw) {
            nodes.push(a + half * (1.0 + x));
            weights.push(half * wt);
        }
    }
    let first: f64 = nodes
        .iter()
        .zip(&weights)
        .map(|(&u, &w)| w * pow_abs(class.eval(u), p))
        .sum();
    let hw: Vec<f64> = nodes
        .iter()
        .zip(&weights)
        .map(|(&u, &w)| w * pow_abs(class.numerator(u), p))
        .collect();
    let h_mass: f64 = hw.iter().sum();
    let two_p = 2.0 * p;

    // smallest M with H (M P)^{-2p} below the tolerance
    let m = ((h_mass / REFERENCE_TAIL_TOL).powf(1.0 / two_p) / period)
        .ceil()
        .max(16.0) as u64;

    const CHUNK: u64 = 4096;
    let chunks: Vec<f64> = (0..m.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = (c * CHUNK).max(1);
            let hi = ((c + 1) * CHUNK).min(m);
            let mut acc = 0.0;
            for k in lo..hi {
                let base = k as f64 * period;
                let mut per = 0.0;
                for (u, w) in nodes.iter().zip(&hw) {
                    per += w * inv_pow(base + u, two_p);
                }
                acc += per;
            }
            acc
        })
        .collect();
    let body = first + pairwise_sum(&chunks);
    let start = m as f64 * period;
    let tail = h_mass / period * start.powf(1.0 - two_p) / (two_p - 1.0);
    let gap = h_mass * start.powf(-two_p);
    HalfLineIntegral {
        value: body + tail,
        error: gap,
    }
}

fn reference_cache() -> &'static RwLock<HashMap<(FactorClass, u64), HalfLineIntegral>> {
    static CACHE: OnceLock<RwLock<HashMap<(FactorClass, u64), HalfLineIntegral>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn reference_integral(class: FactorClass, p: f64) -> HalfLineIntegral {
    let key = (class, p.to_bits());
    if let Some(v) = reference_cache().read().expect("reference cache poisoned").get(&key) {
        return *v;
    }
    let v = half_line_integral(class, p);
    *reference_cache()
        .write()
        .expect("reference cache poisoned")
        .entry(key)
        .or_insert(v)
}

/// `||J_m||_p` over the real line; `p = inf` gives the peak.
pub fn factor_lp_norm(m: u32, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Validation(format!("p must be >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(factor_peak(m));
    }
    Ok(match m {
        0 => (2.0 * reference_integral(FactorClass::Triangle, p).value).powf(1.0 / p),
        1 => (2.0 * reference_integral(FactorClass::Tent, p).value).powf(1.0 / p),
        m => {
            // t = pi 2^{m-2} x turns ||J_m||_p^p into 2^{(m-2)(p-1)} / pi * int |G|^p
            let g = 2.0 * reference_integral(FactorClass::Dilated, p).value / PI;
            ((m as f64 - 2.0) * (1.0 - 1.0 / p)).exp2() * g.powf(1.0 / p)
        }
    })
}

/// Relative error attached to [`factor_lp_norm`] by the reference quadrature.
pub fn factor_lp_norm_rel_error(m: u32, p: f64) -> f64 {
    if p.is_infinite() {
        return 0.0;
    }
    let r = match m {
        0 => reference_integral(FactorClass::Triangle, p),
        1 => reference_integral(FactorClass::Tent, p),
        _ => reference_integral(FactorClass::Dilated, p),
    };
    r.error / r.value / p
}

/// The scale-free constant `c_1(p) = ||J_m||_p 2^{-m (1 - 1/p)}` shared by
/// every scale `m >= 2`.
pub fn dilated_constant(p: f64) -> Result<f64> {
    Ok(factor_lp_norm(2, p)? * (-2.0 * (1.0 - 1.0 / p)).exp2())
}

/// `||A*_s||_p = prod_j ||J_{s_j}||_p`; `p = inf` gives the sup norm.
pub fn block_lp_norm(s: &MultiIndex, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Validation(format!("p must be >= 1, got {p}")));
    }
    s.as_slice().iter().map(|&m| factor_lp_norm(m, p)).product()
}

/// Knots of the piecewise-linear multiplier `k_m - k_{m-1}` on `[0, inf)`.
fn multiplier_knots(m: u32) -> Vec<f64> {
    match m {
        0 => vec![0.0, 1.0],
        1 => vec![0.0, 1.0, 2.0],
        m => {
            let top = (2.0f64).powi(m as i32);
            vec![top / 4.0, top / 2.0, top]
        }
    }
}

/// `int_R (k_a - k_{a-1})(k_b - k_{b-1})`, exact: Simpson on each piece
/// between merged knots integrates the quadratic product without error.
pub fn multiplier_inner(a: u32, b: u32) -> f64 {
    let mut knots = multiplier_knots(a);
    knots.extend(multiplier_knots(b));
    knots.sort_by(|x, y| x.total_cmp(y));
    knots.dedup();
    let f = |l: f64| crate::kernels::factor_multiplier(a, l) * crate::kernels::factor_multiplier(b, l);
    // the multipliers are continuous, so endpoint values need no one-sided limits
    let acc: f64 = knots
        .windows(2)
        .map(|w| (w[1] - w[0]) / 6.0 * (f(w[0]) + 4.0 * f(0.5 * (w[0] + w[1])) + f(w[1])))
        .sum();
    2.0 * acc
}

/// Exact `||f||_2` via Parseval: `sum_{s,s'} c_s c_s' prod_j <m_{s_j}, m_{s'_j}>`.
pub fn l2_norm_exact(f: &BlockSum) -> f64 {
    let terms: Vec<(&MultiIndex, f64)> = f.terms().collect();
    let mut cache: HashMap<(u32, u32), f64> = HashMap::new();
    let mut inner = |a: u32, b: u32| {
        *cache
            .entry((a.min(b), a.max(b)))
            .or_insert_with(|| multiplier_inner(a, b))
    };
    let mut rows = Vec::with_capacity(terms.len());
    for (sa, ca) in &terms {
        let mut row = Vec::with_capacity(terms.len());
        for (sb, cb) in &terms {
            let prod: f64 = sa
                .as_slice()
                .iter()
                .zip(sb.as_slice())
                .map(|(&a, &b)| inner(a, b))
                .product();
            row.push(ca * cb * prod);
        }
        rows.push(pairwise_sum(&row));
    }
    pairwise_sum(&rows).max(0.0).sqrt()
}

/// Settings for [`lq_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Initial half-width `L` of the box `[-L, L]^d`.
    pub box_halfwidth: f64,
    /// Midpoint nodes per finest wavelength `2^{-max s_j}`, per coordinate.
    pub points_per_wavelength: u32,
    /// Relative bound on the omitted tail: `tail_bound <= tail_tol * value`.
    pub tail_tol: f64,
    /// `L` doubles until the tail bound is met or this cap is passed.
    pub max_box_halfwidth: f64,
    /// Upper limit on stored or visited quadrature points.
    pub point_budget: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            box_halfwidth: 8.0,
            points_per_wavelength: 16,
            tail_tol: 1e-3,
            max_box_halfwidth: 1048576.0,
            point_budget: 400_000_000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.box_halfwidth > 0.0) || !(self.max_box_halfwidth >= self.box_halfwidth) {
            return Err(Error::Validation("box half-width must be > 0 and <= its cap".into()));
        }
        if self.points_per_wavelength < 4 {
            return Err(Error::Validation(format!(
                "points_per_wavelength must be >= 4, got {}",
                self.points_per_wavelength
            )));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::Validation("tail_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Outcome of [`lq_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    /// `(int_box |f|^q)^{1/q}` by the composite midpoint rule.
    pub value: f64,
    /// Bound on `||f 1_{outside box}||_q` from the kernel envelopes.
    pub tail_bound: f64,
    /// `|value - value at half resolution|`.
    pub discretization_estimate: f64,
    /// Box half-width actually used.
    pub box_halfwidth: f64,
}

impl NormResult {
    fn zero() -> Self {
        Self {
            value: 0.0,
            tail_bound: 0.0,
            discretization_estimate: 0.0,
            box_halfwidth: 0.0,
        }
    }

    /// Total error budget `tail_bound + discretization_estimate`.
    pub fn combined_error(&self) -> f64 {
        self.tail_bound + self.discretization_estimate
    }
}

/// Bounds on `int_R |J_m|^q` and `int_{|x| > L} |J_m|^q`, the latter from
/// the envelope `min(P, B / x^2)`.
fn envelope_integrals(m: u32, q: f64, l: f64) -> (f64, f64) {
    let (peak, b) = factor_envelope_coeffs(m);
    let x0 = (b / peak).sqrt();
    let far = |from: f64| b.powf(q) * from.powf(1.0 - 2.0 * q) / (2.0 * q - 1.0);
    let envelope_full = 2.0 * (peak.powf(q) * x0 + far(x0));
    let known = factor_lp_norm(m, q).map(|v| v.powf(q) * (1.0 + 4.0 * q * factor_lp_norm_rel_error(m, q)));
    let full = known.map_or(envelope_full, |k| k.min(envelope_full));
    let out = if l >= x0 {
        2.0 * far(l)
    } else {
        2.0 * (peak.powf(q) * (x0 - l) + far(x0))
    };
    (full, out)
}

/// Minkowski bound on `||f 1_{R^d \ [-L,L]^d}||_q`.
pub fn envelope_tail_bound(f: &BlockSum, q: f64, l: f64) -> f64 {
    let mut total = 0.0;
    for (s, c) in f.terms() {
        let parts: Vec<(f64, f64)> = s.as_slice().iter().map(|&m| envelope_integrals(m, q, l)).collect();
        let mut mass = 0.0;
        for j in 0..parts.len() {
            let mut term = parts[j].1;
            for (i, part) in parts.iter().enumerate() {
                if i != j {
                    term *= part.0;
                }
            }
            mass += term;
        }
        total += c.abs() * mass.powf(1.0 / q);
    }
    total
}

/// Per-coordinate midpoint nodes and the kernel-factor tables on them.
struct AxisTables {
    weight: f64,
    /// `scales[k]` is the scale stored in `values[k]`.
    scales: Vec<u32>,
    values: Vec<Vec<f64>>,
}

impl AxisTables {
    fn column(&self, m: u32) -> &[f64] {
        let k = self.scales.iter().position(|&v| v == m).expect("scale table missing");
        &self.values[k]
    }
}

fn build_axes(f: &BlockSum, l: f64, ppw: u32) -> Vec<AxisTables> {
    let maxs = f.max_scales();
    (0..f.dim())
        .map(|j| {
            let h = (-(maxs[j] as f64)).exp2() / ppw as f64;
            let count = (l / h).ceil() as usize;
            let mut scales: Vec<u32> = f.terms().map(|(s, _)| s.as_slice()[j]).collect();
            scales.sort_unstable();
            scales.dedup();
            let values = scales
                .iter()
                .map(|&m| {
                    (0..count)
                        .into_par_iter()
                        .map(|k| kernel_factor(m, (k as f64 + 0.5) * h))
                        .collect()
                })
                .collect();
            // factor 2 for the mirrored half-axis
            AxisTables {
                weight: 2.0 * h,
                scales,
                values,
            }
        })
        .collect()
}

fn axis_points(f: &BlockSum, l: f64, ppw: u32) -> Vec<u128> {
    f.max_scales()
        .iter()
        .map(|&m| {
            let h = (-(m as f64)).exp2() / ppw as f64;
            (l / h).ceil() as u128
        })
        .collect()
}

fn is_even_integer(q: f64) -> bool {
    q.fract() == 0.0 && q >= 2.0 && (q as u64).is_multiple_of(2) && q <= 16.0
}

fn multiset_count(n: u128, k: u128) -> u128 {
    // C(n + k - 1, k)
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n + i) / (i + 1);
    }
    acc
}

/// `int_box |f|^q` via the chosen evaluation strategy.
fn box_integral(f: &BlockSum, q: f64, l: f64, ppw: u32, budget: u64) -> Result<f64> {
    let points = axis_points(f, l, ppw);
    let stored: u128 = points.iter().sum::<u128>() * f.len() as u128;
    if stored > budget as u128 {
        return Err(Error::QuadratureBudget {
            needed: stored,
            budget: budget as u128,
        });
    }
    let terms: Vec<(&MultiIndex, f64)> = f.terms().collect();
    if terms.len() == 1 {
        let axes = build_axes(f, l, ppw);
        let (s, c) = terms[0];
        let mut total = pow_abs(c, q);
        for (j, axis) in axes.iter().enumerate() {
            let col = axis.column(s.as_slice()[j]);
            let v: Vec<f64> = col.par_iter().map(|&x| pow_abs(x, q)).collect();
            total *= axis.weight * pairwise_sum(&v);
        }
        return Ok(total);
    }
    let k = q as u128;
    if is_even_integer(q) && multiset_count(terms.len() as u128, k) <= 2_000_000 {
        return Ok(expanded_power_integral(f, &terms, q as usize, l, ppw));
    }
    let visits: u128 = points.iter().product();
    if visits > budget as u128 {
        return Err(Error::QuadratureBudget {
            needed: visits,
            budget: budget as u128,
        });
    }
    Ok(tensor_integral(f, &terms, q, l, ppw))
}

/// `int f^q` for even `q` as a sum over term multisets of products of
/// one-dimensional integrals.
fn expanded_power_integral(f: &BlockSum, terms: &[(&MultiIndex, f64)], q: usize, l: f64, ppw: u32) -> f64 {
    let axes = build_axes(f, l, ppw);
    let mut axis_cache: Vec<HashMap<Vec<u32>, f64>> = vec![HashMap::new(); axes.len()];
    let mut tuple = vec![0usize; q];
    let mut contributions = Vec::new();
    let factorial = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
    loop {
        // multiplicity weight q! / prod(mult!)
        let mut weight = factorial(q);
        let mut run = 1;
        for i in 1..=q {
            if i < q && tuple[i] == tuple[i - 1] {
                run += 1;
            } else {
                weight /= factorial(run);
                run = 1;
            }
        }
        let mut value = weight;
        for &t in &tuple {
            value *= terms[t].1;
        }
        for (j, axis) in axes.iter().enumerate() {
            let mut key: Vec<u32> = tuple.iter().map(|&t| terms[t].0.as_slice()[j]).collect();
            key.sort_unstable();
            let integral = *axis_cache[j].entry(key.clone()).or_insert_with(|| {
                let cols: Vec<&[f64]> = key.iter().map(|&m| axis.column(m)).collect();
                let n = cols[0].len();
                let prods: Vec<f64> = (0..n)
                    .into_par_iter()
                    .map(|i| cols.iter().map(|c| c[i]).product::<f64>())
                    .collect();
                axis.weight * pairwise_sum(&prods)
            });
            value *= integral;
        }
        contributions.push(value);

        // next non-decreasing tuple
        let mut pos = q;
        loop {
            if pos == 0 {
                return pairwise_sum(&contributions).max(0.0);
            }
            pos -= 1;
            if tuple[pos] + 1 < terms.len() {
                let v = tuple[pos] + 1;
                for t in tuple.iter_mut().skip(pos) {
                    *t = v;
                }
                break;
            }
        }
    }
}

/// Direct tensor-grid midpoint sum.
fn tensor_integral(f: &BlockSum, terms: &[(&MultiIndex, f64)], q: f64, l: f64, ppw: u32) -> f64 {
    let axes = build_axes(f, l, ppw);
    let d = axes.len();
    let cols: Vec<Vec<&[f64]>> = terms
        .iter()
        .map(|(s, _)| (0..d).map(|j| axes[j].column(s.as_slice()[j])).collect())
        .collect();
    let coeffs: Vec<f64> = terms.iter().map(|t| t.1).collect();
    let lens: Vec<usize> = axes.iter().map(|a| a.values[0].len()).collect();
    let inner: usize = lens[1..].iter().product();
    let rows: Vec<f64> = (0..lens[0])
        .into_par_iter()
        .map(|i0| {
            let mut acc = Vec::with_capacity(inner);
            let mut idx = vec![0usize; d];
            idx[0] = i0;
            for flat in 0..inner {
                let mut rem = flat;
                for j in (1..d).rev() {
                    idx[j] = rem % lens[j];
                    rem /= lens[j];
                }
                let mut v = 0.0;
                for (t, c) in coeffs.iter().enumerate() {
                    let mut prod = *c;
                    for j in 0..d {
                        prod *= cols[t][j][idx[j]];
                    }
                    v += prod;
                }
                acc.push(pow_abs(v, q));
            }
            pairwise_sum(&acc)
        })
        .collect();
    let weight: f64 = axes.iter().map(|a| a.weight).product();
    weight * pairwise_sum(&rows)
}

/// `||f||_q` over `R^d` by the composite midpoint rule on `[-L, L]^d`.
///
/// The integrand is even in every coordinate, so only the positive orthant
/// is sampled. The rule is evaluated in factored form (products of
/// one-dimensional midpoint sums) for single blocks and for even integer
/// `q`; otherwise on the full tensor grid. `L` doubles until the envelope
/// tail bound drops below `tail_tol * value`.
pub fn lq_norm(f: &BlockSum, q: f64, spec: &QuadratureSpec) -> Result<NormResult> {
    if !(q >= 1.0) || q.is_infinite() {
        return Err(Error::Validation(format!("q must be finite and >= 1, got {q}")));
    }
    spec.validate()?;
    if f.is_empty() {
        return Ok(NormResult::zero());
    }
    let coarse_ppw = spec.points_per_wavelength / 2;
    let mut l = spec.box_halfwidth;
    loop {
        let tail = envelope_tail_bound(f, q, l);
        let coarse = box_integral(f, q, l, coarse_ppw, spec.point_budget)?.powf(1.0 / q);
        if tail <= spec.tail_tol * coarse {
            let value = box_integral(f, q, l, spec.points_per_wavelength, spec.point_budget)?.powf(1.0 / q);
            return Ok(NormResult {
                value,
                tail_bound: tail,
                discretization_estimate: (value - coarse).abs(),
                box_halfwidth: l,
            });
        }
        if 2.0 * l > spec.max_box_halfwidth {
            return Err(Error::TailTolerance {
                tol: spec.tail_tol,
                cap: spec.max_box_halfwidth,
                achieved: tail / coarse,
            });
        }
        l *= 2.0;
    }
}

/// Sup-norm bracket for a block sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupNormResult {
    /// Largest `|f|` found (a lower bound for the sup norm).
    pub lower: f64,
    /// `sum_s |c_s| sup|A*_s|` (an upper bound).
    pub upper: f64,
    /// Point where `lower` was attained.
    pub argmax: Vec<f64>,
}

const SUP_GRID_BUDGET: u128 = 4_000_000;

/// Sup-norm lower bound: origin, then a structured grid over the part of the
/// positive orthant where the envelope can still exceed the current best,
/// then coordinate-wise golden-section polish.
pub fn sup_norm(f: &BlockSum, resolution: u32, refine_steps: u32) -> f64 {
    sup_norm_bounds(f, resolution, refine_steps).lower
}

pub fn sup_norm_bounds(f: &BlockSum, resolution: u32, refine_steps: u32) -> SupNormResult {
    let d = f.dim();
    let terms: Vec<(&MultiIndex, f64)> = f.terms().collect();
    let upper: f64 = terms
        .iter()
        .map(|(s, c)| c.abs() * s.as_slice().iter().map(|&m| factor_peak(m)).product::<f64>())
        .sum();
    if terms.is_empty() {
        return SupNormResult {
            lower: 0.0,
            upper: 0.0,
            argmax: vec![0.0; d],
        };
    }
    let eval = |x: &[f64]| f.eval_unchecked(x).abs();
    let mut best_x = vec![0.0; d];
    let mut best = eval(&best_x);

    // search radius per axis: beyond it the envelope is below `best`
    let maxs = f.max_scales();
    let radius: Vec<f64> = (0..d)
        .map(|j| {
            let bound_at = |r: f64| -> f64 {
                terms
                    .iter()
                    .map(|(s, c)| {
                        let sl = s.as_slice();
                        let mut v = c.abs() * factor_envelope(sl[j], r);
                        for (i, &m) in sl.iter().enumerate() {
                            if i != j {
                                v *= factor_peak(m);
                            }
                        }
                        v
                    })
                    .sum()
            };
            let mut r = (-(maxs[j] as f64)).exp2();
            while bound_at(r) > best && r < 1024.0 {
                r *= 2.0;
            }
            r
        })
        .collect();

    let refine = resolution.max(1).next_power_of_two() as f64;
    let mut spacing: Vec<f64> = maxs.iter().map(|&m| (-(m as f64)).exp2() / refine).collect();
    loop {
        let count: u128 = (0..d).map(|j| (radius[j] / spacing[j]).ceil() as u128 + 1).product();
        if count <= SUP_GRID_BUDGET {
            break;
        }
        for h in spacing.iter_mut() {
            *h *= 2.0;
        }
    }
    let lens: Vec<usize> = (0..d).map(|j| (radius[j] / spacing[j]).ceil() as usize + 1).collect();
    let inner: usize = lens[1..].iter().product();
    let (grid_best, grid_x) = (0..lens[0])
        .into_par_iter()
        .map(|i0| {
            let mut x = vec![0.0; d];
            x[0] = i0 as f64 * spacing[0];
            let mut local = (f64::NEG_INFINITY, x.clone());
            for flat in 0..inner {
                let mut rem = flat;
                for j in (1..d).rev() {
                    x[j] = (rem % lens[j]) as f64 * spacing[j];
                    rem /= lens[j];
                }
                let v = eval(&x);
                if v > local.0 {
                    local = (v, x.clone());
                }
            }
            local
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(
            (f64::NEG_INFINITY, vec![]),
            |acc, cur| if cur.0 > acc.0 { cur } else { acc },
        );
    if grid_best > best {
        best = grid_best;
        best_x = grid_x;
    }

    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    for _ in 0..refine_steps {
        for j in 0..d {
            let (mut a, mut b) = (best_x[j] - spacing[j], best_x[j] + spacing[j]);
            let mut x = best_x.clone();
            let mut at = |t: f64| {
                x[j] = t;
                eval(&x)
            };
            let mut c = b - INV_PHI * (b - a);
            let mut e = a + INV_PHI * (b - a);
            let (mut fc, mut fe) = (at(c), at(e));
            for _ in 0..40 {
                if fc > fe {
                    b = e;
                    e = c;
                    fe = fc;
                    c = b - INV_PHI * (b - a);
                    fc = at(c);
                } else {
                    a = c;
                    c = e;
                    fc = fe;
                    e = a + INV_PHI * (b - a);
                    fe = at(e);
                }
            }
            let (t, v) = if fc > fe { (c, fc) } else { (e, fe) };
            if v > best {
                best = v;
                best_x[j] = t;
            }
        }
        for h in spacing.iter_mut() {
            *h *= 0.5;
        }
    }
    SupNormResult {
        lower: best,
        upper,
        argmax: best_x,
    }
}

/// Outcome of the Nikolskii-type comparison `||g||_q <= 2^d prod(nu_k)^{1/p-1/q} ||g||_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NikolskiiReport {
    pub holds: bool,
    pub norm_q: f64,
    pub bound: f64,
    /// `norm_q / bound`; the inequality holds iff this is `<= 1`.
    pub ratio: f64,
}

/// Compares the two norms of `A*_s`, whose spectrum lies in the box of
/// half-widths `nu_k = 2^{s_k}`.
pub fn nikolskii_check(s: &MultiIndex, p: f64, q: f64) -> Result<NikolskiiReport> {
    if !(p >= 1.0) {
        return Err(Error::Validation(format!("p must be >= 1, got {p}")));
    }
    if !(q >= p) {
        return Err(Error::Validation(format!("need p <= q, got p = {p}, q = {q}")));
    }
    let np = block_lp_norm(s, p)?;
    let nq = block_lp_norm(s, q)?;
    let exponent = 1.0 / p - if q.is_infinite() { 0.0 } else { 1.0 / q };
    let type_volume = (s.l1() as f64).exp2();
    let bound = (s.dim() as f64).exp2() * type_volume.powf(exponent) * np;
    let ratio = nq / bound;
    Ok(NikolskiiReport {
        holds: ratio <= 1.0,
        norm_q: nq,
        bound,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross::enumerate_layer;

    fn idx(v: &[u32]) -> MultiIndex {
        MultiIndex::from(v.to_vec())
    }

    #[test]
    fn legendre_rule_exact_for_polynomials() {
        let (x, w) = gauss_legendre(10);
        for k in 0..20 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn l2_constants_match_parseval() {
        // int G^2 = 2 pi follows from ||J_m||_2^2 = 2^{m-1}
        let g2 = 2.0 * reference_integral(FactorClass::Dilated, 2.0).value;
        assert!((g2 - 2.0 * PI).abs() < 1e-9, "{g2}");
        assert!((factor_lp_norm(0, 2.0).unwrap().powi(2) - 2.0 / 3.0).abs() < 1e-9);
        assert!((factor_lp_norm(1, 2.0).unwrap().powi(2) - 4.0 / 3.0).abs() < 1e-9);
        for m in 2..12u32 {
            let v = factor_lp_norm(m, 2.0).unwrap().powi(2);
            let exact = (m as f64 - 1.0).exp2();
            assert!((v - exact).abs() < 1e-9 * exact);
        }
        assert!((block_lp_norm(&idx(&[3]), 2.0).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn l1_of_triangle_transform() {
        // sinc^2 is non-negative with integral k_0(0) = 1
        assert!((factor_lp_norm(0, 1.0).unwrap() - 1.0).abs() < 1e-9);
        assert!(factor_lp_norm_rel_error(0, 1.0) < 1e-9);
    }

    #[test]
    fn multiplier_inner_products() {
        assert!((multiplier_inner(0, 0) - 2.0 / 3.0).abs() < 1e-14);
        assert!((multiplier_inner(1, 1) - 4.0 / 3.0).abs() < 1e-14);
        for m in 2..12u32 {
            assert!((multiplier_inner(m, m) - (m as f64 - 1.0).exp2()).abs() < 1e-12 * (m as f64).exp2());
        }
        // disjoint supports
        assert_eq!(multiplier_inner(2, 5), 0.0);
        assert_eq!(multiplier_inner(0, 3), 0.0);
        assert!(multiplier_inner(3, 4) > 0.0);
    }

    #[test]
    fn multiplier_inner_matches_fine_quadrature() {
        for a in 0..6u32 {
            for b in a..6u32 {
                let top = (b as f64).exp2();
                let n = 200_000;
                let h = top / n as f64;
                let q: f64 = (0..n)
                    .map(|i| {
                        let l = (i as f64 + 0.5) * h;
                        crate::kernels::factor_multiplier(a, l) * crate::kernels::factor_multiplier(b, l)
                    })
                    .sum::<f64>()
                    * 2.0
                    * h;
                assert!((q - multiplier_inner(a, b)).abs() < 1e-6 * top, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn exact_l2_of_block_sum() {
        let f = BlockSum::single(idx(&[3, 2]), 2.0).unwrap();
        assert!((l2_norm_exact(&f) - 2.0 * (4.0f64 * 2.0).sqrt()).abs() < 1e-12);
        assert_eq!(l2_norm_exact(&BlockSum::empty(2)), 0.0);
    }

    #[test]
    fn lq_single_block_matches_block_norm() {
        let spec = QuadratureSpec::default();
        for (s, q) in [
            (vec![3u32], 2.0),
            (vec![0], 2.0),
            (vec![1], 1.0),
            (vec![4, 2], 1.0),
            (vec![2, 5], 3.0),
        ] {
            let s = idx(&s);
            let f = BlockSum::single(s.clone(), 1.0).unwrap();
            let r = lq_norm(&f, q, &spec).unwrap();
            let exact = block_lp_norm(&s, q).unwrap();
            let err = (r.value - exact).abs();
            assert!(
                err <= r.combined_error() + 1e-9 * exact,
                "s={s} q={q} {r:?} exact={exact}"
            );
            assert!(r.tail_bound <= spec.tail_tol * r.value * 1.01);
        }
    }

    #[test]
    fn lq_two_routes_for_l2() {
        let layer = enumerate_layer(2, 5);
        let f = BlockSum::from_terms(2, layer.into_iter().map(|s| (s, 1.0))).unwrap();
        let r = lq_norm(&f, 2.0, &QuadratureSpec::default()).unwrap();
        let exact = l2_norm_exact(&f);
        assert!(
            (r.value - exact).abs() <= r.combined_error() + 1e-9 * exact,
            "{r:?} {exact}"
        );

        // mixed signs through the tensor path and the expanded path agree
        let f = BlockSum::from_terms(1, [(idx(&[2]), 1.0), (idx(&[3]), -0.5), (idx(&[0]), 0.25)]).unwrap();
        let r2 = lq_norm(&f, 2.0, &QuadratureSpec::default()).unwrap();
        assert!((r2.value - l2_norm_exact(&f)).abs() <= r2.combined_error() + 1e-9);
        let spec = QuadratureSpec::default();
        let l = r2.box_halfwidth;
        let terms: Vec<_> = f.terms().collect();
        let t = tensor_integral(&f, &terms, 2.0, l, spec.points_per_wavelength).sqrt();
        assert!((t - r2.value).abs() < 1e-10);
    }

    #[test]
    fn lq_errors() {
        let f = BlockSum::single(idx(&[2]), 1.0).unwrap();
        assert!(lq_norm(&f, 0.5, &QuadratureSpec::default()).is_err());
        let tight = QuadratureSpec {
            tail_tol: 1e-12,
            max_box_halfwidth: 16.0,
            ..QuadratureSpec::default()
        };
        match lq_norm(&f, 1.0, &tight) {
            Err(Error::TailTolerance { achieved, .. }) => assert!(achieved > 1e-12),
            other => panic!("{other:?}"),
        }
        let bad = QuadratureSpec {
            points_per_wavelength: 2,
            ..QuadratureSpec::default()
        };
        assert!(lq_norm(&f, 1.0, &bad).is_err());
        assert_eq!(
            lq_norm(&BlockSum::empty(1), 2.0, &QuadratureSpec::default())
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn lq_resolution_monotone() {
        let f = BlockSum::single(idx(&[3]), 1.0).unwrap();
        let mut last = f64::INFINITY;
        for ppw in [16u32, 32, 64] {
            let spec = QuadratureSpec {
                points_per_wavelength: ppw,
                ..QuadratureSpec::default()
            };
            let r = lq_norm(&f, 1.0, &spec).unwrap();
            assert!(r.combined_error() <= last, "ppw={ppw}");
            last = r.combined_error();
        }
    }

    #[test]
    fn self_similar_step_ratio_q4() {
        let spec = QuadratureSpec::default();
        let r1 = 1.5f64;
        let f3 = |n: u32| BlockSum::single(idx(&[n + 1]), (-r1 * n as f64).exp2()).unwrap();
        for n in 3..8u32 {
            let a = lq_norm(&f3(n), 4.0, &spec).unwrap().value;
            let b = lq_norm(&f3(n + 1), 4.0, &spec).unwrap().value;
            let expect = (-(r1 - 1.0 + 0.25)).exp2();
            assert!((b / a / expect - 1.0).abs() < 0.01, "n={n}");
        }
    }

    #[test]
    fn sup_norm_single_blocks() {
        for s in [vec![3u32], vec![2, 4], vec![0, 3], vec![1]] {
            let s = idx(&s);
            let f = BlockSum::single(s.clone(), 1.0).unwrap();
            let r = sup_norm_bounds(&f, 8, 2);
            let peak = block_lp_norm(&s, f64::INFINITY).unwrap();
            assert!((r.lower - peak).abs() < 1e-12 * peak);
            assert!((r.upper - peak).abs() < 1e-12 * peak);
            assert!(r.argmax.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn sup_norm_homogeneous_and_monotone() {
        let f = BlockSum::from_terms(1, [(idx(&[2]), 1.0), (idx(&[4]), -0.9), (idx(&[0]), 0.3)]).unwrap();
        let a = sup_norm(&f, 8, 3);
        let b = sup_norm(&f.scale(2.5), 8, 3);
        assert!((b - 2.5 * a).abs() < 1e-12 * b);
        let mut last = 0.0;
        for res in [2u32, 4, 8, 16] {
            for steps in [0u32, 1, 3] {
                let v = sup_norm(&f, res, steps);
                assert!(v >= f.eval(&[0.0]).unwrap().abs());
                assert!(v <= sup_norm_bounds(&f, res, steps).upper + 1e-12);
                if steps == 0 {
                    assert!(v >= last - 1e-15);
                    last = v;
                }
            }
        }
        // cancellation at the origin moves the maximum away from it
        let g = BlockSum::from_terms(1, [(idx(&[3]), 1.0), (idx(&[4]), -0.5)]).unwrap();
        let v = sup_norm(&g, 16, 4);
        let fine = (0..200_000)
            .map(|i| g.eval(&[i as f64 * 1e-5]).unwrap().abs())
            .fold(0.0, f64::max);
        assert!(v >= fine * (1.0 - 1e-9), "{v} {fine}");
    }

    #[test]
    fn layer_sup_at_origin() {
        let layer = enumerate_layer(2, 5);
        let f = BlockSum::from_terms(2, layer.iter().cloned().map(|s| (s, 1.0))).unwrap();
        let origin: f64 = layer
            .iter()
            .map(|s| s.as_slice().iter().map(|&m| factor_peak(m)).product::<f64>())
            .sum();
        let r = sup_norm_bounds(&f, 4, 1);
        assert!((r.lower - origin).abs() < 1e-12 * origin);
        assert!((r.upper - origin).abs() < 1e-12 * origin);
    }

    #[test]
    fn nikolskii_examples() {
        let r = nikolskii_check(&idx(&[3]), 1.0, f64::INFINITY).unwrap();
        assert!(r.holds);
        assert!(r.norm_q <= 2.0 * 8.0 * block_lp_norm(&idx(&[3]), 1.0).unwrap());
        let r = nikolskii_check(&idx(&[2, 2]), 2.0, 2.0).unwrap();
        assert!(r.holds);
        assert!((r.ratio - 0.25).abs() < 1e-12);
        let r = nikolskii_check(&idx(&[2, 2]), 1.0, 2.0).unwrap();
        assert!(r.holds && r.ratio < 1.0);
        assert!(nikolskii_check(&idx(&[2]), 2.0, 1.0).is_err());
    }
}
