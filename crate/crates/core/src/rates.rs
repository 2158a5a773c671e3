//! Rate experiments: approximation error of extremal block sums by cross
//! truncation, compared with the predicted order.
//!
//! The error of an extremal function equals its own norm, because its
//! cross projection is empty by construction.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cross::CrossSpec;
use crate::error::{Error, Result};
use crate::extremal::{make_extremal, ExtremalKind, ExtremalSpec};
use crate::kernels::MultiIndex;
use crate::norms::{block_lp_norm, lq_norm, sup_norm, QuadratureSpec};
use crate::smoothness::SmoothnessProfile;

/// `(a, b)` in `predicted = 2^{a n} n^b`.
pub fn rate_exponents(profile: &SmoothnessProfile, theta: f64, q: f64) -> Result<(f64, f64)> {
    if !(theta >= 1.0) {
        return Err(Error::Validation(format!("theta must be in [1, inf], got {theta}")));
    }
    let r1 = profile.r_min();
    let nu1 = (profile.nu() - 1) as f64;
    if q.is_infinite() {
        if !(r1 > 1.0) {
            return Err(Error::Domain(format!("hypothesis r_1 > 1 fails: r_1 = {r1}")));
        }
        return Ok((-(r1 - 1.0), nu1 * (1.0 - 1.0 / theta)));
    }
    if !(q > 1.0) {
        return Err(Error::Validation(format!("q must be in (1, inf], got {q}")));
    }
    if !(r1 > 1.0 - 1.0 / q) {
        return Err(Error::Domain(format!(
            "hypothesis r_1 > 1 - 1/q fails: r_1 = {r1}, q = {q}"
        )));
    }
    Ok((-(r1 - 1.0 + 1.0 / q), nu1 * (1.0 / q - 1.0 / theta).max(0.0)))
}

/// `2^{-n(r_1 - 1)} n^{(nu-1)(1-1/theta)}` for `q = inf`,
/// `2^{-n(r_1 - 1 + 1/q)} n^{(nu-1)(1/q-1/theta)_+}` otherwise.
pub fn predicted_rate(profile: &SmoothnessProfile, theta: f64, q: f64, n: u32) -> Result<f64> {
    let (a, b) = rate_exponents(profile, theta, q)?;
    let n = f64::from(n);
    let log_part = if b == 0.0 { 1.0 } else { n.powf(b) };
    Ok((a * n).exp2() * log_part)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: u32,
    pub error: f64,
    pub predicted: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupSettings {
    pub resolution: u32,
    pub refine_steps: u32,
}

impl Default for SupSettings {
    fn default() -> Self {
        Self {
            resolution: 16,
            refine_steps: 4,
        }
    }
}

/// Parameter echo. Infinite exponents are written as `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub d: usize,
    pub r: Vec<f64>,
    pub theta: String,
    pub q: String,
    pub kind: ExtremalKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup: Option<SupSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub fitted_slope: f64,
    pub fit_residual: f64,
    pub theory_slope: f64,
    pub ratio_spread: f64,
    pub params: RateParams,
}

pub fn format_exponent(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

impl RateReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,error,predicted,ratio\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.16e},{:.16e},{:.16e}", r.n, r.error, r.predicted, r.ratio);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Least-squares fit of `log2 e - b log2 n = a n + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
}

pub fn fit_rate(ns: &[u32], errors: &[f64], log_power: f64) -> Result<RateFit> {
    if ns.len() != errors.len() {
        return Err(Error::DimensionMismatch {
            expected: ns.len(),
            got: errors.len(),
        });
    }
    if ns.len() < 4 {
        return Err(Error::Validation(format!("rate fit needs >= 4 rows, got {}", ns.len())));
    }
    if errors.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::Validation("rate fit needs positive finite errors".into()));
    }
    let x: Vec<f64> = ns.iter().map(|&n| f64::from(n)).collect();
    let y: Vec<f64> = x
        .iter()
        .zip(errors)
        .map(|(n, e)| e.log2() - log_power * n.log2())
        .collect();
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all n are equal".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(&y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    Ok(RateFit {
        slope,
        intercept,
        residual_rms: (ss / m).sqrt(),
    })
}

fn check_range(nmin: u32, nmax: u32) -> Result<()> {
    if nmin == 0 || nmin > nmax {
        return Err(Error::Validation(format!("need 1 <= nmin <= nmax, got {nmin}..{nmax}")));
    }
    Ok(())
}

/// Extremal function at level `n`, checked to have an empty projection.
fn extremal_for(profile: &SmoothnessProfile, theta: f64, n: u32, kind: ExtremalKind) -> Result<crate::BlockSum> {
    let f = make_extremal(&ExtremalSpec::new(profile.clone(), theta, n, kind)?)?;
    let spec = CrossSpec::isotropic(profile.dim(), n)?;
    if !f.project_cross(&spec)?.is_empty() {
        return Err(Error::Degenerate(format!(
            "extremal function at n = {n} meets the cross"
        )));
    }
    Ok(f)
}

fn assemble(
    profile: &SmoothnessProfile,
    theta: f64,
    q: f64,
    results: Vec<(u32, f64)>,
    params: RateParams,
) -> Result<RateReport> {
    let (a, b) = rate_exponents(profile, theta, q)?;
    let mut rows = Vec::with_capacity(results.len());
    for (n, error) in results {
        let predicted = predicted_rate(profile, theta, q, n)?;
        rows.push(RateRow {
            n,
            error,
            predicted,
            ratio: error / predicted,
        });
    }
    if rows.iter().any(|r| !(r.ratio > 0.0) || !r.ratio.is_finite()) {
        return Err(Error::Degenerate("non-positive error in rate run".into()));
    }
    let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
        (lo.min(r.ratio), hi.max(r.ratio))
    });
    let (fitted_slope, fit_residual) = if rows.len() >= 4 {
        let ns: Vec<u32> = rows.iter().map(|r| r.n).collect();
        let es: Vec<f64> = rows.iter().map(|r| r.error).collect();
        let fit = fit_rate(&ns, &es, b)?;
        (fit.slope, fit.residual_rms)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(RateReport {
        rows,
        fitted_slope,
        fit_residual,
        theory_slope: a,
        ratio_spread: hi / lo,
        params,
    })
}

/// Extremal kind of the uniform-norm lower bound.
pub fn theorem1_kind(theta: f64) -> ExtremalKind {
    if theta.is_infinite() {
        ExtremalKind::LayerSup
    } else {
        ExtremalKind::LayerTheta
    }
}

/// Extremal kind of the `L_q` lower bound.
pub fn theorem2_kind(theta: f64, q: f64) -> ExtremalKind {
    if theta <= q {
        ExtremalKind::Single
    } else if theta.is_infinite() {
        ExtremalKind::LayerSup
    } else {
        ExtremalKind::LayerTheta
    }
}

/// Uniform-norm experiment: `error(n) = ||f_n||_inf`.
pub fn run_theorem1(
    profile: &SmoothnessProfile,
    theta: f64,
    nmin: u32,
    nmax: u32,
    sup: SupSettings,
) -> Result<RateReport> {
    check_range(nmin, nmax)?;
    rate_exponents(profile, theta, f64::INFINITY)?;
    let kind = theorem1_kind(theta);
    let results: Vec<(u32, f64)> = (nmin..=nmax)
        .into_par_iter()
        .map(|n| {
            Ok((
                n,
                sup_norm(
                    &extremal_for(profile, theta, n, kind)?,
                    sup.resolution,
                    sup.refine_steps,
                ),
            ))
        })
        .collect::<Result<_>>()?;
    let params = RateParams {
        d: profile.dim(),
        r: profile.r().to_vec(),
        theta: format_exponent(theta),
        q: "inf".into(),
        kind,
        quadrature: None,
        sup: Some(sup),
    };
    assemble(profile, theta, f64::INFINITY, results, params)
}

/// `L_q` experiment for `1 < q < inf`: `error(n) = ||f_n||_q`.
pub fn run_theorem2(
    profile: &SmoothnessProfile,
    theta: f64,
    q: f64,
    nmin: u32,
    nmax: u32,
    quad: &QuadratureSpec,
) -> Result<RateReport> {
    check_range(nmin, nmax)?;
    if !q.is_finite() {
        return Err(Error::Validation(
            "q must be finite here; use the uniform-norm experiment for q = inf".into(),
        ));
    }
    rate_exponents(profile, theta, q)?;
    quad.validate()?;
    let kind = theorem2_kind(theta, q);
    let mut results = Vec::new();
    for n in nmin..=nmax {
        let f = extremal_for(profile, theta, n, kind)?;
        results.push((n, lq_norm(&f, q, quad)?.value));
    }
    let params = RateParams {
        d: profile.dim(),
        r: profile.r().to_vec(),
        theta: format_exponent(theta),
        q: format_exponent(q),
        kind,
        quadrature: Some(*quad),
        sup: None,
    };
    assemble(profile, theta, q, results, params)
}

/// Spread of `||A*_s||_p 2^{-||s||_1 (1 - 1/p)}` over a set of blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub min: f64,
    pub max: f64,
    pub bracket: f64,
    pub count: usize,
}

pub fn verify_lemma_brackets(s_set: &[MultiIndex], p: f64) -> Result<BracketReport> {
    if s_set.is_empty() {
        return Err(Error::Validation("bracket check needs at least one block".into()));
    }
    let power = if p.is_infinite() { 1.0 } else { 1.0 - 1.0 / p };
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for s in s_set {
        let v = block_lp_norm(s, p)? * (-(s.l1() as f64) * power).exp2();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(BracketReport {
        min: lo,
        max: hi,
        bracket: hi / lo,
        count: s_set.len(),
    })
}
