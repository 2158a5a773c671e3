//! Step hyperbolic cross index sets, dyadic layers and lacunary tail sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::MultiIndex;

/// Relative slack for comparisons of `(s, gamma)` against integer levels.
const LEVEL_SLACK: f64 = 1e-9;

fn within_level(value: f64, n: f64) -> bool {
    value <= n + LEVEL_SLACK * (1.0 + n.abs())
}

fn level_of(value: f64) -> u64 {
    (value + LEVEL_SLACK * (1.0 + value.abs())).floor() as u64
}

fn validate_direction(name: &str, g: &[f64]) -> Result<()> {
    if g.is_empty() {
        return Err(Error::Validation(format!("{name} must have d >= 1 entries")));
    }
    for (j, &v) in g.iter().enumerate() {
        if !v.is_finite() || v < 1.0 {
            return Err(Error::Validation(format!("{name}[{j}] = {v} must be finite and >= 1")));
        }
    }
    let min = g.iter().copied().fold(f64::INFINITY, f64::min);
    if min != 1.0 {
        return Err(Error::Validation(format!("min of {name} must be exactly 1, got {min}")));
    }
    Ok(())
}

/// The cross `{s : (s, gamma) <= n}` with an optional auxiliary direction
/// used by the anisotropic lacunary sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSpec {
    gamma: Vec<f64>,
    n: u32,
    alt_gamma: Option<Vec<f64>>,
}

impl CrossSpec {
    pub fn new(gamma: Vec<f64>, n: u32) -> Result<Self> {
        validate_direction("gamma", &gamma)?;
        Ok(Self {
            gamma,
            n,
            alt_gamma: None,
        })
    }

    /// Attaches `alt_gamma`, which must agree with `gamma` where `gamma_j = 1`
    /// and lie strictly between 1 and `gamma_j` elsewhere.
    pub fn with_alt_gamma(mut self, alt: Vec<f64>) -> Result<Self> {
        validate_alt(&self.gamma, &alt)?;
        self.alt_gamma = Some(alt);
        Ok(self)
    }

    /// Cross with `gamma = (1, ..., 1)`.
    pub fn isotropic(d: usize, n: u32) -> Result<Self> {
        Self::new(vec![1.0; d], n)
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn alt_gamma(&self) -> Option<&[f64]> {
        self.alt_gamma.as_deref()
    }

    /// Whether `(s, gamma) <= n`.
    pub fn contains(&self, s: &MultiIndex) -> bool {
        s.dim() == self.dim() && within_level(s.dot(&self.gamma), self.n as f64)
    }
}

fn validate_alt(gamma: &[f64], alt: &[f64]) -> Result<()> {
    if alt.len() != gamma.len() {
        return Err(Error::DimensionMismatch {
            expected: gamma.len(),
            got: alt.len(),
        });
    }
    for (j, (&g, &a)) in gamma.iter().zip(alt).enumerate() {
        let ok = if g == 1.0 { a == 1.0 } else { 1.0 < a && a < g };
        if !ok {
            return Err(Error::Validation(format!(
                "alt_gamma[{j}] = {a} must equal gamma where gamma = 1 and lie in (1, {g}) otherwise"
            )));
        }
    }
    Ok(())
}

/// Visits every `s` with `(s, w) <= bound` in lexicographic order.
fn visit_below(w: &[f64], bound: f64, mut visit: impl FnMut(&[u32])) {
    fn rec(w: &[f64], bound: f64, partial: f64, cur: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
        let j = cur.len();
        if j == w.len() {
            visit(cur);
            return;
        }
        let mut v = 0u32;
        loop {
            let level = partial + v as f64 * w[j];
            if !within_level(level, bound) {
                break;
            }
            cur.push(v);
            rec(w, bound, level, cur, visit);
            cur.pop();
            v += 1;
        }
    }
    let mut cur = Vec::with_capacity(w.len());
    rec(w, bound, 0.0, &mut cur, &mut visit);
}

/// All `s` in `Z_+^d` with `(s, gamma) <= n`, lexicographically ordered.
pub fn enumerate_cross(spec: &CrossSpec) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    visit_below(&spec.gamma, spec.n as f64, |s| out.push(MultiIndex::from(s.to_vec())));
    out
}

/// All `s` in `Z_+^d` with `s_1 + ... + s_d = m`, lexicographically ordered.
pub fn enumerate_layer(d: usize, m: u32) -> Vec<MultiIndex> {
    fn rec(d: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if cur.len() + 1 == d {
            cur.push(left);
            out.push(MultiIndex::from(cur.clone()));
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(d, left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if d == 0 {
        return out;
    }
    rec(d, m, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Binomial coefficient as a float (exact for the sizes used here).
pub fn binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n.saturating_sub(k));
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shell-by-shell sum of `2^{-alpha (s, weight)}` over `{s : (s, constraint) >= n}`.
///
/// Shells `{m <= (s, constraint) < m + 1}` are added in increasing `m`. Each
/// shell has at most `C(m + d, d)` members and every member contributes at
/// most `2^{-alpha m}` (this needs `constraint <= weight` coordinatewise), so
/// the remaining tail is bounded by a ratio-test geometric majorant. The sum
/// stops once that majorant drops below `tol`.
pub fn lacunary_tail_sum(weight: &[f64], constraint: &[f64], alpha: f64, n: u32, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("tol must be > 0, got {tol}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Validation(format!("alpha must be finite and > 0, got {alpha}")));
    }
    validate_direction("weight", weight)?;
    validate_direction("constraint", constraint)?;
    if weight.len() != constraint.len() {
        return Err(Error::DimensionMismatch {
            expected: weight.len(),
            got: constraint.len(),
        });
    }
    if let Some(j) = (0..weight.len()).find(|&j| constraint[j] > weight[j]) {
        return Err(Error::Validation(format!(
            "constraint[{j}] = {} exceeds weight[{j}] = {}; the shell bound needs constraint <= weight",
            constraint[j], weight[j]
        )));
    }
    let d = weight.len() as u64;
    let majorant = |k: u64| binomial(k + d, d) * (-alpha * k as f64).exp2();

    let mut total = 0.0;
    let mut m = n as u64;
    loop {
        let mut shell = Vec::new();
        visit_below(constraint, (m + 1) as f64, |s| {
            let level = s.iter().zip(constraint).map(|(&v, &c)| v as f64 * c).sum::<f64>();
            if level_of(level) == m {
                let w = s.iter().zip(weight).map(|(&v, &g)| v as f64 * g).sum::<f64>();
                shell.push((-alpha * w).exp2());
            }
        });
        total += pairwise_sum(&shell);

        let next = m + 1;
        let ratio = (next + 1 + d) as f64 / (next + 1) as f64 * (-alpha).exp2();
        if ratio < 1.0 {
            let bound = majorant(next) / (1.0 - ratio);
            if bound < tol {
                break;
            }
        }
        m = next;
        if m > n as u64 + 100_000 {
            return Err(Error::Domain("lacunary sum did not reach tolerance".into()));
        }
    }
    Ok(total)
}

/// Fixed-order pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 8 => v.iter().sum(),
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vecs(v: &[MultiIndex]) -> Vec<Vec<u32>> {
        v.iter().map(|s| s.as_slice().to_vec()).collect()
    }

    #[test]
    fn cross_examples() {
        let c = enumerate_cross(&CrossSpec::new(vec![1.0, 1.0], 2).unwrap());
        assert_eq!(
            vecs(&c),
            vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1], vec![2, 0]]
        );
        assert_eq!(
            vecs(&enumerate_cross(&CrossSpec::new(vec![1.0], 0).unwrap())),
            vec![vec![0]]
        );
        let c = enumerate_cross(&CrossSpec::new(vec![1.0, 2.0], 2).unwrap());
        assert_eq!(vecs(&c), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![2, 0]]);
    }

    #[test]
    fn non_integer_direction_rounding() {
        // 10 * 1.1 rounds above 11 in binary floating point
        let spec = CrossSpec::new(vec![1.0, 1.1], 11).unwrap();
        assert!(spec.contains(&MultiIndex::from(vec![0, 10])));
        assert!(!spec.contains(&MultiIndex::from(vec![1, 10])));
    }

    #[test]
    fn spec_validation() {
        assert!(CrossSpec::new(vec![1.5, 2.0], 3).is_err());
        assert!(CrossSpec::new(vec![0.5, 1.0], 3).is_err());
        assert!(CrossSpec::new(vec![], 3).is_err());
        let c = CrossSpec::new(vec![1.0, 2.0], 3).unwrap();
        assert!(c.clone().with_alt_gamma(vec![1.0, 1.5]).is_ok());
        assert!(c.clone().with_alt_gamma(vec![1.0, 2.0]).is_err());
        assert!(c.clone().with_alt_gamma(vec![1.2, 1.5]).is_err());
        assert!(c.with_alt_gamma(vec![1.0]).is_err());
    }

    #[test]
    fn layer_examples() {
        assert_eq!(
            vecs(&enumerate_layer(2, 3)),
            vec![vec![0, 3], vec![1, 2], vec![2, 1], vec![3, 0]]
        );
        assert_eq!(vecs(&enumerate_layer(1, 5)), vec![vec![5]]);
        assert_eq!(enumerate_layer(3, 2).len(), 6);
        for d in 1..5usize {
            for m in 0..8u32 {
                let layer = enumerate_layer(d, m);
                assert_eq!(layer.len() as f64, binomial(m as u64 + d as u64 - 1, d as u64 - 1));
                assert!(layer.windows(2).all(|w| w[0] < w[1]));
                assert!(layer.iter().all(|s| s.l1() == m as u64));
            }
        }
    }

    #[test]
    fn cross_cardinality() {
        for d in 1..4usize {
            for n in 0..10u32 {
                let c = enumerate_cross(&CrossSpec::isotropic(d, n).unwrap());
                let expect: f64 = (0..=n as u64).map(|m| binomial(m + d as u64 - 1, d as u64 - 1)).sum();
                assert_eq!(c.len() as f64, expect);
                assert!(c.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    /// Direct double loop over a large box.
    fn brute_tail_2d(w: [f64; 2], c: [f64; 2], alpha: f64, n: u32) -> f64 {
        let mut total = 0.0;
        for a in 0..400u32 {
            for b in 0..400u32 {
                let lvl = a as f64 * c[0] + b as f64 * c[1];
                if lvl + 1e-9 >= n as f64 {
                    total += (-alpha * (a as f64 * w[0] + b as f64 * w[1])).exp2();
                }
            }
        }
        total
    }

    #[test]
    fn tail_sum_examples() {
        let v = lacunary_tail_sum(&[1.0], &[1.0], 1.0, 3, 1e-14).unwrap();
        assert!((v - 0.25).abs() < 1e-13);
        // (n + 2) 2^{1 - n} at n = 6
        let v = lacunary_tail_sum(&[1.0, 1.0], &[1.0, 1.0], 1.0, 6, 1e-14).unwrap();
        assert!((v - 0.25).abs() < 1e-12, "{v}");
        for n in 3..13u32 {
            let v = lacunary_tail_sum(&[1.0, 1.0], &[1.0, 1.0], 1.0, n, 1e-14).unwrap();
            let brute = brute_tail_2d([1.0, 1.0], [1.0, 1.0], 1.0, n);
            assert!((v - brute).abs() < 1e-12);
        }
        let v = lacunary_tail_sum(&[1.0, 2.0], &[1.0, 1.5], 1.0, 7, 1e-14).unwrap();
        assert!((v - brute_tail_2d([1.0, 2.0], [1.0, 1.5], 1.0, 7)).abs() < 1e-12);
    }

    #[test]
    fn tail_sum_errors() {
        assert!(lacunary_tail_sum(&[1.0], &[1.0], 1.0, 3, 0.0).is_err());
        assert!(lacunary_tail_sum(&[1.0], &[1.0], 0.0, 3, 1e-9).is_err());
        assert!(lacunary_tail_sum(&[1.0, 1.5], &[1.0, 2.0], 1.0, 3, 1e-9).is_err());
    }

    #[test]
    fn one_dimensional_geometric() {
        for alpha in [0.3, 1.0, 2.5] {
            for n in 0..10u32 {
                let v = lacunary_tail_sum(&[1.0], &[1.0], alpha, n, 1e-13).unwrap();
                let exact = (-alpha * n as f64).exp2() / (1.0 - (-alpha).exp2());
                assert!((v - exact).abs() < 1e-12, "alpha={alpha} n={n}");
            }
        }
    }

    proptest! {
        #[test]
        fn cross_is_nested(g2 in 1.0f64..3.0, n in 0u32..12) {
            let a = enumerate_cross(&CrossSpec::new(vec![1.0, g2], n).unwrap());
            let b = enumerate_cross(&CrossSpec::new(vec![1.0, g2], n + 1).unwrap());
            for s in &a {
                prop_assert!(b.binary_search(s).is_ok());
            }
        }
    }
}
