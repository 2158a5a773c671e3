//! Finite linear combinations of block kernels.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cross::CrossSpec;
use crate::error::{check_dim, Error, Result};
use crate::kernels::{eval_a_star_unchecked, MultiIndex};
use crate::norms::block_lp_norm;
use crate::smoothness::SmoothnessProfile;

/// `sum_s c_s A*_s` with canonical (lexicographic) term order and no zero
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSum {
    d: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TermDoc {
    c: f64,
    s: Vec<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BlockSumDoc {
    d: usize,
    terms: Vec<TermDoc>,
}

impl BlockSum {
    pub fn empty(d: usize) -> Self {
        Self {
            d,
            terms: BTreeMap::new(),
        }
    }

    /// Builds a sum from `(s, c)` pairs; repeated indices are merged by
    /// addition and zero coefficients dropped.
    pub fn from_terms<I>(d: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        if d == 0 {
            return Err(Error::Validation("dimension must be >= 1".into()));
        }
        let mut out = Self::empty(d);
        for (s, c) in terms {
            out.add_term(s, c)?;
        }
        Ok(out)
    }

    pub fn single(s: MultiIndex, c: f64) -> Result<Self> {
        Self::from_terms(s.dim(), [(s, c)])
    }

    pub fn add_term(&mut self, s: MultiIndex, c: f64) -> Result<()> {
        check_dim(self.d, s.dim())?;
        if !c.is_finite() {
            return Err(Error::Validation(format!("coefficient for {s} is not finite")));
        }
        let entry = self.terms.entry(s).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(s, &c)| (s, c))
    }

    pub fn coefficient(&self, s: &MultiIndex) -> f64 {
        self.terms.get(s).copied().unwrap_or(0.0)
    }

    /// Largest scale per coordinate over all terms (zeros when empty).
    pub fn max_scales(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.d];
        for s in self.terms.keys() {
            for (o, &v) in out.iter_mut().zip(s.as_slice()) {
                *o = (*o).max(v);
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        if factor == 0.0 {
            return Self::empty(self.d);
        }
        Self {
            d: self.d,
            terms: self.terms.iter().map(|(s, &c)| (s.clone(), c * factor)).collect(),
        }
    }

    /// Pointwise value `sum_s c_s A*_s(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.d, x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(s, &c)| c * eval_a_star_unchecked(s.as_slice(), x))
            .sum()
    }

    /// Keeps exactly the terms with `(s, gamma) <= n`.
    pub fn project_cross(&self, spec: &CrossSpec) -> Result<Self> {
        check_dim(self.d, spec.dim())?;
        Ok(Self {
            d: self.d,
            terms: self
                .terms
                .iter()
                .filter(|(s, _)| spec.contains(s))
                .map(|(s, &c)| (s.clone(), c))
                .collect(),
        })
    }

    /// Decomposition Besov norm with each block norm replaced by
    /// `|c_s| ||A*_s||_p`:
    ///
    /// ```text
    /// ( sum_s 2^{(s,r) theta} (|c_s| ||A*_s||_p)^theta )^{1/theta}
    /// ```
    ///
    /// `theta = inf` takes the supremum; `p = inf` uses the exact sup norm of
    /// each block.
    pub fn surrogate_besov_norm(&self, profile: &SmoothnessProfile, theta: f64, p: f64) -> Result<f64> {
        check_dim(self.d, profile.dim())?;
        if !(theta >= 1.0) {
            return Err(Error::Validation(format!("theta must be in [1, inf], got {theta}")));
        }
        if !(p >= 1.0) {
            return Err(Error::Validation(format!("p must be in [1, inf], got {p}")));
        }
        let mut weighted = Vec::with_capacity(self.terms.len());
        for (s, &c) in &self.terms {
            let w = s.dot(profile.r()).exp2() * c.abs() * block_lp_norm(s, p)?;
            weighted.push(w);
        }
        if weighted.is_empty() {
            return Ok(0.0);
        }
        if theta.is_infinite() {
            return Ok(weighted.iter().copied().fold(0.0, f64::max));
        }
        // factor out the largest entry so the powers stay in range
        let top = weighted.iter().copied().fold(0.0, f64::max);
        let sum: f64 = weighted.iter().map(|w| (w / top).powf(theta)).sum();
        Ok(top * sum.powf(1.0 / theta))
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = BlockSumDoc {
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|(s, &c)| TermDoc {
                    c,
                    s: s.as_slice().to_vec(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses the JSON document; terms may come in any order.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: BlockSumDoc = serde_json::from_str(text)?;
        let mut terms = Vec::with_capacity(doc.terms.len());
        for t in doc.terms {
            terms.push((MultiIndex::new(t.s)?, t.c));
        }
        Self::from_terms(doc.d, terms)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
