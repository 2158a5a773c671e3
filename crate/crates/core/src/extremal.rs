//! Extremal block sums for the lower bounds of the rate theorems.
//!
//! Every construction lives on or beyond the layer `||s||_1 = n + 1`, so its
//! cross projection at level `n` (with `gamma = 1`) vanishes, and every one
//! is scaled to unit surrogate Besov norm (`p = 1`).

use serde::{Deserialize, Serialize};

use crate::blocksum::BlockSum;
use crate::cross::enumerate_layer;
use crate::error::{check_dim, Error, Result};
use crate::kernels::MultiIndex;
use crate::smoothness::SmoothnessProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremalKind {
    /// `2^{-n r_1} n^{-(d-1)/theta}` on the whole layer.
    LayerTheta,
    /// `2^{-n r_1}` on the whole layer.
    LayerSup,
    /// `2^{-n r_1}` on one index of the layer.
    Single,
}

impl std::fmt::Display for ExtremalKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::LayerTheta => "layer_theta",
            Self::LayerSup => "layer_sup",
            Self::Single => "single",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalSpec {
    profile: SmoothnessProfile,
    theta: f64,
    n: u32,
    kind: ExtremalKind,
    tilde_s: Option<MultiIndex>,
}

impl ExtremalSpec {
    pub fn new(profile: SmoothnessProfile, theta: f64, n: u32, kind: ExtremalKind) -> Result<Self> {
        if profile.nu() != profile.dim() {
            return Err(Error::Validation(format!(
                "extremal functions need all r_j equal (nu = d); got r = {:?}",
                profile.r()
            )));
        }
        if !(theta >= 1.0) {
            return Err(Error::Validation(format!("theta must be in [1, inf], got {theta}")));
        }
        if n == 0 {
            return Err(Error::Validation("n must be >= 1".into()));
        }
        if kind == ExtremalKind::LayerTheta && theta.is_infinite() {
            return Err(Error::Validation(
                "theta = inf needs kind layer_sup, not layer_theta".into(),
            ));
        }
        Ok(Self {
            profile,
            theta,
            n,
            kind,
            tilde_s: None,
        })
    }

    /// Overrides the default single index `(n+1, 0, ..., 0)`.
    pub fn with_tilde_s(mut self, s: MultiIndex) -> Result<Self> {
        check_dim(self.profile.dim(), s.dim())?;
        if s.l1() != u64::from(self.n) + 1 {
            return Err(Error::Validation(format!(
                "tilde s must lie on the layer ||s||_1 = {}, got {s}",
                self.n + 1
            )));
        }
        self.tilde_s = Some(s);
        Ok(self)
    }

    pub fn profile(&self) -> &SmoothnessProfile {
        &self.profile
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn kind(&self) -> ExtremalKind {
        self.kind
    }

    pub fn tilde_s(&self) -> MultiIndex {
        self.tilde_s.clone().unwrap_or_else(|| {
            let mut v = vec![0; self.profile.dim()];
            v[0] = self.n + 1;
            MultiIndex::from(v)
        })
    }
}

/// The construction before normalization.
pub fn raw_extremal(spec: &ExtremalSpec) -> BlockSum {
    let d = spec.profile.dim();
    let n = f64::from(spec.n);
    let base = (-n * spec.profile.r_min()).exp2();
    let layer = |c: f64| BlockSum::from_terms(d, enumerate_layer(d, spec.n + 1).into_iter().map(|s| (s, c)));
    let out = match spec.kind {
        ExtremalKind::LayerTheta => layer(base * n.powf(-((d - 1) as f64) / spec.theta)),
        ExtremalKind::LayerSup => layer(base),
        ExtremalKind::Single => BlockSum::single(spec.tilde_s(), base),
    };
    out.expect("layer indices have the profile dimension")
}

/// Factor `C` with `||C * raw||_surrogate = 1` (the constants `C_6`, `C_7`).
pub fn normalization_constant(spec: &ExtremalSpec) -> Result<f64> {
    let norm = raw_extremal(spec).surrogate_besov_norm(&spec.profile, spec.theta, 1.0)?;
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Degenerate(format!(
            "surrogate norm of the raw construction is {norm}"
        )));
    }
    Ok(1.0 / norm)
}

pub fn make_extremal(spec: &ExtremalSpec) -> Result<BlockSum> {
    Ok(raw_extremal(spec).scale(normalization_constant(spec)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross::CrossSpec;

    fn profile(r: &[f64]) -> SmoothnessProfile {
        SmoothnessProfile::new(r).unwrap()
    }

    #[test]
    fn single_raw_example() {
        let spec = ExtremalSpec::new(profile(&[2.0]), 1.0, 3, ExtremalKind::Single).unwrap();
        let f = raw_extremal(&spec);
        assert_eq!(f.len(), 1);
        assert_eq!(f.coefficient(&MultiIndex::from(vec![4])), 2f64.powi(-6));
    }

    #[test]
    fn layer_sup_example() {
        let spec = ExtremalSpec::new(profile(&[2.0, 2.0]), f64::INFINITY, 4, ExtremalKind::LayerSup).unwrap();
        let f = make_extremal(&spec).unwrap();
        assert_eq!(f.len(), 6);
        let c: Vec<f64> = f.terms().map(|(_, c)| c).collect();
        assert!(c.iter().all(|&v| v == c[0]));
        assert!(f.terms().all(|(s, _)| s.l1() == 5));
    }

    #[test]
    fn unit_norm_and_empty_projection() {
        let cases = [
            (vec![2.0, 2.0], 1.0, ExtremalKind::LayerTheta),
            (vec![2.0, 2.0], 4.0, ExtremalKind::LayerTheta),
            (vec![2.0, 2.0], f64::INFINITY, ExtremalKind::LayerSup),
            (vec![1.5], 1.0, ExtremalKind::Single),
            (vec![1.5, 1.5, 1.5], 2.0, ExtremalKind::Single),
        ];
        for (r, theta, kind) in cases {
            for n in 1..9 {
                let p = profile(&r);
                let spec = ExtremalSpec::new(p.clone(), theta, n, kind).unwrap();
                let f = make_extremal(&spec).unwrap();
                let norm = f.surrogate_besov_norm(&p, theta, 1.0).unwrap();
                assert!((norm - 1.0).abs() < 1e-12, "{kind} n={n}: {norm}");
                assert!(f
                    .project_cross(&CrossSpec::isotropic(r.len(), n).unwrap())
                    .unwrap()
                    .is_empty());
            }
        }
    }

    #[test]
    fn tilde_s_override() {
        let spec = ExtremalSpec::new(profile(&[2.0, 2.0]), 1.0, 3, ExtremalKind::Single).unwrap();
        assert_eq!(spec.tilde_s(), MultiIndex::from(vec![4, 0]));
        let moved = spec.clone().with_tilde_s(MultiIndex::from(vec![2, 2])).unwrap();
        assert_eq!(make_extremal(&moved).unwrap().len(), 1);
        assert!(spec.clone().with_tilde_s(MultiIndex::from(vec![2, 1])).is_err());
        assert!(spec.with_tilde_s(MultiIndex::from(vec![4])).is_err());
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(ExtremalSpec::new(profile(&[2.0, 3.0]), 1.0, 3, ExtremalKind::Single).is_err());
        assert!(ExtremalSpec::new(profile(&[2.0]), 0.5, 3, ExtremalKind::Single).is_err());
        assert!(ExtremalSpec::new(profile(&[2.0]), 1.0, 0, ExtremalKind::Single).is_err());
        assert!(ExtremalSpec::new(profile(&[2.0]), f64::INFINITY, 3, ExtremalKind::LayerTheta).is_err());
    }
}
