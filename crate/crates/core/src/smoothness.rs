//! Smoothness vectors and the direction vectors derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A validated smoothness vector `r` together with its minimum, the
/// multiplicity of that minimum and the normalized direction `gamma = r / r_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessProfile {
    r: Vec<f64>,
    r_min: f64,
    nu: usize,
    gamma: Vec<f64>,
}

impl SmoothnessProfile {
    /// Validates `r` and derives `r_min`, `nu` and `gamma`.
    ///
    /// The multiplicity `nu` counts coordinates exactly equal to the minimum;
    /// no tolerance is applied. Callers who want nearly equal minima merged
    /// must round beforehand.
    pub fn new(r: &[f64]) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::Validation("smoothness vector must have d >= 1 entries".into()));
        }
        for (j, &rj) in r.iter().enumerate() {
            if !rj.is_finite() || rj <= 0.0 {
                return Err(Error::Validation(format!(
                    "smoothness coordinate r[{j}] = {rj} must be finite and > 0"
                )));
            }
        }
        let r_min = r.iter().copied().fold(f64::INFINITY, f64::min);
        let nu = r.iter().filter(|&&rj| rj == r_min).count();
        let gamma = r.iter().map(|&rj| if rj == r_min { 1.0 } else { rj / r_min }).collect();
        Ok(Self {
            r: r.to_vec(),
            r_min,
            nu,
            gamma,
        })
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Whether every coordinate attains the minimum (`gamma` identically 1).
    pub fn is_isotropic(&self) -> bool {
        self.nu == self.r.len()
    }

    /// Direction vector of the shifted smoothness `r - shift`:
    /// entry `j` is `(r_j - shift) / (r_min - shift)`.
    ///
    /// Shift 1 gives the vector used for the uniform-norm rates, shift
    /// `1 - 1/q` the one used for `L_q`.
    pub fn gamma_bar(&self, shift: f64) -> Result<Vec<f64>> {
        if !shift.is_finite() || shift >= self.r_min {
            return Err(Error::Domain(format!("shift {shift} must be < r_min = {}", self.r_min)));
        }
        let denom = self.r_min - shift;
        Ok(self
            .r
            .iter()
            .map(|&rj| if rj == self.r_min { 1.0 } else { (rj - shift) / denom })
            .collect())
    }
}

/// Free-function form of [`SmoothnessProfile::new`].
pub fn analyze_smoothness(r: &[f64]) -> Result<SmoothnessProfile> {
    SmoothnessProfile::new(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_coordinates() {
        let p = analyze_smoothness(&[2.0, 2.0]).unwrap();
        assert_eq!(p.r_min(), 2.0);
        assert_eq!(p.nu(), 2);
        assert_eq!(p.gamma(), &[1.0, 1.0]);
        assert!(p.is_isotropic());
    }

    #[test]
    fn direct_division() {
        let p = analyze_smoothness(&[1.5, 3.0]).unwrap();
        assert_eq!(p.r_min(), 1.5);
        assert_eq!(p.nu(), 1);
        assert_eq!(p.gamma(), &[1.0, 2.0]);

        let p = analyze_smoothness(&[2.0, 2.0, 4.0]).unwrap();
        assert_eq!(p.nu(), 2);
        assert_eq!(p.gamma(), &[1.0, 1.0, 2.0]);
    }

    #[test]
    fn unsorted_input() {
        let p = analyze_smoothness(&[3.0, 1.5, 1.5]).unwrap();
        assert_eq!(p.r_min(), 1.5);
        assert_eq!(p.nu(), 2);
        assert_eq!(p.gamma(), &[2.0, 1.0, 1.0]);
    }

    #[test]
    fn rejects_non_positive() {
        let err = analyze_smoothness(&[1.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("r[1]"), "{err}");
        assert!(analyze_smoothness(&[-1.0]).is_err());
        assert!(analyze_smoothness(&[]).is_err());
        assert!(analyze_smoothness(&[f64::NAN]).is_err());
    }

    #[test]
    fn gamma_bar_examples() {
        let p = analyze_smoothness(&[2.0, 2.0]).unwrap();
        assert_eq!(p.gamma_bar(1.0).unwrap(), vec![1.0, 1.0]);
        let p = analyze_smoothness(&[2.0, 3.0]).unwrap();
        assert_eq!(p.gamma_bar(1.0).unwrap(), vec![1.0, 2.0]);
        let p = analyze_smoothness(&[1.5, 2.0]).unwrap();
        assert_eq!(p.gamma_bar(0.5).unwrap(), vec![1.0, 1.5]);
    }

    #[test]
    fn gamma_bar_domain() {
        let p = analyze_smoothness(&[2.0, 3.0]).unwrap();
        assert!(matches!(p.gamma_bar(2.0), Err(Error::Domain(_))));
        assert!(p.gamma_bar(2.5).is_err());
    }

    proptest! {
        #[test]
        fn gamma_bar_zero_is_gamma(r in proptest::collection::vec(0.1f64..10.0, 1..5)) {
            let p = analyze_smoothness(&r).unwrap();
            prop_assert_eq!(p.gamma_bar(0.0).unwrap(), p.gamma().to_vec());
        }

        #[test]
        fn gamma_bar_ordering(
            r in proptest::collection::vec(0.5f64..10.0, 1..5),
            frac in 0.0f64..0.99,
        ) {
            let p = analyze_smoothness(&r).unwrap();
            let shift = frac * p.r_min();
            let gb = p.gamma_bar(shift).unwrap();
            for j in 0..r.len() {
                if r[j] == p.r_min() {
                    prop_assert_eq!(gb[j], 1.0);
                } else {
                    prop_assert!(gb[j] >= 1.0);
                }
                for k in 0..r.len() {
                    if r[j] <= r[k] {
                        prop_assert!(gb[j] <= gb[k]);
                    }
                }
            }
        }
    }
}
