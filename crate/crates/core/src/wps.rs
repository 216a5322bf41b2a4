//! Intersection numbers on weighted projective spaces and weighted blowups.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{int, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WpsError {
    #[error("weights must be positive")]
    NonPositiveWeight,
    #[error("need at least {need} weights, got {got}")]
    TooFewWeights { need: usize, got: usize },
    #[error("a curve in P({n_weights}) needs {expected} degrees, got {got}")]
    DegreeCount {
        n_weights: usize,
        expected: usize,
        got: usize,
    },
    #[error("degrees must be positive")]
    NonPositiveDegree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightedProjectiveSpace {
    weights: Vec<u64>,
}

impl WeightedProjectiveSpace {
    pub fn new(weights: Vec<u64>) -> Result<Self, WpsError> {
        if weights.contains(&0) {
            return Err(WpsError::NonPositiveWeight);
        }
        if weights.len() < 2 {
            return Err(WpsError::TooFewWeights {
                need: 2,
                got: weights.len(),
            });
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len() - 1
    }

    fn weight_sum(&self) -> Rational {
        int(self.weights.iter().sum::<u64>() as i64)
    }

    fn weight_product(&self) -> Rational {
        self.weights
            .iter()
            .fold(int(1), |acc, &w| acc * int(w as i64))
    }
}

/// Complete intersection curve cut out by hypersurfaces of the given degrees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CICurve {
    ambient: WeightedProjectiveSpace,
    degrees: Vec<u64>,
}

impl CICurve {
    pub fn new(ambient: WeightedProjectiveSpace, degrees: Vec<u64>) -> Result<Self, WpsError> {
        let expected = ambient.weights.len() - 2;
        if degrees.len() != expected {
            return Err(WpsError::DegreeCount {
                n_weights: ambient.weights.len(),
                expected,
                got: degrees.len(),
            });
        }
        if degrees.contains(&0) {
            return Err(WpsError::NonPositiveDegree);
        }
        Ok(Self { ambient, degrees })
    }

    pub fn ambient(&self) -> &WeightedProjectiveSpace {
        &self.ambient
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }
}

/// Degree of `O(k)` on the curve: `k · Π degrees / Π weights`.
pub fn pair(c: &CICurve, k: i64) -> Rational {
    let degs = c.degrees.iter().fold(int(1), |acc, &d| acc * int(d as i64));
    int(k) * degs / c.ambient.weight_product()
}

/// Discrepancy of the exceptional divisor of the weighted blowup with
/// weights `w/m`: `Σ w / m - 1`.
pub fn wblowup_discrepancy(index: u64, weights: &[u64]) -> Rational {
    let sum: u64 = weights.iter().sum();
    int(sum as i64) / int(index as i64) - int(1)
}

/// Codiscrepancy of a component appearing with multiplicity `mult` in an
/// exceptional divisor of discrepancy `disc`.
pub fn cdisc_from_blowup(mult: u64, disc: &Rational) -> Rational {
    int(mult as i64) * disc
}

/// Arithmetic genus of a degree `d` curve on a weighted plane, with a
/// caller-supplied orbifold correction:
/// `p_a = 1 + ((d - Σ w) d / Π w - correction) / 2`.
pub fn subadjunction_genus(
    ambient: &WeightedProjectiveSpace,
    d: u64,
    correction: &Rational,
) -> Result<Rational, WpsError> {
    if ambient.weights.len() != 3 {
        return Err(WpsError::DegreeCount {
            n_weights: ambient.weights.len(),
            expected: 3,
            got: ambient.weights.len(),
        });
    }
    let d = int(d as i64);
    let k_dot = (&d - ambient.weight_sum()) * &d / ambient.weight_product();
    Ok(int(1) + (k_dot - correction) / int(2))
}
