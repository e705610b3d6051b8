// SPDX-License-Identifier: Apache-2.0
use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibPoint {
    pub sparsity: f64,
    pub accuracy: f64,
}

/// Anchor points of an accuracy-versus-sparsity curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CalibPoint>", into = "Vec<CalibPoint>")]
pub struct AccuracyCalib {
    points: Vec<CalibPoint>,
}

impl AccuracyCalib {
    /// Points may come in any order; they are sorted by sparsity.
    pub fn new(mut points: Vec<CalibPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("calibration"));
        }
        for p in &points {
            if !(0.0..=1.0).contains(&p.sparsity) || !(0.0..=1.0).contains(&p.accuracy) {
                return Err(Error::InvalidParam(format!(
                    "calibration point ({}, {}) outside [0, 1]",
                    p.sparsity, p.accuracy
                )));
            }
        }
        points.sort_by(|a, b| a.sparsity.total_cmp(&b.sparsity));
        if points.windows(2).any(|w| w[0].sparsity == w[1].sparsity) {
            return Err(Error::InvalidParam("calibration sparsities must be distinct".into()));
        }
        Ok(Self { points })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(sparsity, accuracy)| CalibPoint { sparsity, accuracy })
                .collect(),
        )
    }

    /// Transformer on WikiText-2: flat to 70 %, then the pruned results
    /// (89.85 % sparse at 96.13 %, 92 % sparse at 94.45 %).
    pub fn transformer() -> Self {
        Self::from_pairs(&[(0.0, 0.985), (0.70, 0.985), (0.8985, 0.9613), (0.92, 0.9445)])
            .expect("builtin calibration is valid")
    }

    pub fn points(&self) -> &[CalibPoint] {
        &self.points
    }

    pub fn eval(&self, s: f64) -> f64 {
        let p = &self.points;
        if p.len() == 1 {
            return p[0].accuracy.clamp(0.0, 1.0);
        }
        // Segment index: the first segment for s below range, the last above.
        let i = p.partition_point(|q| q.sparsity <= s).clamp(1, p.len() - 1);
        let (a, b) = (p[i - 1], p[i]);
        let y = a.accuracy + (s - a.sparsity) * (b.accuracy - a.accuracy) / (b.sparsity - a.sparsity);
        y.clamp(0.0, 1.0)
    }
}

impl Default for AccuracyCalib {
    fn default() -> Self {
        Self::transformer()
    }
}

impl TryFrom<Vec<CalibPoint>> for AccuracyCalib {
    type Error = Error;

    fn try_from(v: Vec<CalibPoint>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AccuracyCalib> for Vec<CalibPoint> {
    fn from(c: AccuracyCalib) -> Self {
        c.points
    }
}

/// Accuracy the calibrated model is expected to reach at overall sparsity `s`.
pub fn accuracy_oracle(s: f64, calib: &AccuracyCalib) -> f64 {
    calib.eval(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors_and_interpolation() {
        let c = AccuracyCalib::transformer();
        assert_eq!(accuracy_oracle(0.0, &c), 0.985);
        assert!((accuracy_oracle(0.8985, &c) - 0.9613).abs() < 1e-12);
        assert!((accuracy_oracle(0.92, &c) - 0.9445).abs() < 1e-12);
        let two = AccuracyCalib::from_pairs(&[(0.70, 0.985), (0.8985, 0.9613)]).unwrap();
        assert!((accuracy_oracle(0.80, &two) - 0.9731).abs() < 5e-5);
    }

    #[test]
    fn extrapolates_and_clamps() {
        let c = AccuracyCalib::from_pairs(&[(0.2, 0.5), (0.4, 0.7)]).unwrap();
        assert!((c.eval(0.0) - 0.3).abs() < 1e-12);
        assert!((c.eval(0.6) - 0.9).abs() < 1e-12);
        assert_eq!(c.eval(1.0), 1.0);
        let d = AccuracyCalib::from_pairs(&[(0.2, 0.5), (0.3, 0.1)]).unwrap();
        assert_eq!(d.eval(1.0), 0.0);
        let one = AccuracyCalib::from_pairs(&[(0.5, 0.8)]).unwrap();
        assert_eq!(one.eval(0.9), 0.8);
    }

    #[test]
    fn rejects_bad_anchors() {
        assert!(AccuracyCalib::new(alloc::vec![]).is_err());
        assert!(AccuracyCalib::from_pairs(&[(0.1, 0.5), (0.1, 0.6)]).is_err());
        assert!(AccuracyCalib::from_pairs(&[(0.1, 1.5)]).is_err());
        let c = AccuracyCalib::from_pairs(&[(0.5, 0.5), (0.1, 0.9)]).unwrap();
        assert_eq!(c.points()[0].sparsity, 0.1);
    }
}
