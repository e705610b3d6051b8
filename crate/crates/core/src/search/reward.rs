// SPDX-License-Identifier: Apache-2.0
use alloc::format;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    /// Latency bound, ms.
    pub lc_ms: f64,
    /// Accuracy bound, a fraction.
    pub ac: f64,
}

impl Constraints {
    pub fn new(lc_ms: f64, ac: f64) -> Result<Self> {
        let c = Self { lc_ms, ac };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lc_ms > 0.0 && self.lc_ms.is_finite()) {
            return Err(Error::InvalidParam(format!("LC = {} ms must be positive", self.lc_ms)));
        }
        if !(self.ac > 0.0 && self.ac < 1.0) {
            return Err(Error::InvalidParam(format!("AC = {} must be in (0, 1)", self.ac)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalties {
    pub pen_a: f64,
    pub pen_l: f64,
}

impl Default for Penalties {
    fn default() -> Self {
        Self { pen_a: 1.0, pen_l: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardBranch {
    Feasible,
    AccuracyViolated,
    LatencyViolated,
    BothViolated,
}

/// Both bounds are strict: `L = LC` and `A = AC` are violations.
pub fn reward_branch(a: f64, l: f64, c: &Constraints) -> RewardBranch {
    match (l < c.lc_ms, a > c.ac) {
        (true, true) => RewardBranch::Feasible,
        (true, false) => RewardBranch::AccuracyViolated,
        (false, true) => RewardBranch::LatencyViolated,
        (false, false) => RewardBranch::BothViolated,
    }
}

/// `A + (LC - L)/LC + RU` when both bounds hold, otherwise a penalty.
///
/// An `L` of infinity stands for "no device can run this design".
pub fn reward(a: f64, l: f64, ru: f64, c: &Constraints, pen: &Penalties) -> f64 {
    match reward_branch(a, l, c) {
        RewardBranch::Feasible => a + (c.lc_ms - l) / c.lc_ms + ru,
        RewardBranch::AccuracyViolated => -pen.pen_a,
        RewardBranch::LatencyViolated => -pen.pen_l,
        RewardBranch::BothViolated => -(pen.pen_a + pen.pen_l),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cases() {
        let c = Constraints::new(20.0, 0.9).unwrap();
        let p = Penalties::default();
        assert!((reward(0.95, 18.0, 0.8, &c, &p) - 1.85).abs() < 1e-12);
        assert_eq!(reward(0.95, 25.0, 0.8, &c, &p), -1.0);
        assert_eq!(reward(0.95, 20.0, 0.8, &c, &p), -1.0);
        assert_eq!(reward(0.85, 18.0, 0.8, &c, &p), -1.0);
        assert_eq!(reward(0.90, 18.0, 0.8, &c, &p), -1.0);
        assert_eq!(reward(0.85, 25.0, 0.8, &c, &p), -2.0);
        assert_eq!(reward(0.95, f64::INFINITY, 0.0, &c, &p), -1.0);
        let p = Penalties { pen_a: 3.0, pen_l: 5.0 };
        assert_eq!(reward(0.85, 25.0, 0.8, &c, &p), -8.0);
        assert_eq!(reward_branch(0.85, 25.0, &c), RewardBranch::BothViolated);
    }

    #[test]
    fn bad_constraints() {
        assert!(Constraints::new(0.0, 0.5).is_err());
        assert!(Constraints::new(1.0, 1.0).is_err());
        assert!(Constraints::new(1.0, 0.0).is_err());
    }
}
