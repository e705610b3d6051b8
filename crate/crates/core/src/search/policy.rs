// SPDX-License-Identifier: Apache-2.0
//! Factorized softmax controller trained with REINFORCE.
//!
//! Each decision step `t` has its own logit vector. The update follows
//!
//! ```text
//! grad J = 1/m * sum_k sum_t gamma^(T-t) * grad log pi(a_t) * (R_k - b)
//! ```
//!
//! with `t` counted from 1, so the last step is undiscounted. The baseline
//! `b` is an exponential moving average of the observed rewards, updated
//! after the ascent step.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub gamma: f64,
    /// Episodes per update.
    pub batch: usize,
    pub lr: f64,
    pub baseline_decay: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            batch: 5,
            lr: 0.05,
            baseline_decay: 0.9,
        }
    }
}

impl PolicyParams {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::InvalidParam("batch size m must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.baseline_decay) {
            return Err(Error::InvalidParam("gamma and baseline decay must be in [0, 1]".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::InvalidParam(format!("learning rate {} must be positive", self.lr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionVector(pub Vec<usize>);

impl ActionVector {
    pub fn choices(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub action: ActionVector,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub logits: Vec<Vec<f64>>,
    pub baseline: f64,
    pub params: PolicyParams,
}

impl Policy {
    /// Uniform policy over `sizes[t]` choices at each step.
    pub fn uniform(sizes: &[usize], params: PolicyParams) -> Result<Self> {
        params.validate()?;
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidParam("every decision step needs at least one choice".into()));
        }
        Ok(Self {
            logits: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            baseline: 0.0,
            params,
        })
    }

    pub fn steps(&self) -> usize {
        self.logits.len()
    }

    pub fn probs(&self, t: usize) -> Vec<f64> {
        softmax(&self.logits[t])
    }

    /// Most likely choice at every step.
    pub fn greedy(&self) -> ActionVector {
        ActionVector(
            self.logits
                .iter()
                .map(|l| {
                    l.iter()
                        .enumerate()
                        .fold(0, |best, (i, &v)| if v > l[best] { i } else { best })
                })
                .collect(),
        )
    }

    fn check(&self, a: &ActionVector) -> Result<()> {
        if a.0.len() != self.steps() || a.0.iter().zip(&self.logits).any(|(&c, l)| c >= l.len()) {
            return Err(Error::InvalidParam("action does not fit the policy".into()));
        }
        Ok(())
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&l| libm::exp(l - max)).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Draw one action, each step independently from its softmax.
pub fn controller_sample<R: Rng + ?Sized>(policy: &Policy, rng: &mut R) -> ActionVector {
    ActionVector((0..policy.steps()).map(|t| sample_index(&policy.probs(t), rng)).collect())
}

impl Policy {
    /// [`controller_sample`] with a fresh generator seeded from `seed`.
    pub fn sample_seeded(&self, seed: u64) -> ActionVector {
        controller_sample(self, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

/// One ascent step on a batch of episodes, then the baseline update.
pub fn controller_update(policy: &mut Policy, episodes: &[Episode]) -> Result<()> {
    if episodes.is_empty() {
        return Err(Error::Empty("episode batch"));
    }
    for e in episodes {
        policy.check(&e.action)?;
    }
    let n_steps = policy.steps();
    let m = episodes.len() as f64;
    let probs: Vec<Vec<f64>> = (0..n_steps).map(|t| policy.probs(t)).collect();
    let mut grad: Vec<Vec<f64>> = policy.logits.iter().map(|l| vec![0.0; l.len()]).collect();
    for e in episodes {
        let adv = e.reward - policy.baseline;
        if adv == 0.0 {
            continue;
        }
        for (t, &a) in e.action.0.iter().enumerate() {
            let w = libm::pow(policy.params.gamma, (n_steps - 1 - t) as f64) * adv / m;
            for (j, g) in grad[t].iter_mut().enumerate() {
                let ind = if j == a { 1.0 } else { 0.0 };
                *g += w * (ind - probs[t][j]);
            }
        }
    }
    for (l, g) in policy.logits.iter_mut().zip(&grad) {
        for (x, d) in l.iter_mut().zip(g) {
            *x += policy.params.lr * d;
        }
    }
    let d = policy.params.baseline_decay;
    for e in episodes {
        policy.baseline = d * policy.baseline + (1.0 - d) * e.reward;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_gradient() {
        let params = PolicyParams {
            gamma: 1.0,
            batch: 1,
            lr: 0.1,
            baseline_decay: 0.9,
        };
        let mut p = Policy::uniform(&[2], params).unwrap();
        let ep = Episode {
            action: ActionVector(vec![0]),
            reward: 1.0,
        };
        controller_update(&mut p, &[ep]).unwrap();
        assert!((p.logits[0][0] - 0.05).abs() < 1e-12);
        assert!((p.logits[0][1] + 0.05).abs() < 1e-12);
        assert!((p.baseline - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_advantage_is_a_no_op() {
        let mut p = Policy::uniform(&[3, 2], PolicyParams::default()).unwrap();
        p.baseline = 0.7;
        let before = p.logits.clone();
        let eps = vec![
            Episode {
                action: ActionVector(vec![1, 0]),
                reward: 0.7,
            };
            5
        ];
        controller_update(&mut p, &eps).unwrap();
        assert_eq!(p.logits, before);
    }

    #[test]
    fn discount_weights_early_steps_less() {
        let params = PolicyParams {
            gamma: 0.5,
            batch: 1,
            lr: 1.0,
            baseline_decay: 0.0,
        };
        let mut p = Policy::uniform(&[2, 2], params).unwrap();
        let ep = Episode {
            action: ActionVector(vec![0, 0]),
            reward: 1.0,
        };
        controller_update(&mut p, &[ep]).unwrap();
        assert!((p.logits[0][0] - 0.25).abs() < 1e-12);
        assert!((p.logits[1][0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_and_saturates() {
        let p = Policy::uniform(&[4, 4, 4], PolicyParams::default()).unwrap();
        assert_eq!(p.sample_seeded(9), p.sample_seeded(9));
        let mut q = Policy::uniform(&[2], PolicyParams::default()).unwrap();
        q.logits[0] = vec![50.0, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hits = (0..10_000).filter(|_| controller_sample(&q, &mut rng).0[0] == 0).count();
        assert!(hits > 9990);
        assert_eq!(q.greedy(), ActionVector(vec![0]));
    }

    #[test]
    fn rejects_bad_input() {
        let mut p = Policy::uniform(&[2], PolicyParams::default()).unwrap();
        assert!(controller_update(&mut p, &[]).is_err());
        let bad = Episode {
            action: ActionVector(vec![2]),
            reward: 1.0,
        };
        assert!(controller_update(&mut p, &[bad]).is_err());
        assert!(Policy::uniform(&[0], PolicyParams::default()).is_err());
    }
}
