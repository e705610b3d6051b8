// SPDX-License-Identifier: Apache-2.0
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::env::{Environment, EvalOutcome, SearchConfig};
use super::policy::{controller_sample, controller_update, ActionVector, Episode, Policy};
use super::reward::Constraints;
use crate::devices::HardwarePool;
use crate::{ModelSpec, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub ks: Vec<usize>,
    pub h: usize,
    pub sparsity: f64,
    pub accuracy: f64,
    pub latency_ms: Option<f64>,
    pub ru: f64,
    pub device: Option<String>,
    pub reward: f64,
    pub feasible: bool,
}

impl TraceRow {
    fn new(iter: usize, o: &EvalOutcome) -> Self {
        Self {
            iter,
            ks: o.ks.clone(),
            h: o.h,
            sparsity: o.sparsity,
            accuracy: o.accuracy,
            latency_ms: o.latency_ms,
            ru: o.ru,
            device: o.device.clone(),
            reward: o.reward,
            feasible: o.feasible,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Iteration at which this design was first seen.
    pub iter: usize,
    pub action: ActionVector,
    pub outcome: EvalOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub constraints: Constraints,
    pub seed: u64,
    pub iterations: usize,
    /// Highest-reward design that met both bounds.
    pub best: Option<Solution>,
    pub trace: Vec<TraceRow>,
    pub policy: Policy,
}

impl SearchResult {
    pub fn feasible(&self) -> bool {
        self.best.is_some()
    }
}

/// Sample, score, and update for `cfg.iter_max` episodes.
///
/// Updates happen after every `cfg.policy.batch` episodes; a trailing partial
/// batch is dropped. Outcomes are cached per action since scoring is pure.
pub fn run_search(spec: &ModelSpec, pool: &HardwarePool, cfg: &SearchConfig) -> Result<SearchResult> {
    let env = Environment::new(spec, pool, cfg)?;
    let mut policy = Policy::uniform(&env.action_sizes(), cfg.policy)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cache: BTreeMap<ActionVector, EvalOutcome> = BTreeMap::new();
    let mut trace = Vec::with_capacity(cfg.iter_max);
    let mut batch = Vec::with_capacity(cfg.policy.batch);
    let mut best: Option<Solution> = None;

    for iter in 0..cfg.iter_max {
        let action = controller_sample(&policy, &mut rng);
        let outcome = match cache.get(&action) {
            Some(o) => o.clone(),
            None => {
                let o = env.evaluate(&action)?;
                cache.insert(action.clone(), o.clone());
                o
            }
        };
        trace.push(TraceRow::new(iter, &outcome));
        if outcome.feasible && best.as_ref().is_none_or(|b| outcome.reward > b.outcome.reward) {
            best = Some(Solution {
                iter,
                action: action.clone(),
                outcome: outcome.clone(),
            });
        }
        batch.push(Episode {
            action,
            reward: outcome.reward,
        });
        if batch.len() == cfg.policy.batch {
            controller_update(&mut policy, &batch)?;
            batch.clear();
        }
    }

    Ok(SearchResult {
        constraints: cfg.constraints,
        seed: cfg.seed,
        iterations: cfg.iter_max,
        best,
        trace,
        policy,
    })
}
