// SPDX-License-Identifier: Apache-2.0
//! Closed-loop co-design search.
//!
//! A factorized softmax policy picks `k` for every prunable layer plus the
//! attention parallelism `h`. The environment prunes (analytically), runs the
//! predictor, picks a device, refines the allocation on it and asks the
//! accuracy oracle; the reward drives a REINFORCE update.

mod accuracy;
mod env;
mod policy;
mod reward;
mod runner;

pub use accuracy::{accuracy_oracle, AccuracyCalib, CalibPoint};
pub use env::{overall_sparsity, Environment, EvalOutcome, EvalStatus, SearchConfig};
pub use policy::{controller_sample, controller_update, ActionVector, Episode, Policy, PolicyParams};
pub use reward::{reward, reward_branch, Constraints, Penalties, RewardBranch};
pub use runner::{run_search, SearchResult, Solution, TraceRow};
