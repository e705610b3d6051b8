// SPDX-License-Identifier: Apache-2.0
//! Scoring one sampled design.
//!
//! 1. Every prunable layer gets `HP(p, S_bm, k_j)`; sparsities follow in
//!    closed form.
//! 2. Predictor stage: BRAM from the buffer inventory; PE arrays sized so the
//!    design just meets `LC` (with some headroom) on the slowest clock in the
//!    pool, which fixes `E_dsp` and `E_cycles`.
//! 3. Device selection and the max-latency screen.
//! 4. Allocation refined on the chosen device; latency and RU come from it.
//! 5. Accuracy from the oracle, then the reward.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::accuracy::AccuracyCalib;
use super::policy::{ActionVector, PolicyParams};
use super::reward::{reward, reward_branch, Constraints, Penalties, RewardBranch};
use crate::allocator::{allocate, AllocationPlan, AttentionCost, LayerDemand};
use crate::devices::{max_latency_with, select_device_with, HardwarePool, SelectOptions};
use crate::engine::PeConfig;
use crate::predictor::{
    estimate_bram, layer_buffers, BramConfig, DType, InventoryParams, LayerLoad, ResourceEstimate,
};
use crate::pruner::HpConfig;
use crate::{Error, LayerSpec, ModelSpec, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub constraints: Constraints,
    pub p: usize,
    pub s_bm: f64,
    pub calib: AccuracyCalib,
    pub policy: PolicyParams,
    pub iter_max: usize,
    pub penalties: Penalties,
    pub dtype: DType,
    pub bram: BramConfig,
    pub inventory: InventoryParams,
    pub select: SelectOptions,
    /// Fraction of the latency bound the predictor stage sizes for.
    pub headroom: f64,
    /// Overrides the attention cost derived from the model spec.
    pub attention: Option<AttentionCost>,
    pub seed: u64,
}

impl SearchConfig {
    pub fn new(constraints: Constraints) -> Self {
        Self {
            constraints,
            p: 10,
            s_bm: 0.5,
            calib: AccuracyCalib::transformer(),
            policy: PolicyParams::default(),
            iter_max: 2000,
            penalties: Penalties::default(),
            dtype: DType::Fp32,
            bram: BramConfig::default(),
            inventory: InventoryParams::default(),
            select: SelectOptions::default(),
            headroom: 0.95,
            attention: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.constraints.validate()?;
        HpConfig::new(self.p, self.s_bm, 1)?;
        self.policy.validate()?;
        self.bram.validate()?;
        if !(self.headroom > 0.0 && self.headroom <= 1.0) {
            return Err(Error::InvalidParam(format!("headroom {} must be in (0, 1]", self.headroom)));
        }
        if self.s_bm >= 1.0 {
            return Err(Error::InvalidParam("S_bm must be below 1".into()));
        }
        Ok(())
    }
}

/// How far the hardware side of an evaluation got.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalStatus {
    Placed,
    /// No device has the BRAM/DSP the predictor asks for.
    NoCapacity,
    /// Devices fit, but none is fast enough.
    LatencyUnmet,
    /// The chosen device's DSPs could not be split across the layers.
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub ks: Vec<usize>,
    pub h: usize,
    pub layer_sparsity: Vec<f64>,
    pub sparsity: f64,
    pub accuracy: f64,
    /// `None` when no device could host the design.
    pub latency_ms: Option<f64>,
    pub ru: f64,
    pub device: Option<String>,
    pub reward: f64,
    pub branch: RewardBranch,
    pub status: EvalStatus,
    pub feasible: bool,
    pub estimate: Option<ResourceEstimate>,
    pub plan: Option<AllocationPlan>,
    pub bram_util: Option<f64>,
    pub dsp_util: Option<f64>,
}

/// Weight-count weighted mean of per-layer sparsities.
pub fn overall_sparsity<'a>(layers: impl IntoIterator<Item = &'a LayerSpec>, sparsity: &[f64]) -> f64 {
    let mut w = 0.0;
    let mut z = 0.0;
    for (l, s) in layers.into_iter().zip(sparsity) {
        let n = l.weight_count() as f64;
        w += n;
        z += n * s;
    }
    if w == 0.0 {
        0.0
    } else {
        z / w
    }
}

pub struct Environment<'a> {
    spec: &'a ModelSpec,
    pool: &'a HardwarePool,
    cfg: &'a SearchConfig,
    att: AttentionCost,
}

impl<'a> Environment<'a> {
    pub fn new(spec: &'a ModelSpec, pool: &'a HardwarePool, cfg: &'a SearchConfig) -> Result<Self> {
        spec.validate()?;
        cfg.validate()?;
        let att = cfg
            .attention
            .unwrap_or_else(|| AttentionCost::from_spec(spec, cfg.dtype));
        Ok(Self { spec, pool, cfg, att })
    }

    pub fn attention_cost(&self) -> AttentionCost {
        self.att
    }

    /// Choices per decision step: `p` values of `k` per prunable layer, then
    /// `nHead` values of `h`.
    pub fn action_sizes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.spec.prunable().map(|_| self.cfg.p).collect();
        v.push(self.spec.n_head);
        v
    }

    pub fn decode(&self, a: &ActionVector) -> Result<(Vec<usize>, usize)> {
        let sizes = self.action_sizes();
        if a.0.len() != sizes.len() || a.0.iter().zip(&sizes).any(|(&c, &n)| c >= n) {
            return Err(Error::InvalidParam("action does not match the search space".into()));
        }
        let n = sizes.len() - 1;
        Ok((a.0[..n].iter().map(|&c| c + 1).collect(), a.0[n] + 1))
    }

    pub fn encode(&self, ks: &[usize], h: usize) -> ActionVector {
        let mut v: Vec<usize> = ks.iter().map(|k| k - 1).collect();
        v.push(h - 1);
        ActionVector(v)
    }

    pub fn hp_configs(&self, ks: &[usize]) -> Result<Vec<HpConfig>> {
        ks.iter().map(|&k| HpConfig::new(self.cfg.p, self.cfg.s_bm, k)).collect()
    }

    /// Predictor-stage estimate for `ks` at attention parallelism `h`, with
    /// the PE arrays it assumes.
    pub fn predict(&self, ks: &[usize], h: usize) -> Result<(ResourceEstimate, Vec<PeConfig>)> {
        let hps = self.hp_configs(ks)?;
        let mut buffers = Vec::new();
        let mut hp_iter = hps.iter();
        for l in &self.spec.layers {
            let hp = if l.prunable { hp_iter.next() } else { None };
            buffers.extend(layer_buffers(l, hp, &self.cfg.inventory));
        }
        let e_bram = estimate_bram(&buffers, &self.cfg.bram);

        let loads: Vec<LayerLoad> = self
            .spec
            .prunable()
            .zip(&hps)
            .map(|(l, hp)| LayerLoad::of(l, hp.closed_form_sparsity(l.n)))
            .collect();
        let att_cycles = self.att.cycles(self.spec.n_head, h);
        let budget = self.cfg.constraints.lc_ms * self.pool.min_freq_mhz() * 1e3 * self.cfg.headroom;
        let remaining = budget - att_cycles as f64;
        if remaining < 1.0 {
            return Err(Error::LatencyUnmet {
                lc_ms: self.cfg.constraints.lc_ms,
            });
        }
        let work: f64 = loads.iter().map(LayerLoad::work).sum();
        let lanes = (libm::ceil(work / remaining) as u64).max(1);
        let mut pes = Vec::with_capacity(loads.len());
        let mut cycles = att_cycles;
        let mut macs = 0;
        for (load, &k) in loads.iter().zip(ks) {
            let c = (k as u64).min(lanes);
            let pe = PeConfig {
                c: c as usize,
                t: lanes.div_ceil(c) as usize,
            };
            cycles += load.cycles(pe);
            macs += pe.lanes();
            pes.push(pe);
        }
        let est = ResourceEstimate {
            e_cycles: cycles,
            e_bram,
            e_dsp: self.cfg.dtype.dsp_per_mac() * macs + h as u64 * self.att.r_h,
            e_lut: 0,
            e_ff: 0,
        };
        Ok((est, pes))
    }

    pub fn evaluate(&self, a: &ActionVector) -> Result<EvalOutcome> {
        let (ks, h) = self.decode(a)?;
        self.evaluate_ks(&ks, h)
    }

    pub fn evaluate_ks(&self, ks: &[usize], h: usize) -> Result<EvalOutcome> {
        let hps = self.hp_configs(ks)?;
        let layer_sparsity: Vec<f64> = self
            .spec
            .prunable()
            .zip(&hps)
            .map(|(l, hp)| hp.closed_form_sparsity(l.n))
            .collect();
        let sparsity = overall_sparsity(self.spec.prunable(), &layer_sparsity);
        let accuracy = self.cfg.calib.eval(sparsity);
        let c = &self.cfg.constraints;

        let mut out = EvalOutcome {
            ks: ks.to_vec(),
            h,
            layer_sparsity,
            sparsity,
            accuracy,
            latency_ms: None,
            ru: 0.0,
            device: None,
            reward: 0.0,
            branch: RewardBranch::BothViolated,
            status: EvalStatus::Placed,
            feasible: false,
            estimate: None,
            plan: None,
            bram_util: None,
            dsp_util: None,
        };
        match self.place(ks, h, &mut out) {
            Ok(()) => {}
            Err(e) if e.is_infeasible() => {
                out.status = match e {
                    Error::NoCapacity { .. } => EvalStatus::NoCapacity,
                    Error::LatencyUnmet { .. } => EvalStatus::LatencyUnmet,
                    _ => EvalStatus::Budget,
                };
            }
            Err(e) => return Err(e),
        }
        let l = out.latency_ms.unwrap_or(f64::INFINITY);
        out.branch = reward_branch(accuracy, l, c);
        out.reward = reward(accuracy, l, out.ru, c, &self.cfg.penalties);
        out.feasible = out.branch == RewardBranch::Feasible;
        Ok(out)
    }

    fn place(&self, ks: &[usize], h: usize, out: &mut EvalOutcome) -> Result<()> {
        let lc = self.cfg.constraints.lc_ms;
        let (est, _) = self.predict(ks, h)?;
        out.estimate = Some(est);
        let sel = select_device_with(self.pool, &est, lc, &self.cfg.select)?;
        if !(max_latency_with(&est, self.pool, &self.cfg.select)? < lc) {
            return Err(Error::LatencyUnmet { lc_ms: lc });
        }
        let demands: Vec<LayerDemand> = out
            .layer_sparsity
            .iter()
            .zip(ks)
            .map(|(&s, &k)| LayerDemand::new(s, Some(k)))
            .collect();
        let plan = allocate(self.spec, &demands, &sel.device, self.cfg.dtype, &self.att)?;
        let bu = est.e_bram as f64 / sel.device.bram as f64;
        let du = plan.dsp_used as f64 / sel.device.dsp as f64;
        out.latency_ms = Some(sel.device.latency_ms(plan.exe_cyc));
        out.ru = self.cfg.select.ru_mode.combine(bu, du);
        out.bram_util = Some(bu);
        out.dsp_util = Some(du);
        out.device = Some(sel.device.name.clone());
        out.plan = Some(plan);
        Ok(())
    }
}
