// SPDX-License-Identifier: Apache-2.0
//! Fine-tuned resource allocation.
//!
//! For every attention parallelism `h` in `1..=nHead`, the DSPs left after the
//! attention units (`R_total - h * R_h`) are split across the prunable layers
//! in proportion to their useful MACs. Each layer then picks the `(C, T)` that
//! minimizes its cycle count within its share. The `h` with the lowest total
//! wins.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::devices::Device;
use crate::engine::PeConfig;
use crate::predictor::{DType, LayerLoad};
use crate::{Error, ModelSpec, Result};

/// Cost of one attention unit, which processes one head at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AttentionCost {
    /// Cycles for one head through every attention product of the model.
    #[serde(rename = "Cyc_h")]
    pub cyc_h: u64,
    /// DSPs of one attention unit.
    #[serde(rename = "R_h")]
    pub r_h: u64,
}

impl AttentionCost {
    /// Derived from the spec's attention products on its attention PE array
    /// (`C = T = 1` when the spec does not give one).
    pub fn from_spec(spec: &ModelSpec, dtype: DType) -> Self {
        let pe = spec.attention_pe.unwrap_or(PeConfig { c: 1, t: 1 });
        let mut cyc_h = 0;
        let mut any = false;
        for l in spec.attention() {
            any = true;
            cyc_h += LayerLoad::of(l, 0.0).cycles(pe);
        }
        Self {
            cyc_h,
            r_h: if any { dtype.dsp_per_mac() * pe.lanes() } else { 0 },
        }
    }

    /// Attention cycles at parallelism `h`.
    pub fn cycles(&self, n_head: usize, h: usize) -> u64 {
        n_head.div_ceil(h) as u64 * self.cyc_h
    }
}

/// What the allocator needs to know about one prunable layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerDemand {
    pub sparsity: f64,
    /// Most nonzeros per column vector; caps `C`.
    #[serde(default)]
    pub k: Option<usize>,
}

impl LayerDemand {
    pub fn new(sparsity: f64, k: Option<usize>) -> Self {
        Self { sparsity, k }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerAlloc {
    pub name: String,
    #[serde(rename = "C")]
    pub c: usize,
    #[serde(rename = "T")]
    pub t: usize,
    /// DSP share this layer was given.
    pub budget: f64,
    pub cycles: u64,
}

impl LayerAlloc {
    pub fn pe(&self) -> PeConfig {
        PeConfig { c: self.c, t: self.t }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub layers: Vec<LayerAlloc>,
    pub h: usize,
    pub layer_cycles: u64,
    pub attention_cycles: u64,
    pub exe_cyc: u64,
    pub dsp_used: u64,
    pub r_total: u64,
}

impl AllocationPlan {
    pub fn pes(&self) -> Vec<PeConfig> {
        self.layers.iter().map(LayerAlloc::pe).collect()
    }
}

fn check_inputs(spec: &ModelSpec, demands: &[LayerDemand]) -> Result<Vec<LayerLoad>> {
    spec.validate()?;
    let n = spec.prunable_count();
    if demands.len() != n {
        return Err(Error::Dimension(format!(
            "{} sparsity entries for {} prunable layers",
            demands.len(),
            n
        )));
    }
    spec.prunable()
        .zip(demands)
        .map(|(l, d)| {
            if !(0.0..=1.0).contains(&d.sparsity) {
                return Err(Error::InvalidParam(format!(
                    "layer {}: sparsity {} outside [0, 1]",
                    l.name, d.sparsity
                )));
            }
            if d.k == Some(0) {
                return Err(Error::InvalidParam(format!("layer {}: k must be >= 1", l.name)));
            }
            Ok(LayerLoad::of(l, d.sparsity))
        })
        .collect()
}

/// Fastest `(C, T)` using at most `units` lanes with `C <= k`.
///
/// Ties go to fewer lanes, then to the larger `C`.
pub fn best_pe(load: &LayerLoad, units: u64, k: Option<usize>) -> Option<(PeConfig, u64)> {
    if units == 0 {
        return None;
    }
    let c_max = k.map_or(units, |k| (k as u64).min(units));
    let mut best: Option<(PeConfig, u64)> = None;
    for c in 1..=c_max {
        let pe = PeConfig {
            c: c as usize,
            t: (units / c) as usize,
        };
        let cyc = load.cycles(pe);
        // `<=` lets the later, larger C win ties.
        if best.as_ref().is_none_or(|(b, bc)| (cyc, pe.lanes()) <= (*bc, b.lanes())) {
            best = Some((pe, cyc));
        }
    }
    best
}

/// How a layer's real-valued DSP share becomes whole lanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rounding {
    /// `floor(R_j / m)` lanes per layer; the remainders stay unused.
    #[default]
    Floor,
    /// Floor, then hand the lanes the remainders add up to, one per layer,
    /// to the layers whose cycle count drops the most. Uses more of the
    /// budget, but more DSPs can then occasionally mean more cycles.
    Leftover,
}

/// Lane units per layer for one `h`, or `None` if some layer ends up with
/// no lane.
fn split(
    loads: &[LayerLoad],
    demands: &[LayerDemand],
    temp_r: f64,
    m: u64,
    rounding: Rounding,
) -> Option<Vec<(f64, u64)>> {
    let total: f64 = loads.iter().map(LayerLoad::work).sum();
    let n = loads.len() as f64;
    let mut out: Vec<(f64, u64)> = loads
        .iter()
        .map(|l| {
            let share = if total > 0.0 { l.work() / total } else { 1.0 / n };
            let r = share * temp_r;
            (r, floor_snapped(r / m as f64))
        })
        .collect();
    if rounding == Rounding::Leftover {
        let used: u64 = out.iter().map(|s| s.1).sum();
        let spare = floor_snapped(temp_r / m as f64).saturating_sub(used) as usize;
        if spare > 0 {
            let cycles = |j: usize, u: u64| best_pe(&loads[j], u, demands[j].k).map_or(u64::MAX, |b| b.1);
            let mut gain: Vec<(u64, usize)> = (0..out.len())
                .map(|j| (cycles(j, out[j].1).saturating_sub(cycles(j, out[j].1 + 1)), j))
                .filter(|g| g.0 > 0)
                .collect();
            gain.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, j) in gain.iter().take(spare) {
                out[j].1 += 1;
            }
        }
    }
    if out.iter().any(|s| s.1 == 0) {
        return None;
    }
    Some(out)
}

fn floor_snapped(x: f64) -> u64 {
    if x <= 0.0 {
        return 0;
    }
    let r = libm::round(x);
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        libm::floor(x) as u64
    }
}

#[allow(clippy::too_many_arguments)]
fn plan_for(
    spec: &ModelSpec,
    loads: &[LayerLoad],
    demands: &[LayerDemand],
    shares: &[(f64, u64)],
    h: usize,
    r_total: u64,
    m: u64,
    att: &AttentionCost,
) -> AllocationPlan {
    let mut layers = Vec::with_capacity(loads.len());
    let mut layer_cycles = 0;
    let mut lanes = 0;
    for (((l, load), d), &(budget, units)) in spec.prunable().zip(loads).zip(demands).zip(shares) {
        let (pe, cycles) = best_pe(load, units, d.k).expect("units >= 1");
        layer_cycles += cycles;
        lanes += pe.lanes();
        layers.push(LayerAlloc {
            name: l.name.clone(),
            c: pe.c,
            t: pe.t,
            budget,
            cycles,
        });
    }
    let attention_cycles = att.cycles(spec.n_head, h);
    AllocationPlan {
        layers,
        h,
        layer_cycles,
        attention_cycles,
        exe_cyc: layer_cycles + attention_cycles,
        dsp_used: m * lanes + h as u64 * att.r_h,
        r_total,
    }
}

pub fn allocate(
    spec: &ModelSpec,
    demands: &[LayerDemand],
    device: &Device,
    dtype: DType,
    att: &AttentionCost,
) -> Result<AllocationPlan> {
    allocate_dsp(spec, demands, device.dsp, dtype, att)
}

/// [`allocate`] against a bare DSP budget.
pub fn allocate_dsp(
    spec: &ModelSpec,
    demands: &[LayerDemand],
    r_total: u64,
    dtype: DType,
    att: &AttentionCost,
) -> Result<AllocationPlan> {
    allocate_with(spec, demands, r_total, dtype, att, Rounding::default())
}

pub fn allocate_with(
    spec: &ModelSpec,
    demands: &[LayerDemand],
    r_total: u64,
    dtype: DType,
    att: &AttentionCost,
    rounding: Rounding,
) -> Result<AllocationPlan> {
    let loads = check_inputs(spec, demands)?;
    let m = dtype.dsp_per_mac();
    let mut best: Option<AllocationPlan> = None;
    for h in 1..=spec.n_head {
        let reserved = h as u64 * att.r_h;
        if reserved >= r_total {
            break;
        }
        let temp_r = (r_total - reserved) as f64;
        let Some(shares) = split(&loads, demands, temp_r, m, rounding) else {
            continue;
        };
        let plan = plan_for(spec, &loads, demands, &shares, h, r_total, m, att);
        if best.as_ref().is_none_or(|b| plan.exe_cyc < b.exe_cyc) {
            best = Some(plan);
        }
    }
    best.ok_or_else(|| {
        Error::Budget(format!(
            "{r_total} DSPs cannot give every layer one {m}-DSP lane next to an attention unit"
        ))
    })
}

/// Every layer gets the same number of lanes and `h = 1`.
pub fn equal_split_baseline(
    spec: &ModelSpec,
    demands: &[LayerDemand],
    device: &Device,
    dtype: DType,
    att: &AttentionCost,
) -> Result<AllocationPlan> {
    equal_split_dsp(spec, demands, device.dsp, dtype, att)
}

pub fn equal_split_dsp(
    spec: &ModelSpec,
    demands: &[LayerDemand],
    r_total: u64,
    dtype: DType,
    att: &AttentionCost,
) -> Result<AllocationPlan> {
    let loads = check_inputs(spec, demands)?;
    let m = dtype.dsp_per_mac();
    let temp_r = r_total.saturating_sub(att.r_h);
    let per_layer = temp_r as f64 / loads.len() as f64;
    let units = temp_r / (m * loads.len() as u64);
    if units == 0 || att.r_h >= r_total {
        return Err(Error::Budget(format!(
            "{r_total} DSPs cannot give every layer one {m}-DSP lane next to an attention unit"
        )));
    }
    let shares: Vec<(f64, u64)> = loads.iter().map(|_| (per_layer, units)).collect();
    Ok(plan_for(spec, &loads, demands, &shares, 1, r_total, m, att))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::LayerSpec;
    use alloc::vec;

    fn two_layer() -> ModelSpec {
        // Com 3e6 and 1e6 at s = 0
        ModelSpec::new(
            vec![
                LayerSpec::linear("a", 30, 100, 1000),
                LayerSpec::linear("b", 10, 100, 1000),
            ],
            1,
        )
        .unwrap()
    }

    #[test]
    fn proportional_budgets() {
        let spec = two_layer();
        let d = [LayerDemand::new(0.0, None); 2];
        let att = AttentionCost { cyc_h: 0, r_h: 20 };
        let plan = allocate_dsp(&spec, &d, 440, DType::Fp32, &att).unwrap();
        assert_eq!(plan.h, 1);
        assert!((plan.layers[0].budget - 315.0).abs() < 1e-9);
        assert!((plan.layers[1].budget - 105.0).abs() < 1e-9);
        assert_eq!(plan.layers[0].pe().lanes(), 63);
        assert_eq!(plan.layers[1].pe().lanes(), 21);
        assert_eq!(plan.layer_cycles, 3_000_000u64.div_ceil(63) + 1_000_000u64.div_ceil(21));
        assert!(plan.dsp_used <= 440);
    }

    #[test]
    fn k_caps_c() {
        let spec = two_layer();
        let d = [LayerDemand::new(0.0, Some(4)); 2];
        let plan = allocate_dsp(&spec, &d, 440, DType::Fp32, &AttentionCost { cyc_h: 0, r_h: 20 }).unwrap();
        assert!(plan.layers.iter().all(|l| l.c <= 4));
        // 63 lanes with C <= 4 → best product is 60 (4 x 15) or 63 (3 x 21)
        assert_eq!(plan.layers[0].pe().lanes(), 63);
    }

    #[test]
    fn minimum_budget() {
        let spec = ModelSpec::new(vec![LayerSpec::linear("a", 4, 4, 4)], 1).unwrap();
        let d = [LayerDemand::new(0.0, None)];
        let plan = allocate_dsp(&spec, &d, 5, DType::Fp32, &AttentionCost::default()).unwrap();
        assert_eq!((plan.layers[0].c, plan.layers[0].t), (1, 1));
        assert!(allocate_dsp(&spec, &d, 4, DType::Fp32, &AttentionCost::default()).is_err());
    }

    #[test]
    fn h_sweep_prefers_parallel_attention() {
        let spec = ModelSpec::new(
            vec![
                LayerSpec::linear("a", 8, 64, 64),
                LayerSpec::attention("qk", 8, 16, 8),
            ],
            4,
        )
        .unwrap();
        let att = AttentionCost { cyc_h: 10_000, r_h: 5 };
        let d = [LayerDemand::new(0.0, None)];
        let plan = allocate_dsp(&spec, &d, 200, DType::Fp32, &att).unwrap();
        assert_eq!(plan.h, 4);
        assert_eq!(plan.attention_cycles, 10_000);
        let base = equal_split_dsp(&spec, &d, 200, DType::Fp32, &att).unwrap();
        assert!(plan.exe_cyc <= base.exe_cyc);
    }

    #[test]
    fn attention_cost_from_spec() {
        let mut spec = ModelSpec::new(
            vec![
                LayerSpec::linear("a", 8, 64, 64),
                LayerSpec::attention("qk", 8, 16, 8),
                LayerSpec::attention("av", 8, 8, 16),
            ],
            2,
        )
        .unwrap();
        let a = AttentionCost::from_spec(&spec, DType::Fp32);
        assert_eq!(a, AttentionCost { cyc_h: 2048, r_h: 5 });
        spec.attention_pe = Some(PeConfig { c: 4, t: 4 });
        let a = AttentionCost::from_spec(&spec, DType::Fix16);
        assert_eq!(a, AttentionCost { cyc_h: 128, r_h: 32 });
        assert_eq!(a.cycles(3, 2), 256);
    }

    #[test]
    fn demand_count_mismatch() {
        let spec = two_layer();
        assert!(allocate_dsp(&spec, &[LayerDemand::new(0.0, None)], 440, DType::Fp32, &AttentionCost::default()).is_err());
    }
}
