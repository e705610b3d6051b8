// SPDX-License-Identifier: Apache-2.0
//! Closed-form FPGA resource estimates.
//!
//! - BRAM: every on-chip buffer costs `ceil(bits/width) * ceil(elements/depth) * factor`.
//! - DSP: `m * C * T` per layer, with `m = 2` for 16-bit fixed point and
//!   `m = 5` for fp32 (3 for the multiply, 2 for the add).
//! - Cycles: `ceil(K * M * N * (1 - s) / (T * C))` per layer; the ceiling is
//!   taken per layer.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

use crate::engine::PeConfig;
use crate::num::ceil_div;
use crate::pruner::HpConfig;
use crate::{Error, LayerKind, LayerSpec, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BramConfig {
    /// Bits per BRAM word.
    pub width: u64,
    /// Words per BRAM.
    pub depth: u64,
    pub factor: u64,
}

impl Default for BramConfig {
    /// One 18 Kbit block in its 36-bit wide mode.
    fn default() -> Self {
        Self {
            width: 36,
            depth: 512,
            factor: 1,
        }
    }
}

impl BramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.depth == 0 || self.factor == 0 {
            return Err(Error::InvalidParam("BRAM width, depth and factor must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferSpec {
    pub name: String,
    /// Width of one element.
    pub bits: u64,
    pub elements: u64,
}

impl BufferSpec {
    pub fn new(name: impl Into<String>, bits: u64, elements: u64) -> Self {
        Self {
            name: name.into(),
            bits,
            elements,
        }
    }

    pub fn brams(&self, cfg: &BramConfig) -> u64 {
        if self.elements == 0 {
            return 0;
        }
        self.bits.div_ceil(cfg.width) * self.elements.div_ceil(cfg.depth) * cfg.factor
    }
}

pub fn estimate_bram(buffers: &[BufferSpec], cfg: &BramConfig) -> u64 {
    buffers.iter().map(|b| b.brams(cfg)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    Fix16,
    Fp32,
}

impl DType {
    /// DSP slices per multiply-accumulate lane.
    pub fn dsp_per_mac(self) -> u64 {
        match self {
            DType::Fix16 => 2,
            DType::Fp32 => 5,
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DType::Fix16 => "fix16",
            DType::Fp32 => "fp32",
        })
    }
}

impl FromStr for DType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fix16" => Ok(DType::Fix16),
            "fp32" => Ok(DType::Fp32),
            _ => Err(Error::Unknown {
                kind: "dtype",
                name: s.into(),
            }),
        }
    }
}

pub fn estimate_dsp(alloc: &[PeConfig], dtype: DType) -> Result<u64> {
    if alloc.is_empty() {
        return Err(Error::Empty("allocation"));
    }
    Ok(alloc.iter().map(|pe| dtype.dsp_per_mac() * pe.lanes()).sum())
}

/// Shape and sparsity of one matrix product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerLoad {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub sparsity: f64,
}

impl LayerLoad {
    pub fn new(k: usize, m: usize, n: usize, sparsity: f64) -> Self {
        Self { k, m, n, sparsity }
    }

    pub fn of(layer: &LayerSpec, sparsity: f64) -> Self {
        Self::new(layer.k, layer.m, layer.n, sparsity)
    }

    /// Useful MACs, `K * M * N * (1 - s)`.
    pub fn work(&self) -> f64 {
        self.k as f64 * self.m as f64 * self.n as f64 * (1.0 - self.sparsity)
    }

    pub fn cycles(&self, pe: PeConfig) -> u64 {
        ceil_div(self.work(), pe.lanes() as f64)
    }
}

pub fn estimate_cycles(layers: &[LayerLoad], alloc: &[PeConfig]) -> Result<u64> {
    if layers.len() != alloc.len() {
        return Err(Error::Dimension(format!(
            "{} layers but {} PE configurations",
            layers.len(),
            alloc.len()
        )));
    }
    let mut total = 0u64;
    for (l, pe) in layers.iter().zip(alloc) {
        pe.validate()?;
        if !(0.0..=1.0).contains(&l.sparsity) {
            return Err(Error::InvalidParam(format!("sparsity {} outside [0, 1]", l.sparsity)));
        }
        total += l.cycles(*pe);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub e_cycles: u64,
    pub e_bram: u64,
    pub e_dsp: u64,
    /// Optional LUT/FF demand, only used when the device screen asks for it.
    #[serde(default)]
    pub e_lut: u64,
    #[serde(default)]
    pub e_ff: u64,
}

/// Element widths used to size the on-chip buffers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InventoryParams {
    pub value_bits: u64,
    pub idx_bits: u64,
    pub activation_bits: u64,
}

impl Default for InventoryParams {
    fn default() -> Self {
        Self {
            value_bits: 16,
            idx_bits: 10,
            activation_bits: 16,
        }
    }
}

/// On-chip buffers of one layer.
///
/// Weights are held in WMark form, one word per surviving column vector:
/// its column index (SF1 only), its `p`-bit bitmap and its `k` values, which
/// is what a PE fetches per column. Input row buffers are registers and take
/// no BRAM; each layer has one output buffer of `N` activations.
pub fn layer_buffers(layer: &LayerSpec, hp: Option<&HpConfig>, params: &InventoryParams) -> Vec<BufferSpec> {
    let mut out = Vec::with_capacity(2);
    if layer.kind == LayerKind::Linear {
        let dense = HpConfig {
            p: 1,
            s_bm: 0.0,
            k: 1,
        };
        let hp = hp.unwrap_or(&dense);
        let kept = (layer.n - hp.pruned_columns(layer.n)) as u64;
        let vectors = layer.m.div_ceil(hp.p) as u64 * kept;
        let idx = if kept == layer.n as u64 { 0 } else { params.idx_bits };
        let bits = idx + hp.p as u64 + hp.k as u64 * params.value_bits;
        out.push(BufferSpec::new(format!("{}.wmark", layer.name), bits, vectors));
    }
    out.push(BufferSpec::new(
        format!("{}.out", layer.name),
        params.activation_bits,
        layer.n as u64,
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn bram_formula() {
        let cfg = BramConfig::default();
        assert_eq!(estimate_bram(&[BufferSpec::new("w", 16, 10_000)], &cfg), 20);
        assert_eq!(estimate_bram(&[BufferSpec::new("w", 16, 0)], &cfg), 0);
        assert_eq!(estimate_bram(&[BufferSpec::new("w", 72, 512)], &cfg), 2);
    }

    #[test]
    fn dsp_formula() {
        let pe = [PeConfig::new(10, 8).unwrap()];
        assert_eq!(estimate_dsp(&pe, DType::Fp32).unwrap(), 400);
        assert_eq!(estimate_dsp(&pe, DType::Fix16).unwrap(), 160);
        assert_eq!(estimate_dsp(&[PeConfig::new(1, 1).unwrap()], DType::Fp32).unwrap(), 5);
        assert!(estimate_dsp(&[], DType::Fp32).is_err());
        assert!("int8".parse::<DType>().is_err());
        assert_eq!("FP32".parse::<DType>().unwrap(), DType::Fp32);
    }

    #[test]
    fn cycle_formula() {
        let pe = [PeConfig::new(10, 8).unwrap()];
        let l = [LayerLoad::new(32, 800, 800, 0.5)];
        assert_eq!(estimate_cycles(&l, &pe).unwrap(), 128_000);
        assert_eq!(estimate_cycles(&[LayerLoad::new(32, 800, 800, 1.0)], &pe).unwrap(), 0);
        let desk = [LayerLoad::new(4, 4, 4, 0.75)];
        assert_eq!(estimate_cycles(&desk, &[PeConfig::new(1, 2).unwrap()]).unwrap(), 8);
        assert!(estimate_cycles(&l, &[PeConfig { c: 0, t: 1 }]).is_err());
        assert!(estimate_cycles(&l, &[]).is_err());
    }

    #[test]
    fn layer_inventory() {
        let l = LayerSpec::linear("fc", 32, 800, 800);
        let hp = HpConfig::new(10, 0.5, 1).unwrap();
        let b = layer_buffers(&l, Some(&hp), &InventoryParams::default());
        // 80 blocks x 400 columns, 10 + 10 + 16 = 36-bit words
        assert_eq!(b[0], BufferSpec::new("fc.wmark", 36, 32_000));
        assert_eq!(estimate_bram(&b, &BramConfig::default()), 63 + 2);
        let att = layer_buffers(&LayerSpec::attention("qk", 32, 200, 32), None, &InventoryParams::default());
        assert_eq!(att, vec![BufferSpec::new("qk.out", 16, 32)]);
    }
}
