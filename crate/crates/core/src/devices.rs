// SPDX-License-Identifier: Apache-2.0
//! Hardware pool and best-fit device selection.
//!
//! The pool is kept sorted by BRAM count. Selection binary-searches for the
//! first device with more BRAM than the estimate, keeps those with enough
//! DSPs, drops the ones that miss the latency bound, and returns the device
//! with the highest resource utilization.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

use crate::predictor::ResourceEstimate;
use crate::{Error, Result};

pub const DEFAULT_FREQ_MHZ: f64 = 200.0;

fn default_freq() -> f64 {
    DEFAULT_FREQ_MHZ
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub name: String,
    pub bram: u64,
    pub dsp: u64,
    pub lut: u64,
    pub ff: u64,
    #[serde(default = "default_freq")]
    pub freq_mhz: f64,
}

impl Device {
    pub fn new(name: &str, bram: u64, dsp: u64, lut: u64, ff: u64) -> Self {
        Self {
            name: name.into(),
            bram,
            dsp,
            lut,
            ff,
            freq_mhz: DEFAULT_FREQ_MHZ,
        }
    }

    pub fn with_freq(mut self, mhz: f64) -> Self {
        self.freq_mhz = mhz;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.bram == 0 || self.dsp == 0 || self.lut == 0 || self.ff == 0 {
            return Err(Error::InvalidParam(format!("device {}: capacities must be positive", self.name)));
        }
        if !(self.freq_mhz.is_finite() && self.freq_mhz > 0.0) {
            return Err(Error::InvalidParam(format!(
                "device {}: frequency {} MHz must be positive",
                self.name, self.freq_mhz
            )));
        }
        Ok(())
    }

    /// Milliseconds to run `cycles` at this device's clock.
    pub fn latency_ms(&self, cycles: u64) -> f64 {
        latency_ms(cycles, self.freq_mhz)
    }
}

pub fn latency_ms(cycles: u64, freq_mhz: f64) -> f64 {
    cycles as f64 / (freq_mhz * 1e3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Device>", into = "Vec<Device>")]
pub struct HardwarePool {
    devices: Vec<Device>,
}

impl HardwarePool {
    pub fn new(mut devices: Vec<Device>) -> Result<Self> {
        if devices.is_empty() {
            return Err(Error::Empty("hardware pool"));
        }
        for d in &devices {
            d.validate()?;
        }
        let mut names: Vec<&str> = devices.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParam(format!("duplicate device name {}", w[0])));
        }
        devices.sort_by(|a, b| a.bram.cmp(&b.bram).then_with(|| a.name.cmp(&b.name)));
        Ok(Self { devices })
    }

    /// The five boards of the reference pool, all clocked at 200 MHz.
    pub fn builtin() -> Self {
        Self::new(alloc::vec![
            Device::new("U200", 4320, 6840, 1_182_240, 2_364_480),
            Device::new("VC709", 2940, 3600, 433_200, 866_400),
            Device::new("VC707", 2060, 2800, 303_600, 607_200),
            Device::new("ZCU102", 1824, 2520, 274_080, 548_160),
            Device::new("ZCU104", 624, 1728, 230_400, 460_800),
        ])
        .expect("builtin pool is valid")
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Device> {
        self.devices.iter().find(|d| d.name == name)
    }

    pub fn largest_dsp(&self) -> &Device {
        self.devices
            .iter()
            .max_by(|a, b| a.dsp.cmp(&b.dsp).then_with(|| b.bram.cmp(&a.bram)))
            .expect("pool is nonempty")
    }

    pub fn min_freq_mhz(&self) -> f64 {
        self.devices.iter().map(|d| d.freq_mhz).fold(f64::INFINITY, f64::min)
    }

    /// Index of the first device whose BRAM strictly exceeds `e_bram`.
    pub fn first_above(&self, e_bram: u64) -> usize {
        self.devices.partition_point(|d| d.bram <= e_bram)
    }
}

impl TryFrom<Vec<Device>> for HardwarePool {
    type Error = Error;

    fn try_from(v: Vec<Device>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<HardwarePool> for Vec<Device> {
    fn from(p: HardwarePool) -> Self {
        p.devices
    }
}

/// How BRAM and DSP utilization combine into one RU score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuMode {
    #[default]
    Mean,
    Max,
    BramOnly,
}

impl RuMode {
    pub fn combine(self, bram_util: f64, dsp_util: f64) -> f64 {
        match self {
            RuMode::Mean => 0.5 * (bram_util + dsp_util),
            RuMode::Max => bram_util.max(dsp_util),
            RuMode::BramOnly => bram_util,
        }
    }
}

impl FromStr for RuMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(RuMode::Mean),
            "max" => Ok(RuMode::Max),
            "bram-only" | "bram" => Ok(RuMode::BramOnly),
            _ => Err(Error::Unknown {
                kind: "RU mode",
                name: s.into(),
            }),
        }
    }
}

impl fmt::Display for RuMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuMode::Mean => "mean",
            RuMode::Max => "max",
            RuMode::BramOnly => "bram-only",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SelectOptions {
    pub ru_mode: RuMode,
    /// Also require `lut >= e_lut` and `ff >= e_ff`.
    pub screen_lut_ff: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub device: Device,
    pub latency_ms: f64,
    pub ru: f64,
    pub bram_util: f64,
    pub dsp_util: f64,
    /// Names of every capacity-feasible device, in pool order.
    pub feasible: Vec<String>,
}

fn fits(d: &Device, est: &ResourceEstimate, opts: &SelectOptions) -> bool {
    d.dsp >= est.e_dsp && (!opts.screen_lut_ff || (d.lut >= est.e_lut && d.ff >= est.e_ff))
}

/// Devices with enough capacity for `est`, in ascending BRAM order.
pub fn capacity_feasible<'a>(
    pool: &'a HardwarePool,
    est: &ResourceEstimate,
    opts: &SelectOptions,
) -> impl Iterator<Item = &'a Device> + 'a {
    let est = *est;
    let opts = *opts;
    pool.devices[pool.first_above(est.e_bram)..]
        .iter()
        .filter(move |d| fits(d, &est, &opts))
}

pub fn select_device(pool: &HardwarePool, est: &ResourceEstimate, lc_ms: f64) -> Result<Selection> {
    select_device_with(pool, est, lc_ms, &SelectOptions::default())
}

pub fn select_device_with(
    pool: &HardwarePool,
    est: &ResourceEstimate,
    lc_ms: f64,
    opts: &SelectOptions,
) -> Result<Selection> {
    if !(lc_ms > 0.0) {
        return Err(Error::InvalidParam(format!("latency bound {lc_ms} ms must be positive")));
    }
    let feasible: Vec<&Device> = capacity_feasible(pool, est, opts).collect();
    if feasible.is_empty() {
        return Err(Error::NoCapacity {
            bram: est.e_bram,
            dsp: est.e_dsp,
        });
    }
    let mut best: Option<Selection> = None;
    for d in &feasible {
        let l = d.latency_ms(est.e_cycles);
        if !(l < lc_ms) {
            continue;
        }
        let bu = est.e_bram as f64 / d.bram as f64;
        let du = est.e_dsp as f64 / d.dsp as f64;
        let ru = opts.ru_mode.combine(bu, du);
        // Strictly greater keeps the smaller-BRAM device on ties.
        if best.as_ref().is_none_or(|b| ru > b.ru) {
            best = Some(Selection {
                device: (*d).clone(),
                latency_ms: l,
                ru,
                bram_util: bu,
                dsp_util: du,
                feasible: Vec::new(),
            });
        }
    }
    let mut sel = best.ok_or(Error::LatencyUnmet { lc_ms })?;
    sel.feasible = feasible.iter().map(|d| d.name.clone()).collect();
    Ok(sel)
}

/// Worst-case latency over the capacity-feasible devices.
pub fn max_latency(est: &ResourceEstimate, pool: &HardwarePool) -> Result<f64> {
    max_latency_with(est, pool, &SelectOptions::default())
}

pub fn max_latency_with(est: &ResourceEstimate, pool: &HardwarePool, opts: &SelectOptions) -> Result<f64> {
    let f = capacity_feasible(pool, est, opts)
        .map(|d| d.freq_mhz)
        .fold(f64::INFINITY, f64::min);
    if f.is_infinite() {
        return Err(Error::NoCapacity {
            bram: est.e_bram,
            dsp: est.e_dsp,
        });
    }
    Ok(latency_ms(est.e_cycles, f))
}
