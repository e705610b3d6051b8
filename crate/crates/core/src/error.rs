// SPDX-License-Identifier: Apache-2.0
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("inconsistent encoding: {0}")]
    Encoding(String),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("empty input: {0}")]
    Empty(&'static str),
    /// No device in the pool has enough BRAM/DSP for the estimate.
    #[error("no device has enough capacity (bram {bram}, dsp {dsp})")]
    NoCapacity { bram: u64, dsp: u64 },
    /// Some devices have capacity, but none meets the latency bound.
    #[error("no capacity-feasible device meets the latency bound of {lc_ms} ms")]
    LatencyUnmet { lc_ms: f64 },
    #[error("resource budget too small: {0}")]
    Budget(String),
}

impl Error {
    /// True for the two device-selection failures, which the search loop
    /// turns into penalties rather than aborting.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::NoCapacity { .. } | Error::LatencyUnmet { .. } | Error::Budget(_)
        )
    }
}
