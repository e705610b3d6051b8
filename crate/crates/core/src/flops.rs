// SPDX-License-Identifier: Apache-2.0
//! Throughput comparison in FLOPS.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopsInput {
    pub label: String,
    /// Operations, in G.
    pub operations: f64,
    /// Seconds.
    pub latency: f64,
}

impl FlopsInput {
    pub fn new(label: &str, operations: f64, latency: f64) -> Self {
        Self {
            label: label.into(),
            operations,
            latency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopsRow {
    pub label: String,
    pub operations: f64,
    pub latency: f64,
    /// GFLOPS, `operations / latency`.
    pub flops: f64,
    /// `flops / flops(base)`.
    pub improvement: f64,
}

pub fn flops_table(rows: &[FlopsInput], base: &str) -> Result<Vec<FlopsRow>> {
    for r in rows {
        if !(r.latency > 0.0 && r.latency.is_finite()) {
            return Err(Error::InvalidParam(format!("{}: latency must be positive", r.label)));
        }
        if !(r.operations >= 0.0 && r.operations.is_finite()) {
            return Err(Error::InvalidParam(format!("{}: operations must be >= 0", r.label)));
        }
    }
    let b = rows.iter().find(|r| r.label == base).ok_or_else(|| Error::Unknown {
        kind: "base row",
        name: base.into(),
    })?;
    let base_flops = b.operations / b.latency;
    if base_flops <= 0.0 {
        return Err(Error::InvalidParam(format!("base row {base} has zero throughput")));
    }
    Ok(rows
        .iter()
        .map(|r| {
            let flops = r.operations / r.latency;
            FlopsRow {
                label: r.label.clone(),
                operations: r.operations,
                latency: r.latency,
                flops,
                improvement: flops / base_flops,
            }
        })
        .collect())
}

/// Reference CPU/GPU/FPGA comparison inputs.
pub fn reference_inputs() -> Vec<FlopsInput> {
    alloc::vec![
        FlopsInput::new("Trans (CPU)", 1.5, 3.3),
        FlopsInput::new("Evolved Transformer (CPU)", 2.9, 7.6),
        FlopsInput::new("HAT (CPU)", 1.1, 2.1),
        FlopsInput::new("HAT (GPU)", 1.1, 0.147),
        FlopsInput::new("FTRANS (FPGA)", 0.284, 0.034),
        FlopsInput::new("Ours Transformer", 0.09, 0.00645),
        FlopsInput::new("Ours TinyBERT", 1.2, 0.0158),
    ]
}

pub const REFERENCE_BASE: &str = "Trans (CPU)";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_table() {
        let t = flops_table(&reference_inputs(), REFERENCE_BASE).unwrap();
        assert!((t[0].flops - 0.4545).abs() < 1e-4);
        assert_eq!(t[0].improvement, 1.0);
        assert!((t[5].flops - 13.953).abs() < 1e-3);
        assert!((t[5].improvement - 30.7).abs() < 0.1);
        assert!((t[6].flops - 75.95).abs() < 0.01);
    }

    #[test]
    fn errors() {
        assert!(flops_table(&reference_inputs(), "nope").is_err());
        assert!(flops_table(&[FlopsInput::new("a", 1.0, 0.0)], "a").is_err());
    }
}
