// SPDX-License-Identifier: Apache-2.0
//! Cycle-level model of the sparse matrix engine.
//!
//! The engine multiplies an input `K x M` by a WMark-encoded weight `M x N`.
//! `T` processing elements each hold one input row in a random-access row
//! buffer and compute dot products against one weight column at a time, so
//! a group of `T` input rows is finished column by column and results are
//! written sequentially. Each PE invocation reads up to `C` weights, gathers
//! the matching `C` inputs through the column bitmap, multiplies them and
//! reduces the products with an adder tree. PEs are pipelined at one
//! invocation per cycle, so the cycle count is the invocation count (plus an
//! optional fixed fill latency, zero by default).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::formats::WMarkMatrix;
use crate::pruner::HpConfig;
use crate::{Error, Result, WeightMatrix};

/// PE array shape: `T` PEs of `C` multipliers each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PeConfig {
    #[serde(rename = "C")]
    pub c: usize,
    #[serde(rename = "T")]
    pub t: usize,
}

impl PeConfig {
    pub fn new(c: usize, t: usize) -> Result<Self> {
        let pe = Self { c, t };
        pe.validate()?;
        Ok(pe)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c == 0 || self.t == 0 {
            return Err(Error::InvalidParam(format!(
                "PE array C = {}, T = {} must both be >= 1",
                self.c, self.t
            )));
        }
        Ok(())
    }

    /// Multipliers working in parallel (`C * T`).
    pub fn lanes(&self) -> u64 {
        self.c as u64 * self.t as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `K x N` product.
    pub result: Vec<f64>,
    pub cycles: u64,
    pub mac_count: u64,
}

impl SimResult {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.result[r * self.cols + c]
    }

    /// Sum of all result entries.
    pub fn checksum(&self) -> f64 {
        self.result.iter().sum()
    }
}

/// Non-zero count of every stored (block, column) vector; all the schedule
/// depends on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightsMeta {
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<Vec<u32>>,
}

impl WeightsMeta {
    pub fn from_wmark(m: &WMarkMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            counts: (0..m.n_blocks())
                .map(|b| m.wbit(b).iter().map(|w| w.count_ones()).collect())
                .collect(),
        }
    }

    /// Counts implied by a pruning profile alone.
    pub fn from_profile(rows: usize, cols: usize, hp: &HpConfig) -> Self {
        let kept = cols - hp.pruned_columns(cols);
        let counts = (0..rows.div_ceil(hp.p))
            .map(|b| vec![hp.k.min(hp.p.min(rows - b * hp.p)) as u32; kept])
            .collect();
        Self { rows, cols, counts }
    }

    pub fn nnz(&self) -> u64 {
        self.counts.iter().flatten().map(|&c| c as u64).sum()
    }

    /// Zero fraction of the weight matrix.
    pub fn sparsity(&self) -> f64 {
        1.0 - self.nnz() as f64 / (self.rows * self.cols) as f64
    }

    /// Smallest non-zero per-vector count, if any vector is non-empty.
    pub fn min_count(&self) -> Option<u32> {
        self.counts.iter().flatten().copied().filter(|&c| c > 0).min()
    }
}

/// One processing element: a row buffer, `C` multipliers and an adder tree.
#[derive(Debug, Clone)]
struct ProcessingElement {
    row_buffer: Vec<f32>,
    products: Vec<f64>,
}

impl ProcessingElement {
    fn new(m: usize, c: usize) -> Self {
        Self {
            row_buffer: vec![0.0; m],
            products: vec![0.0; c.next_power_of_two()],
        }
    }

    fn load_row(&mut self, row: &[f32]) {
        self.row_buffer.copy_from_slice(row);
    }

    /// One invocation: `weights.len() <= C` multiplies against the gathered
    /// inputs, summed by a binary adder tree.
    fn invoke(&mut self, weights: &[f32], offsets: &[usize]) -> f64 {
        self.products.iter_mut().for_each(|p| *p = 0.0);
        for (i, (&w, &off)) in weights.iter().zip(offsets).enumerate() {
            self.products[i] = w as f64 * self.row_buffer[off] as f64;
        }
        let mut width = self.products.len();
        while width > 1 {
            width /= 2;
            for i in 0..width {
                self.products[i] += self.products[i + width];
            }
        }
        self.products[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Engine {
    pub pe: PeConfig,
    /// Constant pipeline fill/drain cycles added per matrix product.
    pub fill_cycles: u64,
}

impl Engine {
    pub fn new(pe: PeConfig) -> Self {
        Self { pe, fill_cycles: 0 }
    }

    pub fn with_fill_cycles(mut self, cycles: u64) -> Self {
        self.fill_cycles = cycles;
        self
    }

    pub fn simulate(&self, input: &WeightMatrix, weights: &WMarkMatrix) -> Result<SimResult> {
        self.pe.validate()?;
        weights.validate()?;
        if input.cols() != weights.rows() {
            return Err(Error::Dimension(format!(
                "input is {}x{} but weights are {}x{}",
                input.rows(),
                input.cols(),
                weights.rows(),
                weights.cols()
            )));
        }
        let (k_rows, m, n) = (input.rows(), weights.rows(), weights.cols());
        let (c, t, p) = (self.pe.c, self.pe.t, weights.p());
        let n_blocks = weights.n_blocks();

        // column -> stored position, per block
        let mut position = vec![vec![u32::MAX; n]; n_blocks];
        for (b, pos) in position.iter_mut().enumerate() {
            for j in 0..weights.stored_columns() {
                pos[weights.column_of(b, j)] = j as u32;
            }
        }

        let mut pes: Vec<ProcessingElement> = (0..t).map(|_| ProcessingElement::new(m, c)).collect();
        let mut acc = vec![0.0f64; t];
        let mut offsets: Vec<usize> = Vec::with_capacity(p);
        let mut result = vec![0.0f64; k_rows * n];
        let mut invocations = 0u64;
        let mut mac_count = 0u64;

        for group_start in (0..k_rows).step_by(t) {
            let active = t.min(k_rows - group_start);
            for (i, pe) in pes.iter_mut().take(active).enumerate() {
                pe.load_row(input.row(group_start + i));
            }
            for col in 0..n {
                acc[..active].iter_mut().for_each(|a| *a = 0.0);
                for (b, pos) in position.iter().enumerate() {
                    let j = pos[col];
                    if j == u32::MAX {
                        continue;
                    }
                    let bits = weights.wbit(b)[j as usize];
                    let kb = bits.count_ones() as usize;
                    if kb == 0 {
                        continue;
                    }
                    let base = j as usize * kb;
                    let vals = &weights.values(b)[base..base + kb];
                    offsets.clear();
                    offsets.extend((0..p).filter(|i| bits >> i & 1 == 1).map(|i| b * p + i));
                    for start in (0..kb).step_by(c) {
                        let end = (start + c).min(kb);
                        invocations += 1;
                        for (pe, a) in pes.iter_mut().zip(acc.iter_mut()).take(active) {
                            *a += pe.invoke(&vals[start..end], &offsets[start..end]);
                        }
                    }
                    mac_count += (kb * active) as u64;
                }
                for (i, a) in acc[..active].iter().enumerate() {
                    result[(group_start + i) * n + col] = *a;
                }
            }
        }

        Ok(SimResult {
            rows: k_rows,
            cols: n,
            result,
            cycles: invocations + self.fill_cycles,
            mac_count,
        })
    }

    /// Cycle count of [`Self::simulate`] without computing any values.
    pub fn schedule(&self, meta: &WeightsMeta, k_rows: usize) -> u64 {
        let c = self.pe.c as u64;
        let per_group: u64 = meta
            .counts
            .iter()
            .flatten()
            .map(|&cnt| (cnt as u64).div_ceil(c))
            .sum();
        k_rows.div_ceil(self.pe.t) as u64 * per_group + self.fill_cycles
    }
}

/// Runs the engine with no fill latency.
pub fn simulate_mm(input: &WeightMatrix, weights: &WMarkMatrix, pe: PeConfig) -> Result<SimResult> {
    Engine::new(pe).simulate(input, weights)
}

/// Fast path: the invocation count of [`simulate_mm`].
pub fn schedule_cycles(meta: &WeightsMeta, k_rows: usize, pe: PeConfig) -> u64 {
    Engine::new(pe).schedule(meta, k_rows)
}

/// Real-valued idealized count `K * nnz / (T * C)`.
pub fn ideal_cycles(meta: &WeightsMeta, k_rows: usize, pe: PeConfig) -> f64 {
    k_rows as f64 * meta.nnz() as f64 / pe.lanes() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::encode_wmark;
    use crate::pruner::{apply_hp, HpConfig};

    fn desk_weights() -> WMarkMatrix {
        let w = WeightMatrix::new(
            4,
            4,
            vec![
                1.0, -4.0, 2.0, 0.5, 3.0, 1.0, -1.0, 2.0, 0.1, 5.0, 0.2, 1.0, 2.0, 0.3, 0.4, -2.0,
            ],
        )
        .unwrap();
        encode_wmark(&apply_hp(&w, &HpConfig::new(2, 0.5, 1).unwrap()).unwrap(), 32, 4).unwrap()
    }

    #[test]
    fn desk_case_cycles() {
        let wm = desk_weights();
        let input = WeightMatrix::new(4, 4, (0..16).map(|v| v as f32).collect()).unwrap();
        let pe = PeConfig::new(1, 2).unwrap();
        let r = simulate_mm(&input, &wm, pe).unwrap();
        assert_eq!(r.cycles, 8);
        assert_eq!(r.mac_count, 16);
        assert_eq!(schedule_cycles(&WeightsMeta::from_wmark(&wm), 4, pe), 8);
        // row 1 of input = [4,5,6,7]; column 1 of the pruned weights holds -4 (row 0) and 5 (row 2)
        assert_eq!(r.get(1, 1), 4.0 * -4.0 + 6.0 * 5.0);
    }

    #[test]
    fn identity_weights_pass_input_through() {
        let id = WeightMatrix::identity(6).unwrap();
        let wm = encode_wmark(&apply_hp(&id, &HpConfig::new(3, 0.0, 3).unwrap()).unwrap(), 32, 4).unwrap();
        let input = WeightMatrix::new(5, 6, (0..30).map(|v| v as f32 * 0.5).collect()).unwrap();
        let pe = PeConfig::new(2, 2).unwrap();
        let r = simulate_mm(&input, &wm, pe).unwrap();
        for i in 0..5 {
            for j in 0..6 {
                assert_eq!(r.get(i, j), input.get(i, j) as f64);
            }
        }
        // ceil(5/2) groups x 6 columns x 2 blocks x ceil(3/2)
        assert_eq!(r.cycles, 3 * 6 * 2 * 2);
    }

    #[test]
    fn excess_pes_sit_idle() {
        let meta = WeightsMeta::from_wmark(&desk_weights());
        let a = schedule_cycles(&meta, 4, PeConfig::new(1, 4).unwrap());
        let b = schedule_cycles(&meta, 4, PeConfig::new(1, 9).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn fill_cycles_added_once() {
        let meta = WeightsMeta::from_wmark(&desk_weights());
        let e = Engine::new(PeConfig::new(1, 2).unwrap()).with_fill_cycles(5);
        assert_eq!(e.schedule(&meta, 4), 13);
    }

    #[test]
    fn dimension_mismatch() {
        let input = WeightMatrix::zeros(2, 3).unwrap();
        assert!(matches!(
            simulate_mm(&input, &desk_weights(), PeConfig::new(1, 1).unwrap()),
            Err(Error::Dimension(_))
        ));
        assert!(PeConfig::new(0, 1).is_err());
    }
}
