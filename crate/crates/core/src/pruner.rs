// SPDX-License-Identifier: Apache-2.0
//! Hierarchical pruning.
//!
//! The weight matrix is cut into row bands ("blocks") of height `p`. The first
//! level removes the same number of whole columns from every block, keeping
//! the columns with the largest within-block L2 norm. The second level keeps
//! exactly `k` largest-magnitude entries in every surviving length-`p` column
//! vector, so every surviving column carries the same number of non-zeros.
//!
//! Ties are broken towards the lower column index / lower row offset. When `p`
//! does not divide the row count the last block is shorter and its `k` is
//! clamped to its height.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;
use serde::{Deserialize, Serialize};

use crate::num::round_half_up;
use crate::{Error, Result, WeightMatrix};

/// Column bitmaps are stored as `u64`, one bit per row offset.
pub const MAX_BLOCK_HEIGHT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpConfig {
    /// Block height in rows.
    pub p: usize,
    /// Fraction of columns removed per block, in `[0, 1)`.
    #[serde(rename = "sbm")]
    pub s_bm: f64,
    /// Non-zeros kept per surviving column vector.
    pub k: usize,
}

impl HpConfig {
    pub fn new(p: usize, s_bm: f64, k: usize) -> Result<Self> {
        let cfg = Self { p, s_bm, k };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_block_height(self.p)?;
        check_sbm(self.s_bm)?;
        check_k(self.k, self.p)
    }

    /// Columns removed from every block: `round_half_up(s_bm * cols)`.
    pub fn pruned_columns(&self, cols: usize) -> usize {
        pruned_columns(self.s_bm, cols)
    }

    /// `1 - (1 - s_bm') * k / p` with the realized column fraction `s_bm'`.
    /// Exact when `p` divides the row count.
    pub fn closed_form_sparsity(&self, cols: usize) -> f64 {
        let kept = cols - self.pruned_columns(cols);
        1.0 - (kept as f64 / cols as f64) * (self.k as f64 / self.p as f64)
    }
}

fn pruned_columns(s_bm: f64, cols: usize) -> usize {
    round_half_up(s_bm * cols as f64).min(cols)
}

fn check_block_height(p: usize) -> Result<()> {
    if p == 0 || p > MAX_BLOCK_HEIGHT {
        return Err(Error::InvalidParam(format!(
            "block height p = {p} must be in 1..={MAX_BLOCK_HEIGHT}"
        )));
    }
    Ok(())
}

fn check_sbm(s_bm: f64) -> Result<()> {
    if !(0.0..1.0).contains(&s_bm) {
        return Err(Error::InvalidParam(format!(
            "column sparsity {s_bm} must be in [0, 1)"
        )));
    }
    Ok(())
}

fn check_k(k: usize, p: usize) -> Result<()> {
    if k == 0 || k > p {
        return Err(Error::InvalidParam(format!("k = {k} must be in 1..={p}")));
    }
    Ok(())
}

/// Surviving columns of every block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMask {
    rows: usize,
    cols: usize,
    p: usize,
    blocks: Vec<Vec<usize>>,
}

impl ColumnMask {
    /// Builds a mask from explicit per-block column lists.
    pub fn from_blocks(rows: usize, cols: usize, p: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        check_block_height(p)?;
        if blocks.len() != rows.div_ceil(p) {
            return Err(Error::Dimension(format!(
                "{} blocks for {rows} rows of height {p}",
                blocks.len()
            )));
        }
        let kept = blocks.first().map_or(0, Vec::len);
        for b in &blocks {
            if b.len() != kept {
                return Err(Error::InvalidParam(
                    "every block must keep the same number of columns".into(),
                ));
            }
            if b.windows(2).any(|w| w[0] >= w[1]) || b.last().is_some_and(|&c| c >= cols) {
                return Err(Error::InvalidParam(
                    "column indices must be strictly increasing and < cols".into(),
                ));
            }
        }
        Ok(Self { rows, cols, p, blocks })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_height(&self, b: usize) -> usize {
        block_height(self.rows, self.p, b)
    }

    pub fn kept(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn kept_per_block(&self) -> usize {
        self.blocks.first().map_or(0, Vec::len)
    }

    /// Realized fraction of pruned columns (identical for every block).
    pub fn realized_sbm(&self) -> f64 {
        1.0 - self.kept_per_block() as f64 / self.cols as f64
    }
}

fn block_height(rows: usize, p: usize, b: usize) -> usize {
    p.min(rows - b * p)
}

/// First level: keep the columns with the largest within-block L2 norm.
pub fn block_column_prune(w: &WeightMatrix, p: usize, s_bm: f64) -> Result<ColumnMask> {
    check_block_height(p)?;
    check_sbm(s_bm)?;
    let (rows, cols) = (w.rows(), w.cols());
    let keep = cols - pruned_columns(s_bm, cols);
    let n_blocks = rows.div_ceil(p);

    let mut blocks = Vec::with_capacity(n_blocks);
    let mut norms = alloc::vec![0.0f64; cols];
    let mut order: Vec<usize> = Vec::with_capacity(cols);
    for b in 0..n_blocks {
        norms.iter_mut().for_each(|n| *n = 0.0);
        for r in b * p..b * p + block_height(rows, p, b) {
            for (n, &v) in norms.iter_mut().zip(w.row(r)) {
                let v = v as f64;
                *n += v * v;
            }
        }
        order.clear();
        order.extend(0..cols);
        // Squared norms rank identically to norms.
        order.sort_by(|&a, &c| norms[c].total_cmp(&norms[a]).then(a.cmp(&c)));
        let mut kept = order[..keep].to_vec();
        kept.sort_unstable();
        blocks.push(kept);
    }
    Ok(ColumnMask { rows, cols, p, blocks })
}

/// Output of hierarchical pruning: the masked dense matrix and its structure.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedMatrix {
    dense: WeightMatrix,
    mask: ColumnMask,
    k: usize,
    /// Per block, per surviving column: bit `i` set iff row offset `i` is kept.
    slots: Vec<Vec<u64>>,
}

impl PrunedMatrix {
    /// Reassembles a pruned matrix from its parts, checking balance.
    pub fn from_parts(dense: WeightMatrix, mask: ColumnMask, k: usize, slots: Vec<Vec<u64>>) -> Result<Self> {
        if dense.rows() != mask.rows || dense.cols() != mask.cols {
            return Err(Error::Dimension("mask does not match matrix".into()));
        }
        check_k(k, mask.p)?;
        if slots.len() != mask.n_blocks() {
            return Err(Error::Dimension("slot table does not match block count".into()));
        }
        for (b, s) in slots.iter().enumerate() {
            let kb = k.min(mask.block_height(b));
            if s.len() != mask.kept(b).len()
                || s.iter().any(|&bits| bits.count_ones() as usize != kb || bits >> mask.block_height(b) != 0)
            {
                return Err(Error::Encoding(format!("block {b} is not balanced at k = {kb}")));
            }
        }
        let pm = Self { dense, mask, k, slots };
        let mut masked = pm.dense.clone();
        pm.apply_to(&mut masked);
        if masked != pm.dense {
            return Err(Error::Encoding("non-zero value outside the mask".into()));
        }
        Ok(pm)
    }

    pub fn dense(&self) -> &WeightMatrix {
        &self.dense
    }

    pub fn into_dense(self) -> WeightMatrix {
        self.dense
    }

    pub fn mask(&self) -> &ColumnMask {
        &self.mask
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.mask.p
    }

    pub fn rows(&self) -> usize {
        self.mask.rows
    }

    pub fn cols(&self) -> usize {
        self.mask.cols
    }

    /// Kept entries per surviving column of block `b`.
    pub fn k_of_block(&self, b: usize) -> usize {
        self.k.min(self.mask.block_height(b))
    }

    pub fn slots(&self, b: usize) -> &[u64] {
        &self.slots[b]
    }

    pub fn all_slots(&self) -> &[Vec<u64>] {
        &self.slots
    }

    /// Number of kept slots (structural non-zeros).
    pub fn kept_count(&self) -> usize {
        (0..self.mask.n_blocks())
            .map(|b| self.mask.kept(b).len() * self.k_of_block(b))
            .sum()
    }

    /// Zero every entry outside the mask.
    pub fn apply_to(&self, w: &mut WeightMatrix) {
        let p = self.mask.p;
        let mut keep_row = alloc::vec![0u64; self.mask.cols];
        for b in 0..self.mask.n_blocks() {
            keep_row.iter_mut().for_each(|x| *x = 0);
            for (&c, &bits) in self.mask.kept(b).iter().zip(&self.slots[b]) {
                keep_row[c] = bits;
            }
            for off in 0..self.mask.block_height(b) {
                let r = b * p + off;
                for (c, &bits) in keep_row.iter().enumerate() {
                    if bits >> off & 1 == 0 {
                        w.set(r, c, 0.0);
                    }
                }
            }
        }
    }
}

fn magnitude_desc(a: (f32, usize), b: (f32, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// Second level: keep the `k` largest-magnitude entries of every surviving
/// column vector.
pub fn vector_prune(w: &WeightMatrix, mask: &ColumnMask, k: usize) -> Result<PrunedMatrix> {
    check_k(k, mask.p)?;
    if w.rows() != mask.rows || w.cols() != mask.cols {
        return Err(Error::Dimension(format!(
            "mask is {}x{} but matrix is {}x{}",
            mask.rows,
            mask.cols,
            w.rows(),
            w.cols()
        )));
    }
    let p = mask.p;
    let mut slots = Vec::with_capacity(mask.n_blocks());
    let mut cand: Vec<(f32, usize)> = Vec::with_capacity(p);
    for b in 0..mask.n_blocks() {
        let h = mask.block_height(b);
        let kb = k.min(h);
        let mut block_slots = Vec::with_capacity(mask.kept(b).len());
        for &c in mask.kept(b) {
            cand.clear();
            cand.extend((0..h).map(|off| (w.get(b * p + off, c).abs(), off)));
            cand.sort_by(|x, y| magnitude_desc(*x, *y));
            let bits = cand[..kb].iter().fold(0u64, |acc, &(_, off)| acc | 1 << off);
            block_slots.push(bits);
        }
        slots.push(block_slots);
    }
    let mut dense = w.clone();
    let pm = PrunedMatrix {
        dense: WeightMatrix::zeros(1, 1)?,
        mask: mask.clone(),
        k,
        slots,
    };
    pm.apply_to(&mut dense);
    Ok(PrunedMatrix { dense, ..pm })
}

/// Both levels of hierarchical pruning.
pub fn apply_hp(w: &WeightMatrix, cfg: &HpConfig) -> Result<PrunedMatrix> {
    cfg.validate()?;
    let mask = block_column_prune(w, cfg.p, cfg.s_bm)?;
    vector_prune(w, &mask, cfg.k)
}

/// Block column pruning alone (`k = p`).
pub fn bp_only(w: &WeightMatrix, p: usize, s_bm: f64) -> Result<PrunedMatrix> {
    apply_hp(w, &HpConfig::new(p, s_bm, p)?)
}

/// Balanced vector pruning alone (no column removal).
pub fn vw_only(w: &WeightMatrix, p: usize, k: usize) -> Result<PrunedMatrix> {
    apply_hp(w, &HpConfig::new(p, 0.0, k)?)
}

/// Fraction of exactly-zero entries.
pub fn sparsity_of(pm: &PrunedMatrix) -> f64 {
    let d = pm.dense();
    d.count_zeros() as f64 / (d.rows() * d.cols()) as f64
}
