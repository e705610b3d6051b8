// SPDX-License-Identifier: Apache-2.0
//! The WMark bitmap format.
//!
//! A hierarchically pruned matrix is stored per row block as three arrays:
//!
//! - `col_idx`: the surviving column indices of the block (SF1 only; when no
//!   column was pruned the indices are implicit and the variant is SF2),
//! - `wbit`: one `p`-bit bitmap per stored column, bit `i` set iff row offset
//!   `i` of the block holds a kept value,
//! - `values`: the kept values of the block, column after column in ascending
//!   column order, each column in ascending row-offset order.
//!
//! Because every surviving column keeps exactly `k` values, no row pointer
//! array is needed: the `j`-th stored column of a block starts at `j * k`.

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::bits::{BitReader, BitWriter};
use crate::pruner::{ColumnMask, PrunedMatrix};
use crate::{Error, Result, WeightMatrix};

pub const MAGIC: [u8; 4] = *b"WMK1";
pub const SUPPORTED_VALUE_BITS: [u32; 4] = [4, 8, 16, 32];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Some columns pruned: carries `col_idx`.
    Sf1,
    /// No column pruned: `col_idx` omitted, bitmaps cover every column.
    Sf2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WMarkMatrix {
    variant: Variant,
    rows: usize,
    cols: usize,
    p: usize,
    k: usize,
    value_bits: u32,
    idx_bits: u32,
    col_idx: Vec<Vec<u32>>,
    wbit: Vec<Vec<u64>>,
    values: Vec<Vec<f32>>,
}

/// Bit lengths of the three arrays, before byte padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EncodedBits {
    pub col_idx: u64,
    pub wbit: u64,
    pub values: u64,
}

impl EncodedBits {
    pub fn total(&self) -> u64 {
        self.col_idx + self.wbit + self.values
    }
}

fn check_widths(value_bits: u32, idx_bits: u32, cols: usize) -> Result<()> {
    if !SUPPORTED_VALUE_BITS.contains(&value_bits) {
        return Err(Error::InvalidParam(format!(
            "value width {value_bits} not in {SUPPORTED_VALUE_BITS:?}"
        )));
    }
    if idx_bits == 0 || idx_bits > 32 || (1u64 << idx_bits) < cols as u64 {
        return Err(Error::InvalidParam(format!(
            "{idx_bits} index bits cannot address {cols} columns"
        )));
    }
    Ok(())
}

/// Encodes a pruned matrix. SF2 is chosen exactly when no column was pruned.
pub fn encode_wmark(pm: &PrunedMatrix, value_bits: u32, idx_bits: u32) -> Result<WMarkMatrix> {
    let (rows, cols, p) = (pm.rows(), pm.cols(), pm.p());
    check_widths(value_bits, idx_bits, cols)?;
    let mask = pm.mask();
    let variant = if mask.kept_per_block() == cols {
        Variant::Sf2
    } else {
        Variant::Sf1
    };
    let dense = pm.dense();
    let mut col_idx = Vec::new();
    let mut wbit = Vec::with_capacity(mask.n_blocks());
    let mut values = Vec::with_capacity(mask.n_blocks());
    for b in 0..mask.n_blocks() {
        let kept = mask.kept(b);
        if variant == Variant::Sf1 {
            col_idx.push(kept.iter().map(|&c| c as u32).collect());
        }
        let slots = pm.slots(b);
        let mut vals = Vec::with_capacity(kept.len() * pm.k_of_block(b));
        for (&c, &bits) in kept.iter().zip(slots) {
            for off in set_bits(bits) {
                vals.push(dense.get(b * p + off, c));
            }
        }
        wbit.push(slots.to_vec());
        values.push(vals);
    }
    Ok(WMarkMatrix {
        variant,
        rows,
        cols,
        p,
        k: pm.k(),
        value_bits,
        idx_bits,
        col_idx,
        wbit,
        values,
    })
}

fn set_bits(bits: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| bits >> i & 1 == 1)
}

/// Reconstructs the dense pruned matrix.
pub fn decode_wmark(m: &WMarkMatrix, rows: usize, cols: usize) -> Result<WeightMatrix> {
    if rows != m.rows || cols != m.cols {
        return Err(Error::Dimension(format!(
            "encoding is {}x{}, asked for {rows}x{cols}",
            m.rows, m.cols
        )));
    }
    m.validate()?;
    let mut out = WeightMatrix::zeros(rows, cols)?;
    for b in 0..m.n_blocks() {
        let mut vals = m.values[b].iter();
        for (j, &bits) in m.wbit[b].iter().enumerate() {
            let c = m.column_of(b, j);
            for off in set_bits(bits) {
                // validate() guarantees enough values
                out.set(b * m.p + off, c, *vals.next().unwrap());
            }
        }
    }
    Ok(out)
}

impl WMarkMatrix {
    pub fn variant(&self) -> Variant {
        self.variant
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

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn value_bits(&self) -> u32 {
        self.value_bits
    }

    pub fn idx_bits(&self) -> u32 {
        self.idx_bits
    }

    pub fn n_blocks(&self) -> usize {
        self.wbit.len()
    }

    pub fn block_height(&self, b: usize) -> usize {
        self.p.min(self.rows - b * self.p)
    }

    /// Stored columns per block (all columns for SF2).
    pub fn stored_columns(&self) -> usize {
        self.wbit.first().map_or(0, Vec::len)
    }

    /// Surviving column indices of block `b` (implicit `0..cols` for SF2).
    pub fn col_idx(&self, b: usize) -> Option<&[u32]> {
        self.col_idx.get(b).map(Vec::as_slice)
    }

    pub fn wbit(&self, b: usize) -> &[u64] {
        &self.wbit[b]
    }

    pub fn values(&self, b: usize) -> &[f32] {
        &self.values[b]
    }

    /// Column index of the `j`-th stored column of block `b`.
    #[inline]
    pub fn column_of(&self, b: usize, j: usize) -> usize {
        match self.variant {
            Variant::Sf1 => self.col_idx[b][j] as usize,
            Variant::Sf2 => j,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    /// Checks the structural invariants: block count, column ranges and
    /// that every bitmap holds exactly the per-column count implied by `W`.
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.p > crate::pruner::MAX_BLOCK_HEIGHT {
            return Err(Error::Encoding(format!("bad block height {}", self.p)));
        }
        let n_blocks = self.rows.div_ceil(self.p);
        if self.wbit.len() != n_blocks || self.values.len() != n_blocks {
            return Err(Error::Encoding(format!(
                "{} rows at p = {} need {n_blocks} blocks",
                self.rows, self.p
            )));
        }
        let stored = self.stored_columns();
        match self.variant {
            Variant::Sf1 => {
                if self.col_idx.len() != n_blocks {
                    return Err(Error::Encoding("SF1 needs one colIdx list per block".into()));
                }
                for ci in &self.col_idx {
                    if ci.len() != stored
                        || ci.windows(2).any(|w| w[0] >= w[1])
                        || ci.last().is_some_and(|&c| c as usize >= self.cols)
                    {
                        return Err(Error::Encoding("colIdx out of range or unsorted".into()));
                    }
                }
            }
            Variant::Sf2 => {
                if !self.col_idx.is_empty() || stored != self.cols {
                    return Err(Error::Encoding("SF2 must cover every column".into()));
                }
            }
        }
        for b in 0..n_blocks {
            let h = self.block_height(b);
            let kb = self.k.min(h);
            if self.wbit[b].len() != stored {
                return Err(Error::Encoding(format!("block {b} has a ragged bitmap")));
            }
            let mut pop = 0usize;
            for &bits in &self.wbit[b] {
                let ones = bits.count_ones() as usize;
                if ones != kb || (h < 64 && bits >> h != 0) {
                    return Err(Error::Encoding(format!(
                        "block {b}: bitmap popcount {ones} differs from k = {kb}"
                    )));
                }
                pop += ones;
            }
            if pop != self.values[b].len() {
                return Err(Error::Encoding(format!(
                    "block {b}: bitmaps mark {pop} slots but W holds {}",
                    self.values[b].len()
                )));
            }
        }
        Ok(())
    }

    /// Recovers the pruning structure (mask and slot bitmaps).
    pub fn to_pruned(&self) -> Result<PrunedMatrix> {
        let dense = decode_wmark(self, self.rows, self.cols)?;
        let blocks = (0..self.n_blocks())
            .map(|b| (0..self.stored_columns()).map(|j| self.column_of(b, j)).collect())
            .collect();
        let mask = ColumnMask::from_blocks(self.rows, self.cols, self.p, blocks)?;
        PrunedMatrix::from_parts(dense, mask, self.k, self.wbit.clone())
    }

    /// Bit length of each array as packed by [`Self::to_bytes`].
    pub fn encoded_bits(&self) -> EncodedBits {
        let mut w = BitWriter::new();
        self.pack_col_idx(&mut w);
        let col_idx = w.bit_len() as u64;
        let mut w = BitWriter::new();
        self.pack_wbit(&mut w);
        let wbit = w.bit_len() as u64;
        let mut w = BitWriter::new();
        self.pack_values(&mut w, self.quant_scale());
        EncodedBits {
            col_idx,
            wbit,
            values: w.bit_len() as u64,
        }
    }

    fn pack_col_idx(&self, w: &mut BitWriter) {
        for ci in &self.col_idx {
            for &c in ci {
                w.write(c as u64, self.idx_bits);
            }
        }
    }

    fn pack_wbit(&self, w: &mut BitWriter) {
        for block in &self.wbit {
            for &bits in block {
                w.write(bits, self.p as u32);
            }
        }
    }

    /// Scale of the symmetric integer code used for 4- and 8-bit values.
    fn quant_scale(&self) -> f32 {
        if self.value_bits >= 16 {
            return 1.0;
        }
        let max = self
            .values
            .iter()
            .flatten()
            .fold(0.0f32, |m, v| m.max(v.abs()));
        let levels = ((1u32 << (self.value_bits - 1)) - 1) as f32;
        if max == 0.0 {
            1.0
        } else {
            max / levels
        }
    }

    fn pack_values(&self, w: &mut BitWriter, scale: f32) {
        let nb = self.value_bits;
        for &v in self.values.iter().flatten() {
            let code = match nb {
                32 => v.to_bits() as u64,
                16 => half::f16::from_f32(v).to_bits() as u64,
                _ => {
                    let q = libm::roundf(v / scale) as i64;
                    (q as u64) & ((1u64 << nb) - 1)
                }
            };
            w.write(code, nb);
        }
    }

    /// Serializes to the on-disk layout: a fixed little-endian header
    /// followed by the bit-packed `col_idx` (SF1 only), `wbit` and `values`
    /// arrays, each padded to a byte boundary.
    ///
    /// 32-bit values are stored losslessly; 16-bit values as IEEE half;
    /// 4/8-bit values as symmetric integer codes times the header scale.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.push(match self.variant {
            Variant::Sf1 => 1,
            Variant::Sf2 => 2,
        });
        for v in [self.rows, self.cols, self.p, self.k] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.push(self.value_bits as u8);
        out.push(self.idx_bits as u8);
        out.extend_from_slice(&(self.n_blocks() as u32).to_le_bytes());
        out.extend_from_slice(&(self.stored_columns() as u32).to_le_bytes());
        let scale = self.quant_scale();
        out.extend_from_slice(&scale.to_le_bytes());

        let mut w = BitWriter::new();
        self.pack_col_idx(&mut w);
        w.align();
        self.pack_wbit(&mut w);
        w.align();
        self.pack_values(&mut w, scale);
        out.extend_from_slice(&w.into_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        const HEADER: usize = 4 + 1 + 16 + 2 + 8 + 4;
        if bytes.len() < HEADER || bytes[..4] != MAGIC {
            return Err(Error::Encoding("not a WMark file".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
        let variant = match bytes[4] {
            1 => Variant::Sf1,
            2 => Variant::Sf2,
            v => return Err(Error::Encoding(format!("unknown variant tag {v}"))),
        };
        let rows = u32_at(5) as usize;
        let cols = u32_at(9) as usize;
        let p = u32_at(13) as usize;
        let k = u32_at(17) as usize;
        let value_bits = bytes[21] as u32;
        let idx_bits = bytes[22] as u32;
        let n_blocks = u32_at(23) as usize;
        let stored = u32_at(27) as usize;
        let scale = f32::from_bits(u32_at(31));
        check_widths(value_bits, idx_bits, cols)?;
        if rows == 0 || cols == 0 || p == 0 || p > crate::pruner::MAX_BLOCK_HEIGHT || k == 0 || k > p {
            return Err(Error::Encoding("bad header dimensions".into()));
        }
        if n_blocks != rows.div_ceil(p) || stored > cols {
            return Err(Error::Encoding("header block count inconsistent".into()));
        }

        let payload = &bytes[HEADER..];
        let mut r = BitReader::new(payload);
        let mut col_idx = Vec::new();
        if variant == Variant::Sf1 {
            for _ in 0..n_blocks {
                let mut ci = Vec::with_capacity(stored);
                for _ in 0..stored {
                    ci.push(r.read(idx_bits)? as u32);
                }
                col_idx.push(ci);
            }
            r.align();
        }
        let mut wbit = Vec::with_capacity(n_blocks);
        for _ in 0..n_blocks {
            let mut bl = Vec::with_capacity(stored);
            for _ in 0..stored {
                bl.push(r.read(p as u32)?);
            }
            wbit.push(bl);
        }
        r.align();
        let mut values = Vec::with_capacity(n_blocks);
        for bl in &wbit {
            let n: usize = bl.iter().map(|b| b.count_ones() as usize).sum();
            let mut vals = Vec::with_capacity(n);
            for _ in 0..n {
                let code = r.read(value_bits)?;
                vals.push(decode_value(code, value_bits, scale));
            }
            values.push(vals);
        }
        if r.byte_pos() != payload.len() {
            return Err(Error::Encoding(format!(
                "{} trailing payload bytes",
                payload.len() - r.byte_pos()
            )));
        }
        let m = Self {
            variant,
            rows,
            cols,
            p,
            k,
            value_bits,
            idx_bits,
            col_idx,
            wbit,
            values,
        };
        m.validate()?;
        Ok(m)
    }
}

fn decode_value(code: u64, nb: u32, scale: f32) -> f32 {
    match nb {
        32 => f32::from_bits(code as u32),
        16 => half::f16::from_bits(code as u16).to_f32(),
        _ => {
            // sign-extend
            let shift = 64 - nb;
            let q = ((code << shift) as i64) >> shift;
            q as f32 * scale
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pruner::{apply_hp, HpConfig};
    use alloc::vec;

    fn desk() -> PrunedMatrix {
        let w = WeightMatrix::new(
            4,
            4,
            vec![
                1.0, -4.0, 2.0, 0.5, 3.0, 1.0, -1.0, 2.0, 0.1, 5.0, 0.2, 1.0, 2.0, 0.3, 0.4, -2.0,
            ],
        )
        .unwrap();
        apply_hp(&w, &HpConfig::new(2, 0.5, 1).unwrap()).unwrap()
    }

    #[test]
    fn desk_encoding_layout() {
        let pm = desk();
        let m = encode_wmark(&pm, 32, 10).unwrap();
        assert_eq!(m.variant(), Variant::Sf1);
        assert_eq!(m.col_idx(0).unwrap(), &[0, 1]);
        assert_eq!(m.col_idx(1).unwrap(), &[1, 3]);
        assert_eq!(m.values(0), &[3.0, -4.0]);
        assert_eq!(m.values(1), &[5.0, -2.0]);
        // bit 0 = first row of the block: "01","10" and "10","01" read bit 0 first
        assert_eq!(m.wbit(0), &[0b10, 0b01]);
        assert_eq!(m.wbit(1), &[0b01, 0b10]);
        assert_eq!(decode_wmark(&m, 4, 4).unwrap(), *pm.dense());
    }

    #[test]
    fn sf2_when_no_column_pruned() {
        let id = WeightMatrix::identity(4).unwrap();
        let pm = apply_hp(&id, &HpConfig::new(2, 0.0, 2).unwrap()).unwrap();
        let m = encode_wmark(&pm, 32, 4).unwrap();
        assert_eq!(m.variant(), Variant::Sf2);
        assert!(m.col_idx(0).is_none());
        assert!((0..m.n_blocks()).all(|b| m.wbit(b).iter().all(|&w| w == 0b11)));
        assert_eq!(decode_wmark(&m, 4, 4).unwrap(), id);
        assert_eq!(m.encoded_bits().col_idx, 0);
    }

    #[test]
    fn width_errors() {
        let pm = desk();
        assert!(encode_wmark(&pm, 12, 10).is_err());
        assert!(encode_wmark(&pm, 32, 1).is_err());
        assert!(encode_wmark(&pm, 32, 2).is_ok());
    }

    #[test]
    fn decode_rejects_popcount_mismatch() {
        let mut m = encode_wmark(&desk(), 32, 10).unwrap();
        m.wbit[0][0] = 0b11;
        assert!(matches!(decode_wmark(&m, 4, 4), Err(Error::Encoding(_))));
        let mut m = encode_wmark(&desk(), 32, 10).unwrap();
        m.values[1].pop();
        assert!(decode_wmark(&m, 4, 4).is_err());
        assert!(decode_wmark(&encode_wmark(&desk(), 32, 10).unwrap(), 4, 5).is_err());
    }

    #[test]
    fn bytes_round_trip_lossless_at_32_bits() {
        let m = encode_wmark(&desk(), 32, 10).unwrap();
        let back = WMarkMatrix::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_pruned().unwrap(), desk());
    }

    #[test]
    fn quantized_values_within_half_step() {
        let m = encode_wmark(&desk(), 8, 10).unwrap();
        let back = WMarkMatrix::from_bytes(&m.to_bytes()).unwrap();
        let step = 5.0 / 127.0;
        for b in 0..m.n_blocks() {
            for (a, q) in m.values(b).iter().zip(back.values(b)) {
                assert!((a - q).abs() <= step / 2.0 + 1e-6);
            }
        }
        let m4 = encode_wmark(&desk(), 4, 10).unwrap();
        let b4 = WMarkMatrix::from_bytes(&m4.to_bytes()).unwrap();
        assert_eq!(b4.values(1)[0], 5.0);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let bytes = encode_wmark(&desk(), 32, 10).unwrap().to_bytes();
        assert!(WMarkMatrix::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(WMarkMatrix::from_bytes(&extra).is_err());
    }
}
