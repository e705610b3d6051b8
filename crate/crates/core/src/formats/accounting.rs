// SPDX-License-Identifier: Apache-2.0
//! Closed-form memory accounting for sparse weight formats.
//!
//! All sizes are reported in Kibits (1024 bits) before any byte padding.
//! The models are driven by the pruning structure of an `rows x cols` matrix
//! under an [`HpConfig`]:
//!
//! | format      | value          | col_Idx     | row_Idx            | Index              | Bitmap      |
//! |-------------|----------------|-------------|--------------------|--------------------|-------------|
//! | COO         | nnz*vb         | nnz*ib      | nnz*ib             |                    |             |
//! | CSR         | nnz*vb         | nnz*ib      | rows*ib            |                    |             |
//! | BCSR        | blocks*area*vb | blocks*ib   | rows*row_bits      |                    |             |
//! | Tile-Bitmap | nnz*vb         | V*ib        | V*ib               | rows*cols*tile_bits| rows*cols   |
//! | MBR         | nnz*vb         | V*ib        | rows*row_bits      |                    | rows*cols   |
//! | WMark       | nnz*vb         | V*ib (SF1)  |                    |                    | V*p         |
//!
//! `V` is the number of surviving column vectors (blocks x kept columns).
//! BCSR stores every block of its tiling. `row_bits` and `tile_bits` are
//! calibration constants; see [`AccountingParams`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

use super::wmark::{EncodedBits, WMarkMatrix};
use crate::pruner::HpConfig;
use crate::{Error, Result};

pub const KIBIT: f64 = 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Format {
    Coo,
    Csr,
    Bcsr,
    TileBitmap,
    Mbr,
    WMark,
}

impl Format {
    pub const ALL: [Format; 6] = [
        Format::Coo,
        Format::Csr,
        Format::Bcsr,
        Format::TileBitmap,
        Format::Mbr,
        Format::WMark,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Format::Coo => "COO",
            Format::Csr => "CSR",
            Format::Bcsr => "BCSR",
            Format::TileBitmap => "Tile-Bitmap",
            Format::Mbr => "MBR",
            Format::WMark => "WMark",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Ok(match norm.as_str() {
            "coo" => Format::Coo,
            "csr" => Format::Csr,
            "bcsr" => Format::Bcsr,
            "tilebitmap" => Format::TileBitmap,
            "mbr" => Format::Mbr,
            "wmark" => Format::WMark,
            _ => {
                return Err(Error::Unknown {
                    kind: "format",
                    name: s.into(),
                })
            }
        })
    }
}

/// Bit widths and calibration constants of the accounting model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccountingParams {
    pub value_bits: u32,
    pub idx_bits: u32,
    /// BCSR block shape (rows, cols).
    pub bcsr_block: (usize, usize),
    /// Row index bits per matrix row for BCSR and MBR (1600 bits at 800 rows).
    pub row_bits_per_row: f64,
    /// Tile-Bitmap tile index bits per matrix element
    /// (351.6 Kibit over an 800x800 matrix).
    pub tile_index_bits_per_element: f64,
}

impl Default for AccountingParams {
    fn default() -> Self {
        Self {
            value_bits: 4,
            idx_bits: 10,
            bcsr_block: (20, 1),
            row_bits_per_row: 2.0,
            tile_index_bits_per_element: 351.6 * KIBIT / (800.0 * 800.0),
        }
    }
}

impl AccountingParams {
    fn validate(&self) -> Result<()> {
        if self.value_bits == 0 || self.idx_bits == 0 {
            return Err(Error::InvalidParam("bit widths must be positive".into()));
        }
        if self.bcsr_block.0 == 0 || self.bcsr_block.1 == 0 {
            return Err(Error::InvalidParam("BCSR block must be non-empty".into()));
        }
        if !(self.row_bits_per_row >= 0.0) || !(self.tile_index_bits_per_element >= 0.0) {
            return Err(Error::InvalidParam("calibration constants must be >= 0".into()));
        }
        Ok(())
    }
}

/// Per-component sizes in Kibits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeBreakdown {
    pub format: Format,
    pub value: f64,
    pub col_idx: f64,
    pub row_idx: f64,
    pub index: f64,
    pub bitmap: f64,
    pub total: f64,
}

impl SizeBreakdown {
    fn from_bits(format: Format, value: f64, col_idx: f64, row_idx: f64, index: f64, bitmap: f64) -> Self {
        let k = |b: f64| b / KIBIT;
        Self {
            format,
            value: k(value),
            col_idx: k(col_idx),
            row_idx: k(row_idx),
            index: k(index),
            bitmap: k(bitmap),
            total: k(value + col_idx + row_idx + index + bitmap),
        }
    }

    /// Everything except the stored values.
    pub fn overhead(&self) -> f64 {
        self.total - self.value
    }
}

/// Structural counts of a pruned `rows x cols` matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Structure {
    n_blocks: u64,
    kept_cols: u64,
    vectors: u64,
    nnz: u64,
}

fn structure(rows: usize, cols: usize, hp: &HpConfig) -> Structure {
    let n_blocks = rows.div_ceil(hp.p);
    let kept_cols = (cols - hp.pruned_columns(cols)) as u64;
    let nnz: u64 = (0..n_blocks)
        .map(|b| kept_cols * hp.k.min(hp.p.min(rows - b * hp.p)) as u64)
        .sum();
    Structure {
        n_blocks: n_blocks as u64,
        kept_cols,
        vectors: n_blocks as u64 * kept_cols,
        nnz,
    }
}

/// Size of `format` for a matrix pruned with `hp`.
pub fn size_report(
    rows: usize,
    cols: usize,
    hp: &HpConfig,
    format: Format,
    params: &AccountingParams,
) -> Result<SizeBreakdown> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!("{rows}x{cols} matrix")));
    }
    hp.validate()?;
    params.validate()?;
    let st = structure(rows, cols, hp);
    let vb = params.value_bits as f64;
    let ib = params.idx_bits as f64;
    let nnz = st.nnz as f64;
    let v = st.vectors as f64;
    let area = (rows * cols) as f64;
    let row_bits = rows as f64 * params.row_bits_per_row;
    Ok(match format {
        Format::Coo => SizeBreakdown::from_bits(format, nnz * vb, nnz * ib, nnz * ib, 0.0, 0.0),
        Format::Csr => SizeBreakdown::from_bits(format, nnz * vb, nnz * ib, rows as f64 * ib, 0.0, 0.0),
        Format::Bcsr => {
            let (br, bc) = params.bcsr_block;
            let blocks = (rows.div_ceil(br) * cols.div_ceil(bc)) as f64;
            SizeBreakdown::from_bits(format, blocks * (br * bc) as f64 * vb, blocks * ib, row_bits, 0.0, 0.0)
        }
        Format::TileBitmap => SizeBreakdown::from_bits(
            format,
            nnz * vb,
            v * ib,
            v * ib,
            area * params.tile_index_bits_per_element,
            area,
        ),
        Format::Mbr => SizeBreakdown::from_bits(format, nnz * vb, v * ib, row_bits, 0.0, area),
        Format::WMark => {
            let col = if st.kept_cols == cols as u64 { 0.0 } else { v * ib };
            SizeBreakdown::from_bits(format, nnz * vb, col, 0.0, 0.0, v * hp.p as f64)
        }
    })
}

/// Size of an actual WMark encoding, measured from its packed arrays.
pub fn wmark_breakdown(m: &WMarkMatrix) -> SizeBreakdown {
    let EncodedBits { col_idx, wbit, values } = m.encoded_bits();
    SizeBreakdown::from_bits(Format::WMark, values as f64, col_idx as f64, 0.0, 0.0, wbit as f64)
}

/// One matrix size of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub size: usize,
    pub profile: HpConfig,
    pub sizes: Vec<SizeBreakdown>,
    /// MBR total over WMark total, when both formats were requested.
    pub mbr_over_wmark_total: Option<f64>,
    /// MBR index+bitmap overhead over WMark overhead (values excluded).
    pub mbr_over_wmark_overhead: Option<f64>,
}

/// Pruning profile reaching overall sparsity `s` from a base profile: column
/// pruning is kept at `base.s_bm` (lowered to `s` if `s` is smaller) and `k`
/// is chosen so that `1 - (1 - s_bm) * k / p` is as close to `s` as possible.
pub fn profile_for_sparsity(s: f64, base: &HpConfig) -> Result<HpConfig> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::InvalidParam(format!("sparsity {s} must be in [0, 1)")));
    }
    let s_bm = base.s_bm.min(s);
    let p = base.p;
    let k = libm::round((1.0 - s) * p as f64 / (1.0 - s_bm)) as usize;
    HpConfig::new(p, s_bm, k.clamp(1, p))
}

/// Square `n x n` matrices at overall sparsity `s`, one row per size.
pub fn sweep_sizes(
    sizes: &[usize],
    sparsity: f64,
    formats: &[Format],
    base: &HpConfig,
    params: &AccountingParams,
) -> Result<Vec<SweepRow>> {
    let profile = profile_for_sparsity(sparsity, base)?;
    sizes
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::InvalidParam("matrix size must be positive".into()));
            }
            let sizes = formats
                .iter()
                .map(|&f| size_report(n, n, &profile, f, params))
                .collect::<Result<Vec<_>>>()?;
            let find = |f: Format| sizes.iter().find(|b| b.format == f);
            let (total, overhead) = match (find(Format::Mbr), find(Format::WMark)) {
                (Some(m), Some(w)) => (Some(m.total / w.total), Some(m.overhead() / w.overhead())),
                _ => (None, None),
            };
            Ok(SweepRow {
                size: n,
                profile,
                sizes,
                mbr_over_wmark_total: total,
                mbr_over_wmark_overhead: overhead,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_iii(format: Format) -> SizeBreakdown {
        let hp = HpConfig::new(10, 0.5, 10).unwrap();
        size_report(800, 800, &hp, format, &AccountingParams::default()).unwrap()
    }

    #[test]
    fn table_iii_components() {
        let w = table_iii(Format::WMark);
        assert_eq!((w.value, w.col_idx, w.bitmap, w.total), (1250.0, 312.5, 312.5, 1875.0));
        let c = table_iii(Format::Csr);
        assert_eq!((c.value, c.col_idx), (1250.0, 3125.0));
        assert!((c.row_idx - 7.8).abs() < 0.05);
        let m = table_iii(Format::Mbr);
        assert_eq!(m.bitmap, 625.0);
        assert!((m.total - 2189.1).abs() < 0.1);
        let coo = table_iii(Format::Coo);
        assert_eq!(coo.total, 7500.0);
    }

    #[test]
    fn sf2_has_no_column_index() {
        let hp = HpConfig::new(10, 0.0, 5).unwrap();
        let w = size_report(100, 100, &hp, Format::WMark, &AccountingParams::default()).unwrap();
        assert_eq!(w.col_idx, 0.0);
        assert_eq!(w.bitmap * KIBIT, 100.0 * 100.0);
    }

    #[test]
    fn format_names_parse() {
        for f in Format::ALL {
            assert_eq!(f.name().parse::<Format>().unwrap(), f);
        }
        assert!("ell".parse::<Format>().is_err());
    }

    #[test]
    fn zero_size_rejected() {
        let base = HpConfig::new(10, 0.5, 10).unwrap();
        assert!(sweep_sizes(&[0], 0.5, &Format::ALL, &base, &AccountingParams::default()).is_err());
    }

    #[test]
    fn profile_mapping() {
        let base = HpConfig::new(10, 0.5, 10).unwrap();
        assert_eq!(profile_for_sparsity(0.5, &base).unwrap(), base);
        assert_eq!(profile_for_sparsity(0.65, &base).unwrap().k, 7);
        let low = profile_for_sparsity(0.2, &base).unwrap();
        assert_eq!((low.s_bm, low.k), (0.2, 10));
    }
}
