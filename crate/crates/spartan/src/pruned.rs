// SPDX-License-Identifier: Apache-2.0
//! Pruned matrices on disk.
//!
//! `F.hp` is an ordinary weight container holding the masked matrix. The
//! mask itself lives in the sidecar `F.hp.json` so that kept weights which
//! happen to be exactly zero survive a round trip.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spartan_core::formats::WMarkMatrix;
use spartan_core::pruner::{sparsity_of, ColumnMask, HpConfig, PrunedMatrix};

use crate::container::{load_matrix, write_bytes, write_matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMask {
    /// Surviving columns, ascending.
    pub cols: Vec<usize>,
    /// Per surviving column: bit `i` set iff row offset `i` is kept.
    pub slots: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub rows: usize,
    pub cols: usize,
    pub p: usize,
    pub s_bm: f64,
    pub s_bm_realized: f64,
    pub k: usize,
    pub sparsity: f64,
    pub closed_form_sparsity: f64,
    pub nnz: usize,
    pub kept_columns_per_block: usize,
    pub blocks: Vec<BlockMask>,
}

impl Sidecar {
    pub fn new(pm: &PrunedMatrix, hp: &HpConfig) -> Self {
        let mask = pm.mask();
        Self {
            rows: pm.rows(),
            cols: pm.cols(),
            p: pm.p(),
            s_bm: hp.s_bm,
            s_bm_realized: mask.realized_sbm(),
            k: pm.k(),
            sparsity: sparsity_of(pm),
            closed_form_sparsity: hp.closed_form_sparsity(pm.cols()),
            nnz: pm.kept_count(),
            kept_columns_per_block: mask.kept_per_block(),
            blocks: mask
                .blocks()
                .iter()
                .zip(pm.all_slots())
                .map(|(cols, slots)| BlockMask {
                    cols: cols.clone(),
                    slots: slots.clone(),
                })
                .collect(),
        }
    }
}

pub fn sidecar_path(hp_path: &Path) -> PathBuf {
    let mut s = hp_path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

pub fn write_pruned(path: impl AsRef<Path>, pm: &PrunedMatrix, hp: &HpConfig) -> Result<Sidecar> {
    let path = path.as_ref();
    write_matrix(path, pm.dense())?;
    let side = Sidecar::new(pm, hp);
    let json = serde_json::to_vec_pretty(&side).expect("sidecar serializes");
    write_bytes(&sidecar_path(path), &json)?;
    Ok(side)
}

pub fn load_pruned(path: impl AsRef<Path>) -> Result<(PrunedMatrix, Sidecar)> {
    let path = path.as_ref();
    let dense = load_matrix(path)?;
    let side: Sidecar = crate::config::read_json(sidecar_path(path))?;
    if (side.rows, side.cols) != (dense.rows(), dense.cols()) {
        return Err(Error::Input(format!(
            "{}: sidecar is {}x{}, container is {}x{}",
            path.display(),
            side.rows,
            side.cols,
            dense.rows(),
            dense.cols()
        )));
    }
    let (cols, slots): (Vec<_>, Vec<_>) = side.blocks.iter().map(|b| (b.cols.clone(), b.slots.clone())).unzip();
    let mask = ColumnMask::from_blocks(side.rows, side.cols, side.p, cols)?;
    let pm = PrunedMatrix::from_parts(dense, mask, side.k, slots)?;
    Ok((pm, side))
}

pub fn write_wmark(path: impl AsRef<Path>, m: &WMarkMatrix) -> Result<()> {
    write_bytes(path.as_ref(), &m.to_bytes())
}

pub fn load_wmark(path: impl AsRef<Path>) -> Result<WMarkMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(WMarkMatrix::from_bytes(&bytes)?)
}
