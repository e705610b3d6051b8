// SPDX-License-Identifier: Apache-2.0
//! Reference COO and CSR codecs used by the size study.

use alloc::vec::Vec;

use crate::{Result, WeightMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix {
    pub rows: usize,
    pub cols: usize,
    pub row_idx: Vec<u32>,
    pub col_idx: Vec<u32>,
    pub values: Vec<f32>,
}

impl CooMatrix {
    pub fn from_dense(w: &WeightMatrix) -> Self {
        let mut m = Self {
            rows: w.rows(),
            cols: w.cols(),
            row_idx: Vec::new(),
            col_idx: Vec::new(),
            values: Vec::new(),
        };
        for r in 0..w.rows() {
            for (c, &v) in w.row(r).iter().enumerate() {
                if v != 0.0 {
                    m.row_idx.push(r as u32);
                    m.col_idx.push(c as u32);
                    m.values.push(v);
                }
            }
        }
        m
    }

    pub fn to_dense(&self) -> Result<WeightMatrix> {
        let mut w = WeightMatrix::zeros(self.rows, self.cols)?;
        for ((&r, &c), &v) in self.row_idx.iter().zip(&self.col_idx).zip(&self.values) {
            w.set(r as usize, c as usize, v);
        }
        Ok(w)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// (value, col_idx, row_idx) bits.
    pub fn bits(&self, value_bits: u32, idx_bits: u32) -> (u64, u64, u64) {
        let n = self.nnz() as u64;
        (n * value_bits as u64, n * idx_bits as u64, n * idx_bits as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<u32>,
    pub col_idx: Vec<u32>,
    pub values: Vec<f32>,
}

impl CsrMatrix {
    pub fn from_dense(w: &WeightMatrix) -> Self {
        let mut row_ptr = Vec::with_capacity(w.rows() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for r in 0..w.rows() {
            for (c, &v) in w.row(r).iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(c as u32);
                    values.push(v);
                }
            }
            row_ptr.push(values.len() as u32);
        }
        Self {
            rows: w.rows(),
            cols: w.cols(),
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn to_dense(&self) -> Result<WeightMatrix> {
        let mut w = WeightMatrix::zeros(self.rows, self.cols)?;
        for r in 0..self.rows {
            let (s, e) = (self.row_ptr[r] as usize, self.row_ptr[r + 1] as usize);
            for i in s..e {
                w.set(r, self.col_idx[i] as usize, self.values[i]);
            }
        }
        Ok(w)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// (value, col_idx, row_idx) bits. Row pointers are counted as
    /// `rows * idx_bits`; the trailing end pointer is not counted.
    pub fn bits(&self, value_bits: u32, idx_bits: u32) -> (u64, u64, u64) {
        let n = self.nnz() as u64;
        (
            n * value_bits as u64,
            n * idx_bits as u64,
            self.rows as u64 * idx_bits as u64,
        )
    }
}
