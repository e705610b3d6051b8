// SPDX-License-Identifier: Apache-2.0
//! In-memory model description: weight matrices and layer shapes.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::engine::PeConfig;
use crate::{Error, Result};

/// Dense row-major matrix of `f32` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f32>,
}

impl WeightMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("{rows}x{cols} matrix")));
        }
        if values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, alloc::vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f32) {
        self.values[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn count_zeros(&self) -> usize {
        self.values.iter().filter(|v| **v == 0.0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerKind {
    Linear,
    /// Activation x activation product (per attention head). Carries no weights.
    AttentionMatmul,
}

/// One matrix product `input(K x M) * weight(M x N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub prunable: bool,
}

impl LayerSpec {
    pub fn linear(name: &str, k: usize, m: usize, n: usize) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::Linear,
            k,
            m,
            n,
            prunable: true,
        }
    }

    pub fn attention(name: &str, k: usize, m: usize, n: usize) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::AttentionMatmul,
            k,
            m,
            n,
            prunable: false,
        }
    }

    /// Dense multiply-accumulate count `K*M*N`.
    pub fn macs(&self) -> u64 {
        self.k as u64 * self.m as u64 * self.n as u64
    }

    /// Number of weights (`M*N`); zero for attention products.
    pub fn weight_count(&self) -> u64 {
        match self.kind {
            LayerKind::Linear => self.m as u64 * self.n as u64,
            LayerKind::AttentionMatmul => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub layers: Vec<LayerSpec>,
    #[serde(rename = "nHead")]
    pub n_head: usize,
    /// PE array of one attention unit. Absent means `C = T = 1`.
    #[serde(default, rename = "attentionPe", skip_serializing_if = "Option::is_none")]
    pub attention_pe: Option<PeConfig>,
}

impl ModelSpec {
    pub fn new(layers: Vec<LayerSpec>, n_head: usize) -> Result<Self> {
        let spec = Self {
            name: None,
            note: None,
            layers,
            n_head,
            attention_pe: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidSpec("model has no layers".into()));
        }
        if self.n_head == 0 {
            return Err(Error::InvalidSpec("nHead must be at least 1".into()));
        }
        let mut names: Vec<&str> = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            if l.k == 0 || l.m == 0 || l.n == 0 {
                return Err(Error::InvalidSpec(format!(
                    "layer `{}` has a zero dimension ({}x{}x{})",
                    l.name, l.k, l.m, l.n
                )));
            }
            if l.kind == LayerKind::AttentionMatmul && l.prunable {
                return Err(Error::InvalidSpec(format!(
                    "attention layer `{}` cannot be prunable",
                    l.name
                )));
            }
            if names.contains(&l.name.as_str()) {
                return Err(Error::InvalidSpec(format!("duplicate layer `{}`", l.name)));
            }
            names.push(&l.name);
        }
        if !self.layers.iter().any(|l| l.prunable) {
            return Err(Error::InvalidSpec("no prunable layer".into()));
        }
        if let Some(pe) = self.attention_pe {
            pe.validate()?;
        }
        Ok(())
    }

    pub fn prunable(&self) -> impl Iterator<Item = &LayerSpec> {
        self.layers.iter().filter(|l| l.prunable)
    }

    pub fn attention(&self) -> impl Iterator<Item = &LayerSpec> {
        self.layers
            .iter()
            .filter(|l| l.kind == LayerKind::AttentionMatmul)
    }

    pub fn prunable_count(&self) -> usize {
        self.prunable().count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn matrix_rejects_wrong_length() {
        assert!(matches!(
            WeightMatrix::new(2, 2, vec![1.0, 0.0, 0.0]),
            Err(Error::Dimension(_))
        ));
        assert!(WeightMatrix::new(0, 3, vec![]).is_err());
    }

    #[test]
    fn minimal_spec_is_valid() {
        let spec = ModelSpec::new(vec![LayerSpec::linear("fc", 1, 1, 1)], 1).unwrap();
        assert_eq!(spec.prunable_count(), 1);
    }

    #[test]
    fn spec_validation_errors() {
        let l = vec![LayerSpec::linear("fc", 1, 1, 1)];
        assert!(matches!(ModelSpec::new(l.clone(), 0), Err(Error::InvalidSpec(_))));
        assert!(ModelSpec::new(vec![], 1).is_err());
        assert!(ModelSpec::new(vec![LayerSpec::linear("fc", 0, 1, 1)], 1).is_err());
        let mut att = LayerSpec::attention("qk", 4, 4, 4);
        att.prunable = true;
        assert!(ModelSpec::new(vec![att], 1).is_err());
        assert!(ModelSpec::new(vec![LayerSpec::attention("qk", 4, 4, 4)], 1).is_err());
        assert!(ModelSpec::new([l.clone(), l].concat(), 1).is_err());
    }
}
