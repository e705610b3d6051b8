// SPDX-License-Identifier: Apache-2.0
//! JSON inputs: model specs, device pools, accuracy anchors, per-layer
//! sparsity and PE allocations.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use spartan_core::allocator::{AllocationPlan, LayerDemand};
use spartan_core::devices::HardwarePool;
use spartan_core::engine::PeConfig;
use spartan_core::formats::accounting::profile_for_sparsity;
use spartan_core::pruner::HpConfig;
use spartan_core::search::AccuracyCalib;
use spartan_core::ModelSpec;

use crate::error::{Error, Result};

pub const TRANSFORMER_SPEC: &str = include_str!("../data/transformer-paper.json");
pub const POOL: &str = include_str!("../data/pool.json");
pub const TRANSFORMER_ANCHORS: &str = include_str!("../data/transformer-accuracy.json");

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })
}

pub fn load_model_spec(path: impl AsRef<Path>) -> Result<ModelSpec> {
    let spec: ModelSpec = read_json(path)?;
    spec.validate()?;
    Ok(spec)
}

/// The bundled reconstruction of the evaluated Transformer.
pub fn transformer_spec() -> ModelSpec {
    serde_json::from_str(TRANSFORMER_SPEC).expect("bundled spec parses")
}

pub fn load_pool(path: impl AsRef<Path>) -> Result<HardwarePool> {
    read_json(path)
}

pub fn builtin_pool() -> HardwarePool {
    serde_json::from_str(POOL).expect("bundled pool parses")
}

/// Anchor file: `[{"sparsity": s, "accuracy": a}, ...]`.
pub fn load_calib(path: impl AsRef<Path>) -> Result<AccuracyCalib> {
    read_json(path)
}

/// One entry of a sparsity file. Either field may be omitted, not both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SparsityEntry {
    Value(f64),
    Detailed {
        #[serde(default)]
        sparsity: Option<f64>,
        #[serde(default)]
        k: Option<usize>,
    },
}

/// Per-layer sparsity keyed by layer name. Every prunable layer must be
/// listed; nothing else may be.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SparsityFile(pub BTreeMap<String, SparsityEntry>);

/// Resolved pruning of one prunable layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerPruning {
    pub sparsity: f64,
    pub k: Option<usize>,
    /// Profile used for buffer sizing.
    pub hp: HpConfig,
}

impl SparsityFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path)
    }

    /// Resolves entries in prunable-layer order. A bare sparsity picks the
    /// closest `k` under `base` for sizing; a bare `k` implies the
    /// closed-form sparsity of `HP(p, S_bm, k)`.
    pub fn resolve(&self, spec: &ModelSpec, base: &HpConfig) -> Result<Vec<LayerPruning>> {
        for name in self.0.keys() {
            match spec.layers.iter().find(|l| &l.name == name) {
                Some(l) if l.prunable => {}
                Some(_) => return Err(Error::Input(format!("layer `{name}` is not prunable"))),
                None => return Err(Error::Input(format!("unknown layer `{name}`"))),
            }
        }
        spec.prunable()
            .map(|l| {
                let entry = self
                    .0
                    .get(&l.name)
                    .ok_or_else(|| Error::Input(format!("no sparsity for layer `{}`", l.name)))?;
                let (s, k) = match *entry {
                    SparsityEntry::Value(s) => (Some(s), None),
                    SparsityEntry::Detailed { sparsity, k } => (sparsity, k),
                };
                let hp = match (s, k) {
                    (_, Some(k)) => HpConfig::new(base.p, base.s_bm, k)?,
                    (Some(s), None) => profile_for_sparsity(s, base)?,
                    (None, None) => {
                        return Err(Error::Input(format!("layer `{}` has neither sparsity nor k", l.name)))
                    }
                };
                let sparsity = s.unwrap_or_else(|| hp.closed_form_sparsity(l.n));
                if !(0.0..=1.0).contains(&sparsity) {
                    return Err(Error::Input(format!("layer `{}`: sparsity {sparsity} outside [0, 1]", l.name)));
                }
                Ok(LayerPruning { sparsity, k, hp })
            })
            .collect()
    }

    pub fn demands(&self, spec: &ModelSpec, base: &HpConfig) -> Result<Vec<LayerDemand>> {
        Ok(self
            .resolve(spec, base)?
            .into_iter()
            .map(|p| LayerDemand::new(p.sparsity, p.k))
            .collect())
    }
}

/// PE arrays to evaluate: either a map from layer name to `{C, T}` or the
/// plan printed by `allocate --json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AllocFile {
    Plan(AllocationPlan),
    Map(BTreeMap<String, PeConfig>),
}

impl AllocFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path)
    }

    /// PE arrays of the prunable layers in spec order, the attention array
    /// and the attention parallelism `h` (1 unless the file is a plan).
    pub fn resolve(&self, spec: &ModelSpec) -> Result<(Vec<PeConfig>, PeConfig, usize)> {
        let default_att = spec.attention_pe.unwrap_or(PeConfig { c: 1, t: 1 });
        match self {
            AllocFile::Plan(plan) => {
                if plan.layers.len() != spec.prunable_count()
                    || spec.prunable().zip(&plan.layers).any(|(l, a)| l.name != a.name)
                {
                    return Err(Error::Input("allocation plan does not match the model".into()));
                }
                Ok((plan.pes(), default_att, plan.h))
            }
            AllocFile::Map(map) => {
                for name in map.keys() {
                    if !spec.layers.iter().any(|l| &l.name == name) && name != "attention" {
                        return Err(Error::Input(format!("unknown layer `{name}`")));
                    }
                }
                let pes = spec
                    .prunable()
                    .map(|l| {
                        let pe = map
                            .get(&l.name)
                            .copied()
                            .ok_or_else(|| Error::Input(format!("no PE array for layer `{}`", l.name)))?;
                        pe.validate()?;
                        Ok(pe)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let att = map.get("attention").copied().unwrap_or(default_att);
                att.validate()?;
                Ok((pes, att, 1))
            }
        }
    }
}
