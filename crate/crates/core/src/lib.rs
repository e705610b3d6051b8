// SPDX-License-Identifier: Apache-2.0
//! Algorithm/hardware co-design core.
//!
//! Everything in this crate is pure computation over in-memory data and
//! builds without `std` (an allocator is required). File formats, the CLI
//! and report emission live in the `spartan` companion crate.
//!
//! The pipeline, bottom-up:
//!
//! - [`pruner`]: two-level hierarchical pruning (block column pruning followed
//!   by balanced per-column element pruning).
//! - [`formats`]: the WMark bitmap format plus size accounting for the
//!   comparison formats (COO, CSR, BCSR, Tile-Bitmap, MBR).
//! - [`engine`]: a cycle-level model of the sparse matrix engine that executes
//!   directly from a WMark encoding.
//! - [`predictor`]: closed-form BRAM / DSP / cycle estimates.
//! - [`devices`]: hardware pool and best-fit device selection.
//! - [`allocator`]: per-layer DSP allocation and attention parallelism sweep.
//! - [`search`]: the reward, accuracy oracle, softmax policy and the closed
//!   search loop tying the above together.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod allocator;
pub mod devices;
pub mod engine;
pub mod error;
pub mod flops;
pub mod formats;
pub mod model;
pub mod predictor;
pub mod pruner;
pub mod search;

mod num;

pub use error::{Error, Result};
pub use model::{LayerKind, LayerSpec, ModelSpec, WeightMatrix};
