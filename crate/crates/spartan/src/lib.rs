// SPDX-License-Identifier: Apache-2.0
//! File formats, report emission and the `spartan` command line on top of
//! [`spartan_core`].

pub mod cli;
pub mod config;
pub mod container;
pub mod error;
pub mod pruned;
pub mod report;

pub use error::{Error, Result};
pub use spartan_core as core;
