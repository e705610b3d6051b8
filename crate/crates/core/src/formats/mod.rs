// SPDX-License-Identifier: Apache-2.0
//! Sparse weight storage: the WMark codec, reference COO/CSR codecs and the
//! size accounting used to compare formats.

pub mod accounting;
pub mod bits;
pub mod sparse;
pub mod wmark;

pub use accounting::{size_report, sweep_sizes, AccountingParams, Format, SizeBreakdown, SweepRow};
pub use wmark::{decode_wmark, encode_wmark, Variant, WMarkMatrix};
