// SPDX-License-Identifier: Apache-2.0
//! Float helpers that work without `std`.

/// `ceil(work / lanes)` where `work` is a real-valued MAC count.
///
/// Products like `K*M*N*(1-s)` are computed in floating point and are often
/// an integer plus a rounding error; values within a relative 1e-9 of an
/// integer are snapped to it before the ceiling is taken.
pub(crate) fn ceil_div(work: f64, lanes: f64) -> u64 {
    if work <= 0.0 {
        return 0;
    }
    let q = snap(snap(work) / lanes);
    libm::ceil(q) as u64
}

pub(crate) fn snap(x: f64) -> f64 {
    let r = libm::round(x);
    if libm::fabs(x - r) <= 1e-9 * libm::fmax(1.0, libm::fabs(x)) {
        r
    } else {
        x
    }
}

/// Round half up, as used for the pruned-column count.
pub(crate) fn round_half_up(x: f64) -> usize {
    // 0.35 * 10 lands just below 3.5 in binary; nudge before flooring.
    libm::floor(x + 0.5 + 1e-9) as usize
}
