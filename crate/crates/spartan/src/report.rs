// SPDX-License-Identifier: Apache-2.0
//! Report files. Every real number leaves here with 6 significant digits.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use spartan_core::allocator::AllocationPlan;
use spartan_core::flops::FlopsRow;
use spartan_core::formats::SweepRow;
use spartan_core::predictor::ResourceEstimate;
use spartan_core::search::{Constraints, SearchResult};
use spartan_core::{ModelSpec, WeightMatrix};

use crate::container::write_bytes;
use crate::error::{Error, Result};

/// `x` with 6 significant digits, `%g` style.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..6).contains(&exp) {
        let mant = trim_zeros(mant);
        return format!("{mant}e{exp}");
    }
    trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds every float in `v` to 6 significant digits. Integers are left
/// alone.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            if let Some(r) = sig6(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Pretty JSON with rounded floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report serializes");
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    write_bytes(path.as_ref(), to_json(value).as_bytes())
}

fn write_csv(path: &Path, build: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    build(&mut w)?;
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_bytes(path, &bytes)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), sig6)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerChoice {
    pub name: String,
    pub k: usize,
    pub sparsity: f64,
    #[serde(rename = "C")]
    pub c: Option<usize>,
    #[serde(rename = "T")]
    pub t: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionReport {
    pub iter: usize,
    pub device: Option<String>,
    pub sparsity: f64,
    pub accuracy: f64,
    pub latency_ms: Option<f64>,
    pub ru: f64,
    pub bram_util: Option<f64>,
    pub dsp_util: Option<f64>,
    pub reward: f64,
    pub h: usize,
    pub layers: Vec<LayerChoice>,
    pub estimate: Option<ResourceEstimate>,
    pub plan: Option<AllocationPlan>,
}

/// Contents of `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultReport {
    pub model: Option<String>,
    pub constraints: Constraints,
    pub seed: u64,
    pub iterations: usize,
    pub feasible: bool,
    pub feasible_samples: usize,
    pub solution: Option<SolutionReport>,
}

impl ResultReport {
    pub fn new(spec: &ModelSpec, r: &SearchResult) -> Self {
        let solution = r.best.as_ref().map(|b| {
            let o = &b.outcome;
            let layers = spec
                .prunable()
                .enumerate()
                .map(|(i, l)| {
                    let pe = o.plan.as_ref().map(|p| p.layers[i].pe());
                    LayerChoice {
                        name: l.name.clone(),
                        k: o.ks[i],
                        sparsity: o.layer_sparsity[i],
                        c: pe.map(|p| p.c),
                        t: pe.map(|p| p.t),
                    }
                })
                .collect();
            SolutionReport {
                iter: b.iter,
                device: o.device.clone(),
                sparsity: o.sparsity,
                accuracy: o.accuracy,
                latency_ms: o.latency_ms,
                ru: o.ru,
                bram_util: o.bram_util,
                dsp_util: o.dsp_util,
                reward: o.reward,
                h: o.h,
                layers,
                estimate: o.estimate,
                plan: o.plan.clone(),
            }
        });
        Self {
            model: spec.name.clone(),
            constraints: r.constraints,
            seed: r.seed,
            iterations: r.iterations,
            feasible: r.feasible(),
            feasible_samples: r.trace.iter().filter(|t| t.feasible).count(),
            solution,
        }
    }
}

pub const TABLE_HEADER: [&str; 9] = [
    "model",
    "(LC,AC)",
    "sparsity",
    "accuracy",
    "est_latency_ms",
    "bram_util",
    "dsp_util",
    "target_device",
    "feasible",
];

/// The single data row of `table.csv`.
pub fn table_row(spec: &ModelSpec, r: &SearchResult) -> [String; 9] {
    let c = r.constraints;
    let model = spec.name.clone().unwrap_or_else(|| "-".into());
    let cons = format!("({}ms,{}%)", sig6(c.lc_ms), sig6(c.ac * 100.0));
    match &r.best {
        Some(b) => {
            let o = &b.outcome;
            [
                model,
                cons,
                sig6(o.sparsity),
                sig6(o.accuracy),
                opt(o.latency_ms),
                opt(o.bram_util),
                opt(o.dsp_util),
                o.device.clone().unwrap_or_else(|| "-".into()),
                "true".into(),
            ]
        }
        None => [model, cons, "-".into(), "-".into(), "-".into(), "-".into(), "-".into(), "-".into(), "false".into()],
    }
}

pub fn write_table(path: impl AsRef<Path>, spec: &ModelSpec, r: &SearchResult) -> Result<()> {
    write_csv(path.as_ref(), |w| {
        w.write_record(TABLE_HEADER)?;
        w.write_record(table_row(spec, r))
    })
}

pub fn write_trace(path: impl AsRef<Path>, spec: &ModelSpec, r: &SearchResult) -> Result<()> {
    write_csv(path.as_ref(), |w| {
        let mut header = vec!["iter".to_string()];
        header.extend(spec.prunable().map(|l| format!("k:{}", l.name)));
        header.extend(
            ["h", "sparsity", "accuracy", "latency_ms", "ru", "device", "reward", "feasible"].map(String::from),
        );
        w.write_record(&header)?;
        for t in &r.trace {
            let mut rec = vec![t.iter.to_string()];
            rec.extend(t.ks.iter().map(|k| k.to_string()));
            rec.extend([
                t.h.to_string(),
                sig6(t.sparsity),
                sig6(t.accuracy),
                opt(t.latency_ms),
                sig6(t.ru),
                t.device.clone().unwrap_or_else(|| "-".into()),
                sig6(t.reward),
                t.feasible.to_string(),
            ]);
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

pub fn write_sweep(path: impl AsRef<Path>, rows: &[SweepRow]) -> Result<()> {
    write_csv(path.as_ref(), |w| {
        w.write_record([
            "size", "format", "value_kib", "col_idx_kib", "row_idx_kib", "index_kib", "bitmap_kib", "total_kib",
        ])?;
        for r in rows {
            for s in &r.sizes {
                w.write_record([
                    r.size.to_string(),
                    s.format.name().to_string(),
                    sig6(s.value),
                    sig6(s.col_idx),
                    sig6(s.row_idx),
                    sig6(s.index),
                    sig6(s.bitmap),
                    sig6(s.total),
                ])?;
            }
        }
        Ok(())
    })
}

/// `|w|` as a CSV grid, one line per matrix row.
pub fn write_heatmap(path: impl AsRef<Path>, w: &WeightMatrix) -> Result<()> {
    write_csv(path.as_ref(), |out| {
        for r in 0..w.rows() {
            out.write_record(w.row(r).iter().map(|v| sig6(v.abs() as f64)))?;
        }
        Ok(())
    })
}

pub const FLOPS_FOOTER: &str = "note: FLOPS = operations / latency as computed from the listed inputs; \
the reference 14.14 GFLOPS for the FPGA row is not reproduced exactly (0.09 G / 6.45 ms = 13.95), \
which is consistent with rounding of the reference inputs";

pub fn render_flops(rows: &[FlopsRow], out: &mut (impl Write + ?Sized)) -> std::io::Result<()> {
    writeln!(out, "{:<26} {:>12} {:>12} {:>12} {:>12}", "platform", "ops (G)", "latency (s)", "GFLOPS", "improvement")?;
    for r in rows {
        writeln!(
            out,
            "{:<26} {:>12} {:>12} {:>12} {:>12}",
            r.label,
            sig6(r.operations),
            sig6(r.latency),
            sig6(r.flops),
            format!("{}x", sig6(r.improvement))
        )?;
    }
    writeln!(out, "{FLOPS_FOOTER}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(13.953488372), "13.9535");
        assert_eq!(sig6(0.45454545), "0.454545");
        assert_eq!(sig6(-2189.0625), "-2189.06");
        assert_eq!(sig6(123456789.0), "1.23457e8");
        assert_eq!(sig6(0.0000123456789), "1.23457e-5");
        assert_eq!(sig6(999999.7), "1e6");
        assert_eq!(sig6(f64::INFINITY), "inf");
    }

    #[test]
    fn json_floats_are_rounded() {
        let s = to_json(&serde_json::json!({"a": 0.123456789, "b": [2, 1.0000001], "c": 7}));
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"], 0.123457);
        assert_eq!(v["b"][0], 2);
        assert_eq!(v["b"][1], 1.0);
        assert_eq!(v["c"], 7);
    }
}
