// SPDX-License-Identifier: Apache-2.0
//! Command-line front end.
//!
//! Each subcommand parses its flags, calls one library function from this
//! module and prints the result. The library functions are public so that
//! tests can compare them with the core API directly.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spartan_core::allocator::{allocate_with, equal_split_baseline, AllocationPlan, AttentionCost, Rounding};
use spartan_core::devices::{max_latency_with, select_device_with, HardwarePool, RuMode, SelectOptions, Selection};
use spartan_core::engine::{simulate_mm, PeConfig};
use spartan_core::flops::{flops_table, reference_inputs, FlopsInput, FlopsRow, REFERENCE_BASE};
use spartan_core::formats::accounting::wmark_breakdown;
use spartan_core::formats::{encode_wmark, sweep_sizes, AccountingParams, Format, SizeBreakdown, SweepRow, Variant};
use spartan_core::predictor::{
    estimate_bram, estimate_cycles, estimate_dsp, layer_buffers, BramConfig, DType, InventoryParams, LayerLoad,
    ResourceEstimate,
};
use spartan_core::pruner::{apply_hp, HpConfig};
use spartan_core::search::{run_search, Constraints, SearchConfig, SearchResult};
use spartan_core::ModelSpec;

use crate::config::{self, AllocFile, SparsityFile};
use crate::container::load_matrix;
use crate::error::{Error, Result};
use crate::pruned::{load_pruned, load_wmark, write_pruned, write_wmark, Sidecar};
use crate::report::{self, sig6, ResultReport};

pub const SEED_ENV: &str = "SPARTAN_SEED";

#[derive(Debug, Parser)]
#[command(name = "spartan", version, about = "Hierarchical pruning and FPGA co-design search")]
pub struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Prune a weight container with HP(p, S_bm, k).
    Prune(PruneArgs),
    /// Encode a pruned matrix as WMark.
    Encode(EncodeArgs),
    /// Run the cycle model of the sparse engine on one product.
    Simulate(SimulateArgs),
    /// Estimate cycles, BRAM and DSP for a given allocation.
    Predict(PredictArgs),
    /// Pick a device from the pool for a resource estimate.
    SelectDevice(SelectArgs),
    /// Allocate DSPs across layers on one device.
    Allocate(AllocateArgs),
    /// Run the co-design search.
    Search(SearchArgs),
    /// Storage size of each sparse format over a range of matrix sizes.
    FormatBench(BenchArgs),
    /// FLOPS comparison table.
    Flops(FlopsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DTypeArg {
    Fp32,
    Fix16,
}

impl From<DTypeArg> for DType {
    fn from(d: DTypeArg) -> Self {
        match d {
            DTypeArg::Fp32 => DType::Fp32,
            DTypeArg::Fix16 => DType::Fix16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuArg {
    Mean,
    Max,
    BramOnly,
}

impl From<RuArg> for RuMode {
    fn from(r: RuArg) -> Self {
        match r {
            RuArg::Mean => RuMode::Mean,
            RuArg::Max => RuMode::Max,
            RuArg::BramOnly => RuMode::BramOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoundingArg {
    Floor,
    Leftover,
}

impl From<RoundingArg> for Rounding {
    fn from(r: RoundingArg) -> Self {
        match r {
            RoundingArg::Floor => Rounding::Floor,
            RoundingArg::Leftover => Rounding::Leftover,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PruneArgs {
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    #[arg(long, default_value_t = 0.5)]
    pub sbm: f64,
    #[arg(long)]
    pub k: usize,
    /// Pruned container; the mask goes to `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write |w| of the pruned matrix as a CSV grid.
    #[arg(long)]
    pub emit_heatmap: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EncodeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub value_bits: u32,
    #[arg(long, default_value_t = 10)]
    pub idx_bits: u32,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Input activations, `K x M`.
    #[arg(long)]
    pub input: PathBuf,
    /// WMark weights, `M x N`.
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long = "C")]
    pub c: usize,
    #[arg(long = "T")]
    pub t: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model spec JSON; the bundled Transformer when absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    #[arg(long, default_value_t = 0.5)]
    pub sbm: f64,
    #[arg(long, value_enum, default_value_t = DTypeArg::Fp32)]
    pub dtype: DTypeArg,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec> {
        match &self.model {
            Some(p) => config::load_model_spec(p),
            None => Ok(config::transformer_spec()),
        }
    }

    fn base(&self) -> Result<HpConfig> {
        Ok(HpConfig::new(self.p, self.sbm, self.p)?)
    }
}

fn load_pool(path: &Option<PathBuf>) -> Result<HardwarePool> {
    match path {
        Some(p) => config::load_pool(p),
        None => Ok(config::builtin_pool()),
    }
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub sparsity: PathBuf,
    #[arg(long)]
    pub alloc: PathBuf,
    #[arg(long, default_value_t = 36)]
    pub bram_width: u64,
    #[arg(long, default_value_t = 512)]
    pub bram_depth: u64,
    #[arg(long, default_value_t = 1)]
    pub bram_factor: u64,
    #[arg(long, default_value_t = 16)]
    pub value_bits: u32,
    #[arg(long, default_value_t = 10)]
    pub idx_bits: u32,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[arg(long)]
    pub ebram: u64,
    #[arg(long)]
    pub edsp: u64,
    #[arg(long)]
    pub ecycles: u64,
    #[arg(long, default_value_t = 0)]
    pub elut: u64,
    #[arg(long, default_value_t = 0)]
    pub eff: u64,
    #[arg(long)]
    pub lc_ms: f64,
    #[arg(long, value_enum, default_value_t = RuArg::Mean)]
    pub ru_mode: RuArg,
    /// Also require LUT and FF capacity.
    #[arg(long)]
    pub screen_lut_ff: bool,
}

#[derive(Debug, Clone, Args)]
pub struct AllocateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub sparsity: PathBuf,
    #[arg(long)]
    pub device: String,
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = RoundingArg::Floor)]
    pub rounding: RoundingArg,
    /// Equal split across layers with h = 1 instead of the search.
    #[arg(long)]
    pub baseline: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Accuracy anchor file; the bundled Transformer anchors when absent.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    #[arg(long)]
    pub lc_ms: f64,
    #[arg(long)]
    pub ac: f64,
    /// Overridden by the SPARTAN_SEED environment variable.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, value_enum, default_value_t = RuArg::Mean)]
    pub ru_mode: RuArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// `start:stop:step` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "200:1600:200")]
    pub sizes: String,
    #[arg(long, default_value_t = 0.5)]
    pub sparsity: f64,
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    #[arg(long, default_value_t = 0.5)]
    pub sbm: f64,
    #[arg(long, default_value_t = 4)]
    pub value_bits: u32,
    #[arg(long, default_value_t = 10)]
    pub idx_bits: u32,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FlopsArgs {
    /// JSON list of `{label, operations, latency}`; the reference
    /// comparison when absent.
    #[arg(long)]
    pub inputs: Option<PathBuf>,
    #[arg(long, default_value = REFERENCE_BASE)]
    pub base: String,
}

/// How a command ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    /// Inputs were valid but no design satisfies them.
    Infeasible,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Done => 0,
            Status::Infeasible => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PruneReport {
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
}

impl From<&Sidecar> for PruneReport {
    fn from(s: &Sidecar) -> Self {
        Self {
            rows: s.rows,
            cols: s.cols,
            p: s.p,
            s_bm: s.s_bm,
            s_bm_realized: s.s_bm_realized,
            k: s.k,
            sparsity: s.sparsity,
            closed_form_sparsity: s.closed_form_sparsity,
            nnz: s.nnz,
            kept_columns_per_block: s.kept_columns_per_block,
        }
    }
}

pub fn prune(a: &PruneArgs) -> Result<PruneReport> {
    let w = load_matrix(&a.weights)?;
    let hp = HpConfig::new(a.p, a.sbm, a.k)?;
    let pm = apply_hp(&w, &hp)?;
    let side = write_pruned(&a.out, &pm, &hp)?;
    if let Some(h) = &a.emit_heatmap {
        report::write_heatmap(h, pm.dense())?;
    }
    Ok(PruneReport::from(&side))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EncodeReport {
    pub variant: Variant,
    pub rows: usize,
    pub cols: usize,
    pub p: usize,
    pub k: usize,
    pub value_bits: u32,
    pub idx_bits: u32,
    pub nnz: usize,
    pub file_bytes: usize,
    pub size_kib: SizeBreakdown,
}

pub fn encode(a: &EncodeArgs) -> Result<EncodeReport> {
    let (pm, _) = load_pruned(&a.input)?;
    let m = encode_wmark(&pm, a.value_bits, a.idx_bits)?;
    write_wmark(&a.out, &m)?;
    Ok(EncodeReport {
        variant: m.variant(),
        rows: m.rows(),
        cols: m.cols(),
        p: m.p(),
        k: m.k(),
        value_bits: m.value_bits(),
        idx_bits: m.idx_bits(),
        nnz: m.nnz(),
        file_bytes: m.to_bytes().len(),
        size_kib: wmark_breakdown(&m),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimReport {
    pub cycles: u64,
    pub mac_count: u64,
    pub checksum: f64,
}

pub fn simulate(a: &SimulateArgs) -> Result<SimReport> {
    let x = load_matrix(&a.input)?;
    let w = load_wmark(&a.weights)?;
    let r = simulate_mm(&x, &w, PeConfig::new(a.c, a.t)?)?;
    Ok(SimReport {
        cycles: r.cycles,
        mac_count: r.mac_count,
        checksum: r.checksum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerPrediction {
    pub name: String,
    pub sparsity: f64,
    #[serde(rename = "C")]
    pub c: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub cycles: u64,
    pub bram: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictReport {
    #[serde(flatten)]
    pub estimate: ResourceEstimate,
    pub h: usize,
    pub attention_cycles: u64,
    pub layers: Vec<LayerPrediction>,
}

pub fn predict(a: &PredictArgs) -> Result<PredictReport> {
    let mut spec = a.model.spec()?;
    let pruning = SparsityFile::load(&a.sparsity)?.resolve(&spec, &a.model.base()?)?;
    let (pes, att_pe, h) = AllocFile::load(&a.alloc)?.resolve(&spec)?;
    if h == 0 || h > spec.n_head {
        return Err(Error::Input(format!("h = {h} outside 1..={}", spec.n_head)));
    }
    spec.attention_pe = Some(att_pe);
    let dtype: DType = a.model.dtype.into();
    let bram = BramConfig {
        width: a.bram_width,
        depth: a.bram_depth,
        factor: a.bram_factor,
    };
    bram.validate()?;
    let inv = InventoryParams {
        value_bits: a.value_bits.into(),
        idx_bits: a.idx_bits.into(),
        ..InventoryParams::default()
    };

    let mut buffers = Vec::new();
    let mut layers = Vec::new();
    let mut prunable = pruning.iter().zip(&pes);
    for l in &spec.layers {
        let lp = if l.prunable { prunable.next() } else { None };
        let bufs = layer_buffers(l, lp.map(|(p, _)| &p.hp), &inv);
        if let Some((p, &pe)) = lp {
            layers.push(LayerPrediction {
                name: l.name.clone(),
                sparsity: p.sparsity,
                c: pe.c,
                t: pe.t,
                cycles: LayerLoad::of(l, p.sparsity).cycles(pe),
                bram: estimate_bram(&bufs, &bram),
            });
        }
        buffers.extend(bufs);
    }
    let loads: Vec<LayerLoad> = spec
        .prunable()
        .zip(&pruning)
        .map(|(l, p)| LayerLoad::of(l, p.sparsity))
        .collect();
    let att = AttentionCost::from_spec(&spec, dtype);
    let attention_cycles = att.cycles(spec.n_head, h);
    let estimate = ResourceEstimate {
        e_cycles: estimate_cycles(&loads, &pes)? + attention_cycles,
        e_bram: estimate_bram(&buffers, &bram),
        e_dsp: estimate_dsp(&pes, dtype)? + h as u64 * att.r_h,
        e_lut: 0,
        e_ff: 0,
    };
    Ok(PredictReport {
        estimate,
        h,
        attention_cycles,
        layers,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectReport {
    #[serde(flatten)]
    pub selection: Selection,
    pub max_latency_ms: f64,
}

pub fn select_device(a: &SelectArgs) -> Result<SelectReport> {
    let pool = load_pool(&a.pool)?;
    let est = ResourceEstimate {
        e_cycles: a.ecycles,
        e_bram: a.ebram,
        e_dsp: a.edsp,
        e_lut: a.elut,
        e_ff: a.eff,
    };
    let opts = SelectOptions {
        ru_mode: a.ru_mode.into(),
        screen_lut_ff: a.screen_lut_ff,
    };
    let selection = select_device_with(&pool, &est, a.lc_ms, &opts)?;
    Ok(SelectReport {
        max_latency_ms: max_latency_with(&est, &pool, &opts)?,
        selection,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocateReport {
    pub device: String,
    pub latency_ms: f64,
    pub dsp_util: f64,
    pub plan: AllocationPlan,
}

pub fn allocate(a: &AllocateArgs) -> Result<AllocateReport> {
    let spec = a.model.spec()?;
    let pool = load_pool(&a.pool)?;
    let device = pool.get(&a.device).ok_or_else(|| Error::Input(format!("no device `{}` in the pool", a.device)))?;
    let demands = SparsityFile::load(&a.sparsity)?.demands(&spec, &a.model.base()?)?;
    let dtype: DType = a.model.dtype.into();
    let att = AttentionCost::from_spec(&spec, dtype);
    let plan = if a.baseline {
        equal_split_baseline(&spec, &demands, device, dtype, &att)?
    } else {
        allocate_with(&spec, &demands, device.dsp, dtype, &att, a.rounding.into())?
    };
    Ok(AllocateReport {
        device: device.name.clone(),
        latency_ms: device.latency_ms(plan.exe_cyc),
        dsp_util: plan.dsp_used as f64 / device.dsp as f64,
        plan,
    })
}

/// `SPARTAN_SEED`, when set, wins over the flag.
pub fn effective_seed(flag: u64, env: Option<&str>) -> Result<u64> {
    match env {
        Some(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::Input(format!("{SEED_ENV}=`{s}` is not an unsigned integer"))),
        None => Ok(flag),
    }
}

pub fn search_config(a: &SearchArgs, seed: u64) -> Result<SearchConfig> {
    let mut cfg = SearchConfig::new(Constraints::new(a.lc_ms, a.ac)?);
    cfg.p = a.model.p;
    cfg.s_bm = a.model.sbm;
    cfg.dtype = a.model.dtype.into();
    cfg.iter_max = a.iters;
    cfg.seed = seed;
    cfg.select.ru_mode = a.ru_mode.into();
    if let Some(c) = &a.calib {
        cfg.calib = config::load_calib(c)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn search(a: &SearchArgs, seed: u64) -> Result<(ModelSpec, SearchResult)> {
    let spec = a.model.spec()?;
    let pool = load_pool(&a.pool)?;
    let cfg = search_config(a, seed)?;
    let r = run_search(&spec, &pool, &cfg)?;
    if let Some(p) = &a.out {
        report::write_json(p, &ResultReport::new(&spec, &r))?;
    }
    if let Some(p) = &a.trace {
        report::write_trace(p, &spec, &r)?;
    }
    if let Some(p) = &a.table {
        report::write_table(p, &spec, &r)?;
    }
    Ok((spec, r))
}

/// Parses `start:stop:step` (inclusive) or `a,b,c`.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Input(format!("bad size list `{s}`"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let sizes: Vec<usize> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, step] = parts[..] else { return Err(bad()) };
        let (a, b, step) = (num(a)?, num(b)?, num(step)?);
        if step == 0 || a > b {
            return Err(bad());
        }
        (a..=b).step_by(step).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(bad());
    }
    Ok(sizes)
}

pub fn format_bench(a: &BenchArgs) -> Result<Vec<SweepRow>> {
    let sizes = parse_sizes(&a.sizes)?;
    let base = HpConfig::new(a.p, a.sbm, a.p)?;
    let params = AccountingParams {
        value_bits: a.value_bits,
        idx_bits: a.idx_bits,
        ..AccountingParams::default()
    };
    let rows = sweep_sizes(&sizes, a.sparsity, &Format::ALL, &base, &params)?;
    if let Some(p) = &a.csv {
        report::write_sweep(p, &rows)?;
    }
    Ok(rows)
}

pub fn flops(a: &FlopsArgs) -> Result<Vec<FlopsRow>> {
    let inputs: Vec<FlopsInput> = match &a.inputs {
        Some(p) => config::read_json(p)?,
        None => reference_inputs(),
    };
    Ok(flops_table(&inputs, &a.base)?)
}

#[derive(Serialize)]
struct InfeasibleReport {
    feasible: bool,
    reason: String,
}

fn emit<T: Serialize>(out: &mut dyn Write, json: bool, value: &T, text: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let r = if json {
        out.write_all(report::to_json(value).as_bytes())
    } else {
        text(out)
    };
    r.map_err(|e| Error::io("<stdout>", e))
}

/// Runs `cmd` with `SPARTAN_SEED` read from the environment.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Status> {
    let env = std::env::var(SEED_ENV).ok();
    run_with_seed_env(cli, env.as_deref(), out)
}

pub fn run_with_seed_env(cli: &Cli, seed_env: Option<&str>, out: &mut dyn Write) -> Result<Status> {
    let json = cli.json;
    let result = dispatch(&cli.command, json, seed_env, out);
    match result {
        Err(Error::Core(e)) if e.is_infeasible() => {
            let rep = InfeasibleReport {
                feasible: false,
                reason: e.to_string(),
            };
            emit(out, json, &rep, |o| writeln!(o, "infeasible: {e}"))?;
            Ok(Status::Infeasible)
        }
        r => r,
    }
}

fn dispatch(cmd: &Command, json: bool, seed_env: Option<&str>, out: &mut dyn Write) -> Result<Status> {
    match cmd {
        Command::Prune(a) => {
            let r = prune(a)?;
            emit(out, json, &r, |o| {
                writeln!(
                    o,
                    "{}x{} pruned with p={} S_bm={} (realized {}) k={}: sparsity {} ({} non-zeros), mask in {}",
                    r.rows,
                    r.cols,
                    r.p,
                    sig6(r.s_bm),
                    sig6(r.s_bm_realized),
                    r.k,
                    sig6(r.sparsity),
                    r.nnz,
                    crate::pruned::sidecar_path(&a.out).display()
                )
            })?;
        }
        Command::Encode(a) => {
            let r = encode(a)?;
            emit(out, json, &r, |o| {
                let s = &r.size_kib;
                writeln!(
                    o,
                    "{:?} {}x{} p={} k={}: values {} Kib, colIdx {} Kib, WBit {} Kib, total {} Kib ({} bytes on disk)",
                    r.variant,
                    r.rows,
                    r.cols,
                    r.p,
                    r.k,
                    sig6(s.value),
                    sig6(s.col_idx),
                    sig6(s.bitmap),
                    sig6(s.total),
                    r.file_bytes
                )
            })?;
        }
        Command::Simulate(a) => {
            let r = simulate(a)?;
            emit(out, json, &r, |o| {
                writeln!(o, "cycles {}, MACs {}, checksum {}", r.cycles, r.mac_count, sig6(r.checksum))
            })?;
        }
        Command::Predict(a) => {
            let r = predict(a)?;
            emit(out, json, &r, |o| {
                let e = &r.estimate;
                writeln!(o, "cycles {}  BRAM {}  DSP {}  (h = {})", e.e_cycles, e.e_bram, e.e_dsp, r.h)
            })?;
        }
        Command::SelectDevice(a) => {
            let r = select_device(a)?;
            emit(out, json, &r, |o| {
                let s = &r.selection;
                writeln!(
                    o,
                    "{}: latency {} ms, RU {} (BRAM {}, DSP {}); capacity-feasible: {}",
                    s.device.name,
                    sig6(s.latency_ms),
                    sig6(s.ru),
                    sig6(s.bram_util),
                    sig6(s.dsp_util),
                    s.feasible.join(", ")
                )
            })?;
        }
        Command::Allocate(a) => {
            let r = allocate(a)?;
            emit(out, json, &r, |o| {
                writeln!(
                    o,
                    "{}: exeCyc {} ({} ms), h = {}, DSP {}/{}",
                    r.device,
                    r.plan.exe_cyc,
                    sig6(r.latency_ms),
                    r.plan.h,
                    r.plan.dsp_used,
                    r.plan.r_total
                )?;
                for l in &r.plan.layers {
                    writeln!(o, "  {:<24} C={:<3} T={:<4} cycles {}", l.name, l.c, l.t, l.cycles)?;
                }
                Ok(())
            })?;
        }
        Command::Search(a) => {
            let seed = effective_seed(a.seed, seed_env)?;
            let (spec, r) = search(a, seed)?;
            let rep = ResultReport::new(&spec, &r);
            emit(out, json, &rep, |o| {
                let row = report::table_row(&spec, &r);
                for (h, v) in report::TABLE_HEADER.iter().zip(row.iter()) {
                    writeln!(o, "{h:<16} {v}")?;
                }
                writeln!(o, "{:<16} {}/{}", "feasible samples", rep.feasible_samples, rep.iterations)
            })?;
            if !r.feasible() {
                return Ok(Status::Infeasible);
            }
        }
        Command::FormatBench(a) => {
            let rows = format_bench(a)?;
            emit(out, json, &rows, |o| {
                write!(o, "{:>6}", "size")?;
                for f in Format::ALL {
                    write!(o, " {:>12}", f.name())?;
                }
                writeln!(o, " {:>10} {:>10}", "MBR/WMark", "overhead")?;
                for r in &rows {
                    write!(o, "{:>6}", r.size)?;
                    for s in &r.sizes {
                        write!(o, " {:>12}", sig6(s.total))?;
                    }
                    writeln!(
                        o,
                        " {:>10} {:>10}",
                        r.mbr_over_wmark_total.map_or("-".into(), sig6),
                        r.mbr_over_wmark_overhead.map_or("-".into(), sig6)
                    )?;
                }
                writeln!(o, "sizes in Kib")
            })?;
        }
        Command::Flops(a) => {
            let rows = flops(a)?;
            emit(out, json, &rows, |o| report::render_flops(&rows, o))?;
        }
    }
    Ok(Status::Done)
}
