use proptest::prelude::*;
use spartan_core::allocator::{allocate_dsp, allocate_with, Rounding, equal_split_dsp, AttentionCost, LayerDemand};
use spartan_core::engine::PeConfig;
use spartan_core::predictor::{DType, LayerLoad};
use spartan_core::{LayerSpec, ModelSpec};

#[derive(Debug, Clone)]
struct Instance {
    spec: ModelSpec,
    demands: Vec<LayerDemand>,
    att: AttentionCost,
    dtype: DType,
}

fn instance(max_layers: usize) -> impl Strategy<Value = Instance> {
    let layer = (1usize..=32, 1usize..=128, 1usize..=128, 0usize..20, prop::option::of(1usize..=10));
    (
        prop::collection::vec(layer, 1..=max_layers),
        1usize..=4,
        0u64..50_000,
        0u64..=20,
        prop::bool::ANY,
    )
        .prop_map(|(layers, n_head, cyc_h, r_h, fp32)| {
            let specs = layers
                .iter()
                .enumerate()
                .map(|(i, &(k, m, n, _, _))| LayerSpec::linear(&format!("l{i}"), k, m, n))
                .collect();
            Instance {
                spec: ModelSpec::new(specs, n_head).unwrap(),
                demands: layers.iter().map(|&(_, _, _, s, k)| LayerDemand::new(s as f64 / 20.0, k)).collect(),
                att: AttentionCost { cyc_h, r_h },
                dtype: if fp32 { DType::Fp32 } else { DType::Fix16 },
            }
        })
}

fn loads(inst: &Instance) -> Vec<LayerLoad> {
    inst.spec.prunable().zip(&inst.demands).map(|(l, d)| LayerLoad::of(l, d.sparsity)).collect()
}

/// Exhaustive `(C, T, h)` search, each layer restricted to its proportional
/// share of `R_total - h * R_h`.
fn brute_force(inst: &Instance, r_total: u64) -> Option<u64> {
    let m = inst.dtype.dsp_per_mac();
    let loads = loads(inst);
    let total: f64 = loads.iter().map(LayerLoad::work).sum();
    let mut best: Option<u64> = None;
    for h in 1..=inst.spec.n_head as u64 {
        if h * inst.att.r_h >= r_total {
            break;
        }
        let temp = (r_total - h * inst.att.r_h) as f64;
        let mut cyc = inst.att.cycles(inst.spec.n_head, h as usize);
        let mut ok = true;
        for (l, d) in loads.iter().zip(&inst.demands) {
            let share = if total > 0.0 { l.work() / total } else { 1.0 / loads.len() as f64 };
            let units = (share * temp / m as f64 + 1e-9).floor() as u64;
            let mut layer_best = None;
            for c in 1..=units {
                for t in 1..=units / c {
                    if d.k.is_some_and(|k| c as usize > k) {
                        continue;
                    }
                    let v = l.cycles(PeConfig { c: c as usize, t: t as usize });
                    layer_best = Some(layer_best.map_or(v, |b: u64| b.min(v)));
                }
            }
            match layer_best {
                Some(v) => cyc += v,
                None => ok = false,
            }
        }
        if ok {
            best = Some(best.map_or(cyc, |b| b.min(cyc)));
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn plans_fit_the_budget(inst in instance(6), r_total in 1u64..5000) {
        if let Ok(plan) = allocate_dsp(&inst.spec, &inst.demands, r_total, inst.dtype, &inst.att) {
            let m = inst.dtype.dsp_per_mac();
            let used: u64 = plan.layers.iter().map(|l| m * (l.c * l.t) as u64).sum::<u64>() + plan.h as u64 * inst.att.r_h;
            prop_assert_eq!(used, plan.dsp_used);
            prop_assert!(used <= r_total);
            prop_assert!(plan.h >= 1 && plan.h <= inst.spec.n_head);
            let temp = (r_total - plan.h as u64 * inst.att.r_h) as f64;
            let ls = loads(&inst);
            let total: f64 = ls.iter().map(LayerLoad::work).sum();
            for (l, a) in ls.iter().zip(&plan.layers) {
                if total > 0.0 {
                    prop_assert!((a.budget / temp - l.work() / total).abs() < 1e-9);
                }
                prop_assert!(((m * (a.c * a.t) as u64) as f64) <= a.budget + 1e-6);
                prop_assert!(a.budget - ((m * (a.c * a.t) as u64) as f64) < m as f64 * (a.c as f64 + 1.0));
            }
            let sum: u64 = plan.layers.iter().map(|l| l.cycles).sum();
            prop_assert_eq!(plan.exe_cyc, sum + inst.att.cycles(inst.spec.n_head, plan.h));
        }
    }

    #[test]
    fn matches_brute_force_at_desk_scale(inst in instance(3), r_total in 1u64..=200) {
        let got = allocate_dsp(&inst.spec, &inst.demands, r_total, inst.dtype, &inst.att).ok().map(|p| p.exe_cyc);
        prop_assert_eq!(got, brute_force(&inst, r_total));
    }

    #[test]
    fn more_dsps_never_slow_down(inst in instance(6), r_total in 1u64..3000, extra in 0u64..3000) {
        if let Ok(a) = allocate_dsp(&inst.spec, &inst.demands, r_total, inst.dtype, &inst.att) {
            let b = allocate_dsp(&inst.spec, &inst.demands, r_total + extra, inst.dtype, &inst.att).unwrap();
            prop_assert!(b.exe_cyc <= a.exe_cyc);
        }
    }

    #[test]
    fn uniform_work_splits_equally(k in 1usize..16, m in 1usize..64, n in 1usize..64, layers in 1usize..5, r_total in 10u64..2000) {
        let spec = ModelSpec::new((0..layers).map(|i| LayerSpec::linear(&format!("l{i}"), k, m, n)).collect(), 1).unwrap();
        let d = vec![LayerDemand::new(0.0, None); layers];
        let att = AttentionCost::default();
        let a = allocate_dsp(&spec, &d, r_total, DType::Fp32, &att);
        let b = equal_split_dsp(&spec, &d, r_total, DType::Fp32, &att);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.exe_cyc, b.exe_cyc),
            (a, b) => prop_assert_eq!(a.is_ok(), b.is_ok()),
        }
    }
}

#[test]
fn single_layer_plans_match_the_baseline() {
    let spec = ModelSpec::new(vec![LayerSpec::linear("a", 16, 64, 64)], 1).unwrap();
    let d = [LayerDemand::new(0.3, Some(4))];
    let att = AttentionCost { cyc_h: 100, r_h: 5 };
    for r in [10, 55, 101, 640] {
        let a = allocate_dsp(&spec, &d, r, DType::Fp32, &att).unwrap();
        let b = equal_split_dsp(&spec, &d, r, DType::Fp32, &att).unwrap();
        assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn leftover_rounding_never_slows_a_plan(inst in instance(6), r_total in 1u64..5000) {
        let f = allocate_with(&inst.spec, &inst.demands, r_total, inst.dtype, &inst.att, Rounding::Floor);
        let l = allocate_with(&inst.spec, &inst.demands, r_total, inst.dtype, &inst.att, Rounding::Leftover);
        if let Ok(f) = f {
            let l = l.unwrap();
            prop_assert!(l.exe_cyc <= f.exe_cyc);
            prop_assert!(l.dsp_used <= r_total);
        }
    }
}
