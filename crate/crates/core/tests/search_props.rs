use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spartan_core::devices::{Device, HardwarePool};
use spartan_core::search::*;
use spartan_core::{LayerSpec, ModelSpec};

fn bandit_run(seed: u64, updates: usize) -> f64 {
    let params = PolicyParams::default();
    let mut p = Policy::uniform(&[2], params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..updates {
        let eps: Vec<Episode> = (0..params.batch)
            .map(|_| {
                let action = controller_sample(&p, &mut rng);
                let reward = if action.0[0] == 0 { 1.0 } else { 0.0 };
                Episode { action, reward }
            })
            .collect();
        controller_update(&mut p, &eps).unwrap();
    }
    p.probs(0)[0]
}

#[test]
fn two_armed_bandit_learns_the_better_arm() {
    let wins = (0..100).filter(|&s| bandit_run(s, 500) >= 0.9).count();
    assert!(wins >= 95, "{wins}/100 seeds");
}

#[test]
fn uniform_sampling_frequencies() {
    let p = Policy::uniform(&[2], PolicyParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 100_000;
    let zeros = (0..n).filter(|_| controller_sample(&p, &mut rng).0[0] == 0).count();
    assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.01);
}

proptest! {
    #[test]
    fn positive_advantage_raises_probability(logits in prop::collection::vec(-3.0f64..3.0, 2..6), pick in 0usize..6, r in 0.1f64..5.0) {
        let a = pick % logits.len();
        let mut p = Policy::uniform(&[logits.len()], PolicyParams::default()).unwrap();
        p.logits[0] = logits;
        let before = p.probs(0)[a];
        controller_update(&mut p, &[Episode { action: ActionVector(vec![a]), reward: r }]).unwrap();
        prop_assert!(p.probs(0)[a] > before);
    }

    #[test]
    fn exactly_one_reward_branch(a in 0.0f64..1.0, l in 0.0f64..100.0, lc in 1.0f64..50.0, ac in 0.01f64..0.99, ru in 0.0f64..1.0) {
        let c = Constraints::new(lc, ac).unwrap();
        let pen = Penalties { pen_a: 2.0, pen_l: 3.0 };
        let r = reward(a, l, ru, &c, &pen);
        match reward_branch(a, l, &c) {
            RewardBranch::Feasible => { prop_assert!(l < lc && a > ac); prop_assert!(r > 0.0); }
            RewardBranch::AccuracyViolated => { prop_assert!(l < lc && a <= ac); prop_assert_eq!(r, -2.0); }
            RewardBranch::LatencyViolated => { prop_assert!(l >= lc && a > ac); prop_assert_eq!(r, -3.0); }
            RewardBranch::BothViolated => { prop_assert!(l >= lc && a <= ac); prop_assert_eq!(r, -5.0); }
        }
    }
}

fn toy() -> ModelSpec {
    let mut spec = ModelSpec::new(
        vec![
            LayerSpec::linear("fc1", 16, 200, 200),
            LayerSpec::attention("qk", 16, 50, 16),
            LayerSpec::linear("fc2", 16, 200, 100),
        ],
        2,
    )
    .unwrap();
    spec.attention_pe = Some(spartan_core::engine::PeConfig { c: 2, t: 2 });
    spec
}

fn toy_cfg(lc: f64, ac: f64, seed: u64) -> SearchConfig {
    let mut cfg = SearchConfig::new(Constraints::new(lc, ac).unwrap());
    cfg.seed = seed;
    cfg.iter_max = 300;
    cfg
}

#[test]
fn toy_search_finds_and_reproduces_a_feasible_design() {
    let spec = toy();
    let pool = HardwarePool::builtin();
    let cfg = toy_cfg(1.0, 0.9, 11);
    let r = run_search(&spec, &pool, &cfg).unwrap();
    let best = r.best.as_ref().expect("loose constraints are feasible");
    let o = &best.outcome;
    assert!(o.latency_ms.unwrap() < 1.0 && o.accuracy > 0.9 && o.reward > 0.0);
    let env = Environment::new(&spec, &pool, &cfg).unwrap();
    assert_eq!(&env.evaluate(&best.action).unwrap(), o);
    assert_eq!(r.trace.len(), 300);
    assert_eq!(run_search(&spec, &pool, &cfg).unwrap(), r);
}

#[test]
fn unreachable_latency_is_reported_infeasible() {
    let spec = toy();
    let pool = HardwarePool::builtin();
    let r = run_search(&spec, &pool, &toy_cfg(1e-4, 0.5, 1)).unwrap();
    assert!(r.best.is_none());
    assert_eq!(r.trace.len(), 300);
    assert!(r.trace.iter().all(|t| t.reward < 0.0));
}

#[test]
fn equally_feasible_devices_resolve_by_utilization() {
    let spec = toy();
    let pool = HardwarePool::new(vec![
        Device::new("small", 700, 1800, 1, 1),
        Device::new("big", 4000, 7000, 1, 1),
    ])
    .unwrap();
    let cfg = toy_cfg(1.0, 0.5, 2);
    let env = Environment::new(&spec, &pool, &cfg).unwrap();
    let o = env.evaluate_ks(&[1, 1], 1).unwrap();
    assert_eq!(o.device.as_deref(), Some("small"));
}

#[test]
fn decode_and_encode_are_inverse() {
    let spec = toy();
    let pool = HardwarePool::builtin();
    let cfg = toy_cfg(1.0, 0.9, 0);
    let env = Environment::new(&spec, &pool, &cfg).unwrap();
    assert_eq!(env.action_sizes(), vec![10, 10, 2]);
    let a = env.encode(&[3, 10], 2);
    assert_eq!(env.decode(&a).unwrap(), (vec![3, 10], 2));
    assert!(env.decode(&ActionVector(vec![0, 10, 0])).is_err());
}
