//! End-to-end agreements between the simulator, the oracle and the fusion
//! rules.

use cvsense::fusion::{fuse, randomized_cv_design};
use cvsense::harness::{run_monte_carlo, Simulator};
use cvsense::oracle::{optimal_policy, policy_value};
use cvsense::policy::exploit_sensing;
use cvsense::{
    DecisionVector, DetectorProfile, LearnerState, PolicyKind, PolicyParams, RunConfig, Scenario,
    StepSizes,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario() -> Scenario {
    Scenario::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/paper_sec7"
    ))
    .unwrap()
}

#[test]
fn exploiting_true_values_earns_the_oracle_value_of_its_plan() {
    let s = scenario();
    let truth = LearnerState::from_truth(&s, StepSizes::default());
    let mut params = PolicyParams::for_scenario(&s);
    params.epsilon = 0.0;
    let plan = exploit_sensing(&truth, &s, &params)
        .unwrap()
        .plan(s.num_bands);
    let expected = policy_value(&s, &plan).unwrap().expected_rate;

    let mut c = RunConfig::new(s, PolicyKind::Learned);
    c.params = params;
    c.initial_state = Some(truth);
    c.horizon = 100_000;
    c.runs = 1;
    c.seed = 5;
    let got = run_monte_carlo(&c).unwrap().summary.mean_sum_rate;
    assert!(
        (got - expected).abs() / expected < 0.01,
        "{got} vs {expected}"
    );
}

#[test]
fn genie_run_earns_the_optimal_value() {
    let s = scenario();
    let best = optimal_policy(&s).unwrap().expected_rate;
    let mut c = RunConfig::new(s, PolicyKind::Genie);
    c.horizon = 200_000;
    c.runs = 1;
    c.seed = 8;
    let out = run_monte_carlo(&c).unwrap();
    assert!((out.summary.mean_sum_rate - best).abs() / best < 0.01);
    assert_eq!(out.summary.reference_rate, best);
}

#[test]
fn genie_collisions_respect_the_limit() {
    let s = scenario();
    let mut c = RunConfig::new(s, PolicyKind::Genie);
    c.horizon = 200_000;
    c.runs = 1;
    c.seed = 2;
    let out = run_monte_carlo(&c).unwrap();
    for (k, &freq) in out.summary.steady_collision.iter().enumerate() {
        assert!(freq <= 0.1 + 0.02, "band {k}: {freq}");
    }
}

#[test]
fn collision_count_equals_granted_occupied_pairs() {
    let s = scenario();
    let c = RunConfig::new(s, PolicyKind::Learned);
    let mut sim = Simulator::new(&c, 13).unwrap();
    let (mut flagged, mut counted) = (0u64, 0u64);
    for _ in 0..20_000 {
        let rec = sim.step().unwrap();
        let o = &rec.outcome;
        flagged += o.collisions.iter().filter(|&&c| c).count() as u64;
        counted += o
            .grants
            .grants
            .iter()
            .filter(|&&(_, k)| !o.true_idle[k])
            .count() as u64;
    }
    assert_eq!(flagged, counted);
}

#[test]
fn randomized_rule_detects_at_the_target_rate() {
    let profile = DetectorProfile::new(vec![0.9, 0.8], vec![0.1, 0.05]).unwrap();
    let design = randomized_cv_design(&profile, 0.9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let trials = 100_000;
    let mut detected = 0;
    let mut false_alarms = 0;
    for _ in 0..trials {
        let occupied: Vec<bool> = profile
            .betas()
            .iter()
            .map(|&b| rng.gen::<f64>() < b)
            .collect();
        if fuse(&DecisionVector::new(occupied), &design, &profile, rng.gen()) {
            detected += 1;
        }
        let idle: Vec<bool> = profile
            .alphas()
            .iter()
            .map(|&a| rng.gen::<f64>() < a)
            .collect();
        if fuse(&DecisionVector::new(idle), &design, &profile, rng.gen()) {
            false_alarms += 1;
        }
    }
    assert!((detected as f64 / trials as f64 - 0.9).abs() < 0.01);
    assert!((false_alarms as f64 / trials as f64 - design.false_alarm).abs() < 0.01);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn replay_is_deterministic(seed in any::<u64>(), eps in 0.0f64..=1.0) {
        let mut c = RunConfig::new(scenario(), PolicyKind::Learned);
        c.params.epsilon = eps;
        c.horizon = 300;
        let mut a = Simulator::new(&c, seed).unwrap();
        let mut b = Simulator::new(&c, seed).unwrap();
        for _ in 0..c.horizon {
            prop_assert_eq!(a.step().unwrap(), b.step().unwrap());
        }
    }

    #[test]
    fn granted_bands_were_fused_idle(seed in any::<u64>()) {
        let c = RunConfig::new(scenario(), PolicyKind::Learned);
        let mut sim = Simulator::new(&c, seed).unwrap();
        for _ in 0..300 {
            let rec = sim.step().unwrap();
            for &(i, k) in &rec.outcome.grants.grants {
                prop_assert_eq!(rec.outcome.global_decisions[k], Some(false));
                let r = rec.outcome.rates[(i, k)];
                let ok = if rec.outcome.true_idle[k] { r > 0.0 } else { r == 0.0 };
                prop_assert!(ok);
            }
        }
    }
}
