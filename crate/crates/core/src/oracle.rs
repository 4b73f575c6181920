//! Genie-aided evaluation of sensing plans.
//!
//! With the true parameters known, the expected sum rate of a plan is an
//! exact sum over the sets of bands the FC can declare idle. Each sensed
//! band k is declared idle with probability
//! `ψ_k = (1 − α̂_k) P_k + ω (1 − P_k)` independently of the others, and a
//! band declared idle is truly idle with posterior
//! `(1 − α̂_k) P_k / ψ_k`. Grants go to the max-rate matching over the
//! declared-idle set.

use crate::environment::{Scenario, SensingPlan};
use crate::error::{Error, Result};
use crate::fusion::ENUMERATION_CAP;
use crate::matrix::Matrix;
use crate::policy::{max_weight_access, BandFusion};

/// Largest number of candidate plans [`optimal_policy`] will enumerate.
pub const SEARCH_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValue {
    pub plan: SensingPlan,
    pub expected_rate: f64,
    /// Probability each band is declared idle; zero for unsensed bands.
    pub per_band_psi: Vec<f64>,
    /// Fused false-alarm probability per band; `None` for unsensed bands.
    pub false_alarm: Vec<Option<f64>>,
}

pub fn psi(scenario: &Scenario, k: usize, fused_false_alarm: f64) -> f64 {
    let p = scenario.idle_prob[k];
    (1.0 - fused_false_alarm) * p + scenario.collision_limit * (1.0 - p)
}

/// Rate each band in `idle` contributes under max-rate access on the true
/// mean rates, indexed by band.
pub fn matched_rates(scenario: &Scenario, idle: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; scenario.num_bands];
    let grant = max_weight_access(scenario.num_sus, idle, |i, k| scenario.mean_rate[(i, k)]);
    for (i, k) in grant.grants {
        out[k] = scenario.mean_rate[(i, k)];
    }
    out
}

/// Expected sum rate given the FC declared exactly the bands in `idle`
/// idle; `false_alarm` is indexed by band.
pub fn expected_rate_given_idle_set(
    scenario: &Scenario,
    idle: &[usize],
    false_alarm: &[f64],
) -> f64 {
    let rates = matched_rates(scenario, idle);
    idle.iter()
        .map(|&k| {
            let hit = (1.0 - false_alarm[k]) * scenario.idle_prob[k];
            let declared = psi(scenario, k, false_alarm[k]);
            if declared > 0.0 {
                rates[k] * hit / declared
            } else {
                0.0
            }
        })
        .sum()
}

/// Fusion rules the genie uses for `plan`: randomized designs on the true
/// detection probabilities at target `1 − ω`.
pub fn genie_fusion(scenario: &Scenario, plan: &SensingPlan) -> Result<Vec<BandFusion>> {
    plan.sensed_bands
        .iter()
        .map(|&k| {
            BandFusion::design(
                scenario,
                k,
                plan.sensors(k),
                |i| scenario.local_beta[(i, k)],
                scenario.target_detection(),
            )
        })
        .collect()
}

pub fn policy_value(scenario: &Scenario, plan: &SensingPlan) -> Result<PolicyValue> {
    let table = RateTable::new(scenario)?;
    evaluate(scenario, plan, &table)
}

/// Expected posterior-weighted rates for every subset of bands, computed
/// once per scenario and shared across plan evaluations. Entry `mask` holds
/// the matched rate of each band when exactly `mask` is declared idle.
struct RateTable {
    rates: Vec<Vec<f64>>,
}

impl RateTable {
    fn new(scenario: &Scenario) -> Result<Self> {
        let k = scenario.num_bands;
        if k > ENUMERATION_CAP {
            return Err(Error::TooLarge {
                what: "band set",
                size: k,
                cap: ENUMERATION_CAP,
            });
        }
        let rates = (0u64..1 << k)
            .map(|mask| {
                let idle: Vec<usize> = (0..k).filter(|&b| mask & (1 << b) != 0).collect();
                matched_rates(scenario, &idle)
            })
            .collect();
        Ok(Self { rates })
    }
}

fn evaluate(scenario: &Scenario, plan: &SensingPlan, table: &RateTable) -> Result<PolicyValue> {
    plan.validate(scenario)?;
    let k_total = scenario.num_bands;
    let fusion = genie_fusion(scenario, plan)?;
    let mut false_alarm = vec![None; k_total];
    let mut psis = vec![0.0; k_total];
    let mut posterior = vec![0.0; k_total];
    for f in &fusion {
        let a = f.design.false_alarm;
        false_alarm[f.band] = Some(a);
        psis[f.band] = psi(scenario, f.band, a);
        if psis[f.band] > 0.0 {
            posterior[f.band] = (1.0 - a) * scenario.idle_prob[f.band] / psis[f.band];
        }
    }

    let sensed = &plan.sensed_bands;
    let mut expected_rate = 0.0;
    for sub in 0u64..1 << sensed.len() {
        let mut weight = 1.0;
        let mut mask = 0u64;
        for (bit, &k) in sensed.iter().enumerate() {
            if sub & (1 << bit) != 0 {
                weight *= psis[k];
                mask |= 1 << k;
            } else {
                weight *= 1.0 - psis[k];
            }
        }
        if weight == 0.0 {
            continue;
        }
        let rates = &table.rates[mask as usize];
        let conditional: f64 = sensed
            .iter()
            .filter(|&&k| mask & (1 << k) != 0)
            .map(|&k| rates[k] * posterior[k])
            .sum();
        expected_rate += weight * conditional;
    }

    Ok(PolicyValue {
        plan: plan.clone(),
        expected_rate,
        per_band_psi: psis,
        false_alarm,
    })
}

/// Every sensing plan in which each SU senses at most `capacity` bands,
/// in lexicographic order of the per-SU choices.
pub fn enumerate_plans(scenario: &Scenario) -> Result<Vec<SensingPlan>> {
    let (n, k) = (scenario.num_sus, scenario.num_bands);
    if k > 20 {
        return Err(Error::TooLarge {
            what: "band set",
            size: k,
            cap: 20,
        });
    }
    // Per-SU options: band subsets of size ≤ capacity, smallest mask first.
    let options: Vec<u32> = (0u32..1 << k)
        .filter(|m| m.count_ones() as usize <= scenario.capacity)
        .collect();
    let total = (options.len() as u128)
        .checked_pow(n as u32)
        .unwrap_or(u128::MAX);
    if total > SEARCH_CAP as u128 {
        return Err(Error::TooLarge {
            what: "sensing plan search space",
            size: usize::try_from(total).unwrap_or(usize::MAX),
            cap: SEARCH_CAP,
        });
    }

    let mut plans = Vec::with_capacity(total as usize);
    let mut digits = vec![0usize; n];
    loop {
        let assignment = Matrix::from_fn(n, k, |i, b| options[digits[i]] & (1 << b) != 0);
        plans.push(SensingPlan::from_assignment(assignment));
        // Odometer with SU 0 as the most significant digit.
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(plans);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < options.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Exhaustive search for the plan with the highest expected sum rate. The
/// first plan in enumeration order wins ties.
pub fn optimal_policy(scenario: &Scenario) -> Result<PolicyValue> {
    let table = RateTable::new(scenario)?;
    let mut best: Option<PolicyValue> = None;
    for plan in enumerate_plans(scenario)? {
        let value = evaluate(scenario, &plan, &table)?;
        if best
            .as_ref()
            .is_none_or(|b| value.expected_rate > b.expected_rate)
        {
            best = Some(value);
        }
    }
    Ok(best.expect("the empty plan is always enumerated"))
}

/// All plan values, in enumeration order.
pub fn all_policy_values(scenario: &Scenario) -> Result<Vec<PolicyValue>> {
    let table = RateTable::new(scenario)?;
    enumerate_plans(scenario)?
        .iter()
        .map(|p| evaluate(scenario, p, &table))
        .collect()
}
