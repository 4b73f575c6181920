//! Decision layer of the FC.
//!
//! Each slot is either an exploration slot (random bands sensed with a fixed
//! diversity, equal-weight voting, random grants) or an exploitation slot
//! (heuristic band/SU search over the learned values, randomized
//! Chair-Varshney fusion, and grants from a rate/fairness assignment).

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::assignment::{iterated_sensing_assignment, solve, CostMatrix};
use crate::environment::{AccessGrant, Scenario, SensingPlan};
use crate::error::{Error, Result};
use crate::fusion::{
    self, m_out_of_n_fuse, majority_threshold, randomized_cv_design, DecisionVector,
    DetectorProfile, FusionDesign,
};
use crate::learning::LearnerState;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams {
    /// Probability of an exploration slot.
    pub epsilon: f64,
    /// SUs per band while exploring.
    pub diversity: usize,
    /// Rate exponent of the access weight.
    pub theta: f64,
    /// Fairness exponent of the access weight.
    pub nu: f64,
    /// Detection probability the fused decision must meet, `1 − ω`.
    pub target_detection: f64,
    /// Withhold grants during exploration slots.
    pub deny_exploration_access: bool,
}

impl PolicyParams {
    /// Sum-rate access (θ=1, ν=0), ε = 0.1 and D = 2 on the scenario's
    /// collision limit.
    pub fn for_scenario(scenario: &Scenario) -> Self {
        Self {
            epsilon: 0.1,
            diversity: 2,
            theta: 1.0,
            nu: 0.0,
            target_detection: scenario.target_detection(),
            deny_exploration_access: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon {} outside [0,1]", self.epsilon));
        }
        if self.diversity == 0 {
            return bad("diversity must be at least 1".into());
        }
        if !(self.theta >= 0.0 && self.nu >= 0.0) {
            return bad("theta and nu must be non-negative".into());
        }
        if !(self.target_detection > 0.0 && self.target_detection < 1.0) {
            return bad(format!(
                "target detection {} outside (0,1)",
                self.target_detection
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Explore,
    Exploit,
}

pub fn choose_phase(params: &PolicyParams, rng: &mut impl Rng) -> Phase {
    if rng.gen::<f64>() < params.epsilon {
        Phase::Explore
    } else {
        Phase::Exploit
    }
}

/// Randomized fusion rule of one sensed band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandFusion {
    pub band: usize,
    pub sensors: Vec<usize>,
    pub profile: DetectorProfile,
    pub design: FusionDesign,
}

impl BandFusion {
    /// Designs the rule for `sensors` on `band` given their detection
    /// probabilities.
    pub fn design(
        scenario: &Scenario,
        band: usize,
        sensors: Vec<usize>,
        detection: impl Fn(usize) -> f64,
        target_detection: f64,
    ) -> Result<Self> {
        let betas = sensors.iter().map(|&i| detection(i)).collect();
        let alphas = sensors
            .iter()
            .map(|&i| scenario.local_alpha[(i, band)])
            .collect();
        let profile = DetectorProfile::new(betas, alphas)?;
        let design = randomized_cv_design(&profile, target_detection)?;
        Ok(Self {
            band,
            sensors,
            profile,
            design,
        })
    }

    /// Global decision from this band's local decisions.
    pub fn decide(&self, local: &Matrix<Option<bool>>, coin: f64) -> bool {
        let bits = self
            .sensors
            .iter()
            .map(|&i| local[(i, self.band)].expect("assigned SU reported a decision"))
            .collect();
        fusion::fuse(
            &DecisionVector::new(bits),
            &self.design,
            &self.profile,
            coin,
        )
    }
}

/// One candidate of the exploitation search.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEvaluation {
    /// Candidate bands in selection order.
    pub bands: Vec<usize>,
    /// N×V; column v belongs to `bands[v]`.
    pub assignment: Matrix<bool>,
    pub fusion: Vec<BandFusion>,
    pub score: f64,
}

impl CandidateEvaluation {
    pub fn plan(&self, num_bands: usize) -> SensingPlan {
        let n = self.assignment.rows();
        let mut full = Matrix::filled(n, num_bands, false);
        for (v, &k) in self.bands.iter().enumerate() {
            for i in 0..n {
                full[(i, k)] = self.assignment[(i, v)];
            }
        }
        SensingPlan::from_assignment(full)
    }

    pub fn band_mask(&self) -> u64 {
        self.fusion.iter().fold(0, |m, f| m | 1 << f.band)
    }
}

/// `q_acc^θ / J^ν` for SU i on band k.
pub fn access_weight(state: &LearnerState, params: &PolicyParams, i: usize, k: usize) -> f64 {
    state.q_acc[(i, k)].powf(params.theta) / state.fairness_divisor(i, params.nu)
}

fn rate_term(state: &LearnerState, params: &PolicyParams, k: usize) -> f64 {
    (0..state.num_sus())
        .map(|i| access_weight(state, params, i, k))
        .sum()
}

pub fn band_score(
    state: &LearnerState,
    scenario: &Scenario,
    params: &PolicyParams,
    k: usize,
) -> f64 {
    let sensing: f64 = (0..scenario.num_sus)
        .map(|i| state.q_sen[(i, k)] - scenario.local_alpha[(i, k)])
        .sum();
    state.q_idle[k] * rate_term(state, params, k) - sensing
}

/// Scores the top-V candidate for every V from `min(N, K)` down to 1.
pub fn evaluate_candidates(
    state: &LearnerState,
    scenario: &Scenario,
    params: &PolicyParams,
) -> Result<Vec<CandidateEvaluation>> {
    let (n, k_total) = (scenario.num_sus, scenario.num_bands);
    let rate: Vec<f64> = (0..k_total).map(|k| rate_term(state, params, k)).collect();
    let scores: Vec<f64> = (0..k_total)
        .map(|k| band_score(state, scenario, params, k))
        .collect();
    let mut ranked: Vec<usize> = (0..k_total).collect();
    ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut out = Vec::with_capacity(n.min(k_total));
    for v in (1..=n.min(k_total)).rev() {
        let bands = ranked[..v].to_vec();
        let values = Matrix::from_fn(n, v, |i, c| {
            let k = bands[c];
            (state.q_sen[(i, k)] - scenario.local_alpha[(i, k)]) * state.q_idle[k] * rate[k]
        });
        let assignment = iterated_sensing_assignment(&values, scenario.capacity);

        let mut fusion = Vec::with_capacity(v);
        let mut score = 0.0;
        for (c, &k) in bands.iter().enumerate() {
            let sensors: Vec<usize> = (0..n).filter(|&i| assignment[(i, c)]).collect();
            if sensors.is_empty() {
                continue;
            }
            let f = BandFusion::design(
                scenario,
                k,
                sensors,
                |i| state.clamped_detection(i, k, scenario.local_alpha[(i, k)]),
                params.target_detection,
            )?;
            score += state.q_idle[k] * (1.0 - f.design.false_alarm) * rate[k];
            fusion.push(f);
        }
        out.push(CandidateEvaluation {
            bands,
            assignment,
            fusion,
            score,
        });
    }
    Ok(out)
}

/// Best candidate of the exploitation search; ties go to the larger V.
pub fn exploit_sensing(
    state: &LearnerState,
    scenario: &Scenario,
    params: &PolicyParams,
) -> Result<CandidateEvaluation> {
    let mut best: Option<CandidateEvaluation> = None;
    for cand in evaluate_candidates(state, scenario, params)? {
        if best.as_ref().is_none_or(|b| cand.score > b.score) {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one band and one SU"))
}

/// Applies each band's randomized rule; unsensed bands get `None`.
pub fn exploit_fusion(
    fusion: &[BandFusion],
    local: &Matrix<Option<bool>>,
    num_bands: usize,
    rng: &mut impl Rng,
) -> Vec<Option<bool>> {
    let mut out = vec![None; num_bands];
    for f in fusion {
        out[f.band] = Some(f.decide(local, rng.gen::<f64>()));
    }
    out
}

/// Max-weight grant of idle bands to SUs, one band per SU and one SU per
/// band.
pub fn max_weight_access(
    num_sus: usize,
    idle: &[usize],
    weight: impl Fn(usize, usize) -> f64,
) -> AccessGrant {
    if idle.is_empty() || num_sus == 0 {
        return AccessGrant::default();
    }
    let costs = CostMatrix::new(Matrix::from_fn(num_sus, idle.len(), |i, c| {
        -weight(i, idle[c])
    }));
    AccessGrant {
        grants: solve(&costs)
            .pairs
            .into_iter()
            .map(|(i, c)| (i, idle[c]))
            .collect(),
    }
}

pub fn exploit_access(state: &LearnerState, idle: &[usize], params: &PolicyParams) -> AccessGrant {
    max_weight_access(state.num_sus(), idle, |i, k| {
        access_weight(state, params, i, k)
    })
}

/// Random bands with `diversity` SUs each. Leftover SUs are dealt
/// round-robin onto the chosen bands.
pub fn explore_sensing(
    params: &PolicyParams,
    scenario: &Scenario,
    rng: &mut impl Rng,
) -> SensingPlan {
    let (n, k) = (scenario.num_sus, scenario.num_bands);
    let d = params.diversity;
    assert!(
        (1..=n).contains(&d),
        "diversity {d} needs between 1 and {n} SUs"
    );
    let count = (n / d).min(k);
    let bands = index::sample(rng, k, count).into_vec();
    let mut sus: Vec<usize> = (0..n).collect();
    sus.shuffle(rng);

    let mut assignment = Matrix::filled(n, k, false);
    for (slot, &i) in sus.iter().enumerate() {
        let band = if slot < count * d {
            bands[slot / d]
        } else {
            bands[(slot - count * d) % count]
        };
        assignment[(i, band)] = true;
    }
    SensingPlan::from_assignment(assignment)
}

/// Equal-weight voting with the error-minimizing vote count, computed from
/// the band's mean false-alarm probability and the surrogate detection
/// probability `(1 + α′)/2`.
pub fn explore_fusion(
    plan: &SensingPlan,
    local: &Matrix<Option<bool>>,
    scenario: &Scenario,
) -> Result<Vec<Option<bool>>> {
    let mut out = vec![None; scenario.num_bands];
    for &k in &plan.sensed_bands {
        let sensors = plan.sensors(k);
        let alpha = sensors
            .iter()
            .map(|&i| scenario.local_alpha[(i, k)])
            .sum::<f64>()
            / sensors.len() as f64;
        let m = majority_threshold(sensors.len(), alpha, (1.0 + alpha) / 2.0)?;
        let bits = sensors
            .iter()
            .map(|&i| local[(i, k)].expect("assigned SU reported a decision"))
            .collect();
        out[k] = Some(m_out_of_n_fuse(&DecisionVector::new(bits), m));
    }
    Ok(out)
}

/// Uniformly random injective grant of idle bands to SUs.
pub fn explore_access(idle: &[usize], num_sus: usize, rng: &mut impl Rng) -> AccessGrant {
    if idle.is_empty() {
        return AccessGrant::default();
    }
    let mut sus: Vec<usize> = (0..num_sus).collect();
    sus.shuffle(rng);
    let mut bands = idle.to_vec();
    bands.shuffle(rng);
    let mut grants: Vec<(usize, usize)> = sus.into_iter().zip(bands).collect();
    grants.sort_unstable_by_key(|g| g.1);
    AccessGrant { grants }
}

/// Bands the FC declared idle.
pub fn idle_bands(global: &[Option<bool>]) -> Vec<usize> {
    global
        .iter()
        .enumerate()
        .filter_map(|(k, d)| (*d == Some(false)).then_some(k))
        .collect()
}
