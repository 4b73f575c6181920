//! Value estimates kept by the FC and the reward rules that update them.
//!
//! All estimates follow the constant-step exponential smoothing
//! `q ← q + δ (r − q)`. A reward rule that would hand back the current
//! estimate is a no-op, so those entries are simply left untouched.

use std::path::Path;

use crate::environment::{Scenario, SlotOutcome};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tabular::{Document, Writer};

/// Floor applied to the fairness average before it is used as a divisor.
pub const FAIRNESS_FLOOR: f64 = 1e-6;

/// Margin keeping learned detection probabilities strictly inside
/// `(α, 1)` when they feed a fusion design.
pub const SENSING_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    /// For the detection and idle probability estimates.
    pub prob: f64,
    /// For the achievable rate estimates.
    pub rate: f64,
    /// For the per-SU fairness averages.
    pub fair: f64,
}

impl Default for StepSizes {
    fn default() -> Self {
        Self {
            prob: 0.01,
            rate: 0.1,
            fair: 0.1,
        }
    }
}

impl StepSizes {
    pub fn validate(&self) -> Result<()> {
        for (name, s) in [
            ("prob", self.prob),
            ("rate", self.rate),
            ("fair", self.fair),
        ] {
            if !(s > 0.0 && s <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "step size `{name}` = {s} outside (0,1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    /// Estimated local detection probabilities, N×K.
    pub q_sen: Matrix<f64>,
    /// Estimated achievable rates, N×K.
    pub q_acc: Matrix<f64>,
    /// Estimated idle probabilities, one per band.
    pub q_idle: Vec<f64>,
    /// Smoothed obtained rate per SU (counting slots without access).
    pub fairness: Vec<f64>,
    pub steps: StepSizes,
}

pub fn update_value(q: f64, reward: f64, step: f64) -> f64 {
    q + step * (reward - q)
}

impl LearnerState {
    /// Uninformed start: idle probability 1/2, zero rates, detection at the
    /// exploration surrogate `(1 + α)/2`, zero fairness.
    pub fn new(scenario: &Scenario, steps: StepSizes) -> Self {
        let (n, k) = (scenario.num_sus, scenario.num_bands);
        Self {
            q_sen: Matrix::from_fn(n, k, |i, j| (1.0 + scenario.local_alpha[(i, j)]) / 2.0),
            q_acc: Matrix::filled(n, k, 0.0),
            q_idle: vec![0.5; k],
            fairness: vec![0.0; n],
            steps,
        }
    }

    /// State holding the true scenario parameters, as if learning had
    /// converged without bias.
    pub fn from_truth(scenario: &Scenario, steps: StepSizes) -> Self {
        Self {
            q_sen: scenario.local_beta.clone(),
            q_acc: scenario.mean_rate.clone(),
            q_idle: scenario.idle_prob.clone(),
            fairness: vec![0.0; scenario.num_sus],
            steps,
        }
    }

    pub fn num_sus(&self) -> usize {
        self.q_sen.rows()
    }

    pub fn num_bands(&self) -> usize {
        self.q_sen.cols()
    }

    /// Rewards granted SUs that transmitted without collision with the rate
    /// they achieved.
    pub fn apply_access_rewards(&mut self, outcome: &SlotOutcome) {
        let step = self.steps.rate;
        for &(i, k) in &outcome.grants.grants {
            if !outcome.collisions[k] {
                let q = &mut self.q_acc[(i, k)];
                *q = update_value(*q, outcome.rates[(i, k)], step);
            }
        }
    }

    /// Idle-probability update for every sensed band; exploration slots only.
    pub fn apply_idle_rewards(&mut self, outcome: &SlotOutcome, is_exploration: bool) {
        if !is_exploration {
            return;
        }
        let step = self.steps.prob;
        for (k, decision) in outcome.global_decisions.iter().enumerate() {
            let Some(occupied) = *decision else { continue };
            let reward = if occupied || outcome.collisions[k] {
                0.0
            } else {
                1.0
            };
            self.q_idle[k] = update_value(self.q_idle[k], reward, step);
        }
    }

    /// Detection-probability update from the local decisions on bands the
    /// FC found occupied or where a collision revealed the PU; exploration
    /// slots only.
    pub fn apply_sensing_rewards(&mut self, outcome: &SlotOutcome, is_exploration: bool) {
        if !is_exploration {
            return;
        }
        let step = self.steps.prob;
        for (k, decision) in outcome.global_decisions.iter().enumerate() {
            let Some(occupied) = *decision else { continue };
            if !(occupied || outcome.collisions[k]) {
                continue;
            }
            for i in 0..self.num_sus() {
                if let Some(local) = outcome.local_decisions[(i, k)] {
                    let q = &mut self.q_sen[(i, k)];
                    *q = update_value(*q, if local { 1.0 } else { 0.0 }, step);
                }
            }
        }
    }

    pub fn update_fairness(&mut self, outcome: &SlotOutcome) {
        let step = self.steps.fair;
        for (i, j) in self.fairness.iter_mut().enumerate() {
            let obtained: f64 = outcome.rates.row(i).iter().sum();
            *j = update_value(*j, obtained, step);
        }
    }

    /// `J_i^ν` with `J_i` floored; exactly 1 when `ν = 0`.
    pub fn fairness_divisor(&self, i: usize, nu: f64) -> f64 {
        if nu == 0.0 {
            1.0
        } else {
            self.fairness[i].max(FAIRNESS_FLOOR).powf(nu)
        }
    }

    /// Learned detection probability of SU i on band k, pulled inside
    /// `(α + margin, 1 − margin)` so the fusion weights stay positive.
    pub fn clamped_detection(&self, i: usize, k: usize, alpha: f64) -> f64 {
        let lo = alpha + SENSING_CLAMP;
        let hi = 1.0 - SENSING_CLAMP;
        self.q_sen[(i, k)].clamp(lo.min(hi), hi)
    }

    pub fn to_text(&self) -> String {
        Writer::new()
            .comment("learner snapshot")
            .scalar("num_sus", self.num_sus())
            .scalar("num_bands", self.num_bands())
            .scalar("step_prob", format!("{:?}", self.steps.prob))
            .scalar("step_rate", format!("{:?}", self.steps.rate))
            .scalar("step_fair", format!("{:?}", self.steps.fair))
            .matrix("q_sen", &self.q_sen)
            .matrix("q_acc", &self.q_acc)
            .vector("q_idle", &self.q_idle)
            .vector("fairness", &self.fairness)
            .finish()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        let n: usize = doc.require_scalar("num_sus")?;
        let k: usize = doc.require_scalar("num_bands")?;
        let state = Self {
            q_sen: doc.matrix("q_sen", n, k)?,
            q_acc: doc.matrix("q_acc", n, k)?,
            q_idle: doc.vector("q_idle", k)?,
            fairness: doc.vector("fairness", n)?,
            steps: StepSizes {
                prob: doc.require_scalar("step_prob")?,
                rate: doc.require_scalar("step_rate")?,
                fair: doc.require_scalar("step_fair")?,
            },
        };
        state.steps.validate()?;
        let unit = |v: &f64| (0.0..=1.0).contains(v);
        if !state.q_sen.iter().all(unit) || !state.q_idle.iter().all(unit) {
            return Err(Error::InvalidArgument(
                "probability estimates must lie in [0,1]".into(),
            ));
        }
        if state.q_acc.iter().any(|&v| v < 0.0) || state.fairness.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument(
                "rate estimates must be non-negative".into(),
            ));
        }
        Ok(state)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
