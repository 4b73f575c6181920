//! Cooperative spectrum sensing for a multi-user, multi-band cognitive radio
//! network.
//!
//! A fusion center (FC) collects binary local decisions from secondary users
//! (SUs), fuses them with a randomized Chair-Varshney rule that meets a
//! detection-probability target exactly, grants idle bands by solving a
//! linear assignment problem, and learns its sensing and access policy with
//! ε-greedy action-value updates. A genie-aided exhaustive search over
//! sensing assignments provides the reference optimum.
//!
//! Module map:
//!
//! * [`fusion`] - log-likelihood-ratio statistic, its exact distribution,
//!   randomized threshold design and m-out-of-n voting.
//! * [`assignment`] - Hungarian solver and the round-based sensing assignment.
//! * [`environment`] - scenario parameters and per-slot ground truth sampling.
//! * [`learning`] - value tables kept by the FC and their reward updates.
//! * [`policy`] - exploration and exploitation actions.
//! * [`oracle`] - expected sum rate of a sensing plan and the optimal plan.
//! * [`harness`] - slotted simulation loop, Monte Carlo aggregation, output.

pub mod assignment;
pub mod environment;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod learning;
pub mod matrix;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod tabular;

pub use assignment::{iterated_sensing_assignment, solve, Assignment, CostMatrix};
pub use environment::{AccessGrant, Scenario, SensingPlan, SlotOutcome};
pub use error::{Error, Result};
pub use fusion::{DecisionVector, DetectorProfile, FusionDesign, StatisticDistribution};
pub use harness::{MetricsSeries, PolicyKind, RunConfig, Summary};
pub use learning::{LearnerState, StepSizes};
pub use matrix::Matrix;
pub use oracle::PolicyValue;
pub use policy::{CandidateEvaluation, Phase, PolicyParams};
