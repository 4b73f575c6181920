//! Slotted simulation loop, Monte Carlo aggregation and output files.
//!
//! One slot runs: occupancy draw, phase choice, sensing plan, local
//! decisions, fusion, grants, collisions and rates, then the learning
//! updates. Everything random comes from per-mechanism streams of one run
//! seed, and runs are reduced in seed order so results do not depend on
//! thread scheduling.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::environment::{
    resolve_access, sample_band_states, sample_local_decisions, AccessGrant, Scenario, SensingPlan,
    SlotOutcome,
};
use crate::error::{Error, Result};
use crate::learning::{LearnerState, StepSizes};
use crate::oracle::{genie_fusion, optimal_policy};
use crate::policy::{
    choose_phase, exploit_access, exploit_fusion, exploit_sensing, explore_access, explore_fusion,
    explore_sensing, idle_bands, max_weight_access, BandFusion, Phase, PolicyParams,
};
use crate::rng::{child_seeds, RngStreams};

pub const DEFAULT_HORIZON: usize = 200_000;
pub const DEFAULT_RUNS: usize = 20;
pub const DEFAULT_WINDOW: usize = 5_000;

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    /// ε-greedy learning policy.
    Learned,
    /// Optimal plan for the true parameters, every slot.
    Genie,
    /// Exploration actions every slot.
    Random,
    /// A given plan every slot, with genie fusion and max-rate access.
    Fixed(SensingPlan),
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Learned => "learned",
            PolicyKind::Genie => "genie",
            PolicyKind::Random => "random",
            PolicyKind::Fixed(_) => "fixed",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "learned" => Ok(PolicyKind::Learned),
            "genie" => Ok(PolicyKind::Genie),
            "random" => Ok(PolicyKind::Random),
            other => Err(Error::InvalidArgument(format!(
                "unknown policy `{other}` (expected learned, genie or random)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub policy: PolicyKind,
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    pub params: PolicyParams,
    pub steps: StepSizes,
    /// Moving-average window for the collision series.
    pub window: usize,
    /// Learner state to start from instead of the uninformed prior.
    pub initial_state: Option<LearnerState>,
}

impl RunConfig {
    pub fn new(scenario: Scenario, policy: PolicyKind) -> Self {
        let params = PolicyParams::for_scenario(&scenario);
        Self {
            scenario,
            policy,
            horizon: DEFAULT_HORIZON,
            runs: DEFAULT_RUNS,
            seed: 0,
            params,
            steps: StepSizes::default(),
            window: DEFAULT_WINDOW,
            initial_state: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.params.validate()?;
        self.steps.validate()?;
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.horizon == 0 {
            return bad("horizon must be at least one slot");
        }
        if self.runs == 0 {
            return bad("at least one run is required");
        }
        if self.window == 0 {
            return bad("window must be at least one slot");
        }
        if self.params.diversity > self.scenario.num_sus {
            return bad("diversity exceeds the number of SUs");
        }
        if let Some(s) = &self.initial_state {
            if s.num_sus() != self.scenario.num_sus || s.num_bands() != self.scenario.num_bands {
                return bad("initial learner state does not match the scenario");
            }
        }
        if let PolicyKind::Fixed(plan) = &self.policy {
            plan.validate(&self.scenario)?;
        }
        Ok(())
    }

    /// First slot of the steady-state window (the final tenth of the horizon).
    pub fn steady_start(&self) -> usize {
        self.horizon - (self.horizon / 10).max(1)
    }
}

/// What one slot produced, beyond the raw outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub outcome: SlotOutcome,
    pub phase: Phase,
    /// Sensed bands as a bitmask.
    pub sensed_mask: u64,
}

/// Slot-by-slot driver for one run.
#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: Scenario,
    params: PolicyParams,
    policy: PolicyKind,
    state: LearnerState,
    rng: RngStreams,
    fixed: Option<(SensingPlan, Vec<BandFusion>)>,
}

impl Simulator {
    pub fn new(config: &RunConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let fixed = match &config.policy {
            PolicyKind::Genie => Some(optimal_policy(&config.scenario)?.plan),
            PolicyKind::Fixed(plan) => Some(plan.clone()),
            PolicyKind::Learned | PolicyKind::Random => None,
        };
        let fixed = match fixed {
            Some(plan) => {
                let fusion = genie_fusion(&config.scenario, &plan)?;
                Some((plan, fusion))
            }
            None => None,
        };
        let state = config
            .initial_state
            .clone()
            .unwrap_or_else(|| LearnerState::new(&config.scenario, config.steps));
        Ok(Self {
            scenario: config.scenario.clone(),
            params: config.params,
            policy: config.policy.clone(),
            state,
            rng: RngStreams::new(seed),
            fixed,
        })
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    pub fn into_state(self) -> LearnerState {
        self.state
    }

    pub fn step(&mut self) -> Result<SlotRecord> {
        let s = &self.scenario;
        let k = s.num_bands;
        let true_idle = sample_band_states(s, &mut self.rng.occupancy);

        let (phase, plan, global, grants) = if let Some((plan, fusion)) = &self.fixed {
            let local = sample_local_decisions(s, plan, &true_idle, &mut self.rng.local_decisions);
            let global = exploit_fusion(fusion, &local, k, &mut self.rng.fusion_coins);
            let idle = idle_bands(&global);
            let grants = max_weight_access(s.num_sus, &idle, |i, b| s.mean_rate[(i, b)]);
            (Phase::Exploit, (plan.clone(), local), global, grants)
        } else {
            let phase = match self.policy {
                PolicyKind::Random => Phase::Explore,
                _ => choose_phase(&self.params, &mut self.rng.exploration),
            };
            match phase {
                Phase::Explore => {
                    let plan = explore_sensing(&self.params, s, &mut self.rng.exploration);
                    let local =
                        sample_local_decisions(s, &plan, &true_idle, &mut self.rng.local_decisions);
                    let global = explore_fusion(&plan, &local, s)?;
                    let grants = if self.params.deny_exploration_access {
                        AccessGrant::default()
                    } else {
                        explore_access(&idle_bands(&global), s.num_sus, &mut self.rng.exploration)
                    };
                    (phase, (plan, local), global, grants)
                }
                Phase::Exploit => {
                    let cand = exploit_sensing(&self.state, s, &self.params)?;
                    let plan = cand.plan(k);
                    let local =
                        sample_local_decisions(s, &plan, &true_idle, &mut self.rng.local_decisions);
                    let global =
                        exploit_fusion(&cand.fusion, &local, k, &mut self.rng.fusion_coins);
                    let grants = exploit_access(&self.state, &idle_bands(&global), &self.params);
                    (phase, (plan, local), global, grants)
                }
            }
        };
        let (plan, local_decisions) = plan;

        let (collisions, rates) = resolve_access(s, &grants, &true_idle, &mut self.rng.rate_noise);
        let outcome = SlotOutcome {
            true_idle,
            local_decisions,
            global_decisions: global,
            grants,
            collisions,
            rates,
        };

        if self.policy == PolicyKind::Learned {
            let exploring = phase == Phase::Explore;
            self.state.apply_access_rewards(&outcome);
            self.state.apply_idle_rewards(&outcome, exploring);
            self.state.apply_sensing_rewards(&outcome, exploring);
            self.state.update_fairness(&outcome);
        }

        Ok(SlotRecord {
            outcome,
            phase,
            sensed_mask: plan.band_mask(),
        })
    }
}

/// Per-slot metrics, averaged over runs.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSeries {
    pub sum_rate: Vec<f64>,
    pub relative_rate: Vec<f64>,
    /// `collision[k][t]`: windowed frequency of collisions on band k among
    /// slots where band k was occupied.
    pub collision: Vec<Vec<f64>>,
    /// Share of exploration slots (0 or 1 for a single run).
    pub explore_rate: Vec<f64>,
}

impl MetricsSeries {
    pub fn with_capacity(num_bands: usize, slots: usize) -> Self {
        Self {
            sum_rate: Vec::with_capacity(slots),
            relative_rate: Vec::with_capacity(slots),
            collision: (0..num_bands).map(|_| Vec::with_capacity(slots)).collect(),
            explore_rate: Vec::with_capacity(slots),
        }
    }

    pub fn len(&self) -> usize {
        self.sum_rate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sum_rate.is_empty()
    }

    pub fn num_bands(&self) -> usize {
        self.collision.len()
    }

    fn add_assign(&mut self, other: &MetricsSeries) {
        let add = |a: &mut Vec<f64>, b: &Vec<f64>| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.sum_rate, &other.sum_rate);
        add(&mut self.relative_rate, &other.relative_rate);
        add(&mut self.explore_rate, &other.explore_rate);
        for (a, b) in self.collision.iter_mut().zip(&other.collision) {
            add(a, b);
        }
    }

    fn scale(&mut self, c: f64) {
        let all = self.collision.iter_mut().chain([
            &mut self.sum_rate,
            &mut self.relative_rate,
            &mut self.explore_rate,
        ]);
        for v in all {
            v.iter_mut().for_each(|x| *x *= c);
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("slot,sum_rate,relative_rate");
        for k in 1..=self.num_bands() {
            let _ = write!(out, ",collision_band_{k}");
        }
        out.push_str(",explore_rate\n");
        for t in 0..self.len() {
            let _ = write!(
                out,
                "{},{},{}",
                t + 1,
                self.sum_rate[t],
                self.relative_rate[t]
            );
            for band in &self.collision {
                let _ = write!(out, ",{}", band[t]);
            }
            let _ = writeln!(out, ",{}", self.explore_rate[t]);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty CSV"))?;
        let cols: Vec<&str> = header.split(',').collect();
        let k = cols
            .len()
            .checked_sub(4)
            .ok_or_else(|| Error::parse(1, "too few columns"))?;
        let expected: Vec<String> = ["slot", "sum_rate", "relative_rate"]
            .into_iter()
            .map(String::from)
            .chain((1..=k).map(|b| format!("collision_band_{b}")))
            .chain(["explore_rate".to_string()])
            .collect();
        if cols != expected {
            return Err(Error::parse(1, format!("unexpected header `{header}`")));
        }
        let mut series = Self::with_capacity(k, 0);
        for (idx, line) in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != k + 4 {
                return Err(Error::parse(idx + 1, format!("expected {} fields", k + 4)));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(idx + 1, format!("`{s}` is not a number")))
            };
            series.sum_rate.push(num(fields[1])?);
            series.relative_rate.push(num(fields[2])?);
            for b in 0..k {
                series.collision[b].push(num(fields[3 + b])?);
            }
            series.explore_rate.push(num(fields[3 + k])?);
        }
        Ok(series)
    }
}

/// Counters over the steady-state window.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SteadyTally {
    pub slots: u64,
    pub sum_rate: f64,
    pub occupied: Vec<u64>,
    pub collided: Vec<u64>,
    pub explore_slots: u64,
    /// Exploitation slots per sensed-band bitmask.
    pub exploit_sets: BTreeMap<u64, u64>,
}

impl SteadyTally {
    fn new(num_bands: usize) -> Self {
        Self {
            occupied: vec![0; num_bands],
            collided: vec![0; num_bands],
            ..Default::default()
        }
    }

    fn record(&mut self, r: &SlotRecord) {
        self.slots += 1;
        self.sum_rate += r.outcome.sum_rate();
        for (k, idle) in r.outcome.true_idle.iter().enumerate() {
            if !idle {
                self.occupied[k] += 1;
                self.collided[k] += r.outcome.collisions[k] as u64;
            }
        }
        match r.phase {
            Phase::Explore => self.explore_slots += 1,
            Phase::Exploit => *self.exploit_sets.entry(r.sensed_mask).or_default() += 1,
        }
    }

    fn merge(&mut self, other: &SteadyTally) {
        self.slots += other.slots;
        self.sum_rate += other.sum_rate;
        self.explore_slots += other.explore_slots;
        for k in 0..self.occupied.len() {
            self.occupied[k] += other.occupied[k];
            self.collided[k] += other.collided[k];
        }
        for (m, c) in &other.exploit_sets {
            *self.exploit_sets.entry(*m).or_default() += c;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub policy: String,
    pub runs: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Expected sum rate of the optimal plan; denominator of relative rates.
    pub reference_rate: f64,
    pub mean_sum_rate: f64,
    pub steady_sum_rate: f64,
    pub steady_relative_rate: f64,
    /// Collisions per occupied slot on each band, over the steady window.
    pub steady_collision: Vec<f64>,
    pub steady_explore_rate: f64,
    /// Share of steady-state exploitation slots sensing each band set.
    pub exploit_sensed_sets: Vec<(u64, f64)>,
}

impl Summary {
    fn from_tally(
        config: &RunConfig,
        reference_rate: f64,
        total_rate: f64,
        tally: &SteadyTally,
    ) -> Self {
        let runs = config.runs as f64;
        let steady_sum_rate = tally.sum_rate / tally.slots as f64;
        let exploit_total: u64 = tally.exploit_sets.values().sum();
        let mut sets: Vec<(u64, f64)> = tally
            .exploit_sets
            .iter()
            .map(|(m, c)| (*m, *c as f64 / exploit_total as f64))
            .collect();
        sets.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Self {
            policy: config.policy.name().to_string(),
            runs: config.runs,
            horizon: config.horizon,
            seed: config.seed,
            reference_rate,
            mean_sum_rate: total_rate / (runs * config.horizon as f64),
            steady_sum_rate,
            steady_relative_rate: steady_sum_rate / reference_rate,
            steady_collision: tally
                .collided
                .iter()
                .zip(&tally.occupied)
                .map(|(&c, &o)| if o == 0 { 0.0 } else { c as f64 / o as f64 })
                .collect(),
            steady_explore_rate: tally.explore_slots as f64 / tally.slots as f64,
            exploit_sensed_sets: sets,
        }
    }

    /// Share of steady exploitation slots that sensed exactly `bands`.
    pub fn sensed_set_share(&self, bands: &[usize]) -> f64 {
        let mask = bands.iter().fold(0u64, |m, &k| m | 1 << k);
        self.exploit_sensed_sets
            .iter()
            .find(|(m, _)| *m == mask)
            .map_or(0.0, |(_, s)| *s)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "policy: {}", self.policy);
        let _ = writeln!(out, "runs: {}", self.runs);
        let _ = writeln!(out, "horizon: {}", self.horizon);
        let _ = writeln!(out, "seed: {}", self.seed);
        let _ = writeln!(out, "reference_rate: {}", self.reference_rate);
        let _ = writeln!(out, "mean_sum_rate: {}", self.mean_sum_rate);
        let _ = writeln!(out, "steady_sum_rate: {}", self.steady_sum_rate);
        let _ = writeln!(out, "steady_relative_rate: {}", self.steady_relative_rate);
        for (k, c) in self.steady_collision.iter().enumerate() {
            let _ = writeln!(out, "steady_collision_band_{}: {}", k + 1, c);
        }
        let _ = writeln!(out, "steady_explore_rate: {}", self.steady_explore_rate);
        for (mask, share) in &self.exploit_sensed_sets {
            let _ = writeln!(out, "exploit_sensed_set {}: {}", format_bands(*mask), share);
        }
        out
    }
}

/// `{1,3}` style label of a band bitmask, 1-based.
pub fn format_bands(mask: u64) -> String {
    let bands: Vec<String> = (0..64)
        .filter(|b| mask & (1 << b) != 0)
        .map(|b| (b + 1).to_string())
        .collect();
    format!("{{{}}}", bands.join(","))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub series: MetricsSeries,
    pub summary: Summary,
    pub tally: SteadyTally,
    /// Learner state at the end of each run, in seed order.
    pub final_states: Vec<LearnerState>,
}

struct SingleRun {
    series: MetricsSeries,
    tally: SteadyTally,
    total_rate: f64,
    state: LearnerState,
}

fn simulate(config: &RunConfig, seed: u64, reference_rate: f64) -> Result<SingleRun> {
    let k = config.scenario.num_bands;
    let mut sim = Simulator::new(config, seed)?;
    let mut series = MetricsSeries::with_capacity(k, config.horizon);
    let mut tally = SteadyTally::new(k);
    let steady_start = config.steady_start();

    // Ring buffer of (occupied, collided) flags for the collision window.
    let w = config.window;
    let mut ring = vec![(false, false); w * k];
    let mut occ_sum = vec![0u64; k];
    let mut col_sum = vec![0u64; k];
    let mut total_rate = 0.0;

    for t in 0..config.horizon {
        let rec = sim.step()?;
        let rate = rec.outcome.sum_rate();
        total_rate += rate;
        series.sum_rate.push(rate);
        series.relative_rate.push(rate / reference_rate);
        series.explore_rate.push(if rec.phase == Phase::Explore {
            1.0
        } else {
            0.0
        });
        let slot = t % w;
        for b in 0..k {
            let (old_occ, old_col) = ring[slot * k + b];
            let occ = !rec.outcome.true_idle[b];
            let col = rec.outcome.collisions[b];
            occ_sum[b] = occ_sum[b] + occ as u64 - old_occ as u64;
            col_sum[b] = col_sum[b] + col as u64 - old_col as u64;
            ring[slot * k + b] = (occ, col);
            let freq = if occ_sum[b] == 0 {
                0.0
            } else {
                col_sum[b] as f64 / occ_sum[b] as f64
            };
            series.collision[b].push(freq);
        }
        if t >= steady_start {
            tally.record(&rec);
        }
    }
    Ok(SingleRun {
        series,
        tally,
        total_rate,
        state: sim.into_state(),
    })
}

fn reference_rate(scenario: &Scenario) -> Result<f64> {
    Ok(optimal_policy(scenario)?.expected_rate)
}

fn aggregate(config: &RunConfig, seeds: &[u64]) -> Result<RunOutput> {
    config.validate()?;
    let reference = reference_rate(&config.scenario)?;
    let k = config.scenario.num_bands;
    let mut series: Option<MetricsSeries> = None;
    let mut tally = SteadyTally::new(k);
    let mut total_rate = 0.0;
    let mut final_states = Vec::with_capacity(seeds.len());

    // Bounded batches keep memory flat; reduction stays in seed order.
    let batch = rayon::current_num_threads().max(1);
    for chunk in seeds.chunks(batch) {
        let results: Vec<Result<SingleRun>> = chunk
            .par_iter()
            .map(|&seed| simulate(config, seed, reference))
            .collect();
        for run in results {
            let run = run?;
            match &mut series {
                None => series = Some(run.series),
                Some(acc) => acc.add_assign(&run.series),
            }
            tally.merge(&run.tally);
            total_rate += run.total_rate;
            final_states.push(run.state);
        }
    }
    let mut series = series.expect("at least one run");
    if seeds.len() > 1 {
        series.scale(1.0 / seeds.len() as f64);
    }
    let summary = Summary::from_tally(config, reference, total_rate, &tally);
    Ok(RunOutput {
        series,
        summary,
        tally,
        final_states,
    })
}

/// A single run with the given seed (the config's `runs` and `seed` are
/// ignored).
pub fn run_one(config: &RunConfig, seed: u64) -> Result<RunOutput> {
    let single = RunConfig {
        runs: 1,
        seed,
        ..config.clone()
    };
    aggregate(&single, &[seed])
}

/// `config.runs` runs on child seeds of `config.seed`, averaged per slot.
pub fn run_monte_carlo(config: &RunConfig) -> Result<RunOutput> {
    let seeds = if config.runs == 1 {
        vec![config.seed]
    } else {
        child_seeds(config.seed, config.runs)
    };
    aggregate(config, &seeds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Summary,
}

pub fn emit(output: &RunOutput, path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        OutputFormat::Csv => output.series.to_csv(),
        OutputFormat::Summary => output.summary.to_text(),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    Scenario::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::tests::paper_scenario;

    fn config(policy: PolicyKind, horizon: usize) -> RunConfig {
        RunConfig {
            horizon,
            runs: 1,
            seed: 5,
            window: 100,
            ..RunConfig::new(paper_scenario(), policy)
        }
    }

    #[test]
    fn empty_series_is_header_only() {
        let s = MetricsSeries::with_capacity(3, 0);
        let csv = s.to_csv();
        assert_eq!(
            csv,
            "slot,sum_rate,relative_rate,collision_band_1,collision_band_2,collision_band_3,explore_rate\n"
        );
        assert_eq!(csv.trim_end().split(',').count(), 3 + 4);
        assert_eq!(MetricsSeries::from_csv(&csv).unwrap(), s);
    }

    #[test]
    fn csv_round_trip() {
        let out = run_one(&config(PolicyKind::Learned, 300), 1).unwrap();
        let back = MetricsSeries::from_csv(&out.series.to_csv()).unwrap();
        assert_eq!(back, out.series);
    }

    #[test]
    fn csv_rejects_bad_rows() {
        assert!(MetricsSeries::from_csv("slot,sum_rate\n").is_err());
        let bad = "slot,sum_rate,relative_rate,collision_band_1,explore_rate\n1,2,3,x,0\n";
        assert!(matches!(
            MetricsSeries::from_csv(bad),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn single_run_monte_carlo_equals_run_one() {
        let c = config(PolicyKind::Learned, 500);
        assert_eq!(run_monte_carlo(&c).unwrap(), run_one(&c, c.seed).unwrap());
    }

    #[test]
    fn runs_replay_exactly() {
        let c = RunConfig {
            runs: 3,
            ..config(PolicyKind::Learned, 400)
        };
        assert_eq!(run_monte_carlo(&c).unwrap(), run_monte_carlo(&c).unwrap());
    }

    #[test]
    fn collisions_and_rates_are_consistent() {
        let c = config(PolicyKind::Learned, 3000);
        let s = c.scenario.clone();
        let mut sim = Simulator::new(&c, 17).unwrap();
        let (mut collisions, mut granted_busy) = (0, 0);
        for _ in 0..c.horizon {
            let r = sim.step().unwrap();
            let o = &r.outcome;
            assert!(o.grants.is_legal());
            collisions += o.collisions.iter().filter(|&&x| x).count();
            for &(i, k) in &o.grants.grants {
                assert_eq!(
                    o.global_decisions[k],
                    Some(false),
                    "grant on a band not declared idle"
                );
                if !o.true_idle[k] {
                    granted_busy += 1;
                }
                let r = o.rates[(i, k)];
                assert!(r == 0.0 || r == s.mean_rate[(i, k)]);
            }
            for ((i, k), &r) in o.rates.indexed() {
                if r > 0.0 {
                    assert_eq!(o.grants.su_on(k), Some(i));
                    assert!(o.true_idle[k]);
                }
            }
            for k in 0..3 {
                assert_eq!(
                    o.collisions[k],
                    !o.true_idle[k] && o.grants.su_on(k).is_some()
                );
            }
        }
        assert_eq!(collisions, granted_busy);
    }

    #[test]
    fn denied_exploration_access_grants_nothing_while_exploring() {
        let mut c = config(PolicyKind::Learned, 2000);
        c.params.deny_exploration_access = true;
        let mut sim = Simulator::new(&c, 3).unwrap();
        for _ in 0..c.horizon {
            let r = sim.step().unwrap();
            if r.phase == Phase::Explore {
                assert!(r.outcome.grants.grants.is_empty());
            }
        }
    }

    #[test]
    fn random_policy_always_explores() {
        let out = run_one(&config(PolicyKind::Random, 500), 2).unwrap();
        assert!(out.series.explore_rate.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn config_validation() {
        let mut c = config(PolicyKind::Learned, 10);
        c.horizon = 0;
        assert!(c.validate().is_err());
        let mut c = config(PolicyKind::Learned, 10);
        c.params.diversity = 5;
        assert!(c.validate().is_err());
        let mut c = config(PolicyKind::Learned, 10);
        c.window = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn band_labels() {
        assert_eq!(format_bands(0b101), "{1,3}");
        assert_eq!(format_bands(0), "{}");
    }
}
