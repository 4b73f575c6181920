//! Ground truth of the simulated network: PU occupancy, local sensing
//! outcomes, collisions and achieved rates.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tabular::{Document, Writer};

/// Full parameter set of a network. Rows index SUs, columns index bands.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub num_bands: usize,
    pub num_sus: usize,
    /// Probability that band k is idle in a slot.
    pub idle_prob: Vec<f64>,
    pub local_beta: Matrix<f64>,
    pub local_alpha: Matrix<f64>,
    /// Rate SU i achieves on band k when the band is idle.
    pub mean_rate: Matrix<f64>,
    /// Bound ω on the collision probability under PU presence.
    pub collision_limit: f64,
    /// Bands an SU can sense in one slot.
    pub capacity: usize,
    /// Half-width of a uniform multiplicative perturbation of achieved
    /// rates. Zero means achieved rate equals the mean.
    pub rate_noise: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let (n, k) = (self.num_sus, self.num_bands);
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if n == 0 || k == 0 {
            return bad("need at least one SU and one band".into());
        }
        if self.idle_prob.len() != k {
            return bad(format!(
                "{} idle probabilities for {k} bands",
                self.idle_prob.len()
            ));
        }
        for (name, m) in [
            ("local_beta", &self.local_beta),
            ("local_alpha", &self.local_alpha),
            ("mean_rate", &self.mean_rate),
        ] {
            if m.rows() != n || m.cols() != k {
                return bad(format!(
                    "{name} is {}x{}, expected {n}x{k}",
                    m.rows(),
                    m.cols()
                ));
            }
        }
        let open_unit = |p: f64| p > 0.0 && p < 1.0;
        if let Some((b, p)) = self
            .idle_prob
            .iter()
            .enumerate()
            .find(|(_, p)| !open_unit(**p))
        {
            return bad(format!(
                "band {}: idle probability {p} outside (0,1)",
                b + 1
            ));
        }
        for ((i, j), &b) in self.local_beta.indexed() {
            let a = self.local_alpha[(i, j)];
            if !open_unit(b) || !open_unit(a) {
                return bad(format!(
                    "SU {} band {}: detection/false-alarm probabilities must lie in (0,1)",
                    i + 1,
                    j + 1
                ));
            }
            if b <= a {
                return bad(format!(
                    "SU {} band {}: beta {b} does not exceed alpha {a}",
                    i + 1,
                    j + 1
                ));
            }
        }
        if let Some(((i, j), r)) = self
            .mean_rate
            .indexed()
            .find(|(_, r)| !(**r >= 0.0 && r.is_finite()))
        {
            return bad(format!("SU {} band {}: rate {r} is negative", i + 1, j + 1));
        }
        if !open_unit(self.collision_limit) {
            return bad(format!(
                "collision limit {} outside (0,1)",
                self.collision_limit
            ));
        }
        if self.capacity == 0 {
            return bad("SU sensing capacity must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.rate_noise) {
            return bad(format!("rate noise {} outside [0,1)", self.rate_noise));
        }
        Ok(())
    }

    /// Detection target at the FC that maximizes throughput under the
    /// collision constraint.
    pub fn target_detection(&self) -> f64 {
        1.0 - self.collision_limit
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        let num_sus: usize = doc.require_scalar("num_sus")?;
        let num_bands: usize = doc.require_scalar("num_bands")?;
        let scenario = Scenario {
            num_bands,
            num_sus,
            idle_prob: doc.vector("idle_prob", num_bands)?,
            local_beta: doc.matrix("local_beta", num_sus, num_bands)?,
            local_alpha: doc.matrix("local_alpha", num_sus, num_bands)?,
            mean_rate: doc.matrix("mean_rate", num_sus, num_bands)?,
            collision_limit: doc.require_scalar("collision_limit")?,
            capacity: doc.parse_scalar("capacity")?.unwrap_or(1),
            rate_noise: doc.parse_scalar("rate_noise")?.unwrap_or(0.0),
        };
        // Re-anchor invariant violations to the offending line.
        scenario.validate().map_err(|e| {
            let line = locate(&scenario, &doc);
            match (e, line) {
                (Error::InvalidScenario(msg), Some(line)) => Error::Parse { line, msg },
                (e, _) => e,
            }
        })?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        Writer::new()
            .scalar("num_sus", self.num_sus)
            .scalar("num_bands", self.num_bands)
            .scalar("collision_limit", format!("{:?}", self.collision_limit))
            .scalar("capacity", self.capacity)
            .scalar("rate_noise", format!("{:?}", self.rate_noise))
            .vector("idle_prob", &self.idle_prob)
            .matrix("local_beta", &self.local_beta)
            .matrix("local_alpha", &self.local_alpha)
            .matrix("mean_rate", &self.mean_rate)
            .finish()
    }
}

/// Line of the first row that breaks a per-entry invariant, if any.
fn locate(s: &Scenario, doc: &Document) -> Option<usize> {
    let open_unit = |p: f64| p > 0.0 && p < 1.0;
    if s.idle_prob.iter().any(|p| !open_unit(*p)) {
        return Some(doc.row_line("idle_prob", 0));
    }
    for i in 0..s.num_sus {
        for k in 0..s.num_bands {
            let (b, a) = (s.local_beta[(i, k)], s.local_alpha[(i, k)]);
            if !open_unit(b) || b <= a {
                return Some(doc.row_line("local_beta", i));
            }
            if !open_unit(a) {
                return Some(doc.row_line("local_alpha", i));
            }
            if s.mean_rate[(i, k)] < 0.0 {
                return Some(doc.row_line("mean_rate", i));
            }
        }
    }
    for key in ["collision_limit", "capacity", "rate_noise"] {
        if let Some((line, _)) = doc.scalar(key) {
            let broken = match key {
                "collision_limit" => !open_unit(s.collision_limit),
                "capacity" => s.capacity == 0,
                _ => !(0.0..1.0).contains(&s.rate_noise),
            };
            if broken {
                return Some(line);
            }
        }
    }
    None
}

/// Which bands are sensed this slot and by whom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensingPlan {
    /// Sensed bands, ascending.
    pub sensed_bands: Vec<usize>,
    /// N×K; `true` when SU i senses band k.
    pub assignment: Matrix<bool>,
}

impl SensingPlan {
    pub fn empty(num_sus: usize, num_bands: usize) -> Self {
        Self {
            sensed_bands: Vec::new(),
            assignment: Matrix::filled(num_sus, num_bands, false),
        }
    }

    /// Builds a plan from an N×K membership matrix; a band is sensed when at
    /// least one SU is assigned to it.
    pub fn from_assignment(assignment: Matrix<bool>) -> Self {
        let sensed_bands = (0..assignment.cols())
            .filter(|&k| (0..assignment.rows()).any(|i| assignment[(i, k)]))
            .collect();
        Self {
            sensed_bands,
            assignment,
        }
    }

    /// SUs assigned to band `k`, ascending.
    pub fn sensors(&self, k: usize) -> Vec<usize> {
        (0..self.assignment.rows())
            .filter(|&i| self.assignment[(i, k)])
            .collect()
    }

    pub fn is_sensed(&self, k: usize) -> bool {
        self.sensed_bands.binary_search(&k).is_ok()
    }

    /// Bitmask of sensed bands (bit k set when band k is sensed).
    pub fn band_mask(&self) -> u64 {
        self.sensed_bands.iter().fold(0, |m, &k| m | 1 << k)
    }

    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        let a = &self.assignment;
        if a.rows() != scenario.num_sus || a.cols() != scenario.num_bands {
            return Err(Error::InvalidArgument("sensing plan shape mismatch".into()));
        }
        for k in 0..a.cols() {
            let used = (0..a.rows()).any(|i| a[(i, k)]);
            if used != self.is_sensed(k) {
                return Err(Error::InvalidArgument(format!(
                    "band {k} sensed-set membership disagrees with its assignment column"
                )));
            }
        }
        for i in 0..a.rows() {
            let load = a.row(i).iter().filter(|&&b| b).count();
            if load > scenario.capacity {
                return Err(Error::InvalidArgument(format!(
                    "SU {i} senses {load} bands, capacity is {}",
                    scenario.capacity
                )));
            }
        }
        Ok(())
    }
}

/// `(su, band)` access grants for one slot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AccessGrant {
    pub grants: Vec<(usize, usize)>,
}

impl AccessGrant {
    pub fn is_legal(&self) -> bool {
        let mut sus: Vec<usize> = self.grants.iter().map(|g| g.0).collect();
        let mut bands: Vec<usize> = self.grants.iter().map(|g| g.1).collect();
        sus.sort_unstable();
        bands.sort_unstable();
        let distinct = |v: &[usize]| v.windows(2).all(|w| w[0] != w[1]);
        distinct(&sus) && distinct(&bands)
    }

    pub fn su_on(&self, band: usize) -> Option<usize> {
        self.grants.iter().find(|g| g.1 == band).map(|g| g.0)
    }
}

/// Everything that happened in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub true_idle: Vec<bool>,
    /// N×K; `Some(true)` = SU reported the PU present. `None` when not sensed.
    pub local_decisions: Matrix<Option<bool>>,
    /// Per band; `Some(true)` = FC declared the band occupied.
    pub global_decisions: Vec<Option<bool>>,
    pub grants: AccessGrant,
    pub collisions: Vec<bool>,
    /// N×K achieved rates.
    pub rates: Matrix<f64>,
}

impl SlotOutcome {
    pub fn sum_rate(&self) -> f64 {
        self.rates.iter().sum()
    }
}

pub fn sample_band_states(scenario: &Scenario, rng: &mut impl Rng) -> Vec<bool> {
    scenario
        .idle_prob
        .iter()
        .map(|&p| rng.gen::<f64>() < p)
        .collect()
}

/// Draws a local decision for every sensed (SU, band) pair, independently
/// across SUs given the band state.
pub fn sample_local_decisions(
    scenario: &Scenario,
    plan: &SensingPlan,
    true_idle: &[bool],
    rng: &mut impl Rng,
) -> Matrix<Option<bool>> {
    let mut out = Matrix::filled(scenario.num_sus, scenario.num_bands, None);
    for &k in &plan.sensed_bands {
        for i in plan.sensors(k) {
            let p = if true_idle[k] {
                scenario.local_alpha[(i, k)]
            } else {
                scenario.local_beta[(i, k)]
            };
            out[(i, k)] = Some(rng.gen::<f64>() < p);
        }
    }
    out
}

/// Collision flags per band and achieved rates per (SU, band). `rng` is
/// consulted only when the scenario enables rate noise.
pub fn resolve_access(
    scenario: &Scenario,
    grants: &AccessGrant,
    true_idle: &[bool],
    rng: &mut impl Rng,
) -> (Vec<bool>, Matrix<f64>) {
    let mut collisions = vec![false; scenario.num_bands];
    let mut rates = Matrix::filled(scenario.num_sus, scenario.num_bands, 0.0);
    for &(i, k) in &grants.grants {
        if true_idle[k] {
            let mut r = scenario.mean_rate[(i, k)];
            if scenario.rate_noise > 0.0 {
                r *= 1.0 + scenario.rate_noise * rng.gen_range(-1.0..=1.0);
            }
            rates[(i, k)] = r;
        } else {
            collisions[k] = true;
        }
    }
    (collisions, rates)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    pub(crate) fn paper_scenario() -> Scenario {
        Scenario::parse(include_str!("../../../scenarios/paper_sec7")).unwrap()
    }

    fn full_plan(s: &Scenario) -> SensingPlan {
        SensingPlan::from_assignment(Matrix::from_fn(s.num_sus, s.num_bands, |i, k| {
            i % s.num_bands == k
        }))
    }

    #[test]
    fn always_idle_bands() {
        let mut s = paper_scenario();
        s.idle_prob = vec![1.0; 3];
        let mut rng = stream(1, Stream::Occupancy);
        for _ in 0..100 {
            assert_eq!(sample_band_states(&s, &mut rng), vec![true; 3]);
        }
    }

    #[test]
    fn idle_frequencies_match() {
        let s = paper_scenario();
        let mut rng = stream(2, Stream::Occupancy);
        let slots = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..slots {
            for (c, idle) in counts.iter_mut().zip(sample_band_states(&s, &mut rng)) {
                *c += idle as usize;
            }
        }
        for (c, p) in counts.iter().zip([0.41, 0.17, 0.50]) {
            assert!((*c as f64 / slots as f64 - p).abs() < 0.01);
        }
    }

    #[test]
    fn occupancy_replays_under_seed() {
        let s = paper_scenario();
        let draw = || {
            let mut rng = stream(9, Stream::Occupancy);
            (0..50)
                .map(|_| sample_band_states(&s, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn bands_are_uncorrelated() {
        let s = paper_scenario();
        let mut rng = stream(3, Stream::Occupancy);
        let slots = 100_000;
        let draws: Vec<Vec<bool>> = (0..slots)
            .map(|_| sample_band_states(&s, &mut rng))
            .collect();
        let mean = |k: usize| draws.iter().filter(|d| d[k]).count() as f64 / slots as f64;
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let (ma, mb) = (mean(a), mean(b));
            let cov = draws
                .iter()
                .map(|d| (d[a] as u8 as f64 - ma) * (d[b] as u8 as f64 - mb))
                .sum::<f64>()
                / slots as f64;
            let corr = cov / (ma * (1.0 - ma) * mb * (1.0 - mb)).sqrt();
            assert!(corr.abs() < 0.01, "bands {a},{b}: {corr}");
        }
    }

    #[test]
    fn perfect_detector_reports_occupied() {
        let mut s = paper_scenario();
        s.local_beta = Matrix::filled(4, 3, 1.0);
        let plan = full_plan(&s);
        let mut rng = stream(4, Stream::LocalDecisions);
        let u = sample_local_decisions(&s, &plan, &[false; 3], &mut rng);
        for ((i, k), d) in u.indexed() {
            assert_eq!(*d, plan.assignment[(i, k)].then_some(true));
        }
    }

    #[test]
    fn false_alarm_rate_matches_alpha() {
        let s = paper_scenario();
        let plan = full_plan(&s);
        let mut rng = stream(5, Stream::LocalDecisions);
        let slots = 100_000;
        let ones = (0..slots)
            .filter(|_| {
                sample_local_decisions(&s, &plan, &[true; 3], &mut rng)[(0, 0)] == Some(true)
            })
            .count();
        assert!((ones as f64 / slots as f64 - 0.01).abs() < 0.005);
    }

    #[test]
    fn unsensed_pairs_have_no_decision() {
        let s = paper_scenario();
        let mut a = Matrix::filled(4, 3, false);
        a[(1, 2)] = true;
        let plan = SensingPlan::from_assignment(a);
        let u = sample_local_decisions(
            &s,
            &plan,
            &[false; 3],
            &mut stream(6, Stream::LocalDecisions),
        );
        assert_eq!(u.iter().filter(|d| d.is_some()).count(), 1);
        assert!(u[(1, 2)].is_some());
    }

    #[test]
    fn access_outcomes() {
        let s = paper_scenario();
        let mut rng = stream(7, Stream::RateNoise);
        let grant = AccessGrant {
            grants: vec![(3, 2)],
        };
        let (c, r) = resolve_access(&s, &grant, &[true; 3], &mut rng);
        assert_eq!(r[(3, 2)], 99.2);
        assert!(c.iter().all(|&x| !x));

        let (c, r) = resolve_access(&s, &grant, &[true, true, false], &mut rng);
        assert_eq!(r[(3, 2)], 0.0);
        assert_eq!(c, vec![false, false, true]);

        let (c, r) = resolve_access(&s, &AccessGrant::default(), &[false; 3], &mut rng);
        assert!(c.iter().all(|&x| !x));
        assert!(r.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn loads_shipped_scenario() {
        let s = paper_scenario();
        assert_eq!((s.num_sus, s.num_bands), (4, 3));
        assert_eq!(s.idle_prob, vec![0.41, 0.17, 0.50]);
        assert_eq!(s.local_beta[(0, 1)], 0.93);
        assert_eq!(s.mean_rate[(3, 2)], 99.2);
        assert!(s.local_alpha.iter().all(|&a| a == 0.01));
        assert_eq!(s.collision_limit, 0.1);
        assert_eq!(Scenario::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn rejects_beta_not_above_alpha_with_line() {
        let text = include_str!("../../../scenarios/paper_sec7")
            .replace("0.16 0.70 0.78", "0.005 0.70 0.78");
        let err = Scenario::parse(&text).unwrap_err();
        let line = text.lines().position(|l| l.starts_with("0.005")).unwrap() + 1;
        match err {
            Error::Parse { line: got, msg } => {
                assert_eq!(got, line);
                assert!(msg.contains("beta"), "{msg}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_missing_section() {
        let text = include_str!("../../../scenarios/paper_sec7").replace("[mean_rate]", "[rates]");
        assert!(Scenario::parse(&text).is_err());
    }
}
