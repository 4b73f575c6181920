//! Hard-decision fusion at the FC.
//!
//! The Chair-Varshney statistic is a weighted vote of the local decisions,
//!
//! ```text
//! T(u) = Σ_i [ u_i · ln(β_i(1-α_i) / (α_i(1-β_i))) + ln((1-β_i)/(1-α_i)) ]
//! ```
//!
//! where `β_i` and `α_i` are the local detection and false-alarm
//! probabilities. Because `u` is binary, `T` takes at most `2^D` values and
//! its law under both hypotheses is computed exactly by enumeration. A
//! threshold on `T` alone can only hit a finite set of detection
//! probabilities; the randomized rule flips a biased coin on the threshold
//! atom so that any target in `(0, 1)` is met exactly.

/// Statistic values closer than this are treated as a single atom.
pub const MERGE_TOLERANCE: f64 = 1e-9;

/// Largest number of detectors whose decision vectors are enumerated.
pub const ENUMERATION_CAP: usize = 20;

use crate::error::{Error, Result};

/// Local operating points of the SUs feeding one fusion decision.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorProfile {
    betas: Vec<f64>,
    alphas: Vec<f64>,
}

impl DetectorProfile {
    pub fn new(betas: Vec<f64>, alphas: Vec<f64>) -> Result<Self> {
        if betas.len() != alphas.len() {
            return Err(Error::InvalidProfile(format!(
                "{} detection probabilities but {} false-alarm probabilities",
                betas.len(),
                alphas.len()
            )));
        }
        if betas.is_empty() {
            return Err(Error::InvalidProfile("no detectors".into()));
        }
        for (i, (&b, &a)) in betas.iter().zip(&alphas).enumerate() {
            let open_unit = |p: f64| p > 0.0 && p < 1.0;
            if !open_unit(b) || !open_unit(a) {
                return Err(Error::InvalidProfile(format!(
                    "detector {i}: probabilities must lie in (0,1), got beta={b}, alpha={a}"
                )));
            }
            if b <= a {
                return Err(Error::InvalidProfile(format!(
                    "detector {i}: beta={b} does not exceed alpha={a}"
                )));
            }
        }
        Ok(Self { betas, alphas })
    }

    /// `n` copies of the same detector.
    pub fn identical(n: usize, beta: f64, alpha: f64) -> Result<Self> {
        Self::new(vec![beta; n], vec![alpha; n])
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Vote weight of detector `i`; strictly positive for a valid profile.
    pub fn weight(&self, i: usize) -> f64 {
        let (b, a) = (self.betas[i], self.alphas[i]);
        (b * (1.0 - a) / (a * (1.0 - b))).ln()
    }

    /// Additive offset of detector `i`, incurred whatever it decides.
    pub fn offset(&self, i: usize) -> f64 {
        let (b, a) = (self.betas[i], self.alphas[i]);
        ((1.0 - b) / (1.0 - a)).ln()
    }
}

/// Binary local decisions, aligned with a [`DetectorProfile`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecisionVector(Vec<bool>);

impl DecisionVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Panics if any entry is not 0 or 1.
    pub fn from_bits(bits: &[u8]) -> Self {
        Self(
            bits.iter()
                .map(|&b| match b {
                    0 => false,
                    1 => true,
                    other => panic!("decision bit must be 0 or 1, got {other}"),
                })
                .collect(),
        )
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl From<Vec<bool>> for DecisionVector {
    fn from(bits: Vec<bool>) -> Self {
        Self(bits)
    }
}

/// One support point of the statistic with its probability under each
/// hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub value: f64,
    pub prob_h1: f64,
    pub prob_h0: f64,
}

/// Exact law of the fusion statistic under H1 (PU present) and H0 (idle).
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticDistribution {
    atoms: Vec<Atom>,
}

impl StatisticDistribution {
    /// Atoms sorted by strictly increasing value.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `(Pr{T > v | H1}, Pr{T > v | H0})` for the atom at `index`.
    fn tail_above(&self, index: usize) -> (f64, f64) {
        self.atoms[index + 1..]
            .iter()
            .rev()
            .fold((0.0, 0.0), |(h1, h0), a| (h1 + a.prob_h1, h0 + a.prob_h0))
    }
}

/// Threshold, tie-breaking coin bias and resulting false-alarm probability
/// of a randomized fusion rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionDesign {
    pub threshold: f64,
    pub rand_prob: f64,
    pub target_detection: f64,
    pub false_alarm: f64,
}

pub fn lrt_statistic(u: &DecisionVector, profile: &DetectorProfile) -> f64 {
    assert_eq!(
        u.len(),
        profile.len(),
        "decision vector length does not match detector profile"
    );
    u.bits()
        .iter()
        .enumerate()
        .map(|(i, &bit)| {
            let vote = if bit { profile.weight(i) } else { 0.0 };
            vote + profile.offset(i)
        })
        .sum()
}

pub fn statistic_distribution(profile: &DetectorProfile) -> Result<StatisticDistribution> {
    let d = profile.len();
    if d > ENUMERATION_CAP {
        return Err(Error::TooLarge {
            what: "detector profile",
            size: d,
            cap: ENUMERATION_CAP,
        });
    }
    let weights: Vec<f64> = (0..d).map(|i| profile.weight(i)).collect();
    let base: f64 = (0..d).map(|i| profile.offset(i)).sum();

    let mut raw: Vec<Atom> = (0u32..1 << d)
        .map(|mask| {
            let mut value = base;
            let (mut p1, mut p0) = (1.0, 1.0);
            for (i, &w) in weights.iter().enumerate() {
                let (b, a) = (profile.betas[i], profile.alphas[i]);
                if mask & (1 << i) != 0 {
                    value += w;
                    p1 *= b;
                    p0 *= a;
                } else {
                    p1 *= 1.0 - b;
                    p0 *= 1.0 - a;
                }
            }
            Atom {
                value,
                prob_h1: p1,
                prob_h0: p0,
            }
        })
        .collect();
    raw.sort_by(|x, y| x.value.total_cmp(&y.value));

    let mut atoms: Vec<Atom> = Vec::with_capacity(raw.len());
    for atom in raw {
        match atoms.last_mut() {
            Some(last) if atom.value - last.value <= MERGE_TOLERANCE => {
                last.prob_h1 += atom.prob_h1;
                last.prob_h0 += atom.prob_h0;
            }
            _ => atoms.push(atom),
        }
    }
    Ok(StatisticDistribution { atoms })
}

fn check_target(target_detection: f64) -> Result<()> {
    if target_detection > 0.0 && target_detection < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "target detection probability {target_detection} is outside (0,1)"
        )))
    }
}

/// Picks the lowest atom whose upper tail under H1 does not exceed the
/// target, then randomizes on that atom to make up the difference.
pub fn randomized_cv_design(
    profile: &DetectorProfile,
    target_detection: f64,
) -> Result<FusionDesign> {
    check_target(target_detection)?;
    let dist = statistic_distribution(profile)?;
    let atoms = dist.atoms();

    // Suffix sums from the top keep the tails accurate for small masses.
    let mut above_h1 = vec![0.0; atoms.len()];
    let mut above_h0 = vec![0.0; atoms.len()];
    for j in (0..atoms.len() - 1).rev() {
        above_h1[j] = above_h1[j + 1] + atoms[j + 1].prob_h1;
        above_h0[j] = above_h0[j + 1] + atoms[j + 1].prob_h0;
    }

    // The slack absorbs rounding when the target coincides with a tail.
    let j = above_h1
        .iter()
        .position(|&tail| tail <= target_detection + 1e-12)
        .expect("the top atom has an empty upper tail");
    let at = atoms[j];
    let rand_prob = if at.prob_h1 > 0.0 {
        ((target_detection - above_h1[j]) / at.prob_h1).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let false_alarm = (above_h0[j] + rand_prob * at.prob_h0).clamp(0.0, 1.0);

    Ok(FusionDesign {
        threshold: at.value,
        rand_prob,
        target_detection,
        false_alarm,
    })
}

/// False-alarm probability of the deterministic rule `T ≥ η̂`, i.e. the
/// randomized design with the coin always landing on "occupied".
pub fn nonrandomized_false_alarm(profile: &DetectorProfile, target_detection: f64) -> Result<f64> {
    let design = randomized_cv_design(profile, target_detection)?;
    let dist = statistic_distribution(profile)?;
    let j = dist
        .atoms()
        .iter()
        .position(|a| a.value == design.threshold)
        .expect("design threshold is an atom of the distribution");
    let (_, above_h0) = dist.tail_above(j);
    Ok((above_h0 + dist.atoms()[j].prob_h0).min(1.0))
}

/// Global decision (`true` = PU present). `coin` is a uniform draw in `[0,1)`
/// used only when the statistic lands on the threshold atom.
pub fn fuse(
    u: &DecisionVector,
    design: &FusionDesign,
    profile: &DetectorProfile,
    coin: f64,
) -> bool {
    let t = lrt_statistic(u, profile);
    if t > design.threshold + MERGE_TOLERANCE {
        true
    } else if t >= design.threshold - MERGE_TOLERANCE {
        coin < design.rand_prob
    } else {
        false
    }
}

/// Vote count `m` of the m-out-of-n rule minimizing the error sum for `d`
/// identical detectors and equally likely hypotheses.
pub fn majority_threshold(d: usize, alpha: f64, beta: f64) -> Result<usize> {
    if d == 0 {
        return Err(Error::InvalidArgument(
            "m-out-of-n rule needs at least one detector".into(),
        ));
    }
    // Validates the operating point.
    let profile = DetectorProfile::identical(1, beta, alpha)?;
    let m = (d as f64 * -profile.offset(0) / profile.weight(0)).ceil();
    Ok((m.max(1.0) as usize).min(d))
}

pub fn m_out_of_n_fuse(u: &DecisionVector, m: usize) -> bool {
    assert!(
        (1..=u.len()).contains(&m),
        "m = {m} outside 1..={}",
        u.len()
    );
    u.ones() >= m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_su() -> DetectorProfile {
        DetectorProfile::new(vec![0.9, 0.8], vec![0.1, 0.1]).unwrap()
    }

    /// Sums Bernoulli products directly over every decision vector,
    /// without going through the merged distribution.
    fn brute_tails(profile: &DetectorProfile, v: f64) -> [f64; 4] {
        let d = profile.len();
        let mut out = [0.0; 4]; // [>v H1, =v H1, >v H0, =v H0]
        for mask in 0u32..1 << d {
            let bits: Vec<bool> = (0..d).map(|i| mask & (1 << i) != 0).collect();
            let t = lrt_statistic(&DecisionVector::new(bits.clone()), profile);
            let (mut p1, mut p0) = (1.0, 1.0);
            for (i, &b) in bits.iter().enumerate() {
                p1 *= if b {
                    profile.betas()[i]
                } else {
                    1.0 - profile.betas()[i]
                };
                p0 *= if b {
                    profile.alphas()[i]
                } else {
                    1.0 - profile.alphas()[i]
                };
            }
            if (t - v).abs() <= MERGE_TOLERANCE {
                out[1] += p1;
                out[3] += p0;
            } else if t > v {
                out[0] += p1;
                out[2] += p0;
            }
        }
        out
    }

    #[test]
    fn statistic_of_all_zero_vector_is_sum_of_offsets() {
        let p = DetectorProfile::new(vec![0.7, 0.6, 0.95], vec![0.05, 0.2, 0.01]).unwrap();
        let expected = (0.3f64 / 0.95).ln() + (0.4f64 / 0.8).ln() + (0.05f64 / 0.99).ln();
        let t = lrt_statistic(&DecisionVector::from_bits(&[0, 0, 0]), &p);
        assert!((t - expected).abs() < 1e-12);
    }

    #[test]
    fn statistic_single_detector() {
        let p = DetectorProfile::identical(1, 0.9, 0.1).unwrap();
        let t = lrt_statistic(&DecisionVector::from_bits(&[1]), &p);
        assert!((t - 9f64.ln()).abs() < 1e-12);
        assert!((t - 2.1972).abs() < 1e-4);
    }

    #[test]
    fn statistic_two_detectors_term_by_term() {
        // ln(0.9·0.9/(0.1·0.1)) + ln(0.1/0.9) + ln(0.2/0.9) = ln(81·0.02/0.81) = ln 2
        let t = lrt_statistic(&DecisionVector::from_bits(&[1, 0]), &two_su());
        assert!((t - 2f64.ln()).abs() < 1e-12, "{t}");
    }

    #[test]
    #[should_panic(expected = "length")]
    fn statistic_length_mismatch_panics() {
        lrt_statistic(&DecisionVector::from_bits(&[1]), &two_su());
    }

    #[test]
    fn profile_rejects_beta_not_above_alpha() {
        assert!(matches!(
            DetectorProfile::new(vec![0.5, 0.1], vec![0.1, 0.1]),
            Err(Error::InvalidProfile(_))
        ));
        assert!(DetectorProfile::new(vec![0.5], vec![0.1, 0.2]).is_err());
        assert!(DetectorProfile::new(vec![], vec![]).is_err());
        assert!(DetectorProfile::new(vec![1.0], vec![0.1]).is_err());
    }

    #[test]
    fn weights_are_positive() {
        let p = DetectorProfile::new(vec![0.11, 0.5, 0.999], vec![0.1, 0.49, 0.001]).unwrap();
        assert!((0..3).all(|i| p.weight(i) > 0.0));
    }

    #[test]
    fn distribution_single_detector() {
        let dist =
            statistic_distribution(&DetectorProfile::identical(1, 0.9, 0.1).unwrap()).unwrap();
        let h1: Vec<f64> = dist.atoms().iter().map(|a| a.prob_h1).collect();
        let h0: Vec<f64> = dist.atoms().iter().map(|a| a.prob_h0).collect();
        assert_eq!(h1.len(), 2);
        assert!((h1[0] - 0.1).abs() < 1e-15 && (h1[1] - 0.9).abs() < 1e-15);
        assert!((h0[0] - 0.9).abs() < 1e-15 && (h0[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn distribution_two_detectors() {
        let dist = statistic_distribution(&two_su()).unwrap();
        let h1: Vec<f64> = dist.atoms().iter().map(|a| a.prob_h1).collect();
        let expected = [0.02, 0.08, 0.18, 0.72];
        assert_eq!(h1.len(), 4);
        for (got, want) in h1.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{h1:?}");
        }
    }

    #[test]
    fn identical_detectors_merge_to_binomial() {
        let (b, a) = (0.7, 0.2);
        let dist = statistic_distribution(&DetectorProfile::identical(3, b, a).unwrap()).unwrap();
        assert_eq!(dist.atoms().len(), 4);
        let binom = |p: f64, k: i32| {
            let c = [1.0, 3.0, 3.0, 1.0][k as usize];
            c * p.powi(k) * (1.0 - p).powi(3 - k)
        };
        for (k, atom) in dist.atoms().iter().enumerate() {
            assert!((atom.prob_h1 - binom(b, k as i32)).abs() < 1e-12);
            assert!((atom.prob_h0 - binom(a, k as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn distribution_enforces_cap() {
        let p = DetectorProfile::identical(ENUMERATION_CAP + 1, 0.6, 0.1).unwrap();
        assert!(matches!(
            statistic_distribution(&p),
            Err(Error::TooLarge {
                size: 21,
                cap: 20,
                ..
            })
        ));
    }

    #[test]
    fn design_single_detector_hits_its_operating_point() {
        let p = DetectorProfile::identical(1, 0.9, 0.1).unwrap();
        let d = randomized_cv_design(&p, 0.9).unwrap();
        assert!((d.false_alarm - 0.1).abs() < 1e-12);
        // Whichever atom carries the threshold, u=1 always fires and u=0 never does.
        for coin in [0.0, 0.5, 0.999_999] {
            assert!(fuse(&DecisionVector::from_bits(&[1]), &d, &p, coin));
            assert!(!fuse(&DecisionVector::from_bits(&[0]), &d, &p, coin));
        }
    }

    #[test]
    fn design_two_detectors_matches_enumeration() {
        let p = two_su();
        let d = randomized_cv_design(&p, 0.85).unwrap();
        let eta = lrt_statistic(&DecisionVector::from_bits(&[1, 0]), &p);
        assert!((d.threshold - eta).abs() < 1e-12);
        let [gt1, eq1, gt0, eq0] = brute_tails(&p, d.threshold);
        assert!((gt1 - 0.72).abs() < 1e-12);
        assert!((eq1 - 0.18).abs() < 1e-12);
        assert!((gt0 - 0.01).abs() < 1e-12);
        assert!((eq0 - 0.09).abs() < 1e-12);
        assert!((d.rand_prob - 13.0 / 18.0).abs() < 1e-12);
        assert!((d.false_alarm - 0.075).abs() < 1e-12);
    }

    #[test]
    fn design_target_on_a_tail_needs_no_randomization() {
        let p = two_su();
        // Pr{T > T(1,0) | H1} = 0.72
        let d = randomized_cv_design(&p, 0.72).unwrap();
        assert!(d.rand_prob.abs() < 1e-12, "{d:?}");
        assert!((d.false_alarm - 0.01).abs() < 1e-12);
    }

    #[test]
    fn design_rejects_target_outside_unit_interval() {
        for t in [0.0, 1.0, -0.2, 1.5] {
            assert!(randomized_cv_design(&two_su(), t).is_err());
        }
    }

    #[test]
    fn nonrandomized_false_alarm_cases() {
        let p = two_su();
        let tilde = nonrandomized_false_alarm(&p, 0.85).unwrap();
        assert!((tilde - 0.10).abs() < 1e-12);
        assert!(tilde >= randomized_cv_design(&p, 0.85).unwrap().false_alarm);

        // ρ = 0: the gap is the whole H0 mass of the threshold atom.
        let d = randomized_cv_design(&p, 0.72).unwrap();
        let tilde = nonrandomized_false_alarm(&p, 0.72).unwrap();
        assert!((tilde - d.false_alarm - 0.09).abs() < 1e-12);

        // ρ = 1: target equals the tail including the threshold atom.
        let d = randomized_cv_design(&p, 0.9).unwrap();
        let tilde = nonrandomized_false_alarm(&p, 0.9).unwrap();
        let [_, _, gt0, eq0] = brute_tails(&p, d.threshold);
        assert!((tilde - (gt0 + eq0)).abs() < 1e-12);
        assert!(tilde + 1e-12 >= d.false_alarm);
    }

    #[test]
    fn fuse_branches() {
        let p = two_su();
        let d = randomized_cv_design(&p, 0.85).unwrap();
        for coin in [0.0, 0.5, 0.99] {
            assert!(fuse(&DecisionVector::from_bits(&[1, 1]), &d, &p, coin));
            assert!(!fuse(&DecisionVector::from_bits(&[0, 1]), &d, &p, coin));
            assert!(!fuse(&DecisionVector::from_bits(&[0, 0]), &d, &p, coin));
        }
        let tie = DecisionVector::from_bits(&[1, 0]);
        assert!(fuse(&tie, &d, &p, 0.5));
        assert!(!fuse(&tie, &d, &p, 0.8));
    }

    #[test]
    fn majority_threshold_examples() {
        assert_eq!(majority_threshold(2, 0.01, 0.505).unwrap(), 1);
        assert_eq!(majority_threshold(4, 0.1, 0.55).unwrap(), 2);
        for (a, b) in [(0.01, 0.5), (0.3, 0.99), (0.2, 0.21)] {
            assert_eq!(majority_threshold(1, a, b).unwrap(), 1);
        }
        assert!(majority_threshold(3, 0.5, 0.4).is_err());
        assert!(majority_threshold(0, 0.1, 0.5).is_err());
    }

    #[test]
    fn m_out_of_n_examples() {
        assert!(m_out_of_n_fuse(&DecisionVector::from_bits(&[1, 0]), 1));
        assert!(!m_out_of_n_fuse(&DecisionVector::from_bits(&[1, 0, 1]), 3));
        assert!(m_out_of_n_fuse(
            &DecisionVector::from_bits(&[1, 1, 0, 0]),
            2
        ));
    }

    #[test]
    #[should_panic]
    fn m_out_of_range_panics() {
        m_out_of_n_fuse(&DecisionVector::from_bits(&[1, 0]), 3);
    }
}
