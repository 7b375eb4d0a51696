//! Associative recall: store patterns, present an input, read the attractor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{bitwise_accuracy, distort, full_recall};
use super::{mean, trial_seed, Hardware};
use crate::bits::{bits_to_string, from_code, hamming};
use crate::network::{train_hebbian, TrialReport};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternSource {
    Fixed(Vec<Vec<bool>>),
    /// Fresh random patterns per trial, no two equal or complementary.
    Random { count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialPlan {
    Random { trials: usize },
    /// Every stored pattern (for a single random pattern: all `2^n`) against
    /// every one of the `2^n` inputs.
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallSpec {
    pub n: usize,
    pub patterns: PatternSource,
    pub plan: TrialPlan,
    /// Present a distorted stored pattern instead of a uniform random input.
    pub distortion: Option<f64>,
    pub normalize: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallTrial {
    pub index: usize,
    pub patterns: Vec<String>,
    pub input: String,
    pub bitwise_accuracy: f64,
    pub full_recall: bool,
    pub report: Option<TrialReport>,
    pub fault: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallStats {
    pub n: usize,
    pub n_patterns: usize,
    pub trials: usize,
    pub full_recall_rate: f64,
    pub bitwise_accuracy: f64,
    pub convergence_rate: f64,
    /// Mean over converged trials, s.
    pub mean_t_converge: f64,
    /// J
    pub mean_energy: f64,
    pub mean_chargeup_share: f64,
    pub faults: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallOutcome {
    pub stats: RecallStats,
    pub trials: Vec<RecallTrial>,
}

struct TrialSetup {
    patterns: Vec<Vec<bool>>,
    input: Vec<bool>,
}

fn random_patterns(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<bool>> {
    let mut out: Vec<Vec<bool>> = Vec::with_capacity(count);
    while out.len() < count {
        let p: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        if out.iter().all(|q| {
            let d = hamming(&p, q);
            d != 0 && d != n
        }) {
            out.push(p);
        }
    }
    out
}

fn plan_trials(spec: &RecallSpec) -> Result<Vec<TrialSetup>> {
    let n = spec.n;
    match (&spec.plan, &spec.patterns) {
        (TrialPlan::Exhaustive, source) => {
            if n > 12 {
                return Err(Error::param(format!("exhaustive recall is limited to 12 neurons, got {n}")));
            }
            let sets: Vec<Vec<Vec<bool>>> = match source {
                PatternSource::Fixed(ps) => vec![ps.clone()],
                PatternSource::Random { count: 1 } => (0..1u64 << n).map(|c| vec![from_code(c, n)]).collect(),
                PatternSource::Random { count } => {
                    return Err(Error::param(format!(
                        "exhaustive recall enumerates single patterns only, got {count} random patterns"
                    )))
                }
            };
            Ok(sets
                .into_iter()
                .flat_map(|patterns| {
                    (0..1u64 << n).map(move |c| TrialSetup { patterns: patterns.clone(), input: from_code(c, n) })
                })
                .collect())
        }
        (TrialPlan::Random { trials }, source) => (0..*trials)
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(spec.seed, t as u64));
                let patterns = match source {
                    PatternSource::Fixed(ps) => ps.clone(),
                    PatternSource::Random { count } => random_patterns(n, *count, &mut rng),
                };
                let input = match spec.distortion {
                    Some(f) => {
                        let which = rng.random_range(0..patterns.len());
                        distort(&patterns[which], f, rng.random())?
                    }
                    None => (0..n).map(|_| rng.random()).collect(),
                };
                Ok(TrialSetup { patterns, input })
            })
            .collect(),
    }
}

fn validate(spec: &RecallSpec) -> Result<()> {
    if spec.n < 2 {
        return Err(Error::param(format!("recall needs at least 2 neurons, got {}", spec.n)));
    }
    match &spec.patterns {
        PatternSource::Fixed(ps) => {
            if ps.is_empty() || ps.iter().any(|p| p.len() != spec.n) {
                return Err(Error::param(format!("stored patterns must be non-empty with {} bits", spec.n)));
            }
        }
        PatternSource::Random { count } => {
            // distinct up to inversion
            let available = if spec.n >= 64 { u64::MAX } else { 1u64 << (spec.n - 1) };
            if *count == 0 || *count as u64 > available {
                return Err(Error::param(format!("cannot draw {count} distinct patterns of {} bits", spec.n)));
            }
        }
    }
    if let TrialPlan::Random { trials: 0 } = spec.plan {
        return Err(Error::param("at least one trial is required"));
    }
    Ok(())
}

pub fn recall_experiment(spec: &RecallSpec, hw: &Hardware) -> Result<RecallOutcome> {
    validate(spec)?;
    let setups = plan_trials(spec)?;
    let trials: Vec<RecallTrial> = setups
        .into_par_iter()
        .enumerate()
        .map(|(index, setup)| {
            let weights = train_hebbian(&setup.patterns, hw.w_mag, spec.normalize)?;
            let (report, fault) = match hw.run_trial(weights, Some(&setup.input)) {
                Ok(r) => (Some(r), None),
                Err(e @ Error::NumericFault { .. }) => (None, Some(e.to_string())),
                Err(e) => return Err(e),
            };
            let (acc, full) = report.as_ref().map_or((0.0, false), |r| {
                (bitwise_accuracy(&r.final_bits, &setup.patterns), full_recall(&r.final_bits, &setup.patterns))
            });
            Ok(RecallTrial {
                index,
                patterns: setup.patterns.iter().map(|p| bits_to_string(p)).collect(),
                input: bits_to_string(&setup.input),
                bitwise_accuracy: acc,
                full_recall: full,
                report,
                fault,
            })
        })
        .collect::<Result<_>>()?;

    let count = trials.len();
    let reports = || trials.iter().filter_map(|t| t.report.as_ref());
    let stats = RecallStats {
        n: spec.n,
        n_patterns: match &spec.patterns {
            PatternSource::Fixed(ps) => ps.len(),
            PatternSource::Random { count } => *count,
        },
        trials: count,
        full_recall_rate: trials.iter().filter(|t| t.full_recall).count() as f64 / count as f64,
        bitwise_accuracy: mean(trials.iter().map(|t| t.bitwise_accuracy)),
        convergence_rate: reports().filter(|r| r.converged).count() as f64 / count as f64,
        mean_t_converge: mean(reports().filter(|r| r.converged).map(|r| r.t_converge)),
        mean_energy: mean(reports().map(|r| r.energy_total)),
        mean_chargeup_share: mean(reports().map(|r| r.chargeup_energy_share())),
        faults: trials.iter().filter(|t| t.fault.is_some()).count(),
    };
    Ok(RecallOutcome { stats, trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_patterns_are_distinct_up_to_inversion() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ps = random_patterns(3, 4, &mut rng);
        for (a, p) in ps.iter().enumerate() {
            for q in &ps[a + 1..] {
                let d = hamming(p, q);
                assert!(d != 0 && d != 3);
            }
        }
    }

    #[test]
    fn spec_validation() {
        let hw = Hardware::default();
        let mut spec = RecallSpec {
            n: 3,
            patterns: PatternSource::Random { count: 5 },
            plan: TrialPlan::Random { trials: 1 },
            distortion: None,
            normalize: false,
            seed: 0,
        };
        assert!(recall_experiment(&spec, &hw).is_err());
        spec.patterns = PatternSource::Random { count: 2 };
        spec.plan = TrialPlan::Exhaustive;
        assert!(recall_experiment(&spec, &hw).is_err());
        spec.plan = TrialPlan::Random { trials: 0 };
        assert!(recall_experiment(&spec, &hw).is_err());
    }

    #[test]
    fn exhaustive_three_neurons_recall_everything() {
        let spec = RecallSpec {
            n: 3,
            patterns: PatternSource::Random { count: 1 },
            plan: TrialPlan::Exhaustive,
            distortion: None,
            normalize: false,
            seed: 0,
        };
        let out = recall_experiment(&spec, &Hardware::default()).unwrap();
        assert_eq!(out.stats.trials, 64);
        assert_eq!(out.stats.full_recall_rate, 1.0);
        assert!(out.stats.bitwise_accuracy >= out.stats.full_recall_rate);
    }

    #[test]
    fn same_seed_same_statistics() {
        let spec = RecallSpec {
            n: 6,
            patterns: PatternSource::Random { count: 2 },
            plan: TrialPlan::Random { trials: 6 },
            distortion: Some(0.2),
            normalize: false,
            seed: 77,
        };
        let hw = Hardware::default();
        let a = recall_experiment(&spec, &hw).unwrap();
        let b = recall_experiment(&spec, &hw).unwrap();
        assert_eq!(a, b);
    }
}
