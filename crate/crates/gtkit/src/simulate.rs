//! End-to-end group-testing simulation: sample a defective set, OR its
//! columns into an outcome vector, decode by containment, score exact
//! recovery.

use thiserror::Error;

use crate::concat::BinaryTestMatrix;
use crate::rng::{binomial_count, substream, Combinations, SubsetSampler};
use crate::stats::clopper_pearson;

/// Exhaustive simulation enumerates every defective set up to this count.
pub const EXHAUSTIVE_TRIAL_CAP: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("item index {index} out of range for N = {items}")]
    IndexOutOfRange { index: usize, items: usize },
    #[error("invalid inputs: {0}")]
    InvalidInputs(String),
    #[error("C(N, t) = {subsets} defective sets is too many to enumerate")]
    TooManySubsets { subsets: u128 },
}

/// Which defective-set sizes the trials draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefectiveModel {
    /// Exactly t defectives per trial (the guarantee under test).
    ExactlyT,
    /// A uniformly chosen size in 0..=t, then a uniform set of that size.
    UpToT,
}

/// Pooled test outcomes: the bitwise OR of the defective columns.
/// The empty set yields the all-zero vector.
pub fn run_tests(a: &BinaryTestMatrix, defectives: &[usize]) -> Result<Vec<u64>, SimulateError> {
    let mut outcome = vec![0u64; a.words_per_col()];
    for &d in defectives {
        if d >= a.items() {
            return Err(SimulateError::IndexOutOfRange {
                index: d,
                items: a.items(),
            });
        }
        for (o, &w) in outcome.iter_mut().zip(a.column(d)) {
            *o |= w;
        }
    }
    Ok(outcome)
}

/// Rows (as indices) set in an outcome vector; convenience for reports.
pub fn outcome_support(a: &BinaryTestMatrix, outcome: &[u64]) -> Vec<usize> {
    (0..a.tests())
        .filter(|&r| outcome[r / 64] >> (r % 64) & 1 == 1)
        .collect()
}

/// The naive cover decoder: report every item whose column support lies
/// inside the outcome support, i.e. items hit by no negative test. Exact
/// on a t-disjunct matrix whenever at most t items are defective.
pub fn cover_decode(a: &BinaryTestMatrix, outcome: &[u64]) -> Vec<usize> {
    assert_eq!(outcome.len(), a.words_per_col(), "outcome length mismatch");
    (0..a.items())
        .filter(|&j| a.column(j).iter().zip(outcome).all(|(&c, &o)| c & !o == 0))
        .collect()
}

/// Decoding success statistics over sampled defective sets.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    /// Decoded set was a strict superset of the truth.
    pub superset_misses: u64,
    /// Decoded set failed to contain the truth; structurally impossible
    /// for the cover decoder, tallied as a cross-check.
    pub soundness_violations: u64,
    pub exhaustive: bool,
    pub provenance: Option<String>,
}

impl TrialReport {
    /// One machine-readable line:
    /// `trials successes rate ci_low ci_high superset_misses seed`.
    pub fn report_line(&self) -> String {
        format!(
            "{} {} {} {} {} {} {}",
            self.trials,
            self.successes,
            self.rate,
            self.ci_low,
            self.ci_high,
            self.superset_misses,
            self.seed
        )
    }

    /// Human-readable companion to `report_line`.
    pub fn summary(&self) -> String {
        let how = if self.exhaustive {
            "all defective sets enumerated".to_string()
        } else {
            format!("seed {}", self.seed)
        };
        format!(
            "exact recovery in {}/{} trials (rate {:.4}, 95% CI [{:.4}, {:.4}]), {} superset misses, {how}",
            self.successes, self.trials, self.rate, self.ci_low, self.ci_high,
            self.superset_misses
        )
    }
}

struct Tally {
    successes: u64,
    superset_misses: u64,
    soundness_violations: u64,
}

fn score(a: &BinaryTestMatrix, defectives: &[usize], tally: &mut Tally) {
    let outcome = run_tests(a, defectives).expect("sampled indices are in range");
    let decoded = cover_decode(a, &outcome);
    let mut truth = defectives.to_vec();
    truth.sort_unstable();
    if decoded == truth {
        tally.successes += 1;
    } else if truth.iter().all(|d| decoded.binary_search(d).is_ok()) {
        tally.superset_misses += 1;
    } else {
        tally.soundness_violations += 1;
    }
}

/// Monte-Carlo decoding success over uniformly drawn defective sets of
/// size exactly t. Deterministic per (matrix, t, trials, seed): trial i
/// uses the (seed, i) substream regardless of thread count.
pub fn simulate_success(
    a: &BinaryTestMatrix,
    t: usize,
    trials: u64,
    seed: u64,
) -> Result<TrialReport, SimulateError> {
    simulate_success_opts(a, t, trials, seed, DefectiveModel::ExactlyT, 1)
}

pub fn simulate_success_opts(
    a: &BinaryTestMatrix,
    t: usize,
    trials: u64,
    seed: u64,
    model: DefectiveModel,
    threads: usize,
) -> Result<TrialReport, SimulateError> {
    if t >= a.items() {
        return Err(SimulateError::InvalidInputs(format!(
            "t = {t} must be below N = {}",
            a.items()
        )));
    }
    if trials < 1 {
        return Err(SimulateError::InvalidInputs("trials must be >= 1".into()));
    }

    let run_range = |range: std::ops::Range<u64>| -> Tally {
        let mut tally = Tally {
            successes: 0,
            superset_misses: 0,
            soundness_violations: 0,
        };
        let mut sampler = SubsetSampler::new(a.items());
        let mut defectives = Vec::with_capacity(t);
        for trial in range {
            let mut rng = substream(seed, trial);
            let size = match model {
                DefectiveModel::ExactlyT => t,
                DefectiveModel::UpToT => rng.below(t as u64 + 1) as usize,
            };
            sampler.sample(&mut rng, size, &mut defectives);
            score(a, &defectives, &mut tally);
        }
        tally
    };

    let tally = if threads <= 1 {
        run_range(0..trials)
    } else {
        let threads = threads.min(trials as usize).max(1);
        let chunk = trials.div_ceil(threads as u64);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for i in 0..threads as u64 {
                let lo = i * chunk;
                let hi = ((i + 1) * chunk).min(trials);
                if lo >= hi {
                    break;
                }
                let f = &run_range;
                handles.push(scope.spawn(move || f(lo..hi)));
            }
            handles.into_iter().fold(
                Tally {
                    successes: 0,
                    superset_misses: 0,
                    soundness_violations: 0,
                },
                |mut acc, h| {
                    let t = h.join().unwrap();
                    acc.successes += t.successes;
                    acc.superset_misses += t.superset_misses;
                    acc.soundness_violations += t.soundness_violations;
                    acc
                },
            )
        })
    };

    let rate = tally.successes as f64 / trials as f64;
    let (lo, hi) = clopper_pearson(trials - tally.successes, trials, 0.95);
    Ok(TrialReport {
        trials,
        successes: tally.successes,
        rate,
        // Clopper-Pearson bounds the failure rate; flip for success.
        ci_low: 1.0 - hi,
        ci_high: 1.0 - lo,
        seed,
        superset_misses: tally.superset_misses,
        soundness_violations: tally.soundness_violations,
        exhaustive: false,
        provenance: a.provenance().map(str::to_owned),
    })
}

/// Exact success fraction by enumerating every size-t defective set.
pub fn simulate_success_exhaustive(
    a: &BinaryTestMatrix,
    t: usize,
) -> Result<TrialReport, SimulateError> {
    if t >= a.items() {
        return Err(SimulateError::InvalidInputs(format!(
            "t = {t} must be below N = {}",
            a.items()
        )));
    }
    let subsets = binomial_count(a.items() as u64, t as u64);
    if subsets > EXHAUSTIVE_TRIAL_CAP {
        return Err(SimulateError::TooManySubsets { subsets });
    }
    let mut tally = Tally {
        successes: 0,
        superset_misses: 0,
        soundness_violations: 0,
    };
    let mut combos = Combinations::new(a.items(), t);
    let mut count = 0u64;
    while let Some(subset) = combos.next() {
        score(a, subset, &mut tally);
        count += 1;
    }
    let rate = tally.successes as f64 / count as f64;
    Ok(TrialReport {
        trials: count,
        successes: tally.successes,
        rate,
        ci_low: rate,
        ci_high: rate,
        seed: 0,
        superset_misses: tally.superset_misses,
        soundness_violations: tally.soundness_violations,
        exhaustive: true,
        provenance: a.provenance().map(str::to_owned),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concat::Strictness;
    use crate::disjunct::{exact_disjunct_check, DEFAULT_CHECK_BUDGET};

    fn identity(n: usize) -> BinaryTestMatrix {
        let supports: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        BinaryTestMatrix::from_supports(n, &supports, Strictness::Strict).unwrap()
    }

    fn six_by_three_ks() -> BinaryTestMatrix {
        BinaryTestMatrix::from_supports(
            6,
            &[vec![0, 3], vec![1, 5], vec![2, 4]],
            Strictness::Strict,
        )
        .unwrap()
    }

    #[test]
    fn outcome_examples() {
        let id = identity(3);
        let out = run_tests(&id, &[0, 2]).unwrap();
        assert_eq!(outcome_support(&id, &out), vec![0, 2]);
        assert_eq!(run_tests(&id, &[]).unwrap(), vec![0u64]);

        let ks = six_by_three_ks();
        let out = run_tests(&ks, &[0, 1]).unwrap();
        assert_eq!(outcome_support(&ks, &out), vec![0, 1, 3, 5]);

        assert!(matches!(
            run_tests(&id, &[3]),
            Err(SimulateError::IndexOutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn decode_examples() {
        let id = identity(3);
        let out = run_tests(&id, &[0, 2]).unwrap();
        assert_eq!(cover_decode(&id, &out), vec![0, 2]);

        // All-ones outcome: everything is consistent.
        let all = vec![u64::MAX; id.words_per_col()];
        assert_eq!(cover_decode(&id, &all), vec![0, 1, 2]);

        let ks = six_by_three_ks();
        let out = run_tests(&ks, &[0, 1]).unwrap();
        assert_eq!(cover_decode(&ks, &out), vec![0, 1]);
    }

    #[test]
    fn disjunct_matrix_always_recovers() {
        let id = identity(5);
        assert!(
            exact_disjunct_check(&id, 2, DEFAULT_CHECK_BUDGET)
                .unwrap()
                .disjunct
        );
        let report = simulate_success(&id, 2, 300, 99).unwrap();
        assert_eq!(report.successes, 300);
        assert_eq!(report.rate, 1.0);
        assert_eq!(report.soundness_violations, 0);

        let exact = simulate_success_exhaustive(&id, 2).unwrap();
        assert_eq!(exact.trials, 10);
        assert_eq!(exact.rate, 1.0);
    }

    #[test]
    fn exhaustive_rate_matches_bad_fraction() {
        // c3 = c1 | c2: decoding {c1, c2} also reports c3.
        let m = BinaryTestMatrix::from_supports(
            4,
            &[vec![0, 1], vec![2, 3], vec![1, 2]],
            Strictness::Strict,
        )
        .unwrap();
        let exact = simulate_success_exhaustive(&m, 2).unwrap();
        // Of the 3 pairs, only {c1, c2} fails (superset), and {c1,c3},
        // {c2,c3} decode exactly.
        assert_eq!(exact.trials, 3);
        assert_eq!(exact.successes, 2);
        assert_eq!(exact.superset_misses, 1);
        assert!((exact.rate - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn soundness_holds_on_arbitrary_matrices() {
        // Random-ish supports, possibly duplicated: the decoder must never
        // drop a true defective.
        let supports: Vec<Vec<usize>> = (0..20)
            .map(|i| {
                let mut s = vec![(i * 3) % 10, (i * 7 + 1) % 10, (i + 5) % 10];
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        let m = BinaryTestMatrix::from_supports(10, &supports, Strictness::Lenient).unwrap();
        let report = simulate_success(&m, 3, 2000, 5).unwrap();
        assert_eq!(report.soundness_violations, 0);
    }

    #[test]
    fn determinism_and_thread_invariance() {
        let m = identity(12);
        let a = simulate_success(&m, 3, 500, 7).unwrap();
        let b = simulate_success(&m, 3, 500, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate_success_opts(&m, 3, 500, 7, DefectiveModel::ExactlyT, 4).unwrap();
        assert_eq!(a.successes, c.successes);
        assert_eq!(a.superset_misses, c.superset_misses);
    }

    #[test]
    fn report_lines_render_both_forms() {
        let report = simulate_success(&identity(6), 2, 50, 3).unwrap();
        assert_eq!(report.report_line().split_whitespace().count(), 7);
        let human = report.summary();
        assert!(human.contains("50/50"), "{human}");
        assert!(human.contains("seed 3"), "{human}");
    }

    #[test]
    fn up_to_t_model_runs() {
        let m = identity(8);
        let report = simulate_success_opts(&m, 3, 400, 11, DefectiveModel::UpToT, 1).unwrap();
        assert_eq!(report.trials, 400);
        assert_eq!(report.successes, 400, "identity decodes any small set");
    }
}
