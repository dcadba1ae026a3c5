//! Disjunctness: exact t-disjunct checking, Monte-Carlo estimation of the
//! relaxed type-1/type-2 properties, the minimum-distance and
//! average-distance calculators for the largest safe t, and the
//! concentration tail bound those calculators rearrange.
//!
//! Type-2 checking uses the private-row formulation: in a (t+1)-column
//! submatrix, every member keeps a row where it alone has a 1 iff those
//! rows (one per member, necessarily distinct) form a (t+1)x(t+1)
//! permutation submatrix. The two statements pick out the same subsets,
//! and the private-row form runs in O((t+1) * M/64) per subset.

use num_rational::Ratio;
use thiserror::Error;

use crate::codes::ProfileMode;
use crate::concat::BinaryTestMatrix;
use crate::rng::{binomial_count, substream, Combinations, SubsetSampler};
use crate::stats::clopper_pearson;

/// Exhaustive enumeration replaces sampling below this many subsets.
pub const EXHAUSTIVE_SUBSET_CAP: u128 = 1_000_000;

/// Default budget for exact disjunctness checks, in word operations.
pub const DEFAULT_CHECK_BUDGET: u64 = 20_000_000_000;

#[derive(Debug, Error)]
pub enum DisjunctError {
    #[error("exact check needs ~{needed} word ops, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("columns do not share a common weight")]
    WeightMismatch,
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid inputs: {0}")]
    InvalidInputs(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisjunctKind {
    Type1,
    Type2,
}

impl std::fmt::Display for DisjunctKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DisjunctKind::Type1 => write!(f, "type1"),
            DisjunctKind::Type2 => write!(f, "type2"),
        }
    }
}

/// Outcome of the Kautz-Singleton minimum-distance rule: either a finite
/// guaranteed t or "unbounded" when supports cannot overlap enough
/// (pairwise-disjoint columns).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TBound {
    Bounded(u64),
    Unbounded,
}

/// Guaranteed exact disjunctness from weight and minimum distance:
/// floor((w-1) / (w - d/2)), with d/2 kept rational.
pub fn min_distance_t(w: u64, d: u64) -> TBound {
    if d >= 2 * w {
        TBound::Unbounded
    } else {
        TBound::Bounded(2 * (w - 1) / (2 * w - d))
    }
}

/// Inputs for the average-distance bound: column weight, binary minimum
/// and average distance, matrix width, and the target failure fraction.
#[derive(Debug, Clone, Copy)]
pub struct AvgDistanceInputs {
    pub weight: u32,
    pub min_distance: u32,
    pub avg_distance: f64,
    pub items: u64,
    pub epsilon: f64,
}

impl AvgDistanceInputs {
    pub fn new(
        weight: u32,
        min_distance: u32,
        avg_distance: f64,
        items: u64,
        epsilon: f64,
    ) -> Result<AvgDistanceInputs, DisjunctError> {
        if weight < 1 {
            return Err(DisjunctError::InvalidInputs("weight must be >= 1".into()));
        }
        if !(min_distance as f64 <= avg_distance && avg_distance <= 2.0 * weight as f64) {
            return Err(DisjunctError::InvalidInputs(format!(
                "need d <= D <= 2w, got d={min_distance}, D={avg_distance}, w={weight}"
            )));
        }
        if items < 3 {
            return Err(DisjunctError::InvalidInputs("need at least 3 items".into()));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(DisjunctError::InvalidInputs(
                "epsilon must lie in (0, 1)".into(),
            ));
        }
        Ok(AvgDistanceInputs {
            weight,
            min_distance,
            avg_distance,
            items,
            epsilon,
        })
    }
}

/// Largest t with alpha(t) sqrt(t ln(2(t+1)/eps)) <= (w-1-t(w-D/2))/(w-d/2),
/// where alpha(t) = sqrt(2) (1 + t/(N-1)); the type-1 variant replaces
/// 2(t+1) by 2(N-t). Returns 0 when no t >= 1 qualifies.
pub fn avg_distance_max_t(
    inputs: &AvgDistanceInputs,
    kind: DisjunctKind,
) -> Result<u64, DisjunctError> {
    let w = inputs.weight as f64;
    let half_gap = w - inputs.min_distance as f64 / 2.0;
    if half_gap <= 0.0 {
        return Err(DisjunctError::DegenerateGeometry(
            "w - d/2 <= 0: supports are pairwise disjoint, t is unbounded".into(),
        ));
    }
    let n = inputs.items as f64;
    let mean_overlap = w - inputs.avg_distance / 2.0;
    let mut best = 0u64;
    let mut t = 1u64;
    while t < inputs.items {
        let tf = t as f64;
        let rhs = (w - 1.0 - tf * mean_overlap) / half_gap;
        if rhs <= 0.0 {
            break;
        }
        let arg = match kind {
            DisjunctKind::Type2 => 2.0 * (tf + 1.0) / inputs.epsilon,
            DisjunctKind::Type1 => 2.0 * (n - tf) / inputs.epsilon,
        };
        let lhs = 2f64.sqrt() * (1.0 + tf / (n - 1.0)) * (tf * arg.ln()).sqrt();
        if lhs <= rhs {
            best = t;
        }
        t += 1;
    }
    Ok(best)
}

/// The concentration bound behind `avg_distance_max_t`:
/// 2(t+1) exp(-(w-1-t(w-D/2))^2 / (2t (w-d/2)^2 (1+(t-1)/(N-2))^2)),
/// clamped to [0, 1].
pub fn azuma_tail_bound(
    w: u32,
    d: u32,
    avg_distance: f64,
    items: u64,
    t: u64,
) -> Result<f64, DisjunctError> {
    if t < 1 || items < 3 {
        return Err(DisjunctError::InvalidInputs(
            "need t >= 1 and N >= 3".into(),
        ));
    }
    let wf = w as f64;
    let half_gap = wf - d as f64 / 2.0;
    if half_gap <= 0.0 {
        return Err(DisjunctError::DegenerateGeometry("w - d/2 <= 0".into()));
    }
    let nu = wf - 1.0 - t as f64 * (wf - avg_distance / 2.0);
    if nu <= 0.0 {
        return Err(DisjunctError::DegenerateGeometry(format!(
            "nu = w-1-t(w-D/2) = {nu} must be positive"
        )));
    }
    let c = 1.0 + (t as f64 - 1.0) / (items as f64 - 2.0);
    let exponent = -nu * nu / (2.0 * t as f64 * half_gap * half_gap * c * c);
    Ok((2.0 * (t as f64 + 1.0) * exponent.exp()).clamp(0.0, 1.0))
}

/// Witness that a matrix is not t-disjunct: the union of `covering`
/// contains the support of `victim`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub covering: Vec<usize>,
    pub victim: usize,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub disjunct: bool,
    pub witness: Option<Witness>,
}

/// Exhaustive t-disjunct check over all C(N, t) subsets, lexicographic
/// order, stopping at the first witness.
pub fn exact_disjunct_check(
    a: &BinaryTestMatrix,
    t: usize,
    budget: u64,
) -> Result<CheckOutcome, DisjunctError> {
    let n = a.items();
    if t >= n {
        return Err(DisjunctError::InvalidInputs(format!(
            "t = {t} must be below N = {n}"
        )));
    }
    let wpc = a.words_per_col() as u128;
    let needed = binomial_count(n as u64, t as u64)
        .saturating_mul((n - t) as u128)
        .saturating_mul(wpc);
    if needed > budget as u128 {
        return Err(DisjunctError::BudgetExceeded { needed, budget });
    }

    let wpc = a.words_per_col();
    let mut union = vec![0u64; wpc];
    let mut combos = Combinations::new(n, t);
    let mut member = vec![false; n];
    while let Some(subset) = combos.next() {
        union.iter_mut().for_each(|w| *w = 0);
        for &j in subset {
            for (u, &w) in union.iter_mut().zip(a.column(j)) {
                *u |= w;
            }
            member[j] = true;
        }
        let mut found = None;
        for (v, &is_member) in member.iter().enumerate() {
            if is_member {
                continue;
            }
            if covered(a.column(v), &union) {
                found = Some(v);
                break;
            }
        }
        for &j in subset {
            member[j] = false;
        }
        if let Some(victim) = found {
            return Ok(CheckOutcome {
                disjunct: false,
                witness: Some(Witness {
                    covering: subset.to_vec(),
                    victim,
                }),
            });
        }
    }
    Ok(CheckOutcome {
        disjunct: true,
        witness: None,
    })
}

#[inline]
fn covered(col: &[u64], union: &[u64]) -> bool {
    col.iter().zip(union).all(|(c, u)| c & !u == 0)
}

/// A Monte-Carlo (or, for small subset spaces, exhaustive) estimate of the
/// failure fraction, with an exact binomial confidence interval.
#[derive(Debug, Clone)]
pub struct DisjunctEstimate {
    pub kind: DisjunctKind,
    pub t: usize,
    pub samples: u64,
    pub failures: u64,
    pub epsilon_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    /// True when every subset was enumerated; the interval then collapses
    /// onto the exact value.
    pub exhaustive: bool,
}

impl DisjunctEstimate {
    /// One machine-readable line:
    /// `kind t samples failures epsilon_hat ci_low ci_high seed`.
    pub fn report_line(&self) -> String {
        format!(
            "{} {} {} {} {} {} {} {}",
            self.kind,
            self.t,
            self.samples,
            self.failures,
            self.epsilon_hat,
            self.ci_low,
            self.ci_high,
            self.seed
        )
    }

    /// Human-readable companion to `report_line`.
    pub fn summary(&self) -> String {
        let subset = match self.kind {
            DisjunctKind::Type1 => self.t,
            DisjunctKind::Type2 => self.t + 1,
        };
        let how = if self.exhaustive {
            format!("all {} {subset}-subsets enumerated", self.samples)
        } else {
            format!("{} sampled {subset}-subsets (seed {})", self.samples, self.seed)
        };
        format!(
            "{} failure fraction {:.6} (95% CI [{:.6}, {:.6}]) over {how}",
            self.kind, self.epsilon_hat, self.ci_low, self.ci_high
        )
    }
}

struct SubsetEval<'a> {
    matrix: &'a BinaryTestMatrix,
    union: Vec<u64>,
    prefix: Vec<u64>,
    suffix: Vec<u64>,
}

impl<'a> SubsetEval<'a> {
    fn new(matrix: &'a BinaryTestMatrix, subset_size: usize) -> Self {
        let wpc = matrix.words_per_col();
        SubsetEval {
            matrix,
            union: vec![0u64; wpc],
            prefix: vec![0u64; (subset_size + 1) * wpc],
            suffix: vec![0u64; (subset_size + 1) * wpc],
        }
    }

    /// Type-1 failure: the union of the subset covers an outside column.
    fn type1_fails(&mut self, subset: &[usize]) -> bool {
        self.union.iter_mut().for_each(|w| *w = 0);
        for &j in subset {
            for (u, &w) in self.union.iter_mut().zip(self.matrix.column(j)) {
                *u |= w;
            }
        }
        'outside: for v in 0..self.matrix.items() {
            if subset.contains(&v) {
                continue 'outside;
            }
            if covered(self.matrix.column(v), &self.union) {
                return true;
            }
        }
        false
    }

    /// Type-2 failure: some member of the (t+1)-subset has no private row.
    fn type2_fails(&mut self, subset: &[usize]) -> bool {
        let wpc = self.matrix.words_per_col();
        let s = subset.len();
        self.prefix[..wpc].iter_mut().for_each(|w| *w = 0);
        for (i, &j) in subset.iter().enumerate() {
            let (done, rest) = self.prefix.split_at_mut((i + 1) * wpc);
            let prev = &done[i * wpc..];
            for ((out, &p), &c) in rest[..wpc].iter_mut().zip(prev).zip(self.matrix.column(j)) {
                *out = p | c;
            }
        }
        self.suffix[s * wpc..(s + 1) * wpc]
            .iter_mut()
            .for_each(|w| *w = 0);
        for (i, &j) in subset.iter().enumerate().rev() {
            let (head, tail) = self.suffix.split_at_mut((i + 1) * wpc);
            let next = &tail[..wpc];
            for ((out, &nx), &c) in head[i * wpc..]
                .iter_mut()
                .zip(next)
                .zip(self.matrix.column(j))
            {
                *out = nx | c;
            }
        }
        for (i, &j) in subset.iter().enumerate() {
            let col = self.matrix.column(j);
            let pre = &self.prefix[i * wpc..(i + 1) * wpc];
            let suf = &self.suffix[(i + 1) * wpc..(i + 2) * wpc];
            let private = col
                .iter()
                .zip(pre.iter().zip(suf))
                .any(|(&c, (&p, &sx))| c & !(p | sx) != 0);
            if !private {
                return true;
            }
        }
        false
    }
}

fn estimate(
    a: &BinaryTestMatrix,
    kind: DisjunctKind,
    t: usize,
    samples: u64,
    seed: u64,
    threads: usize,
) -> Result<DisjunctEstimate, DisjunctError> {
    let n = a.items();
    let subset_size = match kind {
        DisjunctKind::Type1 => t,
        DisjunctKind::Type2 => t + 1,
    };
    if t + 1 > n {
        return Err(DisjunctError::InvalidInputs(format!(
            "t + 1 = {} exceeds N = {n}",
            t + 1
        )));
    }
    if samples < 1 {
        return Err(DisjunctError::InvalidInputs("samples must be >= 1".into()));
    }

    let total = binomial_count(n as u64, subset_size as u64);
    if total <= EXHAUSTIVE_SUBSET_CAP {
        let mut eval = SubsetEval::new(a, subset_size);
        let mut combos = Combinations::new(n, subset_size);
        let mut failures = 0u64;
        let mut count = 0u64;
        while let Some(subset) = combos.next() {
            let fails = match kind {
                DisjunctKind::Type1 => eval.type1_fails(subset),
                DisjunctKind::Type2 => eval.type2_fails(subset),
            };
            failures += fails as u64;
            count += 1;
        }
        let eps = failures as f64 / count as f64;
        return Ok(DisjunctEstimate {
            kind,
            t,
            samples: count,
            failures,
            epsilon_hat: eps,
            ci_low: eps,
            ci_high: eps,
            seed,
            exhaustive: true,
        });
    }

    let count_range = |range: std::ops::Range<u64>| -> u64 {
        let mut eval = SubsetEval::new(a, subset_size);
        let mut sampler = SubsetSampler::new(n);
        let mut subset = Vec::with_capacity(subset_size);
        let mut failures = 0u64;
        for idx in range {
            let mut rng = substream(seed, idx);
            sampler.sample(&mut rng, subset_size, &mut subset);
            let fails = match kind {
                DisjunctKind::Type1 => eval.type1_fails(&subset),
                DisjunctKind::Type2 => eval.type2_fails(&subset),
            };
            failures += fails as u64;
        }
        failures
    };

    let failures = if threads <= 1 {
        count_range(0..samples)
    } else {
        let threads = threads.min(samples as usize).max(1);
        let chunk = samples.div_ceil(threads as u64);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for i in 0..threads as u64 {
                let lo = i * chunk;
                let hi = ((i + 1) * chunk).min(samples);
                if lo >= hi {
                    break;
                }
                let f = &count_range;
                handles.push(scope.spawn(move || f(lo..hi)));
            }
            handles.into_iter().map(|h| h.join().unwrap()).sum()
        })
    };

    let eps = failures as f64 / samples as f64;
    let (ci_low, ci_high) = clopper_pearson(failures, samples, 0.95);
    Ok(DisjunctEstimate {
        kind,
        t,
        samples,
        failures,
        epsilon_hat: eps,
        ci_low,
        ci_high,
        seed,
        exhaustive: false,
    })
}

/// Failure fraction of uniformly drawn t-subsets whose union covers some
/// outside column. Switches to exhaustive enumeration when C(N, t) is
/// small; see `DisjunctEstimate::exhaustive`.
pub fn estimate_type1(
    a: &BinaryTestMatrix,
    t: usize,
    samples: u64,
    seed: u64,
) -> Result<DisjunctEstimate, DisjunctError> {
    estimate(a, DisjunctKind::Type1, t, samples, seed, 1)
}

/// Failure fraction of uniformly drawn (t+1)-subsets in which some member
/// column lacks a private row (equivalently, no (t+1)x(t+1) permutation
/// submatrix exists).
pub fn estimate_type2(
    a: &BinaryTestMatrix,
    t: usize,
    samples: u64,
    seed: u64,
) -> Result<DisjunctEstimate, DisjunctError> {
    estimate(a, DisjunctKind::Type2, t, samples, seed, 1)
}

/// `estimate_type1`/`estimate_type2` with samples split across worker
/// threads; the per-sample substreams make the tally identical for any
/// thread count.
pub fn estimate_threads(
    a: &BinaryTestMatrix,
    kind: DisjunctKind,
    t: usize,
    samples: u64,
    seed: u64,
    threads: usize,
) -> Result<DisjunctEstimate, DisjunctError> {
    estimate(a, kind, t, samples, seed, threads)
}

/// Overlap statistic for one member of a constant-weight column set:
/// sum over the other listed columns of (w - d_H/2), exact rational.
/// This is the largest part of the member's support that the rest of the
/// subset can cover.
pub fn z_statistic(
    a: &BinaryTestMatrix,
    subset: &[usize],
    member: usize,
) -> Result<Ratio<i64>, DisjunctError> {
    if !subset.contains(&member) {
        return Err(DisjunctError::InvalidInputs(
            "member must belong to the subset".into(),
        ));
    }
    let w = a.column_weight(subset[0]);
    if subset.iter().any(|&j| a.column_weight(j) != w) {
        return Err(DisjunctError::WeightMismatch);
    }
    let mut doubled = 0i64;
    for &j in subset {
        if j != member {
            doubled += 2 * w as i64 - a.column_distance(member, j) as i64;
        }
    }
    Ok(Ratio::new(doubled, 2))
}

/// Empirical tail of the overlap statistic.
#[derive(Debug, Clone)]
pub struct ZExceedance {
    pub t: usize,
    pub samples: u64,
    pub exceedances: u64,
    pub fraction: f64,
    pub seed: u64,
    pub exhaustive: bool,
}

/// Fraction of (t+1)-subsets where some member's overlap statistic reaches
/// its full weight w, the event the tail bound dominates. Requires a
/// constant-weight matrix.
pub fn estimate_z_exceedance(
    a: &BinaryTestMatrix,
    t: usize,
    samples: u64,
    seed: u64,
) -> Result<ZExceedance, DisjunctError> {
    let n = a.items();
    if t + 1 > n {
        return Err(DisjunctError::InvalidInputs(format!(
            "t + 1 = {} exceeds N = {n}",
            t + 1
        )));
    }
    let w = a.uniform_weight().ok_or(DisjunctError::WeightMismatch)? as i64;
    let subset_size = t + 1;

    // max_i Z^i >= w, computed on doubled integers to stay exact.
    let exceeds = |subset: &[usize]| -> bool {
        for (i, &ci) in subset.iter().enumerate() {
            let mut doubled = 0i64;
            for (j, &cj) in subset.iter().enumerate() {
                if i != j {
                    doubled += 2 * w - a.column_distance(ci, cj) as i64;
                }
            }
            if doubled >= 2 * w {
                return true;
            }
        }
        false
    };

    let total = binomial_count(n as u64, subset_size as u64);
    if total <= EXHAUSTIVE_SUBSET_CAP {
        let mut combos = Combinations::new(n, subset_size);
        let mut hits = 0u64;
        let mut count = 0u64;
        while let Some(subset) = combos.next() {
            hits += exceeds(subset) as u64;
            count += 1;
        }
        return Ok(ZExceedance {
            t,
            samples: count,
            exceedances: hits,
            fraction: hits as f64 / count as f64,
            seed,
            exhaustive: true,
        });
    }

    let mut sampler = SubsetSampler::new(n);
    let mut subset = Vec::with_capacity(subset_size);
    let mut hits = 0u64;
    for idx in 0..samples {
        let mut rng = substream(seed, idx);
        sampler.sample(&mut rng, subset_size, &mut subset);
        hits += exceeds(&subset) as u64;
    }
    Ok(ZExceedance {
        t,
        samples,
        exceedances: hits,
        fraction: hits as f64 / samples as f64,
        seed,
        exhaustive: false,
    })
}

/// Measured column statistics of a binary matrix: common weight, exact
/// minimum distance when the pairwise scan fits the budget, and the
/// average-distance statistic (exact or sampled like the codebook path).
#[derive(Debug, Clone)]
pub struct ColumnStats {
    pub weight: u32,
    pub min_distance: u32,
    pub avg_distance: Ratio<u64>,
    pub mode: ProfileMode,
}

impl ColumnStats {
    pub fn avg_as_f64(&self) -> f64 {
        *self.avg_distance.numer() as f64 / *self.avg_distance.denom() as f64
    }
}

pub fn column_stats(
    a: &BinaryTestMatrix,
    budget: u64,
    seed: Option<u64>,
) -> Result<ColumnStats, DisjunctError> {
    let n = a.items();
    if n < 2 {
        return Err(DisjunctError::InvalidInputs("need N >= 2".into()));
    }
    let weight = a.uniform_weight().ok_or(DisjunctError::WeightMismatch)?;
    let wpc = a.words_per_col() as u128;
    let full_work = (n as u128) * (n as u128) * wpc;

    if full_work <= budget as u128 {
        let mut min_d = u32::MAX;
        let mut row_sums = vec![0u64; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = a.column_distance(i, j);
                min_d = min_d.min(d);
                row_sums[i] += d as u64;
                row_sums[j] += d as u64;
            }
        }
        let min_row = *row_sums.iter().min().expect("n >= 2");
        return Ok(ColumnStats {
            weight,
            min_distance: min_d,
            avg_distance: Ratio::new(min_row, n as u64 - 1),
            mode: ProfileMode::Exhaustive,
        });
    }

    let pair_work = (n as u128) * (n as u128 - 1) / 2 * wpc;
    if pair_work > budget as u128 {
        return Err(DisjunctError::BudgetExceeded {
            needed: pair_work,
            budget,
        });
    }
    let seed = seed.ok_or(DisjunctError::InvalidInputs(
        "average-distance sampling requires a seed".into(),
    ))?;

    let mut min_d = u32::MAX;
    for i in 0..n {
        for j in i + 1..n {
            min_d = min_d.min(a.column_distance(i, j));
        }
    }
    let row_cost = (n as u128) * wpc;
    let samples = ((budget as u128 / row_cost.max(1)).max(1) as u64).min(n as u64);
    let mut rng = substream(seed, 0xD157);
    let mut sampler = SubsetSampler::new(n);
    let mut rows = Vec::new();
    sampler.sample(&mut rng, samples as usize, &mut rows);
    let mut min_row = u64::MAX;
    for &i in &rows {
        let mut sum = 0u64;
        for j in 0..n {
            if j != i {
                sum += a.column_distance(i, j) as u64;
            }
        }
        min_row = min_row.min(sum);
    }
    Ok(ColumnStats {
        weight,
        min_distance: min_d,
        avg_distance: Ratio::new(min_row, n as u64 - 1),
        mode: ProfileMode::Sampled { samples, seed },
    })
}
