//! q-ary linear codes: Reed-Solomon generators, distance analysis, the
//! finite Gilbert-Varshamov condition, and the derandomized construction
//! that meets it by the method of conditional expectations.

use num_rational::Ratio;
use thiserror::Error;

use crate::field::{FieldError, FieldSpec};
use crate::rng;

/// Hard cap on the Gilbert-Varshamov length scan.
pub const GV_LENGTH_CAP: usize = 1 << 20;

/// Exhaustive code enumeration is allowed up to this many codewords.
pub const ENUMERATION_CAP: u64 = 1 << 20;

/// Default budget for exact distance work, in pairwise symbol comparisons.
pub const DEFAULT_DISTANCE_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("code length {length} exceeds field order {q}")]
    LengthExceedsField { q: u32, length: usize },
    #[error("bad dimension: {0}")]
    BadDimension(String),
    #[error("message length {got} does not match dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("generator has an all-zero column at index {0}")]
    ZeroColumn(usize),
    #[error("generator rank is below the dimension")]
    RankDeficient,
    #[error("symbol {symbol} out of range for alphabet {q}")]
    SymbolOutOfRange { q: u32, symbol: u32 },
    #[error("codebook must hold at least 2 distinct codewords")]
    DegenerateCodebook,
    #[error("no length up to {cap} satisfies the GV condition")]
    NoSolution { cap: usize },
    #[error("GV condition fails: expected count of low-weight codewords is {phi}, not below 1")]
    PreconditionViolated { phi: f64 },
    #[error("message space q^k = {messages} too large to derandomize")]
    MessageSpaceTooLarge { messages: u64 },
    #[error("no exact distance path fits the budget and sampling is disabled")]
    Infeasible,
    #[error("parse error at line {line}: {msg}")]
    Format { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeOrigin {
    ReedSolomon,
    GvDerandomized,
    Explicit,
}

/// A k-dimensional linear code of length `length` over GF(q), held as its
/// generator matrix. Invariants checked at construction: full rank and no
/// all-zero column (the latter keeps the linear-code average-distance
/// identity applicable).
#[derive(Debug, Clone)]
pub struct LinearCode {
    field: FieldSpec,
    dimension: usize,
    length: usize,
    generator: Vec<u32>, // row-major, dimension x length
    origin: CodeOrigin,
}

impl LinearCode {
    pub fn new(
        field: FieldSpec,
        dimension: usize,
        length: usize,
        generator: Vec<u32>,
        origin: CodeOrigin,
    ) -> Result<LinearCode, CodeError> {
        if dimension == 0 || length == 0 || dimension > length {
            return Err(CodeError::BadDimension(format!(
                "k={dimension}, length={length}"
            )));
        }
        if generator.len() != dimension * length {
            return Err(CodeError::BadDimension(format!(
                "generator has {} entries, expected {}",
                generator.len(),
                dimension * length
            )));
        }
        let q = field.order();
        for &g in &generator {
            if g >= q {
                return Err(CodeError::SymbolOutOfRange { q, symbol: g });
            }
        }
        for col in 0..length {
            if (0..dimension).all(|r| generator[r * length + col] == 0) {
                return Err(CodeError::ZeroColumn(col));
            }
        }
        let code = LinearCode {
            field,
            dimension,
            length,
            generator,
            origin,
        };
        if code.rank() != dimension {
            return Err(CodeError::RankDeficient);
        }
        Ok(code)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn origin(&self) -> CodeOrigin {
        self.origin
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.generator[r * self.length..(r + 1) * self.length]
    }

    /// Number of codewords, q^k.
    pub fn size(&self) -> u64 {
        (self.field.order() as u64).pow(self.dimension as u32)
    }

    fn rank(&self) -> usize {
        let f = &self.field;
        let mut m: Vec<u32> = self.generator.clone();
        let (rows, cols) = (self.dimension, self.length);
        let mut rank = 0;
        for col in 0..cols {
            if rank == rows {
                break;
            }
            let Some(pivot) = (rank..rows).find(|&r| m[r * cols + col] != 0) else {
                continue;
            };
            for c in 0..cols {
                m.swap(rank * cols + c, pivot * cols + c);
            }
            let inv = f.inv_raw(m[rank * cols + col]);
            for r in rank + 1..rows {
                let factor = f.mul_raw(m[r * cols + col], inv);
                if factor == 0 {
                    continue;
                }
                for c in col..cols {
                    let sub = f.mul_raw(factor, m[rank * cols + c]);
                    m[r * cols + c] = f.sub_raw(m[r * cols + c], sub);
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Evaluation-style Reed-Solomon generator: row i holds the i-th powers of
/// the evaluation points. Points are the field elements 1, 2, ..., in the
/// fixed element order, with 0 appended last only when length = q; constant
/// rows therefore never produce an all-zero column.
pub fn rs_generator(field: &FieldSpec, k: usize, length: usize) -> Result<LinearCode, CodeError> {
    let q = field.order();
    if length > q as usize {
        return Err(CodeError::LengthExceedsField { q, length });
    }
    if k == 0 || k > length {
        return Err(CodeError::BadDimension(format!("k={k}, length={length}")));
    }
    let points: Vec<u32> = (1..q).chain(std::iter::once(0)).take(length).collect();
    let mut generator = vec![0u32; k * length];
    for (j, &pt) in points.iter().enumerate() {
        let mut power = 1u32;
        for row in 0..k {
            generator[row * length + j] = power;
            power = field.mul_raw(power, pt);
        }
    }
    LinearCode::new(field.clone(), k, length, generator, CodeOrigin::ReedSolomon)
}

/// message x generator over GF(q).
pub fn encode(code: &LinearCode, message: &[u32]) -> Result<Vec<u32>, CodeError> {
    if message.len() != code.dimension {
        return Err(CodeError::DimensionMismatch {
            expected: code.dimension,
            got: message.len(),
        });
    }
    let f = &code.field;
    let q = f.order();
    for &m in message {
        if m >= q {
            return Err(CodeError::SymbolOutOfRange { q, symbol: m });
        }
    }
    let mut out = vec![0u32; code.length];
    for (r, &m) in message.iter().enumerate() {
        if m == 0 {
            continue;
        }
        for (o, &g) in out.iter_mut().zip(code.row(r)) {
            *o = f.add_raw(*o, f.mul_raw(m, g));
        }
    }
    Ok(out)
}

/// Walk all q^k - 1 nonzero messages with a base-q odometer, maintaining
/// the current codeword incrementally, and feed each codeword's Hamming
/// weight to `visit`.
fn for_each_nonzero_weight(code: &LinearCode, mut visit: impl FnMut(u32)) {
    let f = &code.field;
    let q = f.order();
    let k = code.dimension;
    let len = code.length;
    let total = code.size();
    let mut digits = vec![0u32; k];
    let mut cur = vec![0u32; len];
    for _ in 1..total {
        let mut j = 0;
        loop {
            let old = digits[j];
            let new = if old + 1 == q { 0 } else { old + 1 };
            digits[j] = new;
            let delta = f.sub_raw(new, old);
            let row = code.row(j);
            for (c, &r) in cur.iter_mut().zip(row) {
                *c = f.add_raw(*c, f.mul_raw(delta, r));
            }
            if new != 0 {
                break;
            }
            j += 1;
        }
        visit(cur.iter().filter(|&&s| s != 0).count() as u32);
    }
}

/// Exact minimum distance of a linear code by weight enumeration over all
/// nonzero messages. Requires q^k <= ENUMERATION_CAP.
pub fn min_distance_by_enumeration(code: &LinearCode) -> Result<u32, CodeError> {
    if code.size() > ENUMERATION_CAP {
        return Err(CodeError::MessageSpaceTooLarge {
            messages: code.size(),
        });
    }
    let mut min_w = u32::MAX;
    for_each_nonzero_weight(code, |w| min_w = min_w.min(w));
    Ok(min_w)
}

/// An explicit selection of N codewords (length-M_q symbol vectors).
#[derive(Debug, Clone)]
pub struct Codebook {
    q: u32,
    length: usize,
    words: Vec<u16>, // n * length, row-major
    source: Option<LinearCode>,
}

impl Codebook {
    /// The first `n` codewords of `code`, messages taken in lexicographic
    /// digit order starting from the zero message.
    pub fn from_linear_prefix(code: &LinearCode, n: u64) -> Result<Codebook, CodeError> {
        if n < 2 || n > code.size() {
            return Err(CodeError::DegenerateCodebook);
        }
        let q = code.field.order() as u64;
        let k = code.dimension;
        let mut words = Vec::with_capacity(n as usize * code.length);
        let mut message = vec![0u32; k];
        for idx in 0..n {
            let mut v = idx;
            for j in (0..k).rev() {
                message[j] = (v % q) as u32;
                v /= q;
            }
            let cw = encode(code, &message)?;
            words.extend(cw.iter().map(|&s| s as u16));
        }
        Ok(Codebook {
            q: code.field.order(),
            length: code.length,
            words,
            source: Some(code.clone()),
        })
    }

    /// Every codeword of `code`. Requires q^k <= ENUMERATION_CAP.
    pub fn from_full_linear(code: &LinearCode) -> Result<Codebook, CodeError> {
        if code.size() > ENUMERATION_CAP {
            return Err(CodeError::MessageSpaceTooLarge {
                messages: code.size(),
            });
        }
        Codebook::from_linear_prefix(code, code.size())
    }

    /// An arbitrary list of codewords. All must be distinct.
    pub fn from_words(q: u32, words: Vec<Vec<u16>>) -> Result<Codebook, CodeError> {
        if words.len() < 2 {
            return Err(CodeError::DegenerateCodebook);
        }
        let length = words[0].len();
        for w in &words {
            if w.len() != length {
                return Err(CodeError::DimensionMismatch {
                    expected: length,
                    got: w.len(),
                });
            }
            for &s in w {
                if s as u32 >= q {
                    return Err(CodeError::SymbolOutOfRange {
                        q,
                        symbol: s as u32,
                    });
                }
            }
        }
        let mut sorted: Vec<&Vec<u16>> = words.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CodeError::DegenerateCodebook);
        }
        let flat = words.iter().flat_map(|w| w.iter().copied()).collect();
        Ok(Codebook {
            q,
            length,
            words: flat,
            source: None,
        })
    }

    pub fn alphabet(&self) -> u32 {
        self.q
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn size(&self) -> usize {
        self.words.len() / self.length.max(1)
    }

    pub fn word(&self, i: usize) -> &[u16] {
        &self.words[i * self.length..(i + 1) * self.length]
    }

    pub fn source(&self) -> Option<&LinearCode> {
        self.source.as_ref()
    }

    pub fn distance(&self, i: usize, j: usize) -> u32 {
        hamming(self.word(i), self.word(j))
    }
}

fn hamming(a: &[u16], b: &[u16]) -> u32 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileMode {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

/// Distance statistics of a codebook. `avg_distance` is the min over
/// codewords of the mean distance to all others, exact in exhaustive mode.
/// When the pairwise work does not fit the budget, the minimum distance
/// falls back to weight enumeration of the attached linear code; for a
/// proper subset of that code this is a certified lower bound.
#[derive(Debug, Clone)]
pub struct DistanceProfile {
    pub min_distance: u32,
    pub avg_distance: Ratio<u64>,
    pub mode: ProfileMode,
    pub weight_enumerator: Option<Vec<u64>>,
}

impl DistanceProfile {
    pub fn avg_as_f64(&self) -> f64 {
        *self.avg_distance.numer() as f64 / *self.avg_distance.denom() as f64
    }
}

/// Exact or budgeted distance statistics; see `DistanceProfile`.
///
/// Paths, in order: full pairwise scan when N^2 * M_q comparisons fit the
/// budget; min distance by the triangular pairwise scan with the average
/// sampled; weight enumeration through the attached generator with the
/// average sampled. Sampling requires a seed; with `seed: None` the
/// sampled paths are disabled and `Infeasible` is returned instead.
pub fn distance_profile(
    book: &Codebook,
    budget: u64,
    seed: Option<u64>,
) -> Result<DistanceProfile, CodeError> {
    let n = book.size();
    let len = book.length as u128;
    let full_work = (n as u128) * (n as u128) * len;
    let pair_work = (n as u128) * (n as u128 - 1) / 2 * len;

    if full_work <= budget as u128 {
        let mut min_d = u32::MAX;
        let mut row_sums = vec![0u64; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = book.distance(i, j);
                min_d = min_d.min(d);
                row_sums[i] += d as u64;
                row_sums[j] += d as u64;
            }
        }
        let min_row = *row_sums.iter().min().expect("n >= 2");
        let mut enumerator = vec![0u64; book.length + 1];
        for i in 0..n {
            let w = book.word(i).iter().filter(|&&s| s != 0).count();
            enumerator[w] += 1;
        }
        return Ok(DistanceProfile {
            min_distance: min_d,
            avg_distance: Ratio::new(min_row, n as u64 - 1),
            mode: ProfileMode::Exhaustive,
            weight_enumerator: Some(enumerator),
        });
    }

    let seed = seed.ok_or(CodeError::Infeasible)?;

    let min_distance = if pair_work <= budget as u128 {
        let mut min_d = u32::MAX;
        for i in 0..n {
            for j in i + 1..n {
                min_d = min_d.min(book.distance(i, j));
            }
        }
        min_d
    } else if let Some(code) = book.source() {
        let enum_work = code.size() as u128 * len;
        if code.size() <= ENUMERATION_CAP && enum_work <= budget as u128 {
            min_distance_by_enumeration(code)?
        } else {
            return Err(CodeError::Infeasible);
        }
    } else {
        return Err(CodeError::Infeasible);
    };

    // Sampled average: exact per-codeword distance sums over a seeded
    // subset of rows, min of the sampled means.
    let row_cost = (n as u128) * len;
    let samples = ((budget as u128 / row_cost.max(1)).max(1) as u64).min(n as u64);
    let mut rng = rng::substream(seed, 0xD157);
    let mut sampler = rng::SubsetSampler::new(n);
    let mut rows = Vec::new();
    sampler.sample(&mut rng, samples as usize, &mut rows);
    let mut min_row = u64::MAX;
    for &i in &rows {
        let mut sum = 0u64;
        for j in 0..n {
            if j != i {
                sum += book.distance(i, j) as u64;
            }
        }
        min_row = min_row.min(sum);
    }
    Ok(DistanceProfile {
        min_distance,
        avg_distance: Ratio::new(min_row, n as u64 - 1),
        mode: ProfileMode::Sampled { samples, seed },
        weight_enumerator: None,
    })
}

/// P(Bin(n, p) <= r), summed in log space with running rescaling.
pub fn binomial_tail(n: u64, p: f64, r: i64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    if r < 0 {
        return 0.0;
    }
    if r as u64 >= n {
        return 1.0;
    }
    if p == 0.0 {
        return 1.0;
    }
    if p == 1.0 {
        return 0.0;
    }
    let ln_p = p.ln();
    let ln_1p = (-p).ln_1p();
    // Online log-sum-exp over terms k = 0..=r.
    let mut log_term = n as f64 * ln_1p;
    let mut max_log = log_term;
    let mut scaled_sum = 1.0f64;
    for k in 1..=(r as u64) {
        log_term += ((n - k + 1) as f64 / k as f64).ln() + ln_p - ln_1p;
        if log_term <= max_log {
            scaled_sum += (log_term - max_log).exp();
        } else {
            scaled_sum = scaled_sum * (max_log - log_term).exp() + 1.0;
            max_log = log_term;
        }
    }
    (max_log + scaled_sum.ln()).exp().clamp(0.0, 1.0)
}

/// The finite GV random-coding condition: a random k x m generator leaves
/// every nonzero message above weight d with positive probability,
/// i.e. (q^k - 1) P(Bin(m, 1-1/q) <= d-1) < 1.
///
/// The tail is summed downward from its largest terms with an early exit
/// once the threshold is crossed, so a length scan over infeasible rules
/// rejects each length in O(few) terms instead of O(d).
pub(crate) fn gv_condition_holds(q: u32, k: u32, m: usize, d: usize) -> bool {
    if d == 0 {
        return true;
    }
    if d > m {
        return false;
    }
    let count = (q as f64).powi(k as i32) - 1.0;
    // A single nonzero message: the tail is below 1 exactly when d <= m,
    // already established above. (Float summation would round 1 - q^-m
    // up to 1.0 for large m and wrongly reject.)
    if count <= 1.0 {
        return true;
    }
    let threshold = 1.0 / count;
    let p = 1.0 - 1.0 / q as f64;
    let r = d - 1;
    // Median shortcut: at or past the mean the tail is at least 1/2.
    if r as f64 >= m as f64 * p {
        return false;
    }
    let ln_top = crate::stats::ln_choose(m as u64, r as u64) + r as f64 * p.ln()
        - (m - r) as f64 * (q as f64).ln();
    if ln_top >= threshold.ln() {
        return false; // the top term alone reaches the threshold
    }
    let mut term = ln_top.exp();
    let mut sum = term;
    let mut kk = r;
    while kk > 0 && sum < threshold {
        term *= kk as f64 / ((m - kk + 1) as f64) * ((1.0 - p) / p);
        sum += term;
        kk -= 1;
    }
    sum < threshold
}

fn dimension_for(q: u32, n_codewords: u64) -> u32 {
    let mut k = 1u32;
    let mut pow = q as u64;
    while pow < n_codewords {
        pow = pow.saturating_mul(q as u64);
        k += 1;
    }
    k
}

/// Smallest length M_q whose GV condition certifies a k-dimensional code
/// of minimum distance `rule(M_q)`, where k = ceil(log_q N).
pub fn gv_min_length_with_rule(
    field: &FieldSpec,
    n_codewords: u64,
    rule: impl Fn(usize) -> usize,
) -> Result<usize, CodeError> {
    if n_codewords < 2 {
        return Err(CodeError::DegenerateCodebook);
    }
    let q = field.order();
    let k = dimension_for(q, n_codewords);
    for m in (k as usize).max(1)..=GV_LENGTH_CAP {
        let d = rule(m).max(1);
        if gv_condition_holds(q, k, m, d) {
            return Ok(m);
        }
    }
    Err(CodeError::NoSolution { cap: GV_LENGTH_CAP })
}

/// `gv_min_length_with_rule` for a fixed target distance.
pub fn gv_min_length(field: &FieldSpec, n_codewords: u64, d_q: usize) -> Result<usize, CodeError> {
    gv_min_length_with_rule(field, n_codewords, |_| d_q)
}

/// Derandomized GV-achieving code by the method of conditional
/// expectations.
///
/// The potential is the expected number of nonzero messages whose final
/// codeword weight falls below `d_q`, conditioned on the generator entries
/// fixed so far; a coordinate still depending on an unfixed entry is
/// uniform over GF(q). Entries are fixed column by column, rows in order,
/// always to the smallest field element minimizing the potential. The
/// potential starts below 1 (the GV precondition) and never increases, so
/// the finished code has no nonzero codeword below weight d_q.
pub fn derandomized_gv_code(
    field: &FieldSpec,
    k: usize,
    m_q: usize,
    d_q: usize,
) -> Result<LinearCode, CodeError> {
    derandomized_gv_code_traced(field, k, m_q, d_q, None)
}

pub(crate) fn derandomized_gv_code_traced(
    field: &FieldSpec,
    k: usize,
    m_q: usize,
    d_q: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<LinearCode, CodeError> {
    if k == 0 || m_q < k || d_q == 0 || d_q > m_q {
        return Err(CodeError::BadDimension(format!(
            "k={k}, M_q={m_q}, d_q={d_q}"
        )));
    }
    let q = field.order();
    let n_msgs = (q as u64)
        .checked_pow(k as u32)
        .filter(|&n| n <= 1 << 22)
        .ok_or(CodeError::MessageSpaceTooLarge { messages: u64::MAX })?;
    if !gv_condition_holds(q, k as u32, m_q, d_q) {
        let phi = ((q as f64).powi(k as i32) - 1.0)
            * binomial_tail(m_q as u64, 1.0 - 1.0 / q as f64, d_q as i64 - 1);
        return Err(CodeError::PreconditionViolated { phi });
    }

    // tails[f * d_q + j] = P(Bin(f, 1 - 1/q) <= j) for j in 0..d_q.
    let p1 = 1.0 - 1.0 / q as f64;
    let p0 = 1.0 / q as f64;
    let mut tails = vec![0.0f64; (m_q + 1) * d_q];
    tails[..d_q].fill(1.0);
    for f in 1..=m_q {
        for j in 0..d_q {
            let below = if j > 0 {
                tails[(f - 1) * d_q + j - 1]
            } else {
                0.0
            };
            tails[f * d_q + j] = p1 * below + p0 * tails[(f - 1) * d_q + j];
        }
    }
    // Probability the message with n1 decided-nonzero coordinates and f
    // still-random coordinates ends below weight d_q.
    let tail_for = |f: usize, n1: u32| -> f64 {
        if n1 as usize >= d_q {
            0.0
        } else {
            tails[f * d_q + (d_q - 1 - n1 as usize)]
        }
    };

    let n = n_msgs as usize;
    let mut n1 = vec![0u32; n]; // decided-nonzero coordinate count per message
    let mut s_cur = vec![0u32; n]; // partial symbol in the current column
    let mut powers = Vec::with_capacity(k + 1); // q^0 .. q^k
    let mut pw = 1usize;
    for _ in 0..=k {
        powers.push(pw);
        pw = pw.saturating_mul(q as usize);
    }

    let mut phi = (n_msgs - 1) as f64 * tail_for(m_q, 0);
    if let Some(t) = trace.as_deref_mut() {
        t.push(phi);
    }

    let mut generator = vec![0u32; k * m_q];
    for col in 0..m_q {
        s_cur.iter_mut().for_each(|s| *s = 0);
        let f_after = m_q - col - 1;
        for row in 0..k {
            let block = powers[row];
            // Candidate score over the messages whose top nonzero
            // component sits in this row; everything else is unchanged by
            // this entry's value.
            let mut best_v = 0u32;
            let mut best_score = f64::INFINITY;
            for v in 0..q {
                let mut score = 0.0f64;
                for top in 1..q {
                    let contrib = field.mul_raw(top, v);
                    let start = top as usize * block;
                    for i in start..start + block {
                        let sym = field.add_raw(s_cur[i], contrib);
                        let bump = (sym != 0) as u32;
                        score += tail_for(f_after, n1[i] + bump);
                    }
                }
                if score < best_score {
                    best_score = score;
                    best_v = v;
                }
            }
            generator[row * m_q + col] = best_v;

            // Fold the chosen value into every message with a nonzero
            // component at this row; runs of constant digit keep the
            // field product out of the inner loop.
            if best_v != 0 {
                for digit in 1..q {
                    let w = field.mul_raw(digit, best_v);
                    let mut start = digit as usize * block;
                    while start < n {
                        let end = (start + block).min(n);
                        for s in &mut s_cur[start..end] {
                            *s = field.add_raw(*s, w);
                        }
                        start += powers[row + 1];
                    }
                }
            }
            // Messages deciding at this row: account the settled symbol.
            let mut delta = 0.0f64;
            for top in 1..q {
                let start = top as usize * block;
                for i in start..start + block {
                    let old = tail_for(f_after + 1, n1[i]);
                    if s_cur[i] != 0 {
                        n1[i] += 1;
                    }
                    delta += tail_for(f_after, n1[i]) - old;
                }
            }
            let new_phi = phi + delta;
            debug_assert!(
                new_phi <= phi * (1.0 + 1e-9) + 1e-12,
                "potential must not increase: {phi} -> {new_phi}"
            );
            phi = new_phi;
            if let Some(t) = trace.as_deref_mut() {
                t.push(phi);
            }
        }
    }
    debug_assert!(phi < 1.0);

    // A column can end all-zero when every message deciding there was
    // already safely above weight d_q and ties resolved to zero. Raising
    // such a column's first row to 1 only grows codeword weights, so the
    // certified minimum distance stands and the no-zero-column invariant
    // holds.
    for col in 0..m_q {
        if (0..k).all(|r| generator[r * m_q + col] == 0) {
            generator[col] = 1;
        }
    }

    LinearCode::new(field.clone(), k, m_q, generator, CodeOrigin::GvDerandomized)
}

/// Render a generator in the QCODE text format:
/// header `QCODE q k Mq`, then k lines of space-separated symbols.
pub fn code_to_text(code: &LinearCode) -> String {
    let mut out = format!(
        "QCODE {} {} {}\n",
        code.field.order(),
        code.dimension,
        code.length
    );
    for r in 0..code.dimension {
        let row: Vec<String> = code.row(r).iter().map(|s| s.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn code_from_text(text: &str) -> Result<LinearCode, CodeError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(CodeError::Format {
        line: 1,
        msg: "empty input".into(),
    })?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "QCODE" {
        return Err(CodeError::Format {
            line: 1,
            msg: "expected header `QCODE q k Mq`".into(),
        });
    }
    let parse = |s: &str, what: &str| -> Result<usize, CodeError> {
        s.parse().map_err(|_| CodeError::Format {
            line: 1,
            msg: format!("bad {what}: {s}"),
        })
    };
    let q = parse(parts[1], "q")? as u32;
    let k = parse(parts[2], "k")?;
    let m_q = parse(parts[3], "Mq")?;
    let field = FieldSpec::new(q)?;
    let mut generator = Vec::with_capacity(k * m_q);
    for row in 0..k {
        let (line_no, line) = lines.next().ok_or(CodeError::Format {
            line: row + 2,
            msg: "missing generator row".into(),
        })?;
        let symbols: Result<Vec<u32>, _> = line
            .split_whitespace()
            .map(|s| {
                s.parse::<u32>().map_err(|_| CodeError::Format {
                    line: line_no + 1,
                    msg: format!("bad symbol: {s}"),
                })
            })
            .collect();
        let symbols = symbols?;
        if symbols.len() != m_q {
            return Err(CodeError::Format {
                line: line_no + 1,
                msg: format!("expected {m_q} symbols, found {}", symbols.len()),
            });
        }
        generator.extend(symbols);
    }
    LinearCode::new(field, k, m_q, generator, CodeOrigin::Explicit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parity_code() -> Codebook {
        // GF(2) single-parity code of length 3: {000, 101, 011, 110}.
        let f = FieldSpec::new(2).unwrap();
        let code = LinearCode::new(f, 2, 3, vec![1, 0, 1, 0, 1, 1], CodeOrigin::Explicit).unwrap();
        Codebook::from_full_linear(&code).unwrap()
    }

    #[test]
    fn rs_example_over_gf5() {
        let f = FieldSpec::new(5).unwrap();
        let code = rs_generator(&f, 2, 4).unwrap();
        // 1 + x at points 1, 2, 3, 4.
        assert_eq!(encode(&code, &[1, 1]).unwrap(), vec![2, 3, 4, 0]);
        assert_eq!(min_distance_by_enumeration(&code).unwrap(), 3);
    }

    #[test]
    fn rs_is_mds_for_small_fields() {
        for q in [2u32, 3, 4, 5, 7, 8, 9] {
            let f = FieldSpec::new(q).unwrap();
            for len in 1..=q as usize {
                for k in 1..=len.min(4) {
                    let code = rs_generator(&f, k, len).unwrap();
                    assert_eq!(
                        min_distance_by_enumeration(&code).unwrap() as usize,
                        len - k + 1,
                        "q={q} k={k} len={len}"
                    );
                }
            }
        }
    }

    #[test]
    fn rs_classic_parameters() {
        // Length q-1 = 7 over GF(8), k = 2: distance q - log_q N = 6.
        let f = FieldSpec::new(8).unwrap();
        let code = rs_generator(&f, 2, 7).unwrap();
        assert_eq!(min_distance_by_enumeration(&code).unwrap(), 6);
    }

    #[test]
    fn rs_rejects_bad_shapes() {
        let f = FieldSpec::new(5).unwrap();
        assert!(matches!(
            rs_generator(&f, 2, 6),
            Err(CodeError::LengthExceedsField { .. })
        ));
        assert!(matches!(
            rs_generator(&f, 4, 3),
            Err(CodeError::BadDimension(_))
        ));
    }

    #[test]
    fn encode_edge_cases() {
        let f = FieldSpec::new(2).unwrap();
        let code =
            LinearCode::new(f, 2, 4, vec![1, 0, 1, 1, 0, 1, 0, 1], CodeOrigin::Explicit).unwrap();
        assert_eq!(encode(&code, &[0, 0]).unwrap(), vec![0, 0, 0, 0]);
        assert_eq!(encode(&code, &[1, 1]).unwrap(), vec![1, 1, 1, 0]);
        assert_eq!(encode(&code, &[1, 0]).unwrap(), code.row(0));
        assert_eq!(encode(&code, &[0, 1]).unwrap(), code.row(1));
        assert!(matches!(
            encode(&code, &[1]),
            Err(CodeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn constructor_rejects_degenerate_generators() {
        let f = FieldSpec::new(2).unwrap();
        assert!(matches!(
            LinearCode::new(f.clone(), 2, 2, vec![1, 0, 1, 0], CodeOrigin::Explicit),
            Err(CodeError::ZeroColumn(1))
        ));
        assert!(matches!(
            LinearCode::new(f, 2, 2, vec![1, 1, 1, 1], CodeOrigin::Explicit),
            Err(CodeError::RankDeficient)
        ));
    }

    #[test]
    fn parity_code_profile_is_exact() {
        let book = parity_code();
        let profile = distance_profile(&book, DEFAULT_DISTANCE_BUDGET, None).unwrap();
        assert_eq!(profile.min_distance, 2);
        assert_eq!(profile.avg_distance, Ratio::new(2, 1));
        assert_eq!(profile.mode, ProfileMode::Exhaustive);
        // A_j counts: one word of weight 0, three of weight 2.
        assert_eq!(profile.weight_enumerator, Some(vec![1, 0, 3, 0]));
        // Full linear code with no zero column: D = (q^k/(q^k-1)) M (1-1/q).
        assert_eq!(profile.avg_distance, Ratio::new(4 * 3, 3 * 2));
    }

    #[test]
    fn exhaustive_profile_matches_naive_double_loop() {
        let f = FieldSpec::new(3).unwrap();
        let code = rs_generator(&f, 2, 3).unwrap();
        let book = Codebook::from_full_linear(&code).unwrap();
        let profile = distance_profile(&book, DEFAULT_DISTANCE_BUDGET, None).unwrap();

        let n = book.size();
        let mut min_d = u32::MAX;
        let mut min_sum = u64::MAX;
        for i in 0..n {
            let mut sum = 0u64;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = book
                    .word(i)
                    .iter()
                    .zip(book.word(j))
                    .filter(|(a, b)| a != b)
                    .count() as u32;
                min_d = min_d.min(d);
                sum += d as u64;
            }
            min_sum = min_sum.min(sum);
        }
        assert_eq!(profile.min_distance, min_d);
        assert_eq!(profile.avg_distance, Ratio::new(min_sum, n as u64 - 1));
    }

    #[test]
    fn exhaustive_profile_matches_oracle_at_n_121() {
        // Same double-loop oracle on a bigger instance (N = 11^2 = 121).
        let f = FieldSpec::new(11).unwrap();
        let code = rs_generator(&f, 2, 10).unwrap();
        let book = Codebook::from_full_linear(&code).unwrap();
        let profile = distance_profile(&book, DEFAULT_DISTANCE_BUDGET, None).unwrap();
        let n = book.size();
        let mut min_d = u32::MAX;
        let mut min_sum = u64::MAX;
        for i in 0..n {
            let mut sum = 0u64;
            for j in 0..n {
                if i != j {
                    let d = book.distance(i, j);
                    min_d = min_d.min(d);
                    sum += d as u64;
                }
            }
            min_sum = min_sum.min(sum);
        }
        assert_eq!(profile.min_distance, min_d);
        assert_eq!(profile.min_distance, 9); // MDS: 10 - 2 + 1
        assert_eq!(profile.avg_distance, Ratio::new(min_sum, n as u64 - 1));
    }

    #[test]
    fn full_linear_codebook_average_distance_identity() {
        // D_q = (q^k / (q^k - 1)) * M_q * (1 - 1/q), as exact rationals.
        for (q, k, len) in [
            (8u32, 3usize, 7usize),
            (3, 2, 3),
            (5, 2, 4),
            (7, 2, 6),
            (4, 2, 3),
        ] {
            let f = FieldSpec::new(q).unwrap();
            let code = rs_generator(&f, k, len).unwrap();
            let book = Codebook::from_full_linear(&code).unwrap();
            let profile = distance_profile(&book, DEFAULT_DISTANCE_BUDGET, None).unwrap();
            let size = (q as u64).pow(k as u32);
            let expected = Ratio::new(size * len as u64 * (q as u64 - 1), (size - 1) * q as u64);
            assert_eq!(profile.avg_distance, expected, "q={q} k={k} len={len}");
        }
    }

    #[test]
    fn rs_full_codebook_min_distance_via_enumeration() {
        let f = FieldSpec::new(5).unwrap();
        let code = rs_generator(&f, 2, 4).unwrap();
        let book = Codebook::from_full_linear(&code).unwrap();
        assert_eq!(book.size(), 25);
        let profile = distance_profile(&book, DEFAULT_DISTANCE_BUDGET, None).unwrap();
        assert_eq!(profile.min_distance, 3);
    }

    #[test]
    fn sampled_profile_keeps_exact_min_distance() {
        let f = FieldSpec::new(3).unwrap();
        let code = rs_generator(&f, 2, 3).unwrap();
        let book = Codebook::from_full_linear(&code).unwrap();
        // Budget too small for the full N^2 scan, enough for pairwise.
        let full = 9u64 * 9 * 3;
        let profile = distance_profile(&book, full - 1, Some(7)).unwrap();
        assert_eq!(profile.min_distance, 2);
        assert!(matches!(profile.mode, ProfileMode::Sampled { .. }));
        // No seed: sampling disabled.
        assert!(matches!(
            distance_profile(&book, full - 1, None),
            Err(CodeError::Infeasible)
        ));
    }

    #[test]
    fn prefix_selection_is_lexicographic() {
        let f = FieldSpec::new(3).unwrap();
        let code = rs_generator(&f, 2, 3).unwrap();
        let book = Codebook::from_linear_prefix(&code, 4).unwrap();
        // Messages (0,0), (0,1), (0,2), (1,0) in that order.
        assert_eq!(
            book.word(0),
            encode(&code, &[0, 0])
                .unwrap()
                .iter()
                .map(|&s| s as u16)
                .collect::<Vec<_>>()
                .as_slice()
        );
        assert_eq!(
            book.word(3),
            encode(&code, &[1, 0])
                .unwrap()
                .iter()
                .map(|&s| s as u16)
                .collect::<Vec<_>>()
                .as_slice()
        );
    }

    #[test]
    fn binomial_tail_examples() {
        assert!((binomial_tail(4, 0.5, 1) - 0.3125).abs() < 1e-14);
        assert_eq!(binomial_tail(10, 0.3, -1), 0.0);
        assert_eq!(binomial_tail(3, 2.0 / 3.0, 3), 1.0);
        assert_eq!(binomial_tail(5, 0.0, 0), 1.0);
        assert_eq!(binomial_tail(5, 1.0, 4), 0.0);
        // Exact rational check: P(Bin(7, 1/2) <= 2) = 29/128.
        assert!((binomial_tail(7, 0.5, 2) - 29.0 / 128.0).abs() < 1e-14);
    }

    #[test]
    fn gv_min_length_examples() {
        let f2 = FieldSpec::new(2).unwrap();
        // N=4 (k=2), d=3: M_q = 7 since 3 * 29/128 < 1 but 3 * 22/64 >= 1.
        assert_eq!(gv_min_length(&f2, 4, 3).unwrap(), 7);
        // d = 1: distinctness only, M_q = k.
        for (q, n, k) in [(2u32, 16u64, 4usize), (3, 20, 3), (5, 26, 3)] {
            let f = FieldSpec::new(q).unwrap();
            assert_eq!(gv_min_length(&f, n, 1).unwrap(), k, "q={q} N={n}");
        }
        // Two codewords (a single nonzero message): a length-d repetition
        // of any nonzero symbol works, including past float granularity.
        assert_eq!(gv_min_length(&f2, 2, 60).unwrap(), 60);
    }

    #[test]
    fn derandomized_code_meets_distance() {
        let f2 = FieldSpec::new(2).unwrap();
        let code = derandomized_gv_code(&f2, 2, 7, 3).unwrap();
        assert!(min_distance_by_enumeration(&code).unwrap() >= 3);
        assert_eq!(code.origin(), CodeOrigin::GvDerandomized);

        // Coupled rule over GF(3): d_q = ceil(M_q / 2). (Relative distance
        // must stay below 1 - 1/q = 2/3, where the GV condition shuts off.)
        let f3 = FieldSpec::new(3).unwrap();
        let m_q = gv_min_length_with_rule(&f3, 9, |m| m.div_ceil(2)).unwrap();
        let d_q = m_q.div_ceil(2);
        let code = derandomized_gv_code(&f3, 2, m_q, d_q).unwrap();
        assert!(min_distance_by_enumeration(&code).unwrap() as usize >= d_q);
    }

    #[test]
    fn gv_scan_rejects_zero_rate_rule_quickly() {
        // Relative distance pinned at 1 - 1/q: the GV condition never
        // holds, and the scan must fail fast rather than grind the cap.
        let f3 = FieldSpec::new(3).unwrap();
        let start = std::time::Instant::now();
        assert!(matches!(
            gv_min_length_with_rule(&f3, 9, |m| (2 * m).div_ceil(3)),
            Err(CodeError::NoSolution { .. })
        ));
        assert!(start.elapsed().as_secs() < 30);
    }

    #[test]
    fn derandomized_rejects_infeasible_precondition() {
        let f2 = FieldSpec::new(2).unwrap();
        // d = 3 at length 6 fails the GV condition (66/64 >= 1).
        assert!(matches!(
            derandomized_gv_code(&f2, 2, 6, 3),
            Err(CodeError::PreconditionViolated { .. })
        ));
    }

    #[test]
    fn derandomized_distance_one_is_deterministic_and_valid() {
        let f3 = FieldSpec::new(3).unwrap();
        let a = derandomized_gv_code(&f3, 2, 4, 1).unwrap();
        let b = derandomized_gv_code(&f3, 2, 4, 1).unwrap();
        assert_eq!(a.row(0), b.row(0));
        assert_eq!(a.row(1), b.row(1));
        assert!(min_distance_by_enumeration(&a).unwrap() >= 1);
    }

    #[test]
    fn potential_never_increases() {
        for (q, k, m, d) in [(2u32, 3usize, 9usize, 3usize), (3, 2, 6, 3), (5, 2, 5, 2)] {
            let f = FieldSpec::new(q).unwrap();
            let mut trace = Vec::new();
            let code = derandomized_gv_code_traced(&f, k, m, d, Some(&mut trace)).unwrap();
            assert!(trace[0] < 1.0);
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-12, "{} -> {}", w[0], w[1]);
            }
            assert!(min_distance_by_enumeration(&code).unwrap() as usize >= d);
        }
    }

    #[test]
    fn qcode_round_trip() {
        let f = FieldSpec::new(8).unwrap();
        let code = rs_generator(&f, 3, 7).unwrap();
        let text = code_to_text(&code);
        assert!(text.starts_with("QCODE 8 3 7\n"));
        let back = code_from_text(&text).unwrap();
        assert_eq!(back.dimension(), 3);
        assert_eq!(back.length(), 7);
        for r in 0..3 {
            assert_eq!(back.row(r), code.row(r));
        }
    }

    #[test]
    fn qcode_rejects_malformed_input() {
        assert!(matches!(
            code_from_text("QCODE 4 2\n"),
            Err(CodeError::Format { line: 1, .. })
        ));
        assert!(matches!(
            code_from_text("QCODE 4 2 3\n1 2 3\n"),
            Err(CodeError::Format { line: 3, .. })
        ));
        assert!(matches!(
            code_from_text("QCODE 4 2 3\n1 2\n0 0 1\n"),
            Err(CodeError::Format { line: 2, .. })
        ));
    }
}
