//! Closed-form calculators: q-ary entropy, information-theoretic test
//! lower bounds, the small-rate entropy identity, the t^{3/2} test-count
//! formula, and the end-to-end parameter planner that drives construction.
//!
//! Logs are natural internally; outputs at reporting boundaries are base 2
//! and say so in their names.

use num_bigint::BigUint;
use thiserror::Error;

use crate::codes::{self, CodeError};
use crate::disjunct::DisjunctKind;
use crate::field::{prime_power, FieldSpec};
use crate::stats::ln_choose;

/// Exact big-integer binomials are used up to these sizes; past them the
/// calculators switch to log-gamma.
const BIGINT_N_CAP: u64 = 1_000_000;
const BIGINT_T_CAP: u64 = 1_000;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("epsilon {epsilon} is not above the guard 2({factor})e^(-a t) = {threshold}")]
    EpsilonTooSmall {
        epsilon: f64,
        factor: String,
        threshold: f64,
    },
    #[error("test-count denominator is not positive: {0}")]
    NegativeDenominator(f64),
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// The q-ary entropy x log_q((q-1)/x) + (1-x) log_q(1/(1-x)) on
/// [0, 1 - 1/q], with h_q(0) = 0.
pub fn entropy_q(q: u32, x: f64) -> Result<f64, BoundsError> {
    if q < 2 {
        return Err(BoundsError::DomainError(format!("q = {q} must be >= 2")));
    }
    let cap = 1.0 - 1.0 / q as f64;
    if !(0.0..=cap).contains(&x) {
        return Err(BoundsError::DomainError(format!(
            "x = {x} outside [0, 1 - 1/q] = [0, {cap}]"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let ln_q = (q as f64).ln();
    Ok((x * ((q as f64 - 1.0) / x).ln() - (1.0 - x) * (1.0 - x).ln()) / ln_q)
}

fn log2_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 53 {
        let mut v = 0u64;
        for (i, d) in x.to_u64_digits().iter().enumerate() {
            v |= d << (64 * i);
        }
        return (v as f64).log2();
    }
    let shift = bits - 53;
    let top = x >> shift;
    let mut v = 0u64;
    for (i, d) in top.to_u64_digits().iter().enumerate() {
        v |= d << (64 * i);
    }
    (v as f64).log2() + shift as f64
}

fn check_n_t(n: u64, t: u64) -> Result<(), BoundsError> {
    if t < 1 || t >= n {
        return Err(BoundsError::DomainError(format!(
            "need 1 <= t < N, got t={t}, N={n}"
        )));
    }
    Ok(())
}

/// Tests needed by any scheme identifying all defective sets of size up
/// to t: log2 of the number of distinguishable outcomes, sum_{i<=t} C(N,i).
pub fn lower_bound_all(n: u64, t: u64) -> Result<f64, BoundsError> {
    check_n_t(n, t)?;
    if n <= BIGINT_N_CAP && t <= BIGINT_T_CAP {
        let mut sum = BigUint::from(1u32); // i = 0
        let mut term = BigUint::from(1u32);
        for i in 0..t {
            term = term * BigUint::from(n - i) / BigUint::from(i + 1);
            sum += &term;
        }
        Ok(log2_biguint(&sum))
    } else {
        // Log-sum-exp over ln C(N, i).
        let terms: Vec<f64> = (0..=t).map(|i| ln_choose(n, i)).collect();
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = terms.iter().map(|&l| (l - max).exp()).sum();
        Ok((max + sum.ln()) / std::f64::consts::LN_2)
    }
}

/// Tests needed when an epsilon fraction of size-t defective sets may be
/// missed: log2((1 - eps) C(N, t)).
pub fn lower_bound_almost(n: u64, t: u64, epsilon: f64) -> Result<f64, BoundsError> {
    check_n_t(n, t)?;
    if !(0.0..1.0).contains(&epsilon) {
        return Err(BoundsError::DomainError(format!(
            "epsilon = {epsilon} outside [0, 1)"
        )));
    }
    let log2_choose = if n <= BIGINT_N_CAP && t <= BIGINT_T_CAP {
        let mut term = BigUint::from(1u32);
        for i in 0..t {
            term = term * BigUint::from(n - i) / BigUint::from(i + 1);
        }
        log2_biguint(&term)
    } else {
        ln_choose(n, t) / std::f64::consts::LN_2
    };
    Ok(log2_choose + (1.0 - epsilon).log2())
}

/// Both sides of the small-rate identity
/// 1 - h_q(1 - 1/s) = (ln(q/s) + s/q - 1)/(s ln q) - o(1/(s ln q)).
#[derive(Debug, Clone, Copy)]
pub struct GvRateResidual {
    pub lhs: f64,
    pub main_term: f64,
    /// main_term - lhs. Scaled by s ln q this decreases monotonically in q
    /// at fixed s (limit ln 2 - 1 at s = 2) and vanishes as s grows, which
    /// is the identity's o(1/(s ln q)) error claim.
    pub residual: f64,
}

pub fn gv_rate_residual(q: u32, s: f64) -> Result<GvRateResidual, BoundsError> {
    if s <= 1.0 || s >= q as f64 {
        return Err(BoundsError::DomainError(format!(
            "need 1 < s < q, got s={s}, q={q}"
        )));
    }
    let lhs = 1.0 - entropy_q(q, 1.0 - 1.0 / s)?;
    let qf = q as f64;
    let main_term = ((qf / s).ln() + s / qf - 1.0) / (s * qf.ln());
    Ok(GvRateResidual {
        lhs,
        main_term,
        residual: main_term - lhs,
    })
}

/// Smallest prime power at or above `x`.
pub fn next_prime_power(x: f64) -> u64 {
    let mut n = x.ceil().max(2.0) as u64;
    loop {
        if prime_power(n).is_some() {
            return n;
        }
        n += 1;
    }
}

/// The constants the construction realizes for given (N, t, a):
/// alpha = sqrt(2)(1 + t/(N-1)), q the smallest prime power at or above
/// (2 e alpha sqrt(a) + 1) t, beta = q/t, gamma = alpha beta / (beta - 1).
pub fn realized_constants(n: u64, t: u64, a: f64) -> Result<(f64, u64, f64, f64), BoundsError> {
    check_n_t(n, t)?;
    if a <= 0.0 {
        return Err(BoundsError::DomainError(format!("a = {a} must be > 0")));
    }
    let alpha = 2f64.sqrt() * (1.0 + t as f64 / (n as f64 - 1.0));
    let q = next_prime_power((2.0 * std::f64::consts::E * alpha * a.sqrt() + 1.0) * t as f64);
    let beta = q as f64 / t as f64;
    let gamma = alpha * beta / (beta - 1.0);
    Ok((alpha, q, beta, gamma))
}

fn epsilon_guard(
    n: u64,
    t: u64,
    epsilon: f64,
    a: f64,
    kind: DisjunctKind,
) -> Result<f64, BoundsError> {
    let factor = match kind {
        DisjunctKind::Type2 => (t + 1) as f64,
        DisjunctKind::Type1 => (n - t) as f64,
    };
    let threshold = 2.0 * factor * (-a * t as f64).exp();
    if epsilon <= threshold {
        return Err(BoundsError::EpsilonTooSmall {
            epsilon,
            factor: match kind {
                DisjunctKind::Type2 => "t+1".into(),
                DisjunctKind::Type1 => "N-t".into(),
            },
            threshold,
        });
    }
    Ok(2.0 * factor / epsilon)
}

/// The closed-form test count
/// 2 beta gamma t^{3/2} ln N sqrt(ln X) / (ln t - ln ln X + ln 4a),
/// with X = 2(t+1)/eps (type-2) or 2(N-t)/eps (type-1), evaluated with the
/// realized constants. A reference predictor: the planner's realized
/// M = q M_q is reported alongside it and may differ.
pub fn predicted_test_count(
    n: u64,
    t: u64,
    epsilon: f64,
    a: f64,
    kind: DisjunctKind,
) -> Result<f64, BoundsError> {
    let (_, _, beta, gamma) = realized_constants(n, t, a)?;
    let x = epsilon_guard(n, t, epsilon, a, kind)?;
    let ln_x = x.ln();
    let denom = (t as f64).ln() - ln_x.ln() + (4.0 * a).ln();
    if denom <= 0.0 {
        return Err(BoundsError::NegativeDenominator(denom));
    }
    Ok(2.0 * beta * gamma * (t as f64).powf(1.5) * (n as f64).ln() * ln_x.sqrt() / denom)
}

/// Every construction parameter resolved to a concrete value, ready to drive
/// `derandomized_gv_code` + `ks_concatenate`.
#[derive(Debug, Clone)]
pub struct ConstructionPlan {
    pub items: u64,
    pub t: u64,
    pub epsilon: f64,
    pub slack_a: f64,
    pub kind: DisjunctKind,
    pub alpha: f64,
    pub q: u64,
    pub beta: f64,
    pub gamma: f64,
    pub k: u32,
    pub m_q: usize,
    pub d_q: usize,
    pub tests: u64,
    pub predicted_tests: f64,
}

impl ConstructionPlan {
    /// key=value text block; embedded as `#` provenance in GTMATRIX files.
    pub fn plan_block(&self) -> String {
        format!(
            "kind={}\nN={}\nt={}\nepsilon={}\na={}\nalpha={}\nq={}\nbeta={}\ngamma={}\nk={}\nMq={}\ndq={}\nM={}\npredicted_M={}",
            self.kind,
            self.items,
            self.t,
            self.epsilon,
            self.slack_a,
            self.alpha,
            self.q,
            self.beta,
            self.gamma,
            self.k,
            self.m_q,
            self.d_q,
            self.tests,
            self.predicted_tests,
        )
    }

    /// The coupled distance rule d_q(M_q) this plan was solved against.
    pub fn distance_rule(&self) -> impl Fn(usize) -> usize {
        let s = self.alpha * (self.t as f64 * self.ln_arg()).sqrt();
        let t_over_q = self.t as f64 / self.q as f64;
        move |m: usize| {
            let mf = m as f64;
            (mf - (mf - 1.0 - t_over_q * mf) / s).ceil().max(1.0) as usize
        }
    }

    fn ln_arg(&self) -> f64 {
        match self.kind {
            DisjunctKind::Type2 => (2.0 * (self.t as f64 + 1.0) / self.epsilon).ln(),
            DisjunctKind::Type1 => (2.0 * (self.items - self.t) as f64 / self.epsilon).ln(),
        }
    }

    /// Re-checks every plan invariant; the planner runs this before
    /// returning.
    pub fn verify(&self) -> Result<(), BoundsError> {
        epsilon_guard(self.items, self.t, self.epsilon, self.slack_a, self.kind)?;
        let floor =
            (2.0 * std::f64::consts::E * self.alpha * self.slack_a.sqrt() + 1.0) * self.t as f64;
        if prime_power(self.q).is_none() || (self.q as f64) < floor {
            return Err(BoundsError::DomainError(format!(
                "q = {} is not a prime power at or above {floor}",
                self.q
            )));
        }
        if !codes::gv_condition_holds(self.q as u32, self.k, self.m_q, self.d_q) {
            return Err(BoundsError::DomainError(
                "GV condition fails for (q, k, Mq, dq)".into(),
            ));
        }
        let s = self.alpha * (self.t as f64 * self.ln_arg()).sqrt();
        let mf = self.m_q as f64;
        let required = mf - (mf - 1.0 - self.t as f64 * mf / self.q as f64) / s;
        if (self.d_q as f64) < required {
            return Err(BoundsError::DomainError(format!(
                "dq = {} below the distance condition {required}",
                self.d_q
            )));
        }
        Ok(())
    }
}

/// Resolve all construction parameters: realized constants, the dimension
/// k = ceil(log_q N), and the smallest M_q whose GV condition holds with
/// the coupled distance rule.
pub fn plan_construction(
    n: u64,
    t: u64,
    epsilon: f64,
    a: f64,
    kind: DisjunctKind,
) -> Result<ConstructionPlan, BoundsError> {
    let (alpha, q, beta, gamma) = realized_constants(n, t, a)?;
    epsilon_guard(n, t, epsilon, a, kind)?;
    let predicted_tests = predicted_test_count(n, t, epsilon, a, kind)?;

    if q > crate::field::MAX_FIELD_ORDER as u64 {
        return Err(BoundsError::DomainError(format!(
            "realized q = {q} exceeds the supported field cap"
        )));
    }
    let field = FieldSpec::new(q as u32).map_err(CodeError::from)?;

    let mut k = 1u32;
    let mut pow = q;
    while pow < n {
        pow = pow.saturating_mul(q);
        k += 1;
    }

    let ln_arg = match kind {
        DisjunctKind::Type2 => (2.0 * (t as f64 + 1.0) / epsilon).ln(),
        DisjunctKind::Type1 => (2.0 * (n - t) as f64 / epsilon).ln(),
    };
    let s = alpha * (t as f64 * ln_arg).sqrt();
    let t_over_q = t as f64 / q as f64;
    let rule = move |m: usize| {
        let mf = m as f64;
        (mf - (mf - 1.0 - t_over_q * mf) / s).ceil().max(1.0) as usize
    };
    let m_q = codes::gv_min_length_with_rule(&field, n, rule)?;
    let d_q = rule(m_q);

    let plan = ConstructionPlan {
        items: n,
        t,
        epsilon,
        slack_a: a,
        kind,
        alpha,
        q,
        beta,
        gamma,
        k,
        m_q,
        d_q,
        tests: q * m_q as u64,
        predicted_tests,
    };
    plan.verify()?;
    Ok(plan)
}
