//! Property tests for the structural invariants: the indicator map doubles
//! distances, matrix round-trips are bit-exact, exhaustive estimators and
//! the cover decoder agree with naive oracles, and the log-space binomial
//! tail matches exact rational arithmetic.

use proptest::collection::vec;
use proptest::prelude::*;

use gtkit::codes::{binomial_tail, Codebook};
use gtkit::concat::{ks_concatenate, matrix_read, matrix_write, BinaryTestMatrix, Strictness};
use gtkit::disjunct::{estimate_type1, estimate_type2, exact_disjunct_check};
use gtkit::field::FieldSpec;
use gtkit::simulate::{cover_decode, run_tests};

fn small_codebook() -> impl Strategy<Value = (u32, Vec<Vec<u16>>)> {
    (2u32..6, 1usize..5)
        .prop_flat_map(|(q, len)| {
            let total = (q as usize).pow(len as u32);
            (Just(q), Just(len), 2usize..=total.min(8))
        })
        .prop_flat_map(|(q, len, n)| {
            // Distinct words by sampling indices of the full word space.
            let all: Vec<Vec<u16>> = (0..(q as usize).pow(len as u32))
                .map(|mut v| {
                    let mut w = vec![0u16; len];
                    for slot in w.iter_mut() {
                        *slot = (v % q as usize) as u16;
                        v /= q as usize;
                    }
                    w
                })
                .collect();
            (Just(q), proptest::sample::subsequence(all, n))
        })
}

/// Arbitrary small 0/1 matrices as per-column supports; duplicates allowed.
fn small_matrix() -> impl Strategy<Value = BinaryTestMatrix> {
    (2usize..=16, 2usize..=12).prop_flat_map(|(rows, cols)| {
        vec(vec(proptest::bool::ANY, rows..=rows), cols..=cols).prop_map(move |bits| {
            let supports: Vec<Vec<usize>> = bits
                .iter()
                .map(|col| (0..rows).filter(|&r| col[r]).collect())
                .collect();
            BinaryTestMatrix::from_supports(rows, &supports, Strictness::Lenient).unwrap()
        })
    })
}

/// Naive oracle: does the union of `subset` (as bool rows) cover any
/// outside column?
fn oracle_type1_fails(cols: &[Vec<bool>], subset: &[usize]) -> bool {
    let rows = cols[0].len();
    let mut union = vec![false; rows];
    for &j in subset {
        for r in 0..rows {
            union[r] |= cols[j][r];
        }
    }
    (0..cols.len())
        .filter(|j| !subset.contains(j))
        .any(|v| (0..rows).all(|r| !cols[v][r] || union[r]))
}

/// Naive oracle: does some member of `subset` lack a private row?
fn oracle_type2_fails(cols: &[Vec<bool>], subset: &[usize]) -> bool {
    let rows = cols[0].len();
    subset
        .iter()
        .any(|&i| !(0..rows).any(|r| cols[i][r] && subset.iter().all(|&j| j == i || !cols[j][r])))
}

fn bool_columns(m: &BinaryTestMatrix) -> Vec<Vec<bool>> {
    (0..m.items())
        .map(|j| (0..m.tests()).map(|r| m.get(r, j)).collect())
        .collect()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - (k - i) {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn indicator_map_doubles_distances((q, words) in small_codebook()) {
        let book = Codebook::from_words(q, words).unwrap();
        let field = FieldSpec::new(q).unwrap();
        let m = ks_concatenate(&book, &field).unwrap();
        prop_assert_eq!(m.tests(), q as usize * book.length());
        prop_assert_eq!(m.uniform_weight(), Some(book.length() as u32));
        for i in 0..book.size() {
            // One 1 per q-row block.
            for block in 0..book.length() {
                let ones = (0..q as usize)
                    .filter(|&s| m.get(block * q as usize + s, i))
                    .count();
                prop_assert_eq!(ones, 1);
            }
            for j in 0..book.size() {
                if i != j {
                    prop_assert_eq!(m.column_distance(i, j), 2 * book.distance(i, j));
                }
            }
        }
    }

    #[test]
    fn matrix_round_trip(m in small_matrix()) {
        let mut out = Vec::new();
        matrix_write(&m, &mut out).unwrap();
        let back = matrix_read(&out[..], Strictness::Lenient).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn exhaustive_estimators_match_naive_oracle(m in small_matrix(), t in 1usize..4) {
        prop_assume!(t + 1 < m.items());
        let cols = bool_columns(&m);

        let e1 = estimate_type1(&m, t, 10, 1).unwrap();
        prop_assert!(e1.exhaustive);
        let oracle1 = subsets(m.items(), t)
            .iter()
            .filter(|s| oracle_type1_fails(&cols, s))
            .count() as u64;
        prop_assert_eq!(e1.failures, oracle1);

        let e2 = estimate_type2(&m, t, 10, 1).unwrap();
        prop_assert!(e2.exhaustive);
        let oracle2 = subsets(m.items(), t + 1)
            .iter()
            .filter(|s| oracle_type2_fails(&cols, s))
            .count() as u64;
        prop_assert_eq!(e2.failures, oracle2);

        // Exact check agrees with the type-1 oracle's verdict.
        let exact = exact_disjunct_check(&m, t, u64::MAX).unwrap();
        prop_assert_eq!(exact.disjunct, oracle1 == 0);
        if let Some(w) = exact.witness {
            prop_assert!(oracle_type1_fails(&cols, &w.covering));
            let union_cover = w.covering.clone();
            let mut union = vec![false; m.tests()];
            for &j in &union_cover {
                for (r, u) in union.iter_mut().enumerate() {
                    *u |= cols[j][r];
                }
            }
            prop_assert!((0..m.tests()).all(|r| !cols[w.victim][r] || union[r]));
        }
    }

    #[test]
    fn decoder_is_sound_and_matches_oracle(m in small_matrix(), seed in 0u64..1000) {
        let mut rng = gtkit::rng::SplitMix64::new(seed);
        let t = 1 + (rng.next_u64() as usize) % (m.items() - 1);
        let mut defectives: Vec<usize> =
            (0..t).map(|_| rng.below(m.items() as u64) as usize).collect();
        defectives.sort_unstable();
        defectives.dedup();

        let outcome = run_tests(&m, &defectives).unwrap();
        let decoded = cover_decode(&m, &outcome);

        // Soundness: never drops a true defective.
        for d in &defectives {
            prop_assert!(decoded.contains(d));
        }
        // Per-item containment oracle.
        let cols = bool_columns(&m);
        let mut union = vec![false; m.tests()];
        for &j in &defectives {
            for (r, u) in union.iter_mut().enumerate() {
                *u |= cols[j][r];
            }
        }
        let oracle: Vec<usize> = (0..m.items())
            .filter(|&j| (0..m.tests()).all(|r| !cols[j][r] || union[r]))
            .collect();
        prop_assert_eq!(decoded, oracle);
    }

    #[test]
    fn binomial_tail_matches_exact_rationals(n in 1u64..=12, num in 0u32..=8, r in -1i64..=13) {
        prop_assume!(num <= 8);
        let p = num as f64 / 8.0;
        let got = binomial_tail(n, p, r);
        // Exact arithmetic over the dyadic grid: P = sum C(n,k) num^k (8-num)^(n-k) / 8^n.
        let mut acc_num = 0u128;
        let denom = 8u128.pow(n as u32);
        for k in 0..=r.clamp(-1, n as i64) {
            if k < 0 { continue; }
            let k = k as u64;
            let mut c = 1u128;
            for i in 0..k {
                c = c * (n - i) as u128 / (i + 1) as u128;
            }
            acc_num += c * (num as u128).pow(k as u32) * ((8 - num) as u128).pow((n - k) as u32);
        }
        let exact = acc_num as f64 / denom as f64;
        prop_assert!((got - exact).abs() < 1e-12, "n={n} p={p} r={r}: {got} vs {exact}");
    }
}
