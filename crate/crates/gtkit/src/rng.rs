//! Seeded pseudo-randomness with per-sample substreams.
//!
//! Randomized estimators key an independent stream off `(seed, sample
//! index)`, so tallies come out identical no matter how the samples are
//! split across threads.

/// SplitMix64: tiny, fast, and good enough for subset sampling.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform draw from `0..n`, unbiased (Lemire multiply-shift with
    /// rejection of the short leftover interval).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let mut m = (self.next_u64() as u128) * (n as u128);
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n; // 2^64 mod n
            while (m as u64) < threshold {
                m = (self.next_u64() as u128) * (n as u128);
            }
        }
        (m >> 64) as u64
    }
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 33)).wrapping_mul(0xFF51AFD7ED558CCD);
    z = (z ^ (z >> 33)).wrapping_mul(0xC4CEB9FE1A85EC53);
    z ^ (z >> 33)
}

/// The stream for sample `index` under `seed`. This mapping is part of the
/// reproducibility contract: reports depend only on (seed, index), never on
/// scheduling.
pub fn substream(seed: u64, index: u64) -> SplitMix64 {
    SplitMix64::new(mix64(seed ^ mix64(index.wrapping_mul(0x9E3779B97F4A7C15))))
}

/// Draws uniform k-subsets of `0..n` by partial Fisher-Yates, undoing the
/// swaps afterwards so each draw costs O(k) regardless of n.
#[derive(Debug)]
pub struct SubsetSampler {
    items: Vec<u32>,
    swaps: Vec<usize>,
}

impl SubsetSampler {
    pub fn new(n: usize) -> Self {
        SubsetSampler {
            items: (0..n as u32).collect(),
            swaps: Vec::new(),
        }
    }

    pub fn sample(&mut self, rng: &mut SplitMix64, k: usize, out: &mut Vec<usize>) {
        let n = self.items.len();
        assert!(k <= n);
        out.clear();
        self.swaps.clear();
        for i in 0..k {
            let j = i + rng.below((n - i) as u64) as usize;
            self.items.swap(i, j);
            self.swaps.push(j);
            out.push(self.items[i] as usize);
        }
        for i in (0..k).rev() {
            self.items.swap(i, self.swaps[i]);
        }
    }
}

/// Lexicographic k-combinations of `0..n`.
#[derive(Debug)]
pub struct Combinations {
    n: usize,
    k: usize,
    idx: Vec<usize>,
    started: bool,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            k,
            idx: (0..k).collect(),
            started: false,
            done: k > n,
        }
    }

    // Lends a view into its own state, so this cannot be the trait method.
    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.idx);
        }
        // Advance the rightmost index that still has room.
        let k = self.k;
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            if self.idx[i] < self.n - (k - i) {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(&self.idx);
            }
        }
    }
}

/// C(n, k), saturating at u128::MAX. Used for exhaustive-mode thresholds.
pub fn binomial_count(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_are_deterministic_and_distinct() {
        let a: Vec<u64> = (0..4).map(|i| substream(42, i).next_u64()).collect();
        let b: Vec<u64> = (0..4).map(|i| substream(42, i).next_u64()).collect();
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), a.len());
    }

    #[test]
    fn below_is_in_range_and_roughly_uniform() {
        let mut rng = SplitMix64::new(7);
        let mut counts = [0u32; 5];
        for _ in 0..50_000 {
            counts[rng.below(5) as usize] += 1;
        }
        for &c in &counts {
            assert!((8_000..12_000).contains(&c), "counts={counts:?}");
        }
    }

    #[test]
    fn sampler_leaves_state_clean() {
        let mut s = SubsetSampler::new(10);
        let mut rng = SplitMix64::new(1);
        let mut out = Vec::new();
        for _ in 0..100 {
            s.sample(&mut rng, 4, &mut out);
            assert_eq!(out.len(), 4);
            let mut set = out.clone();
            set.sort_unstable();
            set.dedup();
            assert_eq!(set.len(), 4);
        }
        assert_eq!(s.items, (0..10).collect::<Vec<u32>>());
    }

    #[test]
    fn combinations_count_matches_binomial() {
        let mut c = Combinations::new(7, 3);
        let mut n = 0u64;
        let mut last = Vec::new();
        while let Some(idx) = c.next() {
            n += 1;
            last = idx.to_vec();
        }
        assert_eq!(n as u128, binomial_count(7, 3));
        assert_eq!(last, vec![4, 5, 6]);

        let mut empty = Combinations::new(3, 0);
        assert_eq!(empty.next(), Some(&[][..]));
        assert!(empty.next().is_none());
    }

    #[test]
    fn binomial_count_values() {
        assert_eq!(binomial_count(64, 6), 74_974_368);
        assert_eq!(binomial_count(5, 7), 0);
        assert_eq!(binomial_count(1000, 3), 166_167_000);
    }
}
