//! Browser bindings for the interactive demo: explore construction
//! plans, render a classic Kautz-Singleton matrix, and run decode trials
//! against it. Everything returns plain strings/byte vectors so the page
//! needs no framework and the crate tests run natively.

use wasm_bindgen::prelude::*;

use gtkit::bounds::{lower_bound_all, lower_bound_almost, plan_construction};
use gtkit::codes::{distance_profile, rs_generator, Codebook, DEFAULT_DISTANCE_BUDGET};
use gtkit::concat::{ks_concatenate, BinaryTestMatrix};
use gtkit::disjunct::{
    avg_distance_max_t, min_distance_t, AvgDistanceInputs, DisjunctKind, TBound,
};
use gtkit::field::FieldSpec;
use gtkit::rng::{substream, SubsetSampler};
use gtkit::simulate::{cover_decode, run_tests};

fn kind_of(type1: bool) -> DisjunctKind {
    if type1 {
        DisjunctKind::Type1
    } else {
        DisjunctKind::Type2
    }
}

/// Resolve all construction parameters for (N, t, epsilon, a) and render
/// them next to the information-theoretic lower bounds.
#[wasm_bindgen]
pub fn plan_summary(n: u32, t: u32, epsilon: f64, a: f64, type1: bool) -> Result<String, String> {
    let kind = kind_of(type1);
    let plan =
        plan_construction(n as u64, t as u64, epsilon, a, kind).map_err(|e| e.to_string())?;
    let eq1 = lower_bound_all(n as u64, t as u64).map_err(|e| e.to_string())?;
    let eq2 = lower_bound_almost(n as u64, t as u64, epsilon).map_err(|e| e.to_string())?;
    Ok(format!(
        "{}\nlower_bound_all_log2={eq1:.2}\nlower_bound_almost_log2={eq2:.2}",
        plan.plan_block()
    ))
}

/// A Reed-Solomon based Kautz-Singleton matrix small enough to draw.
#[wasm_bindgen]
pub struct KsMatrix {
    matrix: BinaryTestMatrix,
    weight: u32,
    min_distance: u32,
    avg_distance: f64,
}

#[wasm_bindgen]
impl KsMatrix {
    /// Build from GF(q) with outer dimension k: N = q^k columns,
    /// q(q-1) rows. Capped at q <= 16 and N <= 4096 to stay drawable.
    #[wasm_bindgen(constructor)]
    pub fn new(q: u32, k: u32) -> Result<KsMatrix, String> {
        if q > 16 {
            return Err("demo cap: q <= 16".into());
        }
        if k == 0 || (q as u64).pow(k) > 4096 {
            return Err("demo cap: 1 <= k and q^k <= 4096".into());
        }
        let field = FieldSpec::new(q).map_err(|e| e.to_string())?;
        let code = rs_generator(&field, k as usize, (q - 1) as usize).map_err(|e| e.to_string())?;
        let book = Codebook::from_full_linear(&code).map_err(|e| e.to_string())?;
        let profile =
            distance_profile(&book, DEFAULT_DISTANCE_BUDGET, Some(1)).map_err(|e| e.to_string())?;
        let matrix = ks_concatenate(&book, &field).map_err(|e| e.to_string())?;
        Ok(KsMatrix {
            weight: book.length() as u32,
            min_distance: 2 * profile.min_distance,
            avg_distance: 2.0 * profile.avg_as_f64(),
            matrix,
        })
    }

    pub fn rows(&self) -> u32 {
        self.matrix.tests() as u32
    }

    pub fn cols(&self) -> u32 {
        self.matrix.items() as u32
    }

    /// Row-major 0/1 cells for canvas rendering.
    pub fn bits(&self) -> Vec<u8> {
        let (m, n) = (self.matrix.tests(), self.matrix.items());
        let mut out = Vec::with_capacity(m * n);
        for r in 0..m {
            for c in 0..n {
                out.push(self.matrix.get(r, c) as u8);
            }
        }
        out
    }

    /// Measured parameters and the two t guarantees, one `key=value` per line.
    pub fn stats(&self, epsilon: f64) -> String {
        let p2 = match min_distance_t(self.weight as u64, self.min_distance as u64) {
            TBound::Bounded(t) => t.to_string(),
            TBound::Unbounded => "unbounded".into(),
        };
        let t1 = AvgDistanceInputs::new(
            self.weight,
            self.min_distance,
            self.avg_distance,
            self.matrix.items() as u64,
            epsilon,
        )
        .and_then(|inputs| avg_distance_max_t(&inputs, DisjunctKind::Type2))
        .map(|t| t.to_string())
        .unwrap_or_else(|_| "unbounded".into());
        format!(
            "M={}\nN={}\nw={}\nd={}\nD={:.4}\nmin_distance_t={p2}\navg_bound_t(eps={epsilon})={t1}",
            self.matrix.tests(),
            self.matrix.items(),
            self.weight,
            self.min_distance,
            self.avg_distance,
        )
    }

    /// Pooled outcomes and the decoded set for chosen defectives, as a
    /// small JSON object.
    pub fn decode_trial(&self, defectives: Vec<u32>) -> Result<String, String> {
        let defectives: Vec<usize> = defectives.iter().map(|&d| d as usize).collect();
        let outcome = run_tests(&self.matrix, &defectives).map_err(|e| e.to_string())?;
        let decoded = cover_decode(&self.matrix, &outcome);
        let positives: Vec<usize> = (0..self.matrix.tests())
            .filter(|&r| outcome[r / 64] >> (r % 64) & 1 == 1)
            .collect();
        let mut truth = defectives.clone();
        truth.sort_unstable();
        truth.dedup();
        Ok(format!(
            "{{\"defectives\":{truth:?},\"positives\":{positives:?},\"decoded\":{decoded:?},\"exact\":{}}}",
            decoded == truth
        ))
    }

    /// A seeded random defective set of size t.
    pub fn random_defectives(&self, t: u32, seed: u32) -> Result<Vec<u32>, String> {
        let n = self.matrix.items();
        if t as usize >= n {
            return Err(format!("t must be below N = {n}"));
        }
        let mut rng = substream(seed as u64, 0);
        let mut sampler = SubsetSampler::new(n);
        let mut out = Vec::new();
        sampler.sample(&mut rng, t as usize, &mut out);
        let mut out: Vec<u32> = out.into_iter().map(|i| i as u32).collect();
        out.sort_unstable();
        Ok(out)
    }
}
