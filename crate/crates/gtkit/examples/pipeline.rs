//! The whole pipeline in one file: resolve parameters, build the code,
//! concatenate, then verify the matrix empirically.
//!
//! Run with `cargo run --example pipeline`.

use gtkit::bounds::{lower_bound_almost, plan_construction};
use gtkit::codes::{derandomized_gv_code, distance_profile, Codebook, DEFAULT_DISTANCE_BUDGET};
use gtkit::concat::ks_concatenate;
use gtkit::disjunct::{
    avg_distance_max_t, estimate_type2, AvgDistanceInputs, DisjunctKind,
};
use gtkit::field::FieldSpec;
use gtkit::simulate::simulate_success;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, t, epsilon, a) = (2048, 6, 0.1, 1.5);

    // Resolve every construction parameter.
    let plan = plan_construction(n, t, epsilon, a, DisjunctKind::Type2)?;
    println!("{}\n", plan.plan_block());

    // Build the outer code with certified minimum distance, select the
    // first N codewords, and concatenate with the unit-weight map.
    let field = FieldSpec::new(plan.q as u32)?;
    let code = derandomized_gv_code(&field, plan.k as usize, plan.m_q, plan.d_q)?;
    let book = Codebook::from_linear_prefix(&code, n)?;
    let profile = distance_profile(&book, DEFAULT_DISTANCE_BUDGET, Some(1))?;
    let matrix = ks_concatenate(&book, &field)?;
    println!(
        "matrix: {} tests x {} items, weight {}, binary distance >= {}",
        matrix.tests(),
        matrix.items(),
        plan.m_q,
        2 * plan.d_q
    );
    println!(
        "information-theoretic floor: {:.1} tests (log2 scale)",
        lower_bound_almost(n, t, epsilon)?
    );

    // How large a t does the measured geometry certify at this epsilon?
    let inputs = AvgDistanceInputs::new(
        plan.m_q as u32,
        2 * profile.min_distance,
        2.0 * profile.avg_as_f64(),
        n,
        epsilon,
    )?;
    let t_star = avg_distance_max_t(&inputs, DisjunctKind::Type2)?;
    println!("largest certified t at eps={epsilon}: {t_star}");

    // Check it empirically.
    let estimate = estimate_type2(&matrix, t_star as usize, 20_000, 7)?;
    println!("{}", estimate.summary());
    let report = simulate_success(&matrix, t as usize, 2_000, 9)?;
    println!("{}", report.summary());
    Ok(())
}
