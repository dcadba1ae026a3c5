//! Almost-disjunct group-testing matrices from constant-weight codes.
//!
//! The pipeline: pick Kautz-Singleton parameters from the average-distance
//! analysis (`bounds`), build a q-ary code meeting the finite
//! Gilbert-Varshamov condition (`codes` over `field`), concatenate with the
//! unit-weight indicator map (`concat`), then verify disjunctness exactly or
//! by Monte-Carlo estimation (`disjunct`) and measure end-to-end decoding
//! success (`simulate`).

pub mod bounds;
pub mod codes;
pub mod concat;
pub mod disjunct;
pub mod field;
pub mod rng;
pub mod simulate;
pub mod stats;
