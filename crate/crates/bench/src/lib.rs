//! Shared fixtures for the benchmarks.

use ldknn::{generate, Dataset, Family, SyntheticSpec};

/// `m` training samples and 64 queries from T2 in `d` dimensions.
pub fn t2_split(m: usize, d: usize, seed: u64) -> (Dataset, Dataset) {
    let train = generate(&SyntheticSpec::new(Family::T2, d, m / 2, seed)).expect("valid spec");
    let queries = generate(&SyntheticSpec::new(Family::T2, d, 32, seed ^ 0x5eed)).expect("valid spec");
    (train, queries)
}
