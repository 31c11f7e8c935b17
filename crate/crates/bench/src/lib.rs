//! Seeded inputs shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fockdil::{GridSpec, OnbSection, Section, Unit, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn grid(cells_per_unit: usize, cutoff: usize) -> GridSpec {
    GridSpec::new(cells_per_unit, cutoff).expect("benchmark grid")
}

pub fn coherent(grid: GridSpec) -> Unit {
    Unit::new(C64::new(1.0, 0.0), grid)
}

pub fn onb(k: usize, grid: GridSpec) -> Section {
    OnbSection::new(k, grid).expect("benchmark ONB index").section()
}

pub fn random_section(grid: &GridSpec, seed: u64) -> Section {
    Section::random_unit(grid, 1, 1, &mut rng(seed))
}
