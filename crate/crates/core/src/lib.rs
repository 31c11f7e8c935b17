//! Discretized Fock-space model of a type I product system and of the
//! Markov semigroups obtained by compressing its dilation.

pub mod check;
pub mod dilation;
pub mod direct_integral;
pub mod error;
pub mod experiments;
pub mod grid_fock;
pub mod linalg;
pub mod markov;
pub mod oracles;
pub mod product_system;

pub use num_complex::Complex64 as C64;

pub use check::Check;
pub use dilation::{BigSpace, DiscreteDilation, KVector, RankSum};
pub use direct_integral::{Section, SectionLayout};
pub use error::{Error, Result};
pub use experiments::{run, Experiment, ExperimentReport, RunConfig, SweepRow};
pub use grid_fock::{exponential_vector, FockVector, GridSpec, Interval, OccupationBasis};
pub use product_system::{f_section, m_integral, FSection, OnbSection, ProductSystem, Unit};
