//! Monte Carlo aggregate out-of-band emission (OOBE) interference simulator.
//!
//! Models gNBs, repeaters and UEs dropped inside the field of view of a
//! passive 23.8 GHz microwave sounder, evaluates the per-emitter link budget
//! toward the satellite, aggregates the received power per trial and reports
//! distributional statistics and paired-run penalties.
//!
//! Module map:
//!
//! - [`units`]: dB / linear arithmetic and bandwidth renormalization
//! - [`geometry`]: satellite–ground look angles and footprint membership
//! - [`antenna`]: element, array and sounder gain patterns
//! - [`propagation`]: free-space, gaseous and fixed losses
//! - [`emitters`]: emitter taxonomy, OOBE assignment, UE power control
//! - [`deployment`]: per-trial network drops and activity
//! - [`aggregation`]: link budget, per-trial sums, statistics, penalties
//! - [`scenario`]: scenario file schema, defaults and validation
//! - [`runner`]: run orchestration, output files, compare and sweep drivers

pub mod aggregation;
pub mod antenna;
pub mod deployment;
pub mod emitters;
pub mod error;
pub mod geometry;
pub mod propagation;
pub mod runner;
pub mod scenario;
pub mod units;

pub use error::{Error, Result};

/// Crate version echoed into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
