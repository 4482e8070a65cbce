//! Differentially private spatial histograms with privately tuned grid size.
//!
//! The crate is `no_std` (it needs `alloc`). It covers the algorithmic side of
//! the release pipeline:
//!
//! - [`geometry`]: rectangles, `g x g` grid partitions and cell/query overlap
//!   fractions.
//! - [`histogram`]: exact and noisy cell counts and range-query answering
//!   under the uniformity assumption.
//! - [`mechanisms`]: seeded Laplace noise and the exponential mechanism with
//!   per-response sensitivity.
//! - [`bounds`]: data-dependent expected-error bounds and the tuning score.
//! - [`sensitivity`]: response-dependent and global sensitivity bounds of the
//!   score.
//! - [`tuner`]: the two-phase release (private grid selection, then Laplace
//!   release) and its utility tail bound.
//! - [`baselines`]: the fixed-rule heuristic, a leaky non-private tuner and the
//!   non-private "best" release.
//!
//! IO, datasets, experiments and the verification oracle live in the
//! companion `gridtune` crate.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod bounds;
pub mod error;
pub mod geometry;
pub mod histogram;
pub mod mechanisms;
pub mod sensitivity;
pub mod tuner;

pub use error::{Error, Result};
pub use geometry::{GridSpec, Point, Rect};
pub use histogram::{CellCounts, Histogram, NoisyHistogram, PointSet};
pub use mechanisms::{NoiseSpec, PrivacyBudget, RngStream};
pub use tuner::{
    EndToEndRelease, ScoreKind, SensitivityMode, TuneConfig, TuneResult, UtilityParams,
};
