//! Hybrid brain-machine-interface (hBMI) gesture decoding toolkit.
//!
//! Implements the full decoding chain for 10-class hand gesture recognition
//! from simultaneous EEG and EMG recordings:
//!
//! * [`signals`] — recording types and preprocessing (downsampling, baseline
//!   correction, zero-phase Butterworth filtering, windowing, RMS),
//! * [`csp`] — common spatial patterns per filter band (FBCSP) trained at each
//!   binary disjunction of the gesture hierarchy,
//! * [`nmf`] — non-negative matrix factorization of EMG RMS vectors into
//!   muscle-synergy activations,
//! * [`kde`] — multivariate Gaussian kernel density estimation for per-state
//!   feature likelihoods,
//! * [`decoder`] — the hierarchical graphical model: state paths, conditioned
//!   transition tables, factorized MAP scoring and a brute-force oracle,
//! * [`pipeline`] — glue that preprocesses trials, fits a full
//!   [`decoder::HierarchyModel`] and featurizes windows,
//! * [`datasets`] — synthetic data generation, dataset and model persistence,
//! * [`eval`] — within-session cross-validation, online across-session
//!   transfer and simulated context-injection protocols.
//!
//! Batch-level loops (preprocessing, featurization, window decoding) run on
//! rayon when the default `parallel` feature is enabled and fall back to
//! sequential iteration without it; results are bitwise identical either way.

pub mod csp;
pub mod datasets;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod kde;
pub mod linalg;
pub mod nmf;
pub mod par;
pub mod pipeline;
pub mod signals;

pub use error::{Error, Result};
