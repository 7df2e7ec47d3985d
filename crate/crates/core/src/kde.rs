//! Gaussian product-kernel density estimation for state likelihoods.
//!
//! Each hierarchy state that carries an observation gets one [`KdeModel`]
//! over its training feature vectors (12-dim EEG or 5-dim EMG). Bandwidths
//! follow Silverman's rule per dimension; evaluation is log-domain with
//! log-sum-exp so decoder scores never underflow to −∞.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to degenerate (zero) per-dimension standard deviations.
pub const SIGMA_FLOOR: f64 = 1e-6;

const LN_2PI: f64 = 1.8378770664093453; // ln(2π)

/// Diagonal-bandwidth Gaussian KDE over training feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    /// Training points, one per row (n x d).
    pub points: Array2<f64>,
    /// Per-dimension kernel bandwidths, all > 0.
    pub bandwidths: Array1<f64>,
    /// log of the per-kernel normalization constant Π_j (h_j √(2π))⁻¹.
    pub log_norm: f64,
    pub state_id: String,
}

impl KdeModel {
    /// Builds a model from explicit points and bandwidths without the n ≥ 2
    /// fitting requirement (used for closed-form test oracles and bundle
    /// deserialization).
    pub fn from_parts(points: Array2<f64>, bandwidths: Array1<f64>, state_id: &str) -> Result<Self> {
        if points.nrows() == 0 {
            return Err(Error::EmptyInput("KDE needs at least one point".into()));
        }
        if points.ncols() != bandwidths.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} bandwidths for {}-dim points",
                bandwidths.len(),
                points.ncols()
            )));
        }
        if bandwidths.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::Domain("bandwidths must be positive and finite".into()));
        }
        let log_norm = -bandwidths.iter().map(|&h| h.ln() + 0.5 * LN_2PI).sum::<f64>();
        Ok(KdeModel { points, bandwidths, log_norm, state_id: state_id.to_string() })
    }

    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }
}

/// Fits a KDE with Silverman's rule per dimension:
/// h_j = σ_j · (4 / ((d+2)·n))^{1/(d+4)}, with σ_j floored at 1e-6.
pub fn kde_fit(points: &Array2<f64>, state_id: &str) -> Result<KdeModel> {
    let (n, d) = points.dim();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "KDE for {state_id} needs at least 2 points, got {n}"
        )));
    }
    if let Some(bad) = points.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite feature value {bad}")));
    }
    let factor = (4.0 / ((d as f64 + 2.0) * n as f64)).powf(1.0 / (d as f64 + 4.0));
    let mean = points.mean_axis(Axis(0)).expect("n >= 2");
    let mut bandwidths = Array1::<f64>::zeros(d);
    for j in 0..d {
        let var = points
            .column(j)
            .iter()
            .map(|&v| (v - mean[j]) * (v - mean[j]))
            .sum::<f64>()
            / (n as f64 - 1.0);
        bandwidths[j] = var.sqrt().max(SIGMA_FLOOR) * factor;
    }
    KdeModel::from_parts(points.clone(), bandwidths, state_id)
}

/// Log-density log[(1/n) Σ_i Π_j N(x_j; p_ij, h_j²)], finite for all finite x.
pub fn kde_logpdf(model: &KdeModel, x: ArrayView1<f64>) -> Result<f64> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "query has {} dims, model expects {}",
            x.len(),
            model.dim()
        )));
    }
    let mut exponents = Vec::with_capacity(model.n_points());
    for p in model.points.outer_iter() {
        let mut q = 0.0;
        for j in 0..x.len() {
            let z = (x[j] - p[j]) / model.bandwidths[j];
            q += z * z;
        }
        exponents.push(-0.5 * q);
    }
    let max = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exponents.iter().map(|e| (e - max).exp()).sum();
    Ok(model.log_norm - (model.n_points() as f64).ln() + max + sum.ln())
}
