//! Common spatial patterns per filter band (FBCSP).
//!
//! Filters for one binary disjunction of the hierarchy are the generalized
//! eigenvectors of Σ1 w = λ (Σ1 + Σ2) w; the three largest and three
//! smallest eigenvalues give six components whose log-normalized variances
//! form half of the 12-dimensional EEG feature vector.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::signals::Window;

/// Shrinkage weight blending the averaged covariance toward a scaled
/// identity; keeps 19-channel estimates from 75-sample windows SPD.
pub const SHRINKAGE_GAMMA: f64 = 0.05;
/// Filters retained per band: 3 largest plus 3 smallest eigenvalues.
pub const FILTERS_PER_BAND: usize = 6;
/// The two FBCSP analysis bands in Hz.
pub const BANDS: [(f64, f64); 2] = [(8.0, 15.0), (15.0, 30.0)];

/// Averaged, trace-normalized, shrunk class covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCovariance {
    pub sigma: Array2<f64>,
    pub class_id: String,
    pub n_windows: usize,
}

/// Spatial filters for both bands at one hierarchy node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspModel {
    /// `filters_per_band[b]` is channels x 6, columns ordered by
    /// eigenvalue: 3 largest then 3 smallest.
    pub filters_per_band: [Array2<f64>; 2],
    pub bands: [(f64, f64); 2],
    pub node_id: String,
}

impl CspModel {
    pub fn n_channels(&self) -> usize {
        self.filters_per_band[0].nrows()
    }
}

/// Averages per-window sample covariances, each normalized by its trace,
/// then applies shrinkage `(1-γ)Σ + γ·(tr Σ / C)·I`.
pub fn estimate_covariance(windows: &[&Window], class_id: &str) -> Result<ClassCovariance> {
    let first = windows
        .first()
        .ok_or_else(|| Error::EmptyInput(format!("no windows for class {class_id}")))?;
    let c = first.samples.nrows();
    let mut sigma = Array2::<f64>::zeros((c, c));
    for w in windows {
        if w.samples.nrows() != c {
            return Err(Error::DimensionMismatch(format!(
                "window has {} channels, expected {c}",
                w.samples.nrows()
            )));
        }
        let cov = w.samples.dot(&w.samples.t());
        let trace: f64 = cov.diag().sum();
        if trace > 1e-300 {
            sigma.scaled_add(1.0 / trace, &cov);
        }
    }
    sigma /= windows.len() as f64;
    let mean_diag = sigma.diag().sum() / c as f64;
    sigma *= 1.0 - SHRINKAGE_GAMMA;
    for i in 0..c {
        sigma[[i, i]] += SHRINKAGE_GAMMA * mean_diag;
    }
    Ok(ClassCovariance { sigma, class_id: class_id.to_string(), n_windows: windows.len() })
}

/// Solves Σ1 w = λ (Σ1+Σ2) w and returns the 3 top + 3 bottom eigenvector
/// columns with their eigenvalues, normalized so wᵀ(Σ1+Σ2)w = 1.
///
/// Equal eigenvalues are ordered stably by original (ascending-λ) position,
/// so ties resolve to a deterministic filter set.
pub fn solve_csp(
    sigma1: &ClassCovariance,
    sigma2: &ClassCovariance,
    n_filters: usize,
) -> Result<(Array2<f64>, Array1<f64>)> {
    if sigma1.sigma.dim() != sigma2.sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "covariance sizes differ: {:?} vs {:?}",
            sigma1.sigma.dim(),
            sigma2.sigma.dim()
        )));
    }
    let c = sigma1.sigma.nrows();
    if n_filters > c {
        return Err(Error::Domain(format!(
            "cannot select {n_filters} filters from {c} channels"
        )));
    }
    let composite = &sigma1.sigma + &sigma2.sigma;
    // Ascending eigenvalues; B-normalization wᵀ(Σ1+Σ2)w = 1 comes from the
    // Cholesky reduction inside eigh_generalized.
    let (vals, vecs) = linalg::eigh_generalized(&sigma1.sigma, &composite)?;

    let n_top = n_filters - n_filters / 2;
    let n_bottom = n_filters / 2;
    let mut order: Vec<usize> = Vec::with_capacity(n_filters);
    // Largest-λ block first, descending; then the smallest-λ block kept in
    // ascending order for stability.
    order.extend((0..n_top).map(|k| c - 1 - k));
    order.extend(0..n_bottom);

    let mut filters = Array2::<f64>::zeros((c, n_filters));
    let mut eigenvalues = Array1::<f64>::zeros(n_filters);
    for (out_col, &src) in order.iter().enumerate() {
        filters.column_mut(out_col).assign(&vecs.column(src));
        eigenvalues[out_col] = vals[src];
    }
    Ok((filters, eigenvalues))
}

/// Fits a [`CspModel`] from per-band window sets of the two classes.
///
/// `class_windows[b][k]` holds the class-`k` windows filtered to band `b`.
pub fn fit_csp_model(
    class_windows: &[[Vec<&Window>; 2]; 2],
    node_id: &str,
) -> Result<CspModel> {
    let mut per_band = Vec::with_capacity(2);
    for (b, classes) in class_windows.iter().enumerate() {
        let s1 = estimate_covariance(&classes[0], &format!("{node_id}/b{b}/c0"))?;
        let s2 = estimate_covariance(&classes[1], &format!("{node_id}/b{b}/c1"))?;
        let (filters, _) = solve_csp(&s1, &s2, FILTERS_PER_BAND)?;
        per_band.push(filters);
    }
    let second = per_band.pop().expect("two bands");
    let first = per_band.pop().expect("two bands");
    Ok(CspModel {
        filters_per_band: [first, second],
        bands: BANDS,
        node_id: node_id.to_string(),
    })
}

/// Projects a per-band window pair through the model's filters and emits the
/// 12 log-normalized variances: per band, log(v_j / Σ_k v_k) over the band's
/// 6 components. Zero variances are floored at 1e-12 before the log.
pub fn extract_fbcsp(windows: [&Window; 2], model: &CspModel) -> Result<Array1<f64>> {
    let mut features = Array1::<f64>::zeros(2 * FILTERS_PER_BAND);
    for b in 0..2 {
        let w = windows[b];
        let filters = &model.filters_per_band[b];
        if w.samples.nrows() != filters.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "window has {} channels, filters expect {}",
                w.samples.nrows(),
                filters.nrows()
            )));
        }
        let projected = filters.t().dot(&w.samples);
        let n = projected.ncols() as f64;
        let mut vars = [0.0f64; FILTERS_PER_BAND];
        for (j, row) in projected.outer_iter().enumerate() {
            let mean = row.sum() / n;
            vars[j] = (row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).max(1e-12);
        }
        let total: f64 = vars.iter().sum();
        for (j, v) in vars.iter().enumerate() {
            features[b * FILTERS_PER_BAND + j] = (v / total).ln();
        }
    }
    Ok(features)
}
