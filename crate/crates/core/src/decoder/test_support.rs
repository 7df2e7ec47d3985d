//! Randomized model/feature generators for inference oracles.
//!
//! Used by the factorization-equivalence tests and benchmarks: the models
//! have real feature dimensions (12-dim EEG, 5-dim EMG) but tiny KDE point
//! sets, and features are drawn near training points so linear-domain joint
//! probabilities stay well inside f64 range.

use ndarray::{Array1, Array2};
use rand::Rng;

use super::model::{EegBranch, EmgBranch, HierarchyModel, WindowFeatures};
use super::prior::uniform_prior;
use crate::csp::{CspModel, BANDS};
use crate::kde::KdeModel;
use crate::nmf::{FitStats, NmfModel};

/// Dimensions for randomized oracle instances.
#[derive(Debug, Clone, Copy)]
pub struct ModelDims {
    pub n_eeg: usize,
    pub n_emg: usize,
    pub n_points: usize,
}

/// Real feature dimensions, two KDE points per state.
pub const TINY_DIMS: ModelDims = ModelDims { n_eeg: 12, n_emg: 5, n_points: 2 };

fn random_kde<R: Rng>(rng: &mut R, n: usize, d: usize, state_id: &str) -> KdeModel {
    let points = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
    let bandwidths = Array1::from_shape_fn(d, |_| rng.random_range(0.5..1.5));
    KdeModel::from_parts(points, bandwidths, state_id).expect("valid parts")
}

fn placeholder_csp<R: Rng>(rng: &mut R, node_id: &str) -> CspModel {
    let a = Array2::from_shape_fn((4, 6), |_| rng.random_range(-1.0..1.0));
    let b = Array2::from_shape_fn((4, 6), |_| rng.random_range(-1.0..1.0));
    CspModel { filters_per_band: [a, b], bands: BANDS, node_id: node_id.to_string() }
}

fn placeholder_nmf<R: Rng>(rng: &mut R, n_synergies: usize) -> NmfModel {
    let mut base = Array2::from_shape_fn((6, n_synergies), |_| rng.random_range(0.1..1.0));
    for mut col in base.axis_iter_mut(ndarray::Axis(1)) {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        col.mapv_inplace(|v| v / norm);
    }
    NmfModel {
        base,
        n_synergies,
        fit_stats: FitStats { final_objective: 0.0, iterations: 0, objective_trace: Vec::new() },
    }
}

fn random_emg_branch<R: Rng>(rng: &mut R, dims: ModelDims, hand: &str) -> EmgBranch {
    EmgBranch {
        nmf: placeholder_nmf(rng, dims.n_emg),
        kde_l1: [
            random_kde(rng, dims.n_points, dims.n_emg, &format!("{hand}/rest")),
            random_kde(rng, dims.n_points, dims.n_emg, &format!("{hand}/grasp")),
        ],
        kde_l2: [
            random_kde(rng, dims.n_points, dims.n_emg, &format!("{hand}/power")),
            random_kde(rng, dims.n_points, dims.n_emg, &format!("{hand}/precision")),
        ],
        kde_l3: [
            random_kde(rng, dims.n_points, dims.n_emg, &format!("{hand}/medium_wrap")),
            random_kde(rng, dims.n_points, dims.n_emg, &format!("{hand}/power_sphere")),
            random_kde(rng, dims.n_points, dims.n_emg, &format!("{hand}/parallel_extension")),
            random_kde(rng, dims.n_points, dims.n_emg, &format!("{hand}/palmar_pinch")),
        ],
    }
}

/// A structurally complete model with independently random likelihoods.
pub fn random_model<R: Rng>(rng: &mut R, dims: ModelDims) -> HierarchyModel {
    let eeg = EegBranch {
        csp_hand: placeholder_csp(rng, "s0"),
        csp_movement: [placeholder_csp(rng, "s1/right"), placeholder_csp(rng, "s1/left")],
        kde_l0: [
            random_kde(rng, dims.n_points, dims.n_eeg, "right"),
            random_kde(rng, dims.n_points, dims.n_eeg, "left"),
        ],
        kde_l1: [
            [
                random_kde(rng, dims.n_points, dims.n_eeg, "right/rest"),
                random_kde(rng, dims.n_points, dims.n_eeg, "right/grasp"),
            ],
            [
                random_kde(rng, dims.n_points, dims.n_eeg, "left/rest"),
                random_kde(rng, dims.n_points, dims.n_eeg, "left/grasp"),
            ],
        ],
    };
    HierarchyModel {
        eeg,
        emg: [random_emg_branch(rng, dims, "right"), random_emg_branch(rng, dims, "left")],
        default_prior: uniform_prior(),
    }
}

/// A model in which every state at every level shares one likelihood, so all
/// labels of equal path depth score identically.
pub fn symmetric_model<R: Rng>(rng: &mut R, dims: ModelDims) -> HierarchyModel {
    let eeg_kde = random_kde(rng, dims.n_points, dims.n_eeg, "shared-eeg");
    let emg_kde = random_kde(rng, dims.n_points, dims.n_emg, "shared-emg");
    let eeg = EegBranch {
        csp_hand: placeholder_csp(rng, "s0"),
        csp_movement: [placeholder_csp(rng, "s1/right"), placeholder_csp(rng, "s1/left")],
        kde_l0: [eeg_kde.clone(), eeg_kde.clone()],
        kde_l1: [
            [eeg_kde.clone(), eeg_kde.clone()],
            [eeg_kde.clone(), eeg_kde.clone()],
        ],
    };
    let branch = EmgBranch {
        nmf: placeholder_nmf(rng, dims.n_emg),
        kde_l1: [emg_kde.clone(), emg_kde.clone()],
        kde_l2: [emg_kde.clone(), emg_kde.clone()],
        kde_l3: [emg_kde.clone(), emg_kde.clone(), emg_kde.clone(), emg_kde.clone()],
    };
    HierarchyModel {
        eeg,
        emg: [branch.clone(), branch],
        default_prior: uniform_prior(),
    }
}

/// Draws features near randomly chosen training points (within half a
/// bandwidth per dimension) so every likelihood stays far from underflow.
pub fn random_features_near_model<R: Rng>(
    rng: &mut R,
    model: &HierarchyModel,
) -> WindowFeatures {
    let near = |rng: &mut R, kde: &KdeModel| -> Array1<f64> {
        let i = rng.random_range(0..kde.n_points());
        let point = kde.points.row(i);
        Array1::from_shape_fn(kde.dim(), |j| {
            point[j] + rng.random_range(-0.5..0.5) * kde.bandwidths[j]
        })
    };
    let l0_src = rng.random_range(0..2usize);
    let eeg_l0 = near(rng, &model.eeg.kde_l0[l0_src]);
    let r0 = rng.random_range(0..2usize);
    let r1 = rng.random_range(0..2usize);
    let eeg_l1 = [
        near(rng, &model.eeg.kde_l1[0][r0]),
        near(rng, &model.eeg.kde_l1[1][r1]),
    ];
    let e0 = rng.random_range(0..2usize);
    let e1 = rng.random_range(0..2usize);
    let emg = [
        near(rng, &model.emg[0].kde_l1[e0]),
        near(rng, &model.emg[1].kde_l1[e1]),
    ];
    WindowFeatures { eeg_l0, eeg_l1, emg }
}
