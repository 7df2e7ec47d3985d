//! The fitted hierarchical model and per-window feature container.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::labels::{GraspFamily, GraspShape, Hand, Movement};
use super::prior::ContextPrior;
use crate::csp::CspModel;
use crate::error::{Error, Result};
use crate::kde::KdeModel;
use crate::nmf::NmfModel;

/// EEG side of the hierarchy: spatial filters and likelihoods for levels
/// 0 (hand) and 1 (rest/grasp, conditioned on the hand hypothesis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EegBranch {
    /// CSP for the Right-vs-Left disjunction.
    pub csp_hand: CspModel,
    /// Per-hand CSP for the Rest-vs-Grasp disjunction.
    pub csp_movement: [CspModel; 2],
    /// P(ε⁽⁰⁾ | S⁽⁰⁾ = hand), indexed by hand.
    pub kde_l0: [KdeModel; 2],
    /// P(ε⁽¹⁾ | S⁽¹⁾ = movement), indexed `[hand][movement]`.
    pub kde_l1: [[KdeModel; 2]; 2],
}

/// EMG side for one arm: synergy base and likelihoods for levels 1–3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmgBranch {
    pub nmf: NmfModel,
    /// P(ξ⁽¹⁾ | S⁽¹⁾ = movement), indexed by movement.
    pub kde_l1: [KdeModel; 2],
    /// P(ξ⁽²⁾ | S⁽²⁾ = family), indexed by family.
    pub kde_l2: [KdeModel; 2],
    /// P(ξ⁽³⁾ | S⁽³⁾ = shape), indexed by shape.
    pub kde_l3: [KdeModel; 4],
}

/// Everything needed to decode one window: EEG branch, one EMG branch per
/// arm, and the default (uniform) transition tables.
///
/// The fixed-arity fields make an incomplete model unrepresentable: every
/// reachable observed state has exactly one likelihood. Incompleteness can
/// only arise during training or bundle loading, where it surfaces as a
/// model-incomplete error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyModel {
    pub eeg: EegBranch,
    /// Indexed by the hand whose trials trained the branch.
    pub emg: [EmgBranch; 2],
    pub default_prior: ContextPrior,
}

impl HierarchyModel {
    /// Structural sanity for deserialized models: feature dimensions and
    /// prior rows must be consistent.
    pub fn validate(&self) -> Result<()> {
        self.default_prior.validate()?;
        for kde in self.eeg.kde_l0.iter().chain(self.eeg.kde_l1.iter().flatten()) {
            if kde.dim() != 12 {
                return Err(Error::ModelIncomplete(format!(
                    "EEG likelihood {} has dimension {}, expected 12",
                    kde.state_id,
                    kde.dim()
                )));
            }
        }
        for branch in &self.emg {
            let all = branch
                .kde_l1
                .iter()
                .chain(branch.kde_l2.iter())
                .chain(branch.kde_l3.iter());
            for kde in all {
                if kde.dim() != branch.nmf.n_synergies {
                    return Err(Error::ModelIncomplete(format!(
                        "EMG likelihood {} has dimension {}, expected {}",
                        kde.state_id,
                        kde.dim(),
                        branch.nmf.n_synergies
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eeg_l0(&self, hand: Hand) -> &KdeModel {
        &self.eeg.kde_l0[hand.index()]
    }

    pub fn eeg_l1(&self, hand: Hand, movement: Movement) -> &KdeModel {
        &self.eeg.kde_l1[hand.index()][movement.index()]
    }

    pub fn emg_l1(&self, hand: Hand, movement: Movement) -> &KdeModel {
        &self.emg[hand.index()].kde_l1[movement.index()]
    }

    pub fn emg_l2(&self, hand: Hand, family: GraspFamily) -> &KdeModel {
        &self.emg[hand.index()].kde_l2[family.index()]
    }

    pub fn emg_l3(&self, hand: Hand, shape: GraspShape) -> &KdeModel {
        &self.emg[hand.index()].kde_l3[shape.index()]
    }
}

/// Features of one 250 ms window under every hand hypothesis.
///
/// Level-1 EEG features and EMG activations depend on the hypothesized hand
/// (hand-conditioned CSP filters and per-arm synergy bases), so both
/// variants are materialized once per window and reused across the 10 label
/// scores.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFeatures {
    /// 12-dim FBCSP features under the hand-disjunction filters (ε⁽⁰⁾).
    pub eeg_l0: Array1<f64>,
    /// 12-dim FBCSP features under each hand's movement filters (ε⁽¹⁾).
    pub eeg_l1: [Array1<f64>; 2],
    /// 5-dim synergy activations under each arm's base (ξ⁽¹⁻³⁾).
    pub emg: [Array1<f64>; 2],
}
