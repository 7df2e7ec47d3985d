//! The hierarchical graphical model: gesture taxonomy, context-conditioned
//! transition tables, factorized MAP scoring, and a brute-force oracle.

mod labels;
mod model;
mod prior;
mod scoring;
pub mod test_support;

pub use labels::{
    label_to_path, path_to_label, Gesture, GestureLabel, GraspFamily, GraspShape, Hand,
    Movement, StatePath, ALL_LABELS, N_LABELS,
};
pub use model::{EegBranch, EmgBranch, HierarchyModel, WindowFeatures};
pub use prior::{apply_context, inject_context, uniform_prior, ContextPrior, StateValue};
pub use scoring::{
    argmax_tiebreak, eeg4_class, eeg4_scores, emg5_scores, exhaustive_decode, map_decode,
    score_label, LOG_FLOOR, N_EEG4, N_EMG5,
};
