//! Factorized MAP scoring over the gesture hierarchy, mode-specific
//! reduced scorers, and a brute-force linear-domain inference oracle.

use ndarray::{Array1, ArrayView1};

use super::labels::{
    label_to_path, path_to_label, GestureLabel, GraspFamily, GraspShape, Hand, Movement,
    StatePath, N_LABELS,
};
use super::model::{EegBranch, EmgBranch, HierarchyModel, WindowFeatures};
use super::prior::ContextPrior;
use crate::error::Result;
use crate::kde::{kde_logpdf, KdeModel};

/// Surrogate for log 0; keeps score arithmetic totally ordered without NaNs.
pub const LOG_FLOOR: f64 = -1e300;

const LN_2: f64 = std::f64::consts::LN_2;
const SQRT_2PI: f64 = 2.5066282746310002;

fn ln_prob(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        LOG_FLOOR
    }
}

/// Index of the maximal score; ties resolve to the lowest index.
pub fn argmax_tiebreak(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// The full log-posterior criterion for one label:
/// log P(ε⁽⁰⁾|s0) + log P(ε⁽¹⁾|s1) + log P(ξ⁽¹⁾|s1) + log P(ξ⁽²⁾|s2)
/// + log P(ξ⁽³⁾|s3) + log P(s3|s2,C) + log P(s2|s1,C) + log P(s1|s0,C)
/// + log P(s0|C).
///
/// Rest paths have no level-2/3 states; their ξ⁽²⁾/ξ⁽³⁾ likelihoods and
/// transitions enter as a continuation factor of 1 (log contribution 0),
/// keeping scores comparable across paths of different depth.
pub fn score_label(
    model: &HierarchyModel,
    prior: &ContextPrior,
    feats: &WindowFeatures,
    label: GestureLabel,
) -> Result<f64> {
    let h = label.hand;
    let path = label_to_path(label);
    let emg_feats = feats.emg[h.index()].view();

    let mut score = ln_prob(prior.p_s0(h));
    score += ln_prob(prior.p_s1(h, path.s1));
    score += kde_logpdf(model.eeg_l0(h), feats.eeg_l0.view())?;
    score += kde_logpdf(model.eeg_l1(h, path.s1), feats.eeg_l1[h.index()].view())?;
    score += kde_logpdf(model.emg_l1(h, path.s1), emg_feats)?;
    if let (Some(family), Some(shape)) = (path.s2, path.s3) {
        score += ln_prob(prior.p_s2(family));
        score += ln_prob(prior.p_s3(shape));
        score += kde_logpdf(model.emg_l2(h, family), emg_feats)?;
        score += kde_logpdf(model.emg_l3(h, shape), emg_feats)?;
    }
    Ok(score)
}

/// MAP decoding: argmax of [`score_label`] over the 10 labels, plus the full
/// score vector. Ties break to the lowest canonical label index.
pub fn map_decode(
    model: &HierarchyModel,
    prior: &ContextPrior,
    feats: &WindowFeatures,
) -> Result<(GestureLabel, [f64; N_LABELS])> {
    let mut scores = [0.0; N_LABELS];
    for (i, label) in super::labels::ALL_LABELS.iter().enumerate() {
        scores[i] = score_label(model, prior, feats, *label)?;
    }
    let best = argmax_tiebreak(&scores);
    Ok((GestureLabel::from_index(best)?, scores))
}

/// EEG-only 4-class scoring over (hand, movement) pairs in the order
/// Right-Rest, Right-Grasp, Left-Rest, Left-Grasp. Uses only the ε⁽⁰⁾/ε⁽¹⁾
/// likelihood terms.
pub const N_EEG4: usize = 4;

pub fn eeg4_class(hand: Hand, movement: Movement) -> usize {
    hand.index() * 2 + movement.index()
}

pub fn eeg4_scores(
    eeg: &EegBranch,
    feat_l0: &Array1<f64>,
    feat_l1: &[Array1<f64>; 2],
) -> Result<[f64; N_EEG4]> {
    let mut scores = [0.0; N_EEG4];
    for hand in Hand::ALL {
        let l0 = kde_logpdf(&eeg.kde_l0[hand.index()], feat_l0.view())?;
        for movement in Movement::ALL {
            let l1 = kde_logpdf(
                &eeg.kde_l1[hand.index()][movement.index()],
                feat_l1[hand.index()].view(),
            )?;
            scores[eeg4_class(hand, movement)] = l0 + l1;
        }
    }
    Ok(scores)
}

/// EMG-only 5-class scoring over one arm's gestures in canonical gesture
/// order. Uses only the ξ⁽¹⁾/ξ⁽²⁾/ξ⁽³⁾ likelihood terms.
pub const N_EMG5: usize = 5;

pub fn emg5_scores(branch: &EmgBranch, activation: &Array1<f64>) -> Result<[f64; N_EMG5]> {
    let mut scores = [0.0; N_EMG5];
    let x = activation.view();
    for (gi, gesture) in super::labels::Gesture::ALL.iter().enumerate() {
        // Reuse the taxonomy to find each gesture's movement/family/shape.
        let path = label_to_path(GestureLabel::new(Hand::Right, *gesture));
        let mut s = kde_logpdf(&branch.kde_l1[path.s1.index()], x)?;
        if let (Some(family), Some(shape)) = (path.s2, path.s3) {
            s += kde_logpdf(&branch.kde_l2[family.index()], x)?;
            s += kde_logpdf(&branch.kde_l3[shape.index()], x)?;
        }
        scores[gi] = s;
    }
    Ok(scores)
}

/// Product of nonnegative numbers tracked as mantissa × 2^exponent so joint
/// probabilities far below f64's underflow threshold stay exact.
#[derive(Debug, Clone, Copy)]
struct ScaledFloat {
    m: f64,
    e: i64,
}

impl ScaledFloat {
    fn one() -> Self {
        ScaledFloat { m: 1.0, e: 0 }
    }

    fn from_f64(v: f64) -> Self {
        if v <= 0.0 {
            return ScaledFloat { m: 0.0, e: 0 };
        }
        let mut out = ScaledFloat { m: v, e: 0 };
        out.normalize();
        out
    }

    fn normalize(&mut self) {
        if self.m == 0.0 {
            self.e = 0;
            return;
        }
        while self.m >= 2.0 {
            self.m *= 0.5;
            self.e += 1;
        }
        while self.m < 1.0 {
            self.m *= 2.0;
            self.e -= 1;
        }
    }

    fn mul(mut self, other: ScaledFloat) -> Self {
        if self.m == 0.0 || other.m == 0.0 {
            return ScaledFloat { m: 0.0, e: 0 };
        }
        self.m *= other.m;
        self.e += other.e;
        self.normalize();
        self
    }

    fn ln(self) -> f64 {
        if self.m == 0.0 {
            LOG_FLOOR
        } else {
            self.m.ln() + self.e as f64 * LN_2
        }
    }
}

/// KDE density evaluated by direct linear-domain kernel products — an
/// independent computation path from [`kde_logpdf`]'s log-sum-exp.
fn linear_kde_pdf(model: &KdeModel, x: ArrayView1<f64>) -> f64 {
    let mut total = 0.0;
    for p in model.points.outer_iter() {
        let mut prod = 1.0;
        for j in 0..x.len() {
            let h = model.bandwidths[j];
            let z = (x[j] - p[j]) / h;
            prod *= (-0.5 * z * z).exp() / (h * SQRT_2PI);
        }
        total += prod;
    }
    total / model.n_points() as f64
}

/// Brute-force inference oracle: enumerates every joint assignment
/// (s0, s1, s2, s3) — valid or not — multiplies the unnormalized joint
/// probability directly in the linear domain with rescaling, and maps the
/// best valid assignment to its label. Invalid assignments contribute
/// exactly zero. Returns the winning label plus per-label log-joints.
pub fn exhaustive_decode(
    model: &HierarchyModel,
    prior: &ContextPrior,
    feats: &WindowFeatures,
) -> Result<(GestureLabel, [f64; N_LABELS])> {
    let s2_choices: [Option<GraspFamily>; 3] =
        [None, Some(GraspFamily::Power), Some(GraspFamily::Precision)];
    let s3_choices: [Option<GraspShape>; 5] = [
        None,
        Some(GraspShape::MediumWrap),
        Some(GraspShape::PowerSphere),
        Some(GraspShape::ParallelExtension),
        Some(GraspShape::PalmarPinch),
    ];

    let mut scores = [LOG_FLOOR; N_LABELS];
    let mut best: Option<(usize, f64)> = None;
    for s0 in Hand::ALL {
        for s1 in Movement::ALL {
            for s2 in s2_choices {
                for s3 in s3_choices {
                    let path = StatePath { s0, s1, s2, s3 };
                    if !path.is_valid() {
                        continue; // structural zero
                    }
                    let emg_feats = feats.emg[s0.index()].view();
                    let mut joint = ScaledFloat::one();
                    joint = joint.mul(ScaledFloat::from_f64(prior.p_s0(s0)));
                    joint = joint.mul(ScaledFloat::from_f64(prior.p_s1(s0, s1)));
                    joint = joint.mul(ScaledFloat::from_f64(linear_kde_pdf(
                        model.eeg_l0(s0),
                        feats.eeg_l0.view(),
                    )));
                    joint = joint.mul(ScaledFloat::from_f64(linear_kde_pdf(
                        model.eeg_l1(s0, s1),
                        feats.eeg_l1[s0.index()].view(),
                    )));
                    joint = joint.mul(ScaledFloat::from_f64(linear_kde_pdf(
                        model.emg_l1(s0, s1),
                        emg_feats,
                    )));
                    if let (Some(family), Some(shape)) = (s2, s3) {
                        joint = joint.mul(ScaledFloat::from_f64(prior.p_s2(family)));
                        joint = joint.mul(ScaledFloat::from_f64(prior.p_s3(shape)));
                        joint = joint.mul(ScaledFloat::from_f64(linear_kde_pdf(
                            model.emg_l2(s0, family),
                            emg_feats,
                        )));
                        joint = joint.mul(ScaledFloat::from_f64(linear_kde_pdf(
                            model.emg_l3(s0, shape),
                            emg_feats,
                        )));
                    }
                    let label = path_to_label(path)?;
                    let ln_joint = joint.ln();
                    scores[label.index()] = ln_joint;
                    let better = match best {
                        None => true,
                        Some((_, best_score)) => ln_joint > best_score,
                    };
                    if better {
                        best = Some((label.index(), ln_joint));
                    }
                }
            }
        }
    }
    let (idx, _) = best.expect("ten valid paths always enumerate");
    Ok((GestureLabel::from_index(idx)?, scores))
}
