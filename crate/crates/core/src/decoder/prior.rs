//! Context-conditioned state-transition tables.
//!
//! Each hierarchy level has one conditional distribution per parent state
//! over that parent's children. Without context every row is uniform; an
//! external context source (e.g. a vision classifier) is simulated by
//! boosting one state's probability at one level.

use serde::{Deserialize, Serialize};

use super::labels::{GraspFamily, GraspShape, Hand, Movement};
use crate::error::{Error, Result};

/// A state value at some hierarchy level, used to address prior rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateValue {
    Hand(Hand),
    Movement(Movement),
    Family(GraspFamily),
    Shape(GraspShape),
}

impl StateValue {
    pub fn level(self) -> usize {
        match self {
            StateValue::Hand(_) => 0,
            StateValue::Movement(_) => 1,
            StateValue::Family(_) => 2,
            StateValue::Shape(_) => 3,
        }
    }
}

/// Transition tables P(S⁽ⁱ⁾ | S⁽ⁱ⁻¹⁾, C) for all four levels.
///
/// Indices follow the canonical enum orders (Right/Left, Rest/Grasp,
/// Power/Precision, and shapes within their family).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextPrior {
    /// P(S⁽⁰⁾ = hand | C).
    pub level0: [f64; 2],
    /// P(S⁽¹⁾ = movement | S⁽⁰⁾ = hand, C), indexed `[hand][movement]`.
    pub level1: [[f64; 2]; 2],
    /// P(S⁽²⁾ = family | S⁽¹⁾ = Grasp, C). Rest has no level-2 children.
    pub level2_grasp: [f64; 2],
    /// P(S⁽³⁾ = shape | S⁽²⁾ = Power, C) over (MediumWrap, PowerSphere).
    pub level3_power: [f64; 2],
    /// P(S⁽³⁾ = shape | S⁽²⁾ = Precision, C) over
    /// (ParallelExtension, PalmarPinch).
    pub level3_precision: [f64; 2],
}

impl ContextPrior {
    /// Checks every conditional row sums to 1 within 1e-12 with entries in
    /// [0, 1].
    pub fn validate(&self) -> Result<()> {
        let rows: [&[f64]; 6] = [
            &self.level0,
            &self.level1[0],
            &self.level1[1],
            &self.level2_grasp,
            &self.level3_power,
            &self.level3_precision,
        ];
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::Validation(format!(
                    "prior row {i} has entries outside [0,1]: {row:?}"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Validation(format!(
                    "prior row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(())
    }

    pub fn p_s0(&self, hand: Hand) -> f64 {
        self.level0[hand.index()]
    }

    pub fn p_s1(&self, hand: Hand, movement: Movement) -> f64 {
        self.level1[hand.index()][movement.index()]
    }

    pub fn p_s2(&self, family: GraspFamily) -> f64 {
        self.level2_grasp[family.index()]
    }

    pub fn p_s3(&self, shape: GraspShape) -> f64 {
        let within = shape.index() % 2;
        match shape.family() {
            GraspFamily::Power => self.level3_power[within],
            GraspFamily::Precision => self.level3_precision[within],
        }
    }
}

/// The no-context prior: every conditional row uniform over its children.
pub fn uniform_prior() -> ContextPrior {
    ContextPrior {
        level0: [0.5, 0.5],
        level1: [[0.5, 0.5], [0.5, 0.5]],
        level2_grasp: [0.5, 0.5],
        level3_power: [0.5, 0.5],
        level3_precision: [0.5, 0.5],
    }
}

/// Overwrites the rows containing `favored` so it receives probability `p`
/// and its sibling 1−p; other levels of `prior` are left as they are. This
/// lets several levels of context stack on one prior.
pub fn apply_context(prior: &mut ContextPrior, p: f64, favored: StateValue) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("context probability {p} outside [0,1]")));
    }
    // All sibling sets are binary, so the lone sibling receives 1−p.
    match favored {
        StateValue::Hand(h) => {
            prior.level0[h.index()] = p;
            prior.level0[1 - h.index()] = 1.0 - p;
        }
        StateValue::Movement(m) => {
            for row in prior.level1.iter_mut() {
                row[m.index()] = p;
                row[1 - m.index()] = 1.0 - p;
            }
        }
        StateValue::Family(f) => {
            prior.level2_grasp[f.index()] = p;
            prior.level2_grasp[1 - f.index()] = 1.0 - p;
        }
        StateValue::Shape(s) => {
            let within = s.index() % 2;
            let row = match s.family() {
                GraspFamily::Power => &mut prior.level3_power,
                GraspFamily::Precision => &mut prior.level3_precision,
            };
            row[within] = p;
            row[1 - within] = 1.0 - p;
        }
    }
    Ok(())
}

/// Builds a prior that favors `favored` with probability `p` at its level,
/// splitting 1−p uniformly among its siblings in every row containing it;
/// all other levels stay uniform.
pub fn inject_context(level: usize, p: f64, favored: StateValue) -> Result<ContextPrior> {
    if level > 3 {
        return Err(Error::Domain(format!("invalid hierarchy level {level}")));
    }
    if favored.level() != level {
        return Err(Error::Domain(format!(
            "state {favored:?} lives at level {}, not level {level}",
            favored.level()
        )));
    }
    let mut prior = uniform_prior();
    apply_context(&mut prior, p, favored)?;
    Ok(prior)
}
