//! Gesture taxonomy: the 10 class labels and their state paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hand {
    Right,
    Left,
}

impl Hand {
    pub const ALL: [Hand; 2] = [Hand::Right, Hand::Left];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gesture {
    OpenPalm,
    MediumWrap,
    PowerSphere,
    ParallelExtension,
    PalmarPinch,
}

impl Gesture {
    pub const ALL: [Gesture; 5] = [
        Gesture::OpenPalm,
        Gesture::MediumWrap,
        Gesture::PowerSphere,
        Gesture::ParallelExtension,
        Gesture::PalmarPinch,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Level-1 state: resting movement vs grasping movement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Movement {
    Rest,
    Grasp,
}

impl Movement {
    pub const ALL: [Movement; 2] = [Movement::Rest, Movement::Grasp];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Level-2 state: grasp family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraspFamily {
    Power,
    Precision,
}

impl GraspFamily {
    pub const ALL: [GraspFamily; 2] = [GraspFamily::Power, GraspFamily::Precision];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Level-3 state: concrete grasp shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraspShape {
    MediumWrap,
    PowerSphere,
    ParallelExtension,
    PalmarPinch,
}

impl GraspShape {
    pub const ALL: [GraspShape; 4] = [
        GraspShape::MediumWrap,
        GraspShape::PowerSphere,
        GraspShape::ParallelExtension,
        GraspShape::PalmarPinch,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn family(self) -> GraspFamily {
        match self {
            GraspShape::MediumWrap | GraspShape::PowerSphere => GraspFamily::Power,
            GraspShape::ParallelExtension | GraspShape::PalmarPinch => GraspFamily::Precision,
        }
    }
}

/// One of the 10 decodable classes.
///
/// The canonical enumeration order — Right before Left, gestures in the
/// order OpenPalm, MediumWrap, PowerSphere, ParallelExtension, PalmarPinch —
/// defines label indices and the decoder's tie-break rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GestureLabel {
    pub hand: Hand,
    pub gesture: Gesture,
}

pub const N_LABELS: usize = 10;

/// All 10 labels in canonical order.
pub const ALL_LABELS: [GestureLabel; N_LABELS] = [
    GestureLabel { hand: Hand::Right, gesture: Gesture::OpenPalm },
    GestureLabel { hand: Hand::Right, gesture: Gesture::MediumWrap },
    GestureLabel { hand: Hand::Right, gesture: Gesture::PowerSphere },
    GestureLabel { hand: Hand::Right, gesture: Gesture::ParallelExtension },
    GestureLabel { hand: Hand::Right, gesture: Gesture::PalmarPinch },
    GestureLabel { hand: Hand::Left, gesture: Gesture::OpenPalm },
    GestureLabel { hand: Hand::Left, gesture: Gesture::MediumWrap },
    GestureLabel { hand: Hand::Left, gesture: Gesture::PowerSphere },
    GestureLabel { hand: Hand::Left, gesture: Gesture::ParallelExtension },
    GestureLabel { hand: Hand::Left, gesture: Gesture::PalmarPinch },
];

impl GestureLabel {
    pub fn new(hand: Hand, gesture: Gesture) -> Self {
        GestureLabel { hand, gesture }
    }

    /// Canonical index in [0, 10).
    pub fn index(self) -> usize {
        self.hand.index() * 5 + self.gesture.index()
    }

    pub fn from_index(idx: usize) -> Result<Self> {
        ALL_LABELS
            .get(idx)
            .copied()
            .ok_or_else(|| Error::Domain(format!("label index {idx} out of range")))
    }
}

impl std::fmt::Display for GestureLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}-{:?}", self.hand, self.gesture)
    }
}

/// A label's path through the four hierarchy levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StatePath {
    pub s0: Hand,
    pub s1: Movement,
    pub s2: Option<GraspFamily>,
    pub s3: Option<GraspShape>,
}

impl StatePath {
    /// Structural validity: Rest paths terminate at level 1; Grasp paths
    /// carry a family and a shape belonging to that family.
    pub fn is_valid(&self) -> bool {
        match (self.s1, self.s2, self.s3) {
            (Movement::Rest, None, None) => true,
            (Movement::Grasp, Some(f), Some(s)) => s.family() == f,
            _ => false,
        }
    }
}

/// Deterministic label → path mapping (Fig.-1-style taxonomy).
pub fn label_to_path(label: GestureLabel) -> StatePath {
    let (s1, s2, s3) = match label.gesture {
        Gesture::OpenPalm => (Movement::Rest, None, None),
        Gesture::MediumWrap => (
            Movement::Grasp,
            Some(GraspFamily::Power),
            Some(GraspShape::MediumWrap),
        ),
        Gesture::PowerSphere => (
            Movement::Grasp,
            Some(GraspFamily::Power),
            Some(GraspShape::PowerSphere),
        ),
        Gesture::ParallelExtension => (
            Movement::Grasp,
            Some(GraspFamily::Precision),
            Some(GraspShape::ParallelExtension),
        ),
        Gesture::PalmarPinch => (
            Movement::Grasp,
            Some(GraspFamily::Precision),
            Some(GraspShape::PalmarPinch),
        ),
    };
    StatePath { s0: label.hand, s1, s2, s3 }
}

/// Inverse of [`label_to_path`]; rejects structurally invalid paths.
pub fn path_to_label(path: StatePath) -> Result<GestureLabel> {
    if !path.is_valid() {
        return Err(Error::Domain(format!("invalid state path {path:?}")));
    }
    let gesture = match path.s3 {
        None => Gesture::OpenPalm,
        Some(GraspShape::MediumWrap) => Gesture::MediumWrap,
        Some(GraspShape::PowerSphere) => Gesture::PowerSphere,
        Some(GraspShape::ParallelExtension) => Gesture::ParallelExtension,
        Some(GraspShape::PalmarPinch) => Gesture::PalmarPinch,
    };
    Ok(GestureLabel { hand: path.s0, gesture })
}
