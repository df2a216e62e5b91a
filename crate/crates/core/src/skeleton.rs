//! Articulated skier body model.
//!
//! The default model has 24 joints: 14 body joints (head, neck, shoulders,
//! elbows, hands, hips, knees, ankles) followed by feet, skis and pole
//! baskets. Limb lengths are subject specific; the built-in values are
//! measured from [`rest_pose`], a generic adult in ski stance, and every
//! pipeline accepts user-supplied lengths instead.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::Vector3;
use thiserror::Error;

/// Tolerance for the mass weights summing to one.
pub const MASS_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkeletonError {
    #[error("skeleton has no joints")]
    Empty,
    #[error("duplicate joint name `{0}`")]
    DuplicateJoint(String),
    #[error("unknown joint `{0}`")]
    UnknownJoint(String),
    #[error("duplicate limb {0}")]
    DuplicateLimb(String),
    #[error("limb {0} connects a joint to itself")]
    SelfLimb(String),
    #[error("missing length for limb {0}")]
    MissingLength(String),
    #[error("nonpositive limb length {length} for limb {limb}")]
    NonPositiveLength { limb: String, length: f64 },
    #[error("nonpositive mass weight {weight} for segment {segment}")]
    NonPositiveWeight { segment: String, weight: f64 },
    #[error("mass weights do not sum to 1 (sum = {sum})")]
    MassSum { sum: f64 },
}

/// Two joints that keep a constant distance over time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limb {
    pub a: usize,
    pub b: usize,
    /// Reference length in meters.
    pub length: f64,
}

/// A body segment contributing to the center of mass. Point masses
/// (head, hands) have `a == b`, so the segment center is the joint itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassSegment {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

impl MassSegment {
    pub fn is_point(&self) -> bool {
        self.a == self.b
    }
}

/// Name-based description of a skeleton, validated into a [`SkeletonModel`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkeletonDefinition {
    pub joints: Vec<String>,
    pub body_subset: Vec<String>,
    pub limbs: Vec<(String, String)>,
    /// Lengths keyed by limb endpoint names (either orientation).
    pub lengths_m: Vec<((String, String), f64)>,
    /// Mass weights keyed by one joint (point mass) or two joints (segment).
    pub com_weights: Vec<(Vec<String>, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonModel {
    joint_names: Vec<String>,
    body_subset: Vec<usize>,
    limbs: Vec<Limb>,
    masses: Vec<MassSegment>,
}

fn pair_label(a: &str, b: &str) -> String {
    format!("({a}, {b})")
}

impl SkeletonModel {
    /// Validates a definition. Joint indices follow the order of
    /// `definition.joints`.
    pub fn from_definition(definition: &SkeletonDefinition) -> Result<Self, SkeletonError> {
        if definition.joints.is_empty() {
            return Err(SkeletonError::Empty);
        }
        let mut joint_names: Vec<String> = Vec::with_capacity(definition.joints.len());
        for name in &definition.joints {
            if joint_names.iter().any(|n| n == name) {
                return Err(SkeletonError::DuplicateJoint(name.clone()));
            }
            joint_names.push(name.clone());
        }
        let index = |name: &str| -> Result<usize, SkeletonError> {
            joint_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| SkeletonError::UnknownJoint(name.to_string()))
        };

        let mut body_subset = Vec::with_capacity(definition.body_subset.len());
        for name in &definition.body_subset {
            let j = index(name)?;
            if !body_subset.contains(&j) {
                body_subset.push(j);
            }
        }

        let mut limbs: Vec<Limb> = Vec::with_capacity(definition.limbs.len());
        for (na, nb) in &definition.limbs {
            let (a, b) = (index(na)?, index(nb)?);
            if a == b {
                return Err(SkeletonError::SelfLimb(pair_label(na, nb)));
            }
            if limbs
                .iter()
                .any(|l| (l.a == a && l.b == b) || (l.a == b && l.b == a))
            {
                return Err(SkeletonError::DuplicateLimb(pair_label(na, nb)));
            }
            let length = definition
                .lengths_m
                .iter()
                .find(|((x, y), _)| (x == na && y == nb) || (x == nb && y == na))
                .map(|(_, len)| *len)
                .ok_or_else(|| SkeletonError::MissingLength(pair_label(na, nb)))?;
            if !(length > 0.0) || !length.is_finite() {
                return Err(SkeletonError::NonPositiveLength {
                    limb: pair_label(na, nb),
                    length,
                });
            }
            limbs.push(Limb { a, b, length });
        }

        let mut masses = Vec::with_capacity(definition.com_weights.len());
        let mut sum = 0.0;
        for (names, weight) in &definition.com_weights {
            let (a, b) = match names.as_slice() {
                [single] => {
                    let j = index(single)?;
                    (j, j)
                }
                [na, nb] => (index(na)?, index(nb)?),
                _ => {
                    return Err(SkeletonError::UnknownJoint(names.join("-")));
                }
            };
            if !(*weight > 0.0) || !weight.is_finite() {
                return Err(SkeletonError::NonPositiveWeight {
                    segment: names.join("-"),
                    weight: *weight,
                });
            }
            sum += weight;
            masses.push(MassSegment {
                a,
                b,
                weight: *weight,
            });
        }
        if (sum - 1.0).abs() > MASS_SUM_TOLERANCE {
            return Err(SkeletonError::MassSum { sum });
        }

        Ok(Self {
            joint_names,
            body_subset,
            limbs,
            masses,
        })
    }

    /// The built-in 24-joint skier model.
    pub fn default_skier() -> Self {
        Self::from_definition(&default_definition()).expect("built-in skeleton is valid")
    }

    pub fn n_joints(&self) -> usize {
        self.joint_names.len()
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn joint_name(&self, j: usize) -> &str {
        &self.joint_names[j]
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }

    pub fn body_subset(&self) -> &[usize] {
        &self.body_subset
    }

    pub fn limbs(&self) -> &[Limb] {
        &self.limbs
    }

    pub fn masses(&self) -> &[MassSegment] {
        &self.masses
    }

    /// Replaces reference limb lengths, e.g. with measurements of a
    /// specific athlete. `lengths` must have one entry per limb.
    pub fn with_limb_lengths(mut self, lengths: &[f64]) -> Result<Self, SkeletonError> {
        assert_eq!(lengths.len(), self.limbs.len(), "one length per limb");
        for (limb, &length) in self.limbs.iter_mut().zip(lengths) {
            if !(length > 0.0) || !length.is_finite() {
                return Err(SkeletonError::NonPositiveLength {
                    limb: pair_label(&self.joint_names[limb.a], &self.joint_names[limb.b]),
                    length,
                });
            }
            limb.length = length;
        }
        Ok(self)
    }

    /// Left/right counterpart of a joint by its `_l`/`_r` suffix; central
    /// joints map to themselves.
    pub fn mirror_joint(&self, j: usize) -> Option<usize> {
        let name = self.joint_names.get(j)?;
        if let Some(stem) = name.strip_suffix("_l") {
            self.joint_index(&format!("{stem}_r"))
        } else if let Some(stem) = name.strip_suffix("_r") {
            self.joint_index(&format!("{stem}_l"))
        } else {
            Some(j)
        }
    }

    /// Converts back to a name-based definition (same joint order).
    pub fn to_definition(&self) -> SkeletonDefinition {
        let name = |j: usize| self.joint_names[j].clone();
        SkeletonDefinition {
            joints: self.joint_names.clone(),
            body_subset: self.body_subset.iter().map(|&j| name(j)).collect(),
            limbs: self.limbs.iter().map(|l| (name(l.a), name(l.b))).collect(),
            lengths_m: self
                .limbs
                .iter()
                .map(|l| ((name(l.a), name(l.b)), l.length))
                .collect(),
            com_weights: self
                .masses
                .iter()
                .map(|m| {
                    let names = if m.is_point() {
                        alloc::vec![name(m.a)]
                    } else {
                        alloc::vec![name(m.a), name(m.b)]
                    };
                    (names, m.weight)
                })
                .collect(),
        }
    }
}

/// Joint names of the default model, in index order.
pub const DEFAULT_JOINTS: [&str; 24] = [
    "head",
    "neck",
    "shoulder_r",
    "elbow_r",
    "hand_r",
    "shoulder_l",
    "elbow_l",
    "hand_l",
    "hip_r",
    "knee_r",
    "ankle_r",
    "hip_l",
    "knee_l",
    "ankle_l",
    "toes_r",
    "heel_r",
    "toes_l",
    "heel_l",
    "ski_tip_r",
    "ski_tail_r",
    "ski_tip_l",
    "ski_tail_l",
    "pole_basket_r",
    "pole_basket_l",
];

/// The first 14 joints form the body subset.
pub const BODY_JOINT_COUNT: usize = 14;

const DEFAULT_LIMBS: [(&str, &str); 28] = [
    ("head", "neck"),
    ("neck", "shoulder_r"),
    ("neck", "shoulder_l"),
    ("shoulder_r", "elbow_r"),
    ("elbow_r", "hand_r"),
    ("hand_r", "pole_basket_r"),
    ("shoulder_l", "elbow_l"),
    ("elbow_l", "hand_l"),
    ("hand_l", "pole_basket_l"),
    ("shoulder_r", "hip_r"),
    ("shoulder_l", "hip_l"),
    ("hip_r", "hip_l"),
    ("hip_r", "knee_r"),
    ("knee_r", "ankle_r"),
    ("hip_l", "knee_l"),
    ("knee_l", "ankle_l"),
    ("ankle_r", "heel_r"),
    ("ankle_r", "toes_r"),
    ("heel_r", "toes_r"),
    ("ankle_l", "heel_l"),
    ("ankle_l", "toes_l"),
    ("heel_l", "toes_l"),
    ("ski_tip_r", "ski_tail_r"),
    ("ankle_r", "ski_tip_r"),
    ("ankle_r", "ski_tail_r"),
    ("ski_tip_l", "ski_tail_l"),
    ("ankle_l", "ski_tip_l"),
    ("ankle_l", "ski_tail_l"),
];

/// Relative segment masses per body side; the head is a single central
/// point mass.
const SIDE_MASSES: [(&str, Option<&str>, f64); 9] = [
    ("shoulder", Some("hip"), 0.1835),
    ("shoulder", Some("elbow"), 0.023),
    ("elbow", Some("hand"), 0.014),
    ("hand", None, 0.006),
    ("hip", Some("knee"), 0.119),
    ("knee", Some("ankle"), 0.038),
    ("toes", Some("heel"), 0.038),
    ("ski_tip", Some("ski_tail"), 0.043),
    ("hand", Some("pole_basket"), 0.003),
];
const HEAD_MASS: f64 = 0.065;

/// Rest pose of the default model in a body frame (x forward, y left,
/// z up, origin between the hip joints), in meters.
pub fn rest_pose() -> [Vector3<f64>; 24] {
    let v = Vector3::new;
    [
        v(0.02, 0.0, 0.74),     // head
        v(0.0, 0.0, 0.55),      // neck
        v(0.0, -0.19, 0.50),    // shoulder_r
        v(0.02, -0.22, 0.21),   // elbow_r
        v(0.22, -0.24, 0.10),   // hand_r
        v(0.0, 0.19, 0.50),     // shoulder_l
        v(0.02, 0.22, 0.21),    // elbow_l
        v(0.22, 0.24, 0.10),    // hand_l
        v(0.0, -0.10, 0.0),     // hip_r
        v(0.0, -0.10, -0.45),   // knee_r
        v(0.0, -0.10, -0.88),   // ankle_r
        v(0.0, 0.10, 0.0),      // hip_l
        v(0.0, 0.10, -0.45),    // knee_l
        v(0.0, 0.10, -0.88),    // ankle_l
        v(0.19, -0.10, -0.93),  // toes_r
        v(-0.09, -0.10, -0.94), // heel_r
        v(0.19, 0.10, -0.93),   // toes_l
        v(-0.09, 0.10, -0.94),  // heel_l
        v(1.00, -0.10, -0.97),  // ski_tip_r
        v(-0.75, -0.10, -0.97), // ski_tail_r
        v(1.00, 0.10, -0.97),   // ski_tip_l
        v(-0.75, 0.10, -0.97),  // ski_tail_l
        v(-0.10, -0.34, -0.98), // pole_basket_r
        v(-0.10, 0.34, -0.98),  // pole_basket_l
    ]
}

/// Name-based definition of the built-in model.
pub fn default_definition() -> SkeletonDefinition {
    let rest = rest_pose();
    let idx = |name: &str| DEFAULT_JOINTS.iter().position(|n| *n == name).unwrap();
    let joints: Vec<String> = DEFAULT_JOINTS.iter().map(|s| s.to_string()).collect();
    let limbs: Vec<(String, String)> = DEFAULT_LIMBS
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    let lengths_m = DEFAULT_LIMBS
        .iter()
        .map(|(a, b)| {
            let len = (rest[idx(a)] - rest[idx(b)]).norm();
            ((a.to_string(), b.to_string()), len)
        })
        .collect();
    let mut com_weights = alloc::vec![(alloc::vec!["head".to_string()], HEAD_MASS)];
    for side in ["r", "l"] {
        for (a, b, w) in SIDE_MASSES {
            let mut names = alloc::vec![format!("{a}_{side}")];
            if let Some(b) = b {
                names.push(format!("{b}_{side}"));
            }
            com_weights.push((names, w));
        }
    }
    SkeletonDefinition {
        body_subset: joints[..BODY_JOINT_COUNT].to_vec(),
        joints,
        limbs,
        lengths_m,
        com_weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_24_joints_and_14_body_joints() {
        let skel = SkeletonModel::default_skier();
        assert_eq!(skel.n_joints(), 24);
        assert_eq!(skel.body_subset().len(), 14);
        assert_eq!(skel.limbs().len(), 28);
        assert!(skel.limbs().iter().all(|l| l.length > 0.0));
    }

    #[test]
    fn mass_weights_sum_by_hand() {
        // head once, every other segment on both sides
        let per_side: f64 = 0.1835 + 0.023 + 0.014 + 0.006 + 0.119 + 0.038 + 0.038 + 0.043 + 0.003;
        let hand_sum = 0.065 + 2.0 * per_side;
        assert!((hand_sum - 1.0).abs() < 1e-12);
        let skel = SkeletonModel::default_skier();
        let sum: f64 = skel.masses().iter().map(|m| m.weight).sum();
        assert!((sum - hand_sum).abs() < 1e-12);
    }

    #[test]
    fn doubled_side_weights_are_rejected() {
        let mut def = default_definition();
        for (names, w) in def.com_weights.iter_mut() {
            if names[0].ends_with("_l") {
                *w *= 2.0;
            }
        }
        match SkeletonModel::from_definition(&def) {
            Err(SkeletonError::MassSum { sum }) => assert!((sum - 1.4675).abs() < 1e-9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_length_is_rejected() {
        let mut def = default_definition();
        def.lengths_m[3].1 = 0.0;
        assert!(matches!(
            SkeletonModel::from_definition(&def),
            Err(SkeletonError::NonPositiveLength { .. })
        ));
    }

    #[test]
    fn structural_errors() {
        let mut def = default_definition();
        def.limbs.push(("neck".into(), "head".into()));
        assert!(matches!(
            SkeletonModel::from_definition(&def),
            Err(SkeletonError::DuplicateLimb(_))
        ));

        let mut def = default_definition();
        def.limbs.push(("neck".into(), "tail".into()));
        assert!(matches!(
            SkeletonModel::from_definition(&def),
            Err(SkeletonError::UnknownJoint(_))
        ));

        let mut def = default_definition();
        def.joints.push("neck".into());
        assert!(matches!(
            SkeletonModel::from_definition(&def),
            Err(SkeletonError::DuplicateJoint(_))
        ));

        let mut def = default_definition();
        def.com_weights[0].1 = -0.065;
        assert!(matches!(
            SkeletonModel::from_definition(&def),
            Err(SkeletonError::NonPositiveWeight { .. })
        ));
    }

    #[test]
    fn weights_and_lengths_are_mirrored() {
        let skel = SkeletonModel::default_skier();
        for m in skel.masses() {
            let (ma, mb) = (skel.mirror_joint(m.a).unwrap(), skel.mirror_joint(m.b).unwrap());
            let twin = skel
                .masses()
                .iter()
                .find(|o| o.a == ma && o.b == mb)
                .expect("mirrored segment");
            assert_eq!(twin.weight, m.weight);
        }
        for l in skel.limbs() {
            let (ma, mb) = (skel.mirror_joint(l.a).unwrap(), skel.mirror_joint(l.b).unwrap());
            let twin = skel
                .limbs()
                .iter()
                .find(|o| (o.a == ma && o.b == mb) || (o.a == mb && o.b == ma))
                .expect("mirrored limb");
            assert!((twin.length - l.length).abs() < 1e-12);
        }
    }

    #[test]
    fn definition_round_trip_keeps_indices() {
        let skel = SkeletonModel::default_skier();
        let again = SkeletonModel::from_definition(&skel.to_definition()).unwrap();
        assert_eq!(skel, again);
    }
}
