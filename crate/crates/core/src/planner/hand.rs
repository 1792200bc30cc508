use serde::{Deserialize, Serialize};

use crate::detect::GraspType;
use crate::error::{invalid_param, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandKind {
    FiveFinger,
    ThreeFinger,
    TwoFinger,
}

impl HandKind {
    pub fn finger_count(self) -> usize {
        match self {
            HandKind::FiveFinger => 5,
            HandKind::ThreeFinger => 3,
            HandKind::TwoFinger => 2,
        }
    }
}

impl std::str::FromStr for HandKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "five_finger" | "five" | "5" => Ok(HandKind::FiveFinger),
            "three_finger" | "three" | "3" => Ok(HandKind::ThreeFinger),
            "two_finger" | "two" | "2" => Ok(HandKind::TwoFinger),
            _ => Err(invalid_param(format!("unknown hand kind {s:?}"))),
        }
    }
}

/// Parametric hand: a palm disc with straight capsule fingers hinged on the
/// palm plane.
///
/// Palm frame: `x` and `y` span the palm, `z` is the approach direction.
/// Finger 0 is the thumb; fingers sit at `y < 0` (thumb side) or `y > 0` and
/// close towards the palm's `x` axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandModel {
    pub kind: HandKind,
    pub palm_radius: f64,
    pub finger_length: f64,
    pub finger_radius: f64,
    pub finger_base_offsets: Vec<[f64; 2]>,
    /// Fingertip spread of the open hand, metres.
    pub max_aperture: f64,
    /// Normal force at which a closing finger stops, newtons.
    pub force_threshold: f64,
}

impl HandModel {
    /// Anthropomorphic five-finger hand.
    pub fn five_finger() -> Self {
        let b = 0.05;
        Self {
            kind: HandKind::FiveFinger,
            palm_radius: 0.05,
            finger_length: 0.08,
            finger_radius: 0.008,
            finger_base_offsets: vec![[0.0, -b], [-0.03, b], [-0.01, b], [0.01, b], [0.03, b]],
            max_aperture: 0.2,
            force_threshold: 5.0,
        }
    }

    /// Three-finger hand: one thumb opposing two fingers.
    pub fn three_finger() -> Self {
        let b = 0.035;
        Self {
            kind: HandKind::ThreeFinger,
            palm_radius: 0.04,
            finger_length: 0.08,
            finger_radius: 0.008,
            finger_base_offsets: vec![[0.0, -b], [-0.025, b], [0.025, b]],
            max_aperture: 0.18,
            force_threshold: 5.0,
        }
    }

    /// Two-jaw gripper.
    pub fn two_finger() -> Self {
        let b = 0.03;
        Self {
            kind: HandKind::TwoFinger,
            palm_radius: 0.035,
            finger_length: 0.07,
            finger_radius: 0.008,
            finger_base_offsets: vec![[0.0, -b], [0.0, b]],
            max_aperture: 0.14,
            force_threshold: 5.0,
        }
    }

    pub fn preset(kind: HandKind) -> Self {
        match kind {
            HandKind::FiveFinger => Self::five_finger(),
            HandKind::ThreeFinger => Self::three_finger(),
            HandKind::TwoFinger => Self::two_finger(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.finger_base_offsets.len() != self.kind.finger_count() {
            return Err(invalid_param(format!(
                "{:?} hand needs {} fingers, got {}",
                self.kind,
                self.kind.finger_count(),
                self.finger_base_offsets.len()
            )));
        }
        let positive = [
            self.palm_radius,
            self.finger_length,
            self.finger_radius,
            self.max_aperture,
            self.force_threshold,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid_param("hand dimensions and force threshold must be positive"));
        }
        if self.finger_base_offsets.iter().any(|o| o[1] == 0.0) {
            return Err(invalid_param("finger bases must lie off the palm x axis"));
        }
        if self.finger_base_offsets[0][1] > 0.0 {
            return Err(invalid_param("the thumb (finger 0) must sit at y < 0"));
        }
        Ok(())
    }

    /// Opening angle of every finger, radians away from the approach axis.
    pub fn open_angle(&self, finger: usize) -> f64 {
        let b = self.finger_base_offsets[finger][1].abs();
        ((0.5 * self.max_aperture - b) / self.finger_length)
            .clamp(-1.0, 1.0)
            .asin()
    }

    /// Final closing angle: the fingertip reaches the palm's x axis.
    pub fn closed_angle(&self, finger: usize) -> f64 {
        let b = self.finger_base_offsets[finger][1].abs();
        -(b / self.finger_length).min(1.0).asin()
    }

    /// Default palm standoff for the pre-grasp, metres. Pinches target thin,
    /// low objects, so the palm stays far enough back for the fingertips to
    /// meet near the object's widest section rather than over its top.
    pub fn default_standoff(&self, s: GraspType) -> f64 {
        match s {
            GraspType::Pinch => 0.85 * self.finger_length,
            _ => 0.625 * self.finger_length,
        }
    }

    /// Indices of the fingers used for a grasp type: the thumb plus the
    /// remaining fingers closest to the palm centre line.
    pub fn active_fingers(&self, s: GraspType) -> Vec<usize> {
        let k = fingers_for_type(s, self);
        let mut others: Vec<usize> = (1..self.finger_base_offsets.len()).collect();
        others.sort_by(|&a, &b| {
            let (xa, xb) = (
                self.finger_base_offsets[a][0].abs(),
                self.finger_base_offsets[b][0].abs(),
            );
            xa.total_cmp(&xb).then(a.cmp(&b))
        });
        let mut out = vec![0];
        out.extend(others.into_iter().take(k - 1));
        out.sort_unstable();
        out
    }
}

/// Number of fingers a grasp type uses on a given hand.
pub fn fingers_for_type(s: GraspType, hand: &HandModel) -> usize {
    match (hand.kind, s) {
        (HandKind::TwoFinger, _) => 2,
        (_, GraspType::Pinch) => 2,
        (_, GraspType::Tripod) => 3,
        (kind, _) => kind.finger_count(),
    }
}
