//! Grasp type scoring over a region, mean-shift grasp point localization,
//! probability-map providers and per-type evaluation metrics.

mod meanshift;
mod metrics;
pub mod pmap;
mod provider;
mod scoring;

pub use meanshift::{mean_shift_modes, mean_shift_step, select_point, Mode};
pub use metrics::{confusion_matrix, iou_per_type, mean_iou};
pub use provider::{local_thickness, FileProvider, ProbabilityProvider, ProviderRules, SyntheticProvider};
pub use scoring::{score_roi, select_type};

use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, Result};
use crate::imaging::ImageF;
use crate::saliency::Roi;

/// The six-way grasp taxonomy. Discriminants are the stable integer codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspType {
    LargeWrap = 1,
    SmallWrap = 2,
    Power = 3,
    Pinch = 4,
    Precision = 5,
    Tripod = 6,
}

impl GraspType {
    pub const ALL: [GraspType; 6] = [
        GraspType::LargeWrap,
        GraspType::SmallWrap,
        GraspType::Power,
        GraspType::Pinch,
        GraspType::Precision,
        GraspType::Tripod,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    /// Zero-based channel index in a [`ProbabilityMaps`] raster.
    pub fn channel(self) -> usize {
        self as usize - 1
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get((code as usize).checked_sub(1)?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            GraspType::LargeWrap => "large_wrap",
            GraspType::SmallWrap => "small_wrap",
            GraspType::Power => "power",
            GraspType::Pinch => "pinch",
            GraspType::Precision => "precision",
            GraspType::Tripod => "tripod",
        }
    }
}

impl std::fmt::Display for GraspType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Six per-pixel grasp-type probability planes, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMaps(ImageF);

impl ProbabilityMaps {
    pub fn new(maps: ImageF) -> Result<Self> {
        if maps.channels() != 6 {
            return Err(invalid_input(format!(
                "probability maps need 6 channels, got {}",
                maps.channels()
            )));
        }
        if maps.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid_input("probability values must lie in [0, 1]"));
        }
        Ok(Self(maps))
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self(ImageF::new(width, height, 6))
    }

    pub fn image(&self) -> &ImageF {
        &self.0
    }

    pub fn into_image(self) -> ImageF {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, s: GraspType) -> f32 {
        self.0.get(x, y, s.channel())
    }

    pub fn plane(&self, s: GraspType) -> &[f32] {
        self.0.plane(s.channel())
    }
}

/// Multi-label ground truth: six binary planes that may overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMasks(ImageF);

impl LabelMasks {
    pub fn new(masks: ImageF) -> Result<Self> {
        if masks.channels() != 6 {
            return Err(invalid_input(format!(
                "label masks need 6 channels, got {}",
                masks.channels()
            )));
        }
        if masks.data().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(invalid_input("label masks must be 0/1 valued"));
        }
        Ok(Self(masks))
    }

    pub fn image(&self) -> &ImageF {
        &self.0
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    #[inline]
    pub fn is_set(&self, x: usize, y: usize, s: GraspType) -> bool {
        self.0.get(x, y, s.channel()) != 0.0
    }
}

/// Grasp-relevant output for one region: the region, the chosen type, the
/// image grasp point and the region score of the chosen type.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspInfo {
    pub roi: Roi,
    pub grasp_type: GraspType,
    /// `[x, y]` in pixels, sub-pixel.
    pub point: [f64; 2],
    pub score: f64,
    pub scores: [f64; 6],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectParams {
    /// Flat-kernel radius for mean shift, pixels.
    pub bandwidth: f64,
    /// Minimum probability for a pixel to seed mean shift.
    pub activation: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            bandwidth: 15.0,
            activation: 0.3,
        }
    }
}

impl DetectParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0) {
            return Err(invalid_param("bandwidth must be > 0"));
        }
        if !(0.0..1.0).contains(&self.activation) {
            return Err(invalid_param("activation must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Scores the region, picks the best type and localizes its grasp point.
pub fn detect(p: &ProbabilityMaps, roi: &Roi, params: &DetectParams) -> Result<GraspInfo> {
    params.validate()?;
    let scores = score_roi(p, roi)?;
    let grasp_type = select_type(&scores)?;
    let modes = mean_shift_modes(p, grasp_type, roi, params.bandwidth, params.activation)?;
    let best = select_point(&modes, roi)?;
    Ok(GraspInfo {
        roi: roi.clone(),
        grasp_type,
        point: best.position,
        score: scores[grasp_type.channel()],
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(x: usize, y: usize, cx: f64, cy: f64, s: f64) -> f32 {
        let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        (-d2 / (2.0 * s * s)).exp() as f32
    }

    #[test]
    fn type_codes_are_stable() {
        let codes: Vec<u8> = GraspType::ALL.iter().map(|t| t.code()).collect();
        assert_eq!(codes, vec![1, 2, 3, 4, 5, 6]);
        for t in GraspType::ALL {
            assert_eq!(GraspType::from_code(t.code()), Some(t));
        }
        assert_eq!(GraspType::from_code(0), None);
        assert_eq!(GraspType::from_code(7), None);
    }

    #[test]
    fn dominant_power_fixture() {
        let img = ImageF::from_fn(96, 96, 6, |x, y, c| {
            if c == GraspType::Power.channel() {
                0.9 * gauss(x, y, 40.0, 40.0, 5.0)
            } else if c == GraspType::Precision.channel() {
                0.2 * gauss(x, y, 40.0, 40.0, 5.0)
            } else {
                0.0
            }
        });
        let p = ProbabilityMaps::new(img).unwrap();
        let roi = Roi::rect(20, 20, 40, 40);
        let info = detect(&p, &roi, &DetectParams::default()).unwrap();
        assert_eq!(info.grasp_type, GraspType::Power);
        assert!((info.point[0] - 40.0).abs() < 1.0 && (info.point[1] - 40.0).abs() < 1.0);
        assert!(roi.in_bounds(info.point[0], info.point[1]));
        assert!((0.0..=1.0).contains(&info.score));
    }

    #[test]
    fn all_zero_maps_have_no_grasp_point() {
        let p = ProbabilityMaps::zeros(32, 32);
        let err = detect(&p, &Roi::rect(0, 0, 32, 32), &DetectParams::default()).unwrap_err();
        assert!(matches!(err, crate::Error::NoGraspPoint));
    }

    #[test]
    fn detection_ignores_pixels_outside_roi() {
        let base = ImageF::from_fn(120, 60, 6, |x, y, c| {
            if c == GraspType::Pinch.channel() {
                0.8 * gauss(x, y, 30.0, 30.0, 4.0)
            } else {
                0.0
            }
        });
        let mut other = base.clone();
        // A strong second object to the right of the region.
        for y in 0..60 {
            for x in 70..120 {
                other.set(x, y, GraspType::LargeWrap.channel(), 1.0);
                other.set(x, y, GraspType::Pinch.channel(), 1.0);
            }
        }
        let roi = Roi::rect(5, 5, 50, 50);
        let a = detect(&ProbabilityMaps::new(base).unwrap(), &roi, &DetectParams::default()).unwrap();
        let b = detect(&ProbabilityMaps::new(other).unwrap(), &roi, &DetectParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn maps_validate_range_and_channels() {
        assert!(ProbabilityMaps::new(ImageF::new(4, 4, 5)).is_err());
        assert!(ProbabilityMaps::new(ImageF::filled(4, 4, 6, 1.5)).is_err());
        assert!(LabelMasks::new(ImageF::filled(4, 4, 6, 0.5)).is_err());
        assert!(LabelMasks::new(ImageF::filled(4, 4, 6, 1.0)).is_ok());
    }
}
