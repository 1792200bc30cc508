use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{pmap, GraspType, LabelMasks, ProbabilityMaps};
use crate::error::{invalid_input, invalid_param, Result};
use crate::imaging::{gaussian_blur, ImageF};
use crate::scene::{CameraModel, Scene, Shape};

/// Source of per-pixel grasp-type probabilities for a camera view.
/// Implementations hold no mutable state.
pub trait ProbabilityProvider: Send + Sync {
    fn predict(&self, scene: &Scene, camera: &CameraModel) -> Result<ProbabilityMaps>;
}

/// Width bands (pixels) and smoothing for [`SyntheticProvider`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderRules {
    pub pinch_below: f64,
    pub tripod_below: f64,
    pub power_below: f64,
    /// Cylinders with radius at most this (metres) also get SmallWrap.
    pub small_wrap_radius: f64,
    pub sigma: f64,
}

impl Default for ProviderRules {
    fn default() -> Self {
        Self {
            pinch_below: 15.0,
            tripod_below: 30.0,
            power_below: 60.0,
            small_wrap_radius: 0.025,
            sigma: 2.0,
        }
    }
}

impl ProviderRules {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.pinch_below && self.pinch_below < self.tripod_below && self.tripod_below < self.power_below) {
            return Err(invalid_param("width bands must be positive and increasing"));
        }
        if !(self.small_wrap_radius >= 0.0) {
            return Err(invalid_param("small_wrap_radius must be >= 0"));
        }
        if !(self.sigma > 0.0) {
            return Err(invalid_param("sigma must be > 0"));
        }
        Ok(())
    }

    /// Unsmoothed probabilities for one object pixel of local width `w_px`.
    pub fn values(&self, w_px: f64, small_cylinder: bool) -> [f32; 6] {
        let mut v = [0.0f32; 6];
        let mut put = |t: GraspType, p: f32| v[t.channel()] = p;
        if w_px < self.pinch_below {
            put(GraspType::Pinch, 0.9);
        } else if w_px < self.tripod_below {
            put(GraspType::Tripod, 0.8);
            put(GraspType::Precision, 0.6);
        } else if w_px < self.power_below {
            put(GraspType::Power, 0.8);
            put(GraspType::Precision, 0.5);
        } else {
            put(GraspType::LargeWrap, 0.9);
        }
        if small_cylinder {
            put(GraspType::SmallWrap, 0.85);
        }
        v
    }
}

/// Rule-based stand-in for a learned grasp-type segmenter: classifies each
/// rendered object pixel by the local width of its object silhouette.
#[derive(Debug, Clone, Default)]
pub struct SyntheticProvider {
    pub rules: ProviderRules,
}

impl SyntheticProvider {
    pub fn new(rules: ProviderRules) -> Result<Self> {
        rules.validate()?;
        Ok(Self { rules })
    }

    /// Unsmoothed rule output, six channels.
    pub fn raw_maps(&self, scene: &Scene, camera: &CameraModel) -> ImageF {
        let (w, h) = (camera.width, camera.height);
        let labels = scene.object_labels(camera);
        let mut out = ImageF::new(w, h, 6);
        for (i, obj) in scene.objects.iter().enumerate() {
            let mask: Vec<bool> = labels.iter().map(|l| *l == Some(i)).collect();
            if !mask.iter().any(|&m| m) {
                continue;
            }
            let small = matches!(obj.shape, Shape::Cylinder { r, .. } if r <= self.rules.small_wrap_radius);
            let thick = local_thickness(&mask, w, h);
            for (p, &m) in mask.iter().enumerate() {
                if m {
                    let v = self.rules.values(thick[p] as f64, small);
                    for (c, &val) in v.iter().enumerate() {
                        out.plane_mut(c)[p] = val;
                    }
                }
            }
        }
        out
    }

    /// Ground truth the rules were generated from: a type is labelled wherever
    /// its rule fires.
    pub fn generating_masks(&self, scene: &Scene, camera: &CameraModel) -> LabelMasks {
        let raw = self.raw_maps(scene, camera);
        LabelMasks::new(raw.map(|v| if v > 0.0 { 1.0 } else { 0.0 })).expect("binary six-channel masks")
    }
}

impl ProbabilityProvider for SyntheticProvider {
    /// Rule maps smoothed inside the object silhouettes (normalized
    /// convolution): values blend across band changes within an object but
    /// do not bleed onto the background, which stays 0.
    fn predict(&self, scene: &Scene, camera: &CameraModel) -> Result<ProbabilityMaps> {
        self.rules.validate()?;
        let raw = self.raw_maps(scene, camera);
        let (w, h) = raw.dims();
        let labels = scene.object_labels(camera);
        let mask = ImageF::from_fn(w, h, 1, |x, y, _| labels[y * w + x].is_some() as u8 as f32);
        let smooth = gaussian_blur(&raw, self.rules.sigma)?;
        let weight = gaussian_blur(&mask, self.rules.sigma)?;
        let out = ImageF::from_fn(w, h, 6, |x, y, c| {
            let m = weight.get(x, y, 0);
            if mask.get(x, y, 0) > 0.0 && m > 0.0 {
                (smooth.get(x, y, c) / m).clamp(0.0, 1.0)
            } else {
                0.0
            }
        });
        ProbabilityMaps::new(out)
    }
}

/// Serves precomputed maps from a PMAP file.
#[derive(Debug, Clone)]
pub struct FileProvider {
    pub path: PathBuf,
}

impl FileProvider {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }
}

impl ProbabilityProvider for FileProvider {
    fn predict(&self, _scene: &Scene, camera: &CameraModel) -> Result<ProbabilityMaps> {
        let maps = pmap::read_maps(&self.path)?;
        if (maps.width(), maps.height()) != (camera.width, camera.height) {
            return Err(invalid_input(format!(
                "{} holds {}x{} maps, camera is {}x{}",
                self.path.display(),
                maps.width(),
                maps.height(),
                camera.width,
                camera.height
            )));
        }
        Ok(maps)
    }
}

/// Exact squared Euclidean distance from every pixel to the nearest `false`
/// pixel. With no `false` pixel at all, distances are infinite.
pub fn squared_distance_transform(mask: &[bool], w: usize, h: usize) -> Vec<f64> {
    let mut d: Vec<f64> = mask.iter().map(|&m| if m { f64::INFINITY } else { 0.0 }).collect();
    let mut line = Vec::new();
    let mut out = Vec::new();
    for x in 0..w {
        line.clear();
        line.extend((0..h).map(|y| d[y * w + x]));
        lower_envelope(&line, &mut out);
        for y in 0..h {
            d[y * w + x] = out[y];
        }
    }
    for y in 0..h {
        line.clear();
        line.extend_from_slice(&d[y * w..(y + 1) * w]);
        lower_envelope(&line, &mut out);
        d[y * w..(y + 1) * w].copy_from_slice(&out);
    }
    d
}

// One-dimensional pass of the lower-envelope-of-parabolas transform.
fn lower_envelope(f: &[f64], out: &mut Vec<f64>) {
    let n = f.len();
    out.clear();
    out.resize(n, f64::INFINITY);
    let sites: Vec<usize> = (0..n).filter(|&q| f[q].is_finite()).collect();
    if sites.is_empty() {
        return;
    }
    let mut v: Vec<usize> = Vec::with_capacity(sites.len());
    let mut z: Vec<f64> = Vec::with_capacity(sites.len() + 1);
    let inter = |q: usize, p: usize| {
        let (qf, pf) = (q as f64, p as f64);
        ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf))
    };
    for &q in &sites {
        while let Some(&p) = v.last() {
            if inter(q, p) <= *z.last().unwrap() {
                v.pop();
                z.pop();
            } else {
                break;
            }
        }
        z.push(if v.is_empty() {
            f64::NEG_INFINITY
        } else {
            inter(q, *v.last().unwrap())
        });
        v.push(q);
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < q as f64 {
            k += 1;
        }
        let dq = q as f64 - v[k] as f64;
        *o = dq * dq + f[v[k]];
    }
}

/// Local thickness of a binary silhouette in pixels: for each foreground
/// pixel, the diameter of the largest inscribed disc that covers it. A strip
/// `k` pixels wide has thickness `k`. Background pixels are 0.
pub fn local_thickness(mask: &[bool], w: usize, h: usize) -> Vec<f32> {
    assert_eq!(mask.len(), w * h, "mask size");
    // Outside the image counts as background.
    let (pw, ph) = (w + 2, h + 2);
    let mut padded = vec![false; pw * ph];
    for y in 0..h {
        for x in 0..w {
            padded[(y + 1) * pw + x + 1] = mask[y * w + x];
        }
    }
    let d2 = squared_distance_transform(&padded, pw, ph);
    let mut centers: Vec<(usize, usize, f64)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if mask[y * w + x] {
                centers.push((x, y, d2[(y + 1) * pw + x + 1].sqrt()));
            }
        }
    }
    // Largest discs first so each pixel keeps the first (largest) value painted.
    centers.sort_by(|a, b| b.2.total_cmp(&a.2));
    let mut out = vec![0f32; w * h];
    for (cx, cy, r) in centers {
        let width = (2.0 * r - 1.0) as f32;
        let ri = r.ceil() as isize;
        let r2 = r * r;
        for dy in -ri..=ri {
            let y = cy as isize + dy;
            if y < 0 || y >= h as isize {
                continue;
            }
            for dx in -ri..=ri {
                let x = cx as isize + dx;
                if x < 0 || x >= w as isize || ((dx * dx + dy * dy) as f64) >= r2 {
                    continue;
                }
                let o = &mut out[y as usize * w + x as usize];
                if *o == 0.0 && mask[y as usize * w + x as usize] {
                    *o = width;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{pose_from_rpy, PrimitiveObject};
    use proptest::prelude::*;

    fn brute_d2(mask: &[bool], w: usize, h: usize) -> Vec<f64> {
        (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as f64, (i / w) as f64);
                (0..w * h)
                    .filter(|&j| !mask[j])
                    .map(|j| ((j % w) as f64 - x).powi(2) + ((j / w) as f64 - y).powi(2))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn edt_matches_brute_force(bits in proptest::collection::vec(any::<bool>(), 9 * 7)) {
            // Bias towards foreground so distances are non-trivial.
            let mask: Vec<bool> = bits.iter().enumerate().map(|(i, &b)| b || i % 3 != 0).collect();
            prop_assert_eq!(squared_distance_transform(&mask, 9, 7), brute_d2(&mask, 9, 7));
        }
    }

    #[test]
    fn strip_thickness_equals_width() {
        let (w, h) = (40, 30);
        for k in [1usize, 4, 7, 12] {
            let mask: Vec<bool> = (0..w * h).map(|i| (10..10 + k).contains(&(i / w))).collect();
            let t = local_thickness(&mask, w, h);
            // Away from the strip ends.
            for y in 10..10 + k {
                for x in k + 2..w - k - 2 {
                    let v = t[y * w + x];
                    assert!((v - k as f32).abs() <= 1.0, "k={k} got {v}");
                }
            }
            assert_eq!(t[0], 0.0);
        }
    }

    #[test]
    fn disc_thickness_is_uniform() {
        let (w, h) = (64, 64);
        let mask: Vec<bool> = (0..w * h)
            .map(|i| ((i % w) as f64 - 32.0).hypot((i / w) as f64 - 32.0) < 20.0)
            .collect();
        let t = local_thickness(&mask, w, h);
        for (i, &m) in mask.iter().enumerate() {
            if m {
                assert!((t[i] - 39.0).abs() <= 2.0, "{}", t[i]);
            }
        }
    }

    fn overhead() -> CameraModel {
        CameraModel::overhead(0.6, 200, 150, 300.0).unwrap()
    }

    #[test]
    fn thin_capsule_is_pinch() {
        // 1.6 cm wide at ~0.59 m → about 8 px.
        let scene = Scene::new(
            vec![PrimitiveObject::new(
                "banana",
                Shape::Capsule { r: 0.008, l: 0.15 },
                pose_from_rpy([0.0, 0.0, 0.008], [0.0, std::f64::consts::FRAC_PI_2, 0.3]),
                [0.9, 0.8, 0.1],
            )],
            Some(0.0),
        )
        .unwrap();
        let p = SyntheticProvider::default().predict(&scene, &overhead()).unwrap();
        let (cx, cy) = (100, 75);
        for t in GraspType::ALL {
            if t != GraspType::Pinch {
                assert!(p.at(cx, cy, t) < p.at(cx, cy, GraspType::Pinch));
            }
        }
    }

    #[test]
    fn large_box_is_large_wrap() {
        // 0.2 m square top at 0.5 m depth → about 120 px.
        let scene = Scene::new(
            vec![PrimitiveObject::new(
                "box",
                Shape::Box {
                    sx: 0.2,
                    sy: 0.2,
                    sz: 0.2,
                },
                pose_from_rpy([0.0, 0.0, 0.1], [0.0; 3]),
                [0.2, 0.2, 0.8],
            )],
            Some(0.0),
        )
        .unwrap();
        let p = SyntheticProvider::default().predict(&scene, &overhead()).unwrap();
        assert!(p.at(100, 75, GraspType::LargeWrap) > 0.85);
        for t in GraspType::ALL {
            if t != GraspType::LargeWrap {
                assert_eq!(p.at(100, 75, t), 0.0);
            }
        }
    }

    #[test]
    fn empty_scene_gives_zero_maps() {
        let p = SyntheticProvider::default()
            .predict(&Scene::empty(), &overhead())
            .unwrap();
        assert!(p.image().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn small_cylinder_adds_small_wrap() {
        let rules = ProviderRules::default();
        let v = rules.values(40.0, true);
        assert_eq!(v[GraspType::SmallWrap.channel()], 0.85);
        assert_eq!(v[GraspType::Power.channel()], 0.8);
        assert_eq!(rules.values(40.0, false)[GraspType::SmallWrap.channel()], 0.0);
    }

    #[test]
    fn smoothing_stays_on_objects() {
        let scene = Scene::new(
            vec![PrimitiveObject::new(
                "ball",
                Shape::Sphere { r: 0.05 },
                nalgebra::Isometry3::translation(0.0, 0.0, 0.05),
                [0.8, 0.2, 0.2],
            )],
            Some(0.0),
        )
        .unwrap();
        let cam = CameraModel::overhead(0.7, 160, 120, 250.0).unwrap();
        let prov = SyntheticProvider::default();
        let raw = prov.raw_maps(&scene, &cam);
        let pred = prov.predict(&scene, &cam).unwrap();
        let labels = scene.object_labels(&cam);
        for (i, l) in labels.iter().enumerate() {
            for t in GraspType::ALL {
                let (p, r) = (pred.plane(t)[i], raw.plane(t.channel())[i]);
                if l.is_none() {
                    assert_eq!(p, 0.0);
                } else {
                    // A single-band object keeps its rule values.
                    assert!((p - r).abs() < 1e-6, "{t} at {i}: {p} vs {r}");
                }
            }
        }
    }

    #[test]
    fn file_provider_checks_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pmap");
        pmap::write_file(&ImageF::filled(8, 6, 6, 0.25), &path).unwrap();
        let fp = FileProvider::new(&path);
        let cam = CameraModel::overhead(0.5, 8, 6, 10.0).unwrap();
        assert_eq!(
            fp.predict(&Scene::empty(), &cam).unwrap().at(1, 1, GraspType::Tripod),
            0.25
        );
        let cam2 = CameraModel::overhead(0.5, 9, 6, 10.0).unwrap();
        assert!(fp.predict(&Scene::empty(), &cam2).is_err());
    }
}
