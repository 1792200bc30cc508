use super::{GraspType, ProbabilityMaps};
use crate::error::{invalid_input, Result};
use crate::saliency::Roi;

/// Region score per grasp type: the mean per-pixel probability over the
/// region's pixels.
pub fn score_roi(p: &ProbabilityMaps, roi: &Roi) -> Result<[f64; 6]> {
    if roi.w == 0 || roi.h == 0 {
        return Err(invalid_input("empty region"));
    }
    if roi.x + roi.w > p.width() || roi.y + roi.h > p.height() {
        return Err(invalid_input(format!(
            "region {}x{}+{}+{} exceeds map {}x{}",
            roi.w,
            roi.h,
            roi.x,
            roi.y,
            p.width(),
            p.height()
        )));
    }
    if !roi.mask.is_empty() && roi.mask.len() != roi.w * roi.h {
        return Err(invalid_input("region mask does not match its bounds"));
    }
    let mut sums = [0f64; 6];
    let mut count = 0usize;
    let width = p.width();
    for (x, y) in roi.pixels() {
        let i = y * width + x;
        for (s, sum) in GraspType::ALL.iter().zip(sums.iter_mut()) {
            *sum += p.plane(*s)[i] as f64;
        }
        count += 1;
    }
    if count == 0 {
        return Err(invalid_input("region mask selects no pixels"));
    }
    Ok(sums.map(|s| s / count as f64))
}

/// Arg-max over the six scores; ties go to the lowest type code.
pub fn select_type(scores: &[f64; 6]) -> Result<GraspType> {
    if scores.iter().any(|s| s.is_nan()) {
        return Err(invalid_input("NaN grasp score"));
    }
    let mut best = 0;
    for i in 1..6 {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    Ok(GraspType::ALL[best])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::ImageF;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_maps(w: usize, h: usize, seed: u64) -> ProbabilityMaps {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ProbabilityMaps::new(ImageF::from_fn(w, h, 6, |_, _, _| rng.gen::<f32>())).unwrap()
    }

    #[test]
    fn constant_channel_scores_its_value() {
        let img = ImageF::from_fn(10, 10, 6, |_, _, c| if c == 2 { 0.7 } else { 0.0 });
        let s = score_roi(&ProbabilityMaps::new(img).unwrap(), &Roi::rect(2, 3, 4, 5)).unwrap();
        assert!((s[2] - 0.7).abs() < 1e-7);
        assert_eq!(s[0], 0.0);
    }

    #[test]
    fn two_by_two_mean() {
        let vals = [0.2f32, 0.4, 0.6, 0.8];
        let img = ImageF::from_fn(2, 2, 6, |x, y, c| if c == 0 { vals[y * 2 + x] } else { 0.0 });
        let s = score_roi(&ProbabilityMaps::new(img).unwrap(), &Roi::rect(0, 0, 2, 2)).unwrap();
        assert!((s[0] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn empty_or_outside_regions_fail() {
        let p = random_maps(8, 8, 1);
        assert!(score_roi(&p, &Roi::rect(0, 0, 0, 3)).is_err());
        assert!(score_roi(&p, &Roi::rect(6, 6, 4, 4)).is_err());
        let mut r = Roi::rect(0, 0, 2, 2);
        r.mask = vec![false; 4];
        assert!(score_roi(&p, &r).is_err());
    }

    #[test]
    fn union_is_pixel_weighted_mean() {
        let p = random_maps(30, 20, 9);
        let a = Roi::rect(0, 0, 10, 20);
        let b = Roi::rect(10, 0, 5, 20);
        let u = Roi::rect(0, 0, 15, 20);
        let (sa, sb, su) = (
            score_roi(&p, &a).unwrap(),
            score_roi(&p, &b).unwrap(),
            score_roi(&p, &u).unwrap(),
        );
        for s in 0..6 {
            let expected = (sa[s] * 200.0 + sb[s] * 100.0) / 300.0;
            assert!((su[s] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn select_type_cases() {
        assert_eq!(select_type(&[0.1, 0.2, 0.9, 0.1, 0.1, 0.1]).unwrap(), GraspType::Power);
        assert_eq!(select_type(&[0.3; 6]).unwrap(), GraspType::LargeWrap);
        assert!(select_type(&[0.1, f64::NAN, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn dominant_pinch_channel_is_selected() {
        let img = ImageF::from_fn(20, 20, 6, |x, _, c| match c {
            3 => 0.8,
            4 => 0.3 + 0.01 * x as f32,
            _ => 0.1,
        });
        let s = score_roi(&ProbabilityMaps::new(img).unwrap(), &Roi::rect(0, 0, 20, 20)).unwrap();
        assert_eq!(select_type(&s).unwrap(), GraspType::Pinch);
    }

    proptest! {
        #[test]
        fn argmax_survives_monotone_transforms(
            scores in prop::array::uniform6(0.0f64..1.0),
            a in 0.1f64..10.0,
            b in -5.0f64..5.0,
        ) {
            let t1 = scores.map(|s| a * s + b);
            let t2 = scores.map(|s| (3.0 * s).exp());
            let base = select_type(&scores).unwrap();
            prop_assert_eq!(select_type(&t1).unwrap(), base);
            prop_assert_eq!(select_type(&t2).unwrap(), base);
        }

        #[test]
        fn outside_pixels_do_not_matter(seed in 0u64..1000, v in 0.0f32..1.0) {
            let p = random_maps(16, 16, seed);
            let roi = Roi::rect(3, 4, 6, 5);
            let mut img = p.image().clone();
            for c in 0..6 {
                img.set(0, 0, c, v);
                img.set(15, 15, c, v);
            }
            let q = ProbabilityMaps::new(img).unwrap();
            prop_assert_eq!(score_roi(&p, &roi).unwrap(), score_roi(&q, &roi).unwrap());
        }
    }
}
