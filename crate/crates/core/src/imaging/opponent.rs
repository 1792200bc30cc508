use super::ImageF;
use crate::error::{invalid_input, Result};

/// Intensity plus red-green and blue-yellow opponent channels.
#[derive(Debug, Clone, PartialEq)]
pub struct OpponentImage {
    pub intensity: ImageF,
    pub rg: ImageF,
    pub by: ImageF,
}

impl OpponentImage {
    pub fn channels(&self) -> [&ImageF; 3] {
        [&self.intensity, &self.rg, &self.by]
    }
}

/// Converts an RGB image with values in `[0, 1]` to opponent space:
/// `I = (R+G+B)/3`, `RG = R-G`, `BY = B-(R+G)/2`.
pub fn to_opponent(rgb: &ImageF) -> Result<OpponentImage> {
    if rgb.channels() != 3 {
        return Err(invalid_input(format!("expected 3 channels, got {}", rgb.channels())));
    }
    let (w, h) = rgb.dims();
    let n = w * h;
    let (r, g, b) = (rgb.plane(0), rgb.plane(1), rgb.plane(2));
    let mut i = Vec::with_capacity(n);
    let mut rg = Vec::with_capacity(n);
    let mut by = Vec::with_capacity(n);
    for k in 0..n {
        let (r, g, b) = (r[k] as f64, g[k] as f64, b[k] as f64);
        i.push(((r + g + b) / 3.0) as f32);
        rg.push((r - g) as f32);
        by.push((b - 0.5 * (r + g)) as f32);
    }
    Ok(OpponentImage {
        intensity: ImageF::from_vec(w, h, 1, i)?,
        rg: ImageF::from_vec(w, h, 1, rg)?,
        by: ImageF::from_vec(w, h, 1, by)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pixel(r: f32, g: f32, b: f32) -> ImageF {
        ImageF::from_vec(1, 1, 3, vec![r, g, b]).unwrap()
    }

    #[test]
    fn gray_has_no_color() {
        let o = to_opponent(&pixel(0.5, 0.5, 0.5)).unwrap();
        assert_eq!(o.intensity.get(0, 0, 0), 0.5);
        assert_eq!(o.rg.get(0, 0, 0), 0.0);
        assert_eq!(o.by.get(0, 0, 0), 0.0);
    }

    #[test]
    fn pure_red() {
        let o = to_opponent(&pixel(1.0, 0.0, 0.0)).unwrap();
        assert!((o.intensity.get(0, 0, 0) - 1.0 / 3.0).abs() < 1e-7);
        assert_eq!(o.rg.get(0, 0, 0), 1.0);
        assert_eq!(o.by.get(0, 0, 0), -0.5);
    }

    #[test]
    fn rejects_wrong_channel_count() {
        let img = ImageF::new(4, 4, 1);
        assert!(matches!(to_opponent(&img), Err(crate::Error::InvalidInput(_))));
    }

    #[test]
    fn matches_scalar_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img = ImageF::from_fn(17, 11, 3, |_, _, _| rng.gen::<f32>());
        let o = to_opponent(&img).unwrap();
        for y in 0..11 {
            for x in 0..17 {
                let r = img.get(x, y, 0);
                let g = img.get(x, y, 1);
                let b = img.get(x, y, 2);
                assert!((o.intensity.get(x, y, 0) - (r + g + b) / 3.0).abs() < 1e-6);
                assert!((o.rg.get(x, y, 0) - (r - g)).abs() < 1e-6);
                assert!((o.by.get(x, y, 0) - (b - (r + g) / 2.0)).abs() < 1e-6);
                let i = o.intensity.get(x, y, 0);
                assert!((0.0..=1.0).contains(&i));
                assert!((-1.0..=1.0).contains(&o.rg.get(x, y, 0)));
                assert!((-1.0..=1.0).contains(&o.by.get(x, y, 0)));
            }
        }
    }

    #[test]
    fn opponent_map_has_full_rank() {
        // Columns are the images of unit R, G, B under the linear map.
        let cols: Vec<[f64; 3]> = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)]
            .iter()
            .map(|&(r, g, b)| {
                let o = to_opponent(&pixel(r, g, b)).unwrap();
                [
                    o.intensity.get(0, 0, 0) as f64,
                    o.rg.get(0, 0, 0) as f64,
                    o.by.get(0, 0, 0) as f64,
                ]
            })
            .collect();
        let m = nalgebra::Matrix3::from_fn(|i, j| cols[j][i]);
        assert!(m.determinant().abs() > 0.1);
    }
}
