use super::{GraspType, LabelMasks, ProbabilityMaps};
use crate::error::{invalid_input, Result};

fn check_dims(pred: &ProbabilityMaps, gt: &LabelMasks) -> Result<()> {
    if (pred.width(), pred.height()) != (gt.width(), gt.height()) {
        return Err(invalid_input(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    Ok(())
}

/// Per-type intersection over union after binarizing predictions at
/// `bin_threshold`. A type absent from both prediction and ground truth scores 1.
pub fn iou_per_type(pred: &ProbabilityMaps, gt: &LabelMasks, bin_threshold: f32) -> Result<[f64; 6]> {
    check_dims(pred, gt)?;
    let mut out = [0.0; 6];
    for s in GraspType::ALL {
        let (p, g) = (pred.plane(s), gt.image().plane(s.channel()));
        let (mut inter, mut union) = (0usize, 0usize);
        for (&pv, &gv) in p.iter().zip(g) {
            let (a, b) = (pv >= bin_threshold, gv != 0.0);
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        out[s.channel()] = if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    }
    Ok(out)
}

pub fn mean_iou(iou: &[f64; 6]) -> f64 {
    iou.iter().sum::<f64>() / 6.0
}

/// Row `g` is the mean predicted probability vector over pixels labelled `g`,
/// normalized to sum to one. Rows without labelled pixels stay zero.
pub fn confusion_matrix(pred: &ProbabilityMaps, gt: &LabelMasks) -> Result<[[f64; 6]; 6]> {
    check_dims(pred, gt)?;
    let mut m = [[0.0; 6]; 6];
    for g in GraspType::ALL {
        let labels = gt.image().plane(g.channel());
        let row = &mut m[g.channel()];
        let mut count = 0usize;
        for (i, _) in labels.iter().enumerate().filter(|(_, &l)| l != 0.0) {
            count += 1;
            for s in GraspType::ALL {
                row[s.channel()] += pred.plane(s)[i] as f64;
            }
        }
        let total: f64 = row.iter().sum();
        if count > 0 && total > 0.0 {
            row.iter_mut().for_each(|v| *v /= total);
        } else {
            *row = [0.0; 6];
        }
    }
    Ok(m)
}
