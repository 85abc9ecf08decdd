//! Image-level decisions and evaluation: max aggregation, threshold
//! calibration, AUROC, heatmaps and a synthetic patch-feature generator.

use crate::error::{Error, Result};

pub mod heatmap;
pub mod roc;
pub mod synth;

pub use heatmap::{render_heatmap, Heatmap};
pub use roc::{auroc, roc_curve, RocCurve};
pub use synth::{synth_dataset, synth_dataset_with, synth_images, SynthConfig, SynthData, SynthImage, SynthImages, SynthImagesConfig};

/// Spatial layout of an image's patches (`rows × cols`, row-major).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatchGrid {
    rows: usize,
    cols: usize,
}

impl PatchGrid {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Parameter(format!(
                "patch grid must be at least 1x1, got {rows}x{cols}"
            )));
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Patch count `p = rows · cols`.
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredImage {
    pub image_id: String,
    pub grid: PatchGrid,
    pub patch_scores: Vec<f64>,
    pub image_score: f64,
    pub label: Option<bool>,
}

impl ScoredImage {
    pub fn new(image_id: impl Into<String>, grid: PatchGrid, patch_scores: Vec<f64>, label: Option<bool>) -> Result<Self> {
        if patch_scores.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: patch_scores.len(),
            });
        }
        let image_score = aggregate_image_score(&patch_scores)?;
        Ok(Self {
            image_id: image_id.into(),
            grid,
            patch_scores,
            image_score,
            label,
        })
    }
}

/// Image score: the largest patch score.
pub fn aggregate_image_score(patch_scores: &[f64]) -> Result<f64> {
    if patch_scores.is_empty() {
        return Err(Error::Parameter("no patch scores to aggregate".into()));
    }
    if patch_scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Validation("patch score is NaN".into()));
    }
    Ok(patch_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Decision threshold calibrated on normal images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold(pub f64);

impl Threshold {
    /// Anomalous iff the score is strictly above the threshold.
    pub fn is_anomalous(&self, score: f64) -> bool {
        score > self.0
    }
}

/// Threshold = largest score seen on the normal set.
pub fn calibrate_threshold(normal_image_scores: &[f64]) -> Result<Threshold> {
    if normal_image_scores.is_empty() {
        return Err(Error::Parameter("cannot calibrate on an empty normal set".into()));
    }
    aggregate_image_score(normal_image_scores).map(Threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate_image_score(&[0.1, 0.9, 0.2]).unwrap(), 0.9);
        assert_eq!(aggregate_image_score(&[0.3, 0.3, 0.3]).unwrap(), 0.3);
        assert_eq!(aggregate_image_score(&[4.5]).unwrap(), 4.5);
        assert!(matches!(aggregate_image_score(&[]), Err(Error::Parameter(_))));
    }

    #[test]
    fn threshold_is_strict() {
        let t = calibrate_threshold(&[0.2, 0.5, 0.3]).unwrap();
        assert_eq!(t.0, 0.5);
        assert!(!t.is_anomalous(0.5));
        assert!(t.is_anomalous(0.6));
        assert!(calibrate_threshold(&[]).is_err());
    }

    #[test]
    fn scored_image_checks_grid() {
        let grid = PatchGrid::new(2, 2).unwrap();
        let img = ScoredImage::new("a", grid, vec![0.0, 3.0, 1.0, 2.0], Some(true)).unwrap();
        assert_eq!(img.image_score, 3.0);
        assert!(ScoredImage::new("b", grid, vec![1.0], None).is_err());
        assert!(PatchGrid::new(0, 3).is_err());
    }

    proptest! {
        #[test]
        fn aggregate_and_calibrate_ignore_order(mut v in prop::collection::vec(0.0f64..100.0, 1..40), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let a = aggregate_image_score(&v).unwrap();
            let t = calibrate_threshold(&v).unwrap();
            v.shuffle(&mut rand_xoshiro::SplitMix64::seed_from_u64(seed));
            prop_assert_eq!(aggregate_image_score(&v).unwrap(), a);
            prop_assert_eq!(calibrate_threshold(&v).unwrap(), t);
        }
    }
}
