//! Per-image scoring shared by the score and eval commands.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use crd_core::evalkit::{render_heatmap, Heatmap};
use crd_core::io::{read_manifest, DatasetManifest, ManifestEntry};
use crd_core::{auroc, calibrate_threshold, QueryBatch, ScoredImage, Threshold};

use crate::args::{HeatmapArgs, HeatmapFormat, ThresholdArgs};

pub struct LoadedImage {
    pub entry: ManifestEntry,
    pub queries: QueryBatch,
    pub mask: Option<(usize, usize, Vec<f64>)>,
}

pub fn load_images(manifest: &DatasetManifest) -> Result<Vec<LoadedImage>> {
    manifest
        .entries
        .par_iter()
        .map(|entry| {
            let queries = entry.load_features()?.into();
            let mask = entry.load_mask()?;
            Ok(LoadedImage {
                entry: entry.clone(),
                queries,
                mask,
            })
        })
        .collect()
}

pub fn load_manifest_images(path: &Path) -> Result<Vec<LoadedImage>> {
    let manifest = read_manifest(path)?;
    load_images(&manifest)
}

/// Scores every image's patches with `patch_scores` and max-aggregates.
pub fn score_images<F>(images: &[LoadedImage], patch_scores: F) -> Result<Vec<ScoredImage>>
where
    F: Fn(&QueryBatch) -> crd_core::Result<Vec<f64>> + Sync,
{
    images
        .par_iter()
        .map(|img| {
            let scores = patch_scores(&img.queries)
                .with_context(|| format!("scoring {}", img.entry.feature_path.display()))?;
            Ok(ScoredImage::new(
                img.entry.image_id.clone(),
                img.entry.grid,
                scores,
                Some(img.entry.label.is_anomalous()),
            )?)
        })
        .collect()
}

pub fn image_auroc(scored: &[ScoredImage]) -> crd_core::Result<f64> {
    let scores: Vec<f64> = scored.iter().map(|s| s.image_score).collect();
    let labels: Vec<bool> = scored.iter().map(|s| s.label == Some(true)).collect();
    auroc(&scores, &labels)
}

fn default_heatmap_size(img: &LoadedImage) -> (usize, usize) {
    match &img.mask {
        Some((h, w, _)) => (*h, *w),
        None => (img.entry.grid.rows() * 8, img.entry.grid.cols() * 8),
    }
}

/// Pixel-level AUROC over images that carry a mask. Normal images without a
/// mask count as all-normal at the resolution of the first mask present.
/// `None` when the manifest has no masks.
pub fn pixel_auroc(images: &[LoadedImage], scored: &[ScoredImage]) -> Result<Option<f64>> {
    let Some(reference) = images.iter().find_map(|i| i.mask.as_ref().map(|m| (m.0, m.1))) else {
        return Ok(None);
    };
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (img, s) in images.iter().zip(scored) {
        let (h, w, mask) = match &img.mask {
            Some((h, w, m)) => (*h, *w, m.clone()),
            None if !img.entry.label.is_anomalous() => (reference.0, reference.1, vec![0.0; reference.0 * reference.1]),
            None => continue,
        };
        let map = render_heatmap(s.grid, &s.patch_scores, h, w)
            .with_context(|| format!("upsampling {} to its {h}x{w} mask", s.image_id))?;
        scores.extend_from_slice(&map.values);
        labels.extend(mask.iter().map(|&v| v == 1.0));
    }
    Ok(Some(auroc(&scores, &labels)?))
}

/// Fixed threshold, calibration manifest, or the label-0 images of `scored`.
pub fn resolve_threshold<F>(args: &ThresholdArgs, scored: &[ScoredImage], patch_scores: F) -> Result<Threshold>
where
    F: Fn(&QueryBatch) -> crd_core::Result<Vec<f64>> + Sync,
{
    if let Some(t) = args.threshold {
        return Ok(Threshold(t));
    }
    let normal: Vec<f64> = match &args.calibration {
        Some(path) => {
            let images = load_manifest_images(path)?;
            score_images(&images, patch_scores)?
                .iter()
                .filter(|s| s.label == Some(false))
                .map(|s| s.image_score)
                .collect()
        }
        None => scored
            .iter()
            .filter(|s| s.label == Some(false))
            .map(|s| s.image_score)
            .collect(),
    };
    calibrate_threshold(&normal).context("calibrating the threshold (no normal images)")
}

pub fn write_scores_csv(path: &Path, scored: &[ScoredImage], threshold: Threshold) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["image_id", "image_score", "label", "prediction"])?;
    for s in scored {
        let label = match s.label {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        let pred = if threshold.is_anomalous(s.image_score) { "1" } else { "0" };
        w.write_record([s.image_id.as_str(), &format!("{:e}", s.image_score), label, pred])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_heatmaps(args: &HeatmapArgs, images: &[LoadedImage], scored: &[ScoredImage]) -> Result<Vec<PathBuf>> {
    let Some(dir) = &args.heatmaps else {
        return Ok(Vec::new());
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    images
        .par_iter()
        .zip(scored)
        .map(|(img, s)| {
            let (h, w) = args.heatmap_size.unwrap_or_else(|| default_heatmap_size(img));
            let map: Heatmap = render_heatmap(s.grid, &s.patch_scores, h, w)?;
            let path = match args.heatmap_format {
                HeatmapFormat::Ftb => {
                    let p = dir.join(format!("{}.ftb", s.image_id));
                    map.write_ftb(&p)?;
                    p
                }
                HeatmapFormat::Pgm => {
                    let p = dir.join(format!("{}.pgm", s.image_id));
                    map.write_pgm(&p)?;
                    p
                }
            };
            Ok(path)
        })
        .collect()
}
