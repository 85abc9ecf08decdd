//! CSV dataset manifests.
//!
//! Header: `feature_path,image_id,label,mask_path,grid_h,grid_w`. `label` is
//! `0` (normal) or `1` (anomalous); `mask_path` may be empty. Relative paths
//! resolve against the manifest's own directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bank::FeatureBank;
use crate::error::{Error, Result};
use crate::evalkit::PatchGrid;
use crate::io::tensor::{read_f32_rows, read_feature_tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImageLabel {
    Normal,
    Anomalous,
}

impl ImageLabel {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ImageLabel::Normal),
            1 => Some(ImageLabel::Anomalous),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            ImageLabel::Normal => 0,
            ImageLabel::Anomalous => 1,
        }
    }

    pub fn is_anomalous(self) -> bool {
        self == ImageLabel::Anomalous
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub feature_path: PathBuf,
    pub image_id: String,
    pub label: ImageLabel,
    pub mask_path: Option<PathBuf>,
    pub grid: PatchGrid,
}

impl ManifestEntry {
    /// Loads the entry's patch features, checking them against the grid.
    pub fn load_features(&self) -> Result<FeatureBank> {
        let bank = read_feature_tensor(&self.feature_path)?;
        if bank.len() != self.grid.len() {
            return Err(Error::format(
                &self.feature_path,
                format!(
                    "image {} has {} patches but grid {}x{} needs {}",
                    self.image_id,
                    bank.len(),
                    self.grid.rows(),
                    self.grid.cols(),
                    self.grid.len()
                ),
            ));
        }
        Ok(bank)
    }

    /// Loads the label mask as `(rows, cols, row-major 0/1 values)`.
    pub fn load_mask(&self) -> Result<Option<(usize, usize, Vec<f64>)>> {
        let Some(path) = &self.mask_path else {
            return Ok(None);
        };
        let (h, w, values) = read_f32_rows(path)?;
        if values.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Validation(format!(
                "{}: mask values must be 0 or 1",
                path.display()
            )));
        }
        Ok(Some((h, w, values)))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn has_masks(&self) -> bool {
        self.entries.iter().any(|e| e.mask_path.is_some())
    }

    /// Concatenates the features of every entry into one bank.
    pub fn load_bank(&self) -> Result<FeatureBank> {
        let banks = self
            .entries
            .iter()
            .map(ManifestEntry::load_features)
            .collect::<Result<Vec<_>>>()?;
        FeatureBank::concat(&banks)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    feature_path: String,
    image_id: String,
    label: u8,
    mask_path: String,
    grid_h: usize,
    grid_w: usize,
}

fn base_dir(manifest: &Path) -> PathBuf {
    manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let base = base_dir(path);
    let mut reader = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let mut entries = Vec::new();
    for (row, record) in reader.deserialize::<Record>().enumerate() {
        let rec = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let label = ImageLabel::from_code(rec.label).ok_or_else(|| {
            Error::format(path, format!("row {}: label {} is not 0 or 1", row + 1, rec.label))
        })?;
        let grid = PatchGrid::new(rec.grid_h, rec.grid_w)
            .map_err(|e| Error::format(path, format!("row {}: {e}", row + 1)))?;
        let mask_path = (!rec.mask_path.trim().is_empty()).then(|| base.join(rec.mask_path.trim()));
        entries.push(ManifestEntry {
            feature_path: base.join(&rec.feature_path),
            image_id: rec.image_id,
            label,
            mask_path,
            grid,
        });
    }
    if entries.is_empty() {
        return Err(Error::format(path, "manifest has no entries"));
    }
    Ok(DatasetManifest { entries })
}

/// Writes a manifest; paths under the manifest's directory are stored relative.
pub fn write_manifest(path: impl AsRef<Path>, manifest: &DatasetManifest) -> Result<()> {
    let path = path.as_ref();
    let base = base_dir(path);
    let rel = |p: &Path| -> String {
        p.strip_prefix(&base)
            .unwrap_or(p)
            .to_string_lossy()
            .into_owned()
    };
    let mut writer = csv::Writer::from_writer(Vec::new());
    for e in &manifest.entries {
        writer
            .serialize(Record {
                feature_path: rel(&e.feature_path),
                image_id: e.image_id.clone(),
                label: e.label.code(),
                mask_path: e.mask_path.as_deref().map(rel).unwrap_or_default(),
                grid_h: e.grid.rows(),
                grid_w: e.grid.cols(),
            })
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?;
    super::write_atomic(path, &bytes)
}
