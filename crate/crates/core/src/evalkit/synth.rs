//! Synthetic patch features with a known normal subspace.
//!
//! Normal patches come from a Gaussian mixture living on a random rank-`r`
//! subspace (`r = d / 2`) plus isotropic noise. Anomalous patches are normal
//! draws displaced by `shift` along a random unit direction orthogonal to
//! that subspace.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::bank::{FeatureBank, QueryBatch};
use crate::error::{Error, Result};
use crate::evalkit::PatchGrid;

/// Mixture shape. `noise_std` is the σ anomalies are measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub components: usize,
    /// Standard deviation of the component centers inside the subspace.
    pub center_std: f64,
    /// Within-component standard deviation inside the subspace.
    pub component_std: f64,
    pub noise_std: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            components: 6,
            center_std: 1.0,
            component_std: 0.05,
            noise_std: 0.05,
        }
    }
}

struct Generator {
    d: usize,
    rank: usize,
    basis: DMatrix<f64>,
    centers: Vec<DVector<f64>>,
    cfg: SynthConfig,
    rng: Xoshiro256PlusPlus,
}

impl Generator {
    fn new(d: usize, cfg: SynthConfig, seed: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Parameter(format!("synthetic data needs d >= 2, got {d}")));
        }
        if cfg.components == 0 {
            return Err(Error::Parameter("mixture needs at least one component".into()));
        }
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let gauss = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let basis = gauss.qr().q();
        let rank = d / 2;
        let centers = (0..cfg.components)
            .map(|_| DVector::from_fn(rank, |_, _| cfg.center_std * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        Ok(Self {
            d,
            rank,
            basis,
            centers,
            cfg,
            rng,
        })
    }

    fn normal(&mut self) -> Vec<f64> {
        let c = self.rng.random_range(0..self.centers.len());
        let coords = DVector::from_fn(self.rank, |i, _| {
            self.centers[c][i] + self.cfg.component_std * self.rng.sample::<f64, _>(StandardNormal)
        });
        let mut v = self.basis.columns(0, self.rank) * coords;
        for x in v.iter_mut() {
            *x += self.cfg.noise_std * self.rng.sample::<f64, _>(StandardNormal);
        }
        v.as_slice().to_vec()
    }

    /// Random unit vector in the orthogonal complement of the subspace.
    fn off_subspace_direction(&mut self) -> Vec<f64> {
        let k = self.d - self.rank;
        let coords = DVector::from_fn(k, |_, _| self.rng.sample::<f64, _>(StandardNormal)).normalize();
        (self.basis.columns(self.rank, k) * coords).as_slice().to_vec()
    }

    fn displaced(&mut self, direction: &[f64], shift: f64) -> Vec<f64> {
        let mut v = self.normal();
        for (x, u) in v.iter_mut().zip(direction) {
            *x += shift * u;
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub bank: FeatureBank,
    /// Normal queries first, then anomalous ones.
    pub queries: QueryBatch,
    /// True for anomalous queries.
    pub labels: Vec<bool>,
}

/// Patch-level dataset with the default mixture.
pub fn synth_dataset(
    d: usize,
    n_train: usize,
    n_test_normal: usize,
    n_test_anom: usize,
    shift: f64,
    seed: u64,
) -> Result<SynthData> {
    synth_dataset_with(SynthConfig::default(), d, n_train, n_test_normal, n_test_anom, shift, seed)
}

pub fn synth_dataset_with(
    cfg: SynthConfig,
    d: usize,
    n_train: usize,
    n_test_normal: usize,
    n_test_anom: usize,
    shift: f64,
    seed: u64,
) -> Result<SynthData> {
    if n_train == 0 || n_test_normal == 0 || n_test_anom == 0 {
        return Err(Error::Parameter("all sample counts must be at least 1".into()));
    }
    let mut g = Generator::new(d, cfg, seed)?;
    let train: Vec<Vec<f64>> = (0..n_train).map(|_| g.normal()).collect();
    let mut test: Vec<Vec<f64>> = (0..n_test_normal).map(|_| g.normal()).collect();
    for _ in 0..n_test_anom {
        let u = g.off_subspace_direction();
        test.push(g.displaced(&u, shift));
    }
    let mut labels = vec![false; n_test_normal];
    labels.resize(n_test_normal + n_test_anom, true);
    Ok(SynthData {
        bank: FeatureBank::from_patches(&train)?,
        queries: QueryBatch::from_patches(&test)?,
        labels,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthImagesConfig {
    pub d: usize,
    pub grid: PatchGrid,
    pub n_train: usize,
    pub n_test_normal: usize,
    pub n_test_anom: usize,
    pub shift: f64,
    /// Largest defect extent in patches along each axis.
    pub max_defect: usize,
    pub seed: u64,
    pub mixture: SynthConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthImage {
    pub image_id: String,
    pub patches: FeatureBank,
    pub anomalous: bool,
    /// Per-patch 0/1 defect mask, row-major over the grid.
    pub mask: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthImages {
    pub grid: PatchGrid,
    pub train: Vec<SynthImage>,
    pub test: Vec<SynthImage>,
}

/// Whole images: every patch is a normal draw except, in anomalous images,
/// a rectangular defect displaced along one shared off-subspace direction.
pub fn synth_images(cfg: &SynthImagesConfig) -> Result<SynthImages> {
    if cfg.n_train == 0 || cfg.n_test_normal == 0 || cfg.n_test_anom == 0 {
        return Err(Error::Parameter("all image counts must be at least 1".into()));
    }
    let grid = cfg.grid;
    let p = grid.len();
    let mut g = Generator::new(cfg.d, cfg.mixture, cfg.seed)?;

    let normal_image = |g: &mut Generator, id: String| -> Result<SynthImage> {
        let patches: Vec<Vec<f64>> = (0..p).map(|_| g.normal()).collect();
        Ok(SynthImage {
            image_id: id,
            patches: FeatureBank::from_patches(&patches)?,
            anomalous: false,
            mask: vec![0.0; p],
        })
    };
    let train = (0..cfg.n_train)
        .map(|i| normal_image(&mut g, format!("train_{i:04}")))
        .collect::<Result<Vec<_>>>()?;
    let mut test = (0..cfg.n_test_normal)
        .map(|i| normal_image(&mut g, format!("good_{i:04}")))
        .collect::<Result<Vec<_>>>()?;

    let max_h = cfg.max_defect.clamp(1, grid.rows());
    let max_w = cfg.max_defect.clamp(1, grid.cols());
    for i in 0..cfg.n_test_anom {
        let h = g.rng.random_range(1..=max_h);
        let w = g.rng.random_range(1..=max_w);
        let top = g.rng.random_range(0..=grid.rows() - h);
        let left = g.rng.random_range(0..=grid.cols() - w);
        let u = g.off_subspace_direction();
        let mut mask = vec![0.0; p];
        let mut patches = Vec::with_capacity(p);
        for r in 0..grid.rows() {
            for c in 0..grid.cols() {
                if (top..top + h).contains(&r) && (left..left + w).contains(&c) {
                    mask[r * grid.cols() + c] = 1.0;
                    patches.push(g.displaced(&u, cfg.shift));
                } else {
                    patches.push(g.normal());
                }
            }
        }
        test.push(SynthImage {
            image_id: format!("defect_{i:04}"),
            patches: FeatureBank::from_patches(&patches)?,
            anomalous: true,
            mask,
        });
    }
    Ok(SynthImages { grid, train, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = synth_dataset(8, 50, 5, 5, 0.5, 42).unwrap();
        let b = synth_dataset(8, 50, 5, 5, 0.5, 42).unwrap();
        let c = synth_dataset(8, 50, 5, 5, 0.5, 43).unwrap();
        assert_eq!(a, b);
        assert!(a.bank.as_slice().iter().zip(b.bank.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a.bank, c.bank);
        assert_eq!(a.labels.iter().filter(|&&l| l).count(), 5);
        assert_eq!(a.queries.len(), 10);
    }

    #[test]
    fn anomalies_move_off_the_subspace() {
        let mut g = Generator::new(6, SynthConfig::default(), 1).unwrap();
        let u = g.off_subspace_direction();
        let onto = g.basis.columns(0, g.rank).tr_mul(&DVector::from_column_slice(&u));
        assert!(onto.norm() < 1e-12);
        assert!((DVector::from_column_slice(&u).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(synth_dataset(1, 10, 1, 1, 0.0, 0).is_err());
        assert!(synth_dataset(4, 0, 1, 1, 0.0, 0).is_err());
    }

    #[test]
    fn images_have_defect_masks() {
        let cfg = SynthImagesConfig {
            d: 8,
            grid: PatchGrid::new(4, 5).unwrap(),
            n_train: 3,
            n_test_normal: 2,
            n_test_anom: 4,
            shift: 1.0,
            max_defect: 2,
            seed: 9,
            mixture: SynthConfig::default(),
        };
        let imgs = synth_images(&cfg).unwrap();
        assert_eq!(imgs.train.len(), 3);
        assert_eq!(imgs.test.len(), 6);
        for img in &imgs.test {
            assert_eq!(img.patches.len(), 20);
            let marked = img.mask.iter().filter(|&&m| m == 1.0).count();
            assert_eq!(img.anomalous, marked > 0);
            assert!(marked <= 4);
        }
        assert_eq!(synth_images(&cfg).unwrap(), imgs);
    }
}
