use anyhow::{Context, Result};

use crd_core::evalkit::{synth_images, PatchGrid, SynthConfig, SynthImage, SynthImagesConfig};
use crd_core::io::{write_f32_rows, write_feature_tensor, write_manifest, DatasetManifest, ImageLabel, ManifestEntry};
use crd_core::FeatureBank;

use crate::args::SynthArgs;

pub fn run(args: SynthArgs) -> Result<()> {
    let mixture = SynthConfig::default();
    let cfg = SynthImagesConfig {
        d: args.d,
        grid: PatchGrid::new(args.grid_h, args.grid_w)?,
        n_train: args.n_train,
        n_test_normal: args.n_test_normal,
        n_test_anom: args.n_test_anom,
        shift: args.shift_sigma * mixture.noise_std,
        max_defect: args.max_defect,
        seed: args.seed,
        mixture,
    };
    let data = synth_images(&cfg)?;

    let out = &args.out;
    for sub in ["train", "test", "masks"] {
        std::fs::create_dir_all(out.join(sub)).with_context(|| format!("creating {}", out.join(sub).display()))?;
    }

    let write_split = |split: &str, images: &[SynthImage], masks: bool| -> Result<DatasetManifest> {
        let mut entries = Vec::with_capacity(images.len());
        for img in images {
            let feature_path = out.join(split).join(format!("{}.ftb", img.image_id));
            write_feature_tensor(&feature_path, &img.patches)?;
            let mask_path = if masks {
                let p = out.join("masks").join(format!("{}.ftb", img.image_id));
                write_f32_rows(&p, data.grid.rows(), data.grid.cols(), &img.mask)?;
                Some(p)
            } else {
                None
            };
            entries.push(ManifestEntry {
                feature_path,
                image_id: img.image_id.clone(),
                label: if img.anomalous { ImageLabel::Anomalous } else { ImageLabel::Normal },
                mask_path,
                grid: data.grid,
            });
        }
        Ok(DatasetManifest { entries })
    };

    let train = write_split("train", &data.train, false)?;
    write_manifest(out.join("train.csv"), &train)?;
    let test = write_split("test", &data.test, true)?;
    write_manifest(out.join("test.csv"), &test)?;
    let bank = FeatureBank::concat(&data.train.iter().map(|i| i.patches.clone()).collect::<Vec<_>>())?;
    write_feature_tensor(out.join("bank.ftb"), &bank)?;

    println!("wrote {}", out.display());
    println!("  bank.ftb   {} patches, d={}", bank.len(), bank.dim());
    println!("  train.csv  {} images", train.len());
    println!("  test.csv   {} images ({} anomalous)", test.len(), args.n_test_anom);
    Ok(())
}
