use anyhow::Result;

use crd_core::crd::crd_score_blocked;
use crd_core::io::load_model;

use crate::args::ScoreArgs;
use crate::images::{load_manifest_images, resolve_threshold, score_images, write_heatmaps, write_scores_csv};

const BLOCK: usize = 256;

pub fn run(args: ScoreArgs) -> Result<()> {
    let scorer = load_model(&args.model)?;
    let images = load_manifest_images(&args.manifest)?;
    let score = |q: &_| crd_score_blocked(&scorer, q, BLOCK);
    let scored = score_images(&images, score)?;
    let threshold = resolve_threshold(&args.threshold, &scored, score)?;
    write_scores_csv(&args.out, &scored, threshold)?;
    let maps = write_heatmaps(&args.heatmap, &images, &scored)?;

    let flagged = scored.iter().filter(|s| threshold.is_anomalous(s.image_score)).count();
    println!("scored {} images, threshold {:e}, {} flagged", scored.len(), threshold.0, flagged);
    println!("scores written to {}", args.out.display());
    if !maps.is_empty() {
        println!("{} heatmaps written", maps.len());
    }
    Ok(())
}
