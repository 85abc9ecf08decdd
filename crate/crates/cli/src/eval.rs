use anyhow::Result;

use crd_core::baselines::{greedy_coreset, knn_scores};
use crd_core::crd::crd_score_blocked;
use crd_core::io::{load_model, read_feature_tensor};
use crd_core::{build_scorer, FeatureBank, LAMBDA_GRID};

use crate::args::EvalArgs;
use crate::exit::usage;
use crate::images::{
    image_auroc, load_manifest_images, pixel_auroc, resolve_threshold, score_images, write_scores_csv, LoadedImage,
};

const BLOCK: usize = 256;

struct Row {
    method: String,
    image: f64,
    pixel: Option<f64>,
}

fn evaluate<F>(method: String, images: &[LoadedImage], score: F) -> Result<Row>
where
    F: Fn(&crd_core::QueryBatch) -> crd_core::Result<Vec<f64>> + Sync,
{
    let scored = score_images(images, score)?;
    Ok(Row {
        method,
        image: image_auroc(&scored)?,
        pixel: pixel_auroc(images, &scored)?,
    })
}

fn print_rows(header: &str, rows: &[Row]) {
    println!("{header:<24} {:>12} {:>12}", "image AUROC", "pixel AUROC");
    for r in rows {
        let pixel = r.pixel.map_or_else(|| "-".to_string(), |p| format!("{p:.4}"));
        println!("{:<24} {:>12.4} {:>12}", r.method, r.image, pixel);
    }
}

fn nn_rows(args: &EvalArgs, bank: &FeatureBank, images: &[LoadedImage]) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    if args.baselines || args.coreset_fraction.is_some() {
        let name = if args.k == 1 { "NN".to_string() } else { format!("kNN (k={})", args.k) };
        rows.push(evaluate(name, images, |q| knn_scores(bank, q, args.k))?);
    }
    if let Some(fraction) = args.coreset_fraction {
        let sel = greedy_coreset(bank, fraction, args.seed)?;
        let core = sel.apply(bank)?;
        let k = args.k.min(core.len());
        let name = format!("coreset-NN ({} of {}, k={k})", core.len(), bank.len());
        rows.push(evaluate(name, images, |q| knn_scores(&core, q, k))?);
    }
    Ok(rows)
}

pub fn run(args: EvalArgs) -> Result<()> {
    let images = load_manifest_images(&args.manifest)?;
    if args.model.is_some() && (args.baselines || args.coreset_fraction.is_some() || args.sweep_lambda) {
        return Err(usage("baselines and --sweep-lambda need --bank, not --model"));
    }
    let bank = args.bank.as_ref().map(read_feature_tensor).transpose()?;
    let scorer = match (&args.model, &bank) {
        (Some(path), _) => load_model(path)?,
        (None, Some(bank)) => build_scorer(bank, args.lambda)?,
        (None, None) => unreachable!("clap requires --bank or --model"),
    };

    let crd = |q: &_| crd_score_blocked(&scorer, q, BLOCK);
    let scored = score_images(&images, crd)?;
    let mut rows = vec![Row {
        method: format!("CRD (lambda={})", scorer.lambda()),
        image: image_auroc(&scored)?,
        pixel: pixel_auroc(&images, &scored)?,
    }];
    if let Some(bank) = &bank {
        rows.extend(nn_rows(&args, bank, &images)?);
    }
    print_rows("method", &rows);

    if let (true, Some(bank)) = (args.sweep_lambda, &bank) {
        let mut sweep = Vec::new();
        for lambda in LAMBDA_GRID {
            let s = build_scorer(bank, lambda)?;
            sweep.push(evaluate(format!("{lambda}"), &images, |q| crd_score_blocked(&s, q, BLOCK))?);
        }
        println!();
        print_rows("lambda", &sweep);
        let peak = sweep
            .iter()
            .max_by(|a, b| a.image.total_cmp(&b.image))
            .expect("grid is nonempty");
        println!("peak image AUROC at lambda={}", peak.method);
    }

    if let Some(out) = &args.out {
        let threshold = resolve_threshold(&args.threshold, &scored, crd)?;
        write_scores_csv(out, &scored, threshold)?;
        println!("scores written to {}", out.display());
    }
    Ok(())
}
