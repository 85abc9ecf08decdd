use std::time::Instant;

use anyhow::Result;

use crd_core::baselines::greedy_coreset;
use crd_core::io::{model_file_len, read_feature_tensor, read_manifest, save_model};
use crd_core::build_scorer;

use crate::args::FitArgs;

pub fn run(args: FitArgs) -> Result<()> {
    let mut bank = match (&args.bank, &args.manifest) {
        (Some(path), _) => read_feature_tensor(path)?,
        (None, Some(path)) => read_manifest(path)?.load_bank()?,
        (None, None) => unreachable!("clap requires --bank or --manifest"),
    };
    let full_n = bank.len();
    if let Some(fraction) = args.coreset_fraction {
        let sel = greedy_coreset(&bank, fraction, args.seed)?;
        bank = sel.apply(&bank)?;
    }

    let start = Instant::now();
    let scorer = build_scorer(&bank, args.lambda)?;
    let elapsed = start.elapsed();
    save_model(&args.model, &scorer)?;

    let d = bank.dim();
    println!("model      {}", args.model.display());
    println!("d          {d}");
    println!("n          {} (of {full_n})", bank.len());
    println!("lambda     {}", args.lambda);
    println!("build      {:.3} s", elapsed.as_secs_f64());
    println!("model size {} bytes", model_file_len(d));
    println!("bank size  {} bytes (f32)", d * bank.len() * 4);
    Ok(())
}
