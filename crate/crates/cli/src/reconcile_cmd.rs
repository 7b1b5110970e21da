use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use reconcile_core::io::{write_predictions, write_rounds};
use reconcile_core::{reconcile, ReconcileConfig};

use crate::files::{load_dataset, load_model, write_atomic};
use crate::{OutDir, Status};

#[derive(Args, Debug)]
pub struct ReconcileArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub epsilon: f64,
    /// Dataset CSV: `example_id,label[,features...]`.
    #[arg(long)]
    pub data: PathBuf,
    /// Predictions of the first model: `example_id,prediction`.
    #[arg(long)]
    pub f1: PathBuf,
    #[arg(long)]
    pub f2: PathBuf,
    /// Grid resolution; defaults to the smallest allowed.
    #[arg(long)]
    pub m: Option<u64>,
    #[command(flatten)]
    pub out: OutDir,
}

pub fn run(args: &ReconcileArgs) -> Result<Status> {
    let mut cfg = ReconcileConfig::new(args.alpha, args.epsilon)?;
    if let Some(m) = args.m {
        cfg = cfg.with_m(m)?;
    }
    let data = load_dataset(&args.data)?;
    let f1 = load_model(&args.f1, &data)?;
    let f2 = load_model(&args.f2, &data)?;
    let (_, run) = reconcile(f1, f2, &data, &cfg)?;

    let out = &args.out.out;
    let json = run.transcript.to_json()?;
    write_atomic(&out.join("transcript.json"), |w| Ok(w.write_all(json.as_bytes())?))?;
    write_atomic(&out.join("rounds.csv"), |w| Ok(write_rounds(&run.reports, w)?))?;
    write_atomic(&out.join("f1_final.csv"), |w| Ok(write_predictions(&run.f1, &data, w)?))?;
    write_atomic(&out.join("f2_final.csv"), |w| Ok(write_predictions(&run.f2, &data, w)?))?;
    println!(
        "rounds={} t1={} t2={} final_mass={}",
        run.transcript.len(),
        run.transcript.t1(),
        run.transcript.t2(),
        run.final_mass
    );
    Ok(Status::Ok)
}
