use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use reconcile_core::io::{write_predictions, write_replayed_rounds};
use reconcile_core::reconcile::{reference_class_gap, PatchedModelPair};
use reconcile_core::{disagreement_split, GroupMask, Transcript};

use crate::files::{load_dataset, load_model, write_atomic};
use crate::{OutDir, Status};

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[arg(long)]
    pub transcript: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Base predictions of the first model.
    #[arg(long)]
    pub f1: PathBuf,
    #[arg(long)]
    pub f2: PathBuf,
    #[command(flatten)]
    pub out: OutDir,
}

/// Replays the transcript from the base predictions, writes the replayed final predictions and
/// per-round diagnostics, and fails with status 1 if the replayed pair still disagrees on an
/// `alpha` fraction of the data or breaks the reference-class bound on the whole dataset.
pub fn run(args: &AuditArgs) -> Result<Status> {
    let text =
        std::fs::read_to_string(&args.transcript).with_context(|| format!("reading {}", args.transcript.display()))?;
    let transcript = Transcript::from_json(&text)?;
    let data = load_dataset(&args.data)?;
    let f1 = load_model(&args.f1, &data)?;
    let f2 = load_model(&args.f2, &data)?;
    let cfg = transcript.config().clone();
    let pair = PatchedModelPair::new(f1, f2, transcript);

    let (p1, p2) = pair.predict_all_raw(&data)?;
    let diagnostics = pair.replay_diagnostics(&data)?;
    let out = &args.out.out;
    write_atomic(&out.join("f1_final.csv"), |w| Ok(write_predictions(&p1, &data, w)?))?;
    write_atomic(&out.join("f2_final.csv"), |w| Ok(write_predictions(&p2, &data, w)?))?;
    write_atomic(&out.join("rounds.csv"), |w| Ok(write_replayed_rounds(pair.transcript(), &diagnostics, w)?))?;

    let mass = disagreement_split(&p1, &p2, cfg.epsilon, &data)?.mass();
    let gap = reference_class_gap(&pair, &GroupMask::all(data.len()), &data)?;
    println!("rounds={} final_mass={mass} gap={} bound={}", pair.transcript().len(), gap.gap(), gap.bound);
    if mass < cfg.alpha && gap.within_bound {
        Ok(Status::Ok)
    } else {
        eprintln!("audit failed: final mass {mass} (alpha {}) or gap {} above {}", cfg.alpha, gap.gap(), gap.bound);
        Ok(Status::BoundViolated)
    }
}
