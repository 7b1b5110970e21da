use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use reconcile_core::contest::{BudgetConstants, Checkpoint, Verdict};
use reconcile_core::{ContestableState, Dataset, Error, GroupMask, TabularModel};

use crate::files::{load_dataset, load_model, write_atomic};
use crate::Status;

#[derive(Args, Debug)]
pub struct ContestArgs {
    /// Checkpoint file; resumed from when it exists, created otherwise.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// One group per line: comma-separated example ids, `all` or `none`.
    #[arg(long)]
    pub masks: PathBuf,
    /// Contestation dataset (required for new sessions).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Base model predictions on the contestation dataset (required for new sessions).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Number of contestations the model must survive (required for new sessions).
    #[arg(long = "K", alias = "k")]
    pub k: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Constant in front of the acceptance threshold [default: 1].
    #[arg(long)]
    pub c_tau: Option<f64>,
    /// Constant in front of the accepted-contestation budget [default: 1].
    #[arg(long)]
    pub c_count: Option<f64>,
}

type State = ContestableState<TabularModel<f64>>;

/// Opens the session and returns it with the (model, dataset) paths to record in checkpoints.
fn open_session(args: &ContestArgs) -> Result<(State, (String, String))> {
    if args.checkpoint.exists() {
        let text = std::fs::read_to_string(&args.checkpoint)
            .with_context(|| format!("reading {}", args.checkpoint.display()))?;
        let cp = Checkpoint::from_json(&text).context("corrupt checkpoint")?;
        check_resume_flags(args, &cp)?;
        let data = load_dataset(Path::new(&cp.dataset))?;
        let model = load_model(Path::new(&cp.base_model), &data)?;
        let refs = (cp.base_model.clone(), cp.dataset.clone());
        let state = State::restore(&cp, model, data).context("corrupt checkpoint")?;
        return Ok((state, refs));
    }
    let (Some(data_path), Some(model_path), Some(k), Some(delta), Some(seed)) =
        (&args.data, &args.model, args.k, args.delta, args.seed)
    else {
        bail!(Error::Parameter("a new session needs --data, --model, --K, --delta and --seed".into()));
    };
    let data = load_dataset(data_path)?;
    let model = load_model(model_path, &data)?;
    let d = BudgetConstants::default();
    let constants =
        BudgetConstants { c_tau: args.c_tau.unwrap_or(d.c_tau), c_count: args.c_count.unwrap_or(d.c_count) };
    let refs = (absolute(model_path)?, absolute(data_path)?);
    Ok((State::with_constants(model, data, k, delta, seed, constants)?, refs))
}

// Recorded paths are absolute so a session resumes from any directory.
fn absolute(p: &Path) -> Result<String> {
    Ok(std::path::absolute(p)?.display().to_string())
}

/// Flags repeated on resume must agree with the checkpoint, which fixes the session.
fn check_resume_flags(args: &ContestArgs, cp: &Checkpoint) -> Result<()> {
    let p = &cp.params;
    let mut conflicts = Vec::new();
    if args.k.is_some_and(|k| k != p.k) {
        conflicts.push("--K");
    }
    if args.delta.is_some_and(|d| d != p.delta) {
        conflicts.push("--delta");
    }
    if args.seed.is_some_and(|s| s != cp.rng_state.seed) {
        conflicts.push("--seed");
    }
    if args.data.as_deref().map(absolute).transpose()?.is_some_and(|d| d != cp.dataset) {
        conflicts.push("--data");
    }
    if args.model.as_deref().map(absolute).transpose()?.is_some_and(|m| m != cp.base_model) {
        conflicts.push("--model");
    }
    if args.c_tau.is_some_and(|c| c != p.constants.c_tau) {
        conflicts.push("--c-tau");
    }
    if args.c_count.is_some_and(|c| c != p.constants.c_count) {
        conflicts.push("--c-count");
    }
    if !conflicts.is_empty() {
        bail!(Error::Parameter(format!("{} disagree with the checkpoint being resumed", conflicts.join(", "))));
    }
    Ok(())
}

fn parse_mask(line: &str, data: &Dataset) -> Result<GroupMask> {
    match line {
        "all" => Ok(GroupMask::all(data.len())),
        "none" => Ok(GroupMask::none(data.len())),
        ids => {
            let indices = ids
                .split(',')
                .map(|id| {
                    let id = id.trim();
                    data.position(&id.into()).ok_or_else(|| Error::UnknownExample(id.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(GroupMask::from_indices(data.len(), indices))
        }
    }
}

fn save(state: &State, args: &ContestArgs, refs: &(String, String)) -> Result<()> {
    let json = state.checkpoint(refs.0.clone(), refs.1.clone()).to_json()?;
    write_atomic(&args.checkpoint, |w| Ok(w.write_all(json.as_bytes())?))
}

/// Emits one verdict line per mask and checkpoints after each contestation, so an interrupted
/// session resumes exactly where it stopped.
pub fn run(args: &ContestArgs) -> Result<Status> {
    let (mut state, refs) = open_session(args)?;
    let masks = std::fs::read_to_string(&args.masks).with_context(|| format!("reading {}", args.masks.display()))?;
    // validate every mask before contesting any
    let groups = masks
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse_mask(l, state.data()))
        .collect::<Result<Vec<_>>>()?;
    save(&state, args, &refs)?;
    for g in &groups {
        let t = state.attempted();
        let out = state.contest(g)?;
        match out.verdict {
            Verdict::Accepted { delta, .. } => println!("t={t} verdict=accepted delta={delta}"),
            other => println!("t={t} verdict={}", other.name()),
        }
        save(&state, args, &refs)?;
    }
    Ok(Status::Ok)
}
