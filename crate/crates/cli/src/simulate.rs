use anyhow::{bail, Result};
use clap::Args;
use reconcile_core::synth::{
    generalization_experiment, make_distribution, DistributionKind, ExperimentConfig, PairMaker,
};

use crate::files::write_atomic;
use crate::{OutDir, Status};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// `constant_half`, `random_bernoulli`, `deterministic_coin` or `piecewise_groups[:v1,v2,...]`.
    #[arg(long)]
    pub dist: DistributionKind,
    /// Support size of the distribution.
    #[arg(long = "support-size", short = 'M', default_value_t = 10_000)]
    pub support_size: usize,
    /// Sample size per trial; defaults to `ceil(ln(1/δ) / (α³ε²))`.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    /// `opposite_biases[:b]`, `truth_vs_half` or `corrupted_copies[:noise]`.
    #[arg(long, default_value = "opposite_biases:0.3")]
    pub pair: PairMaker,
    #[command(flatten)]
    pub out: OutDir,
}

pub fn run(args: &SimulateArgs) -> Result<Status> {
    if args.trials == 0 {
        bail!(reconcile_core::Error::Parameter("--trials must be at least 1".into()));
    }
    let n = args.n.unwrap_or_else(|| ExperimentConfig::suggested_n(args.alpha, args.epsilon, args.delta));
    let dist = make_distribution(args.dist.clone(), args.support_size, args.seed)?;
    let config = ExperimentConfig {
        alpha: args.alpha,
        epsilon: args.epsilon,
        n,
        trials: args.trials,
        delta: args.delta,
        seed: args.seed,
    };
    let report = generalization_experiment(&dist, args.pair, &config)?;

    let out = &args.out.out;
    let json = report.to_json()?;
    write_atomic(&out.join("report.json"), |w| Ok(w.write_all(json.as_bytes())?))?;
    write_atomic(&out.join("distribution.csv"), |w| Ok(dist.write_csv(w)?))?;
    println!(
        "n={n} passes={}/{} required={} mass_term={} brier_term={}",
        report.passes, args.trials, report.required_passes, report.mass_error_term, report.brier_error_term
    );
    Ok(if report.passed { Status::Ok } else { Status::BoundViolated })
}
