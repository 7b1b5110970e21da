//! Monte Carlo check of the out-of-sample guarantees of reconciliation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{exact_brier, exact_brier_values, exact_disagreement_mass_values, replay_on_support, sample};
use super::{PairMaker, SyntheticDistribution};
use crate::error::{Error, Result};
use crate::reconcile::{reconcile, ReconcileConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub epsilon: f64,
    /// Sample size of every trial.
    pub n: usize,
    pub trials: usize,
    pub delta: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    /// `n = ceil(ln(1/δ) / (α³ ε²))`, the sample size suggested for reaching mass `2α`, without
    /// the hidden logarithmic factors.
    pub fn suggested_n(alpha: f64, epsilon: f64, delta: f64) -> usize {
        ((1.0 / delta).ln() / (alpha.powi(3) * epsilon * epsilon)).ceil() as usize
    }
}

/// Additive slack on the final distributional disagreement mass:
/// `sqrt((32/(αε²) + 1) ln(8(m + 1)/δ) / n)` with `m = ceil(2/(sqrt(α) ε))`.
pub fn mass_error_term(alpha: f64, epsilon: f64, delta: f64, n: usize) -> f64 {
    let m = ReconcileConfig::min_grid(alpha, epsilon) as f64;
    let rounds = 32.0 / (alpha * epsilon * epsilon) + 1.0;
    (rounds * (8.0 * (m + 1.0) / delta).ln() / n as f64).sqrt()
}

/// Additive slack on each final distributional Brier score:
/// `2 sqrt((16/(αε²) + 1) ln(64(m + 1)/δ) / n)`.
pub fn brier_error_term(alpha: f64, epsilon: f64, delta: f64, n: usize) -> f64 {
    let m = ReconcileConfig::min_grid(alpha, epsilon) as f64;
    let rounds = 16.0 / (alpha * epsilon * epsilon) + 1.0;
    2.0 * (rounds * (64.0 * (m + 1.0) / delta).ln() / n as f64).sqrt()
}

/// Largest `k` such that `P[Bin(trials, 1 - δ) < k] ≤ δ`: fewer than `k` passes would be
/// evidence at level `δ` that the per-trial pass probability is below `1 - δ`.
pub fn binomial_required_passes(trials: usize, delta: f64) -> usize {
    let p = 1.0 - delta;
    let ln_pmf = |k: usize| -> f64 {
        let (n, k) = (trials as f64, k as f64);
        ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0) + k * p.ln() + (n - k) * (1.0 - p).ln()
    };
    let mut below = 0.0; // P[X < k]
    for k in 0..=trials {
        let next = below + ln_pmf(k).exp();
        if next > delta {
            return k;
        }
        below = next;
    }
    trials
}

/// Lanczos approximation of `ln Γ(x)` for `x > 0` (relative error below 1e-13).
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub rounds: usize,
    pub t1: usize,
    pub t2: usize,
    pub empirical_mass: f64,
    pub distributional_mass: f64,
    /// Distributional Brier scores of the base models.
    pub brier_initial: [f64; 2],
    /// Distributional Brier scores of the reported (clamped) final models.
    pub brier_final: [f64; 2],
    pub rounds_ok: bool,
    pub brier_ok: bool,
    pub mass_ok: bool,
}

impl TrialResult {
    pub fn passed(&self) -> bool {
        self.rounds_ok && self.brier_ok && self.mass_ok
    }

    /// How far the distributional mass exceeds the empirical one.
    pub fn mass_excess(&self) -> f64 {
        self.distributional_mass - self.empirical_mass
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
}

impl Quantiles {
    /// Nearest-rank quantiles; `values` must be non-empty.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.into_iter().collect();
        v.sort_by(f64::total_cmp);
        let rank = |q: f64| v[((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
        Quantiles { min: v[0], median: rank(0.5), p95: rank(0.95), max: v[v.len() - 1] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub distribution: String,
    pub support_size: usize,
    pub pair: String,
    pub config: ExperimentConfig,
    pub m: u64,
    pub round_bound: f64,
    pub mass_error_term: f64,
    pub brier_error_term: f64,
    pub trials: Vec<TrialResult>,
    pub rounds: Quantiles,
    pub distributional_mass: Quantiles,
    pub mass_excess: Quantiles,
    pub passes: usize,
    pub required_passes: usize,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Samples `trials` datasets of size `n`, reconciles the pair made by `maker` on each, and
/// checks every conclusion of the out-of-sample theorem at its stated constants. Trials run in
/// parallel; each has its own seed derived from `config.seed`, so the report is deterministic.
pub fn generalization_experiment(
    dist: &SyntheticDistribution,
    maker: PairMaker,
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let ExperimentConfig { alpha, epsilon, n, trials, delta, seed } = *config;
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let cfg = ReconcileConfig::new(alpha, epsilon)?;
    let round_bound = cfg.round_bound();
    let mass_term = mass_error_term(alpha, epsilon, delta, n);
    let brier_term = brier_error_term(alpha, epsilon, delta, n);
    let floor = cfg.progress_floor();

    let mut seeder = ChaCha20Rng::seed_from_u64(seed);
    let pair_seed = seeder.gen::<u64>();
    let trial_seeds: Vec<u64> = (0..trials).map(|_| seeder.gen()).collect();
    let (f1, f2) = maker.make::<f64>(dist, pair_seed);
    let initial = [exact_brier(&f1, dist)?, exact_brier(&f2, dist)?];

    let results = trial_seeds
        .par_iter()
        .enumerate()
        .map(|(trial, &trial_seed)| {
            let data = sample(dist, n, trial_seed)?;
            let (pair, run) = reconcile(&f1, &f2, &data, &cfg)?;
            let (g1, g2) = replay_on_support(&pair, dist)?;
            let final_brier = [exact_brier_values(&g1, dist)?, exact_brier_values(&g2, dist)?];
            let distributional_mass = exact_disagreement_mass_values(&g1, &g2, dist, epsilon)?;
            let transcript = &run.transcript;
            let (t1, t2) = (transcript.t1(), transcript.t2());
            let brier_ok = final_brier[0] <= initial[0] - t1 as f64 * floor + brier_term
                && final_brier[1] <= initial[1] - t2 as f64 * floor + brier_term;
            Ok(TrialResult {
                trial,
                seed: trial_seed,
                n,
                rounds: transcript.len(),
                t1,
                t2,
                empirical_mass: run.final_mass,
                distributional_mass,
                brier_initial: initial,
                brier_final: final_brier,
                rounds_ok: transcript.len() as f64 <= round_bound,
                brier_ok,
                mass_ok: distributional_mass < alpha + mass_term,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let passes = results.iter().filter(|r| r.passed()).count();
    let required_passes = binomial_required_passes(trials, delta);
    Ok(ExperimentReport {
        distribution: dist.kind().to_string(),
        support_size: dist.len(),
        pair: maker.to_string(),
        config: config.clone(),
        m: cfg.m,
        round_bound,
        mass_error_term: mass_term,
        brier_error_term: brier_term,
        rounds: Quantiles::of(results.iter().map(|r| r.rounds as f64)),
        distributional_mass: Quantiles::of(results.iter().map(|r| r.distributional_mass)),
        mass_excess: Quantiles::of(results.iter().map(TrialResult::mass_excess)),
        trials: results,
        passes,
        required_passes,
        passed: passes >= required_passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{make_distribution, DistributionKind};

    /// Exact binomial tail by direct products, independent of the log-gamma route.
    fn tail_below(trials: usize, p: f64, k: usize) -> f64 {
        let mut total = 0.0;
        for j in 0..k {
            let mut c = 1.0f64;
            for i in 0..j {
                c *= (trials - i) as f64 / (i + 1) as f64;
            }
            total += c * p.powi(j as i32) * (1.0 - p).powi((trials - j) as i32);
        }
        total
    }

    #[test]
    fn required_passes_is_the_binomial_band() {
        let k = binomial_required_passes(200, 0.05);
        assert!(tail_below(200, 0.95, k) <= 0.05);
        assert!(tail_below(200, 0.95, k + 1) > 0.05);
        assert_eq!(k, 185);
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut f = 1.0f64;
        for k in 1..30 {
            f *= k as f64;
            assert!((ln_gamma(k as f64 + 1.0) - f.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn error_terms_scale_with_root_n() {
        let a = mass_error_term(0.1, 0.2, 0.05, 10_000);
        let b = mass_error_term(0.1, 0.2, 0.05, 100_000);
        assert!((a / b - 10f64.sqrt()).abs() < 1e-12);
        // by hand: m = 32, (8001 * ln(5280) / 1e4)^(1/2)
        assert!((a - (8001.0 * 5280f64.ln() / 1e4).sqrt()).abs() < 1e-12);
        let c = brier_error_term(0.1, 0.2, 0.05, 10_000);
        assert!((c - 2.0 * (4001.0 * 42240f64.ln() / 1e4).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn suggested_n_formula() {
        let n = ExperimentConfig::suggested_n(0.1, 0.2, 0.05);
        assert_eq!(n, (20f64.ln() / (0.001 * 0.04)).ceil() as usize);
    }

    #[test]
    fn agreeing_pair_passes_with_no_rounds() {
        let d = make_distribution(DistributionKind::ConstantHalf, 50, 0).unwrap();
        let cfg = ExperimentConfig { alpha: 0.1, epsilon: 0.2, n: 200, trials: 8, delta: 0.05, seed: 1 };
        let r = generalization_experiment(&d, PairMaker::TruthVsHalf, &cfg).unwrap();
        assert!(r.trials.iter().all(|t| t.rounds == 0 && t.passed()));
        assert!(r.passed);
    }

    #[test]
    fn report_is_deterministic_and_round_trips() {
        let d = make_distribution(DistributionKind::RandomBernoulli, 200, 3).unwrap();
        let cfg = ExperimentConfig { alpha: 0.1, epsilon: 0.2, n: 2_000, trials: 4, delta: 0.05, seed: 9 };
        let a = generalization_experiment(&d, PairMaker::default(), &cfg).unwrap();
        let b = generalization_experiment(&d, PairMaker::default(), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.trials.iter().all(|t| t.rounds > 0 && t.empirical_mass < 0.1));
        assert_eq!(ExperimentReport::from_json(&a.to_json().unwrap()).unwrap(), a);
    }

    #[test]
    fn zero_trials_is_an_error() {
        let d = make_distribution(DistributionKind::ConstantHalf, 5, 0).unwrap();
        let cfg = ExperimentConfig { alpha: 0.1, epsilon: 0.2, n: 10, trials: 0, delta: 0.05, seed: 0 };
        assert!(generalization_experiment(&d, PairMaker::default(), &cfg).is_err());
    }
}
