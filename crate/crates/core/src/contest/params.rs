use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Share of the privacy budget spent on the threshold comparisons is `√512 / (√512 + 1)`.
pub const THRESHOLD_SHARE: f64 = 22.627_416_997_969_52 / (22.627_416_997_969_52 + 1.0);

/// Multiplicative constants in front of the asymptotic threshold and update budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetConstants {
    /// `tau = c_tau * (ln(K/δ))^(1/3) * (ln(1/δ))^(1/6) / n^(1/3)`
    pub c_tau: f64,
    /// `C = ceil(c_count / tau^2)`
    pub c_count: f64,
}

impl Default for BudgetConstants {
    fn default() -> Self {
        Self { c_tau: 1.0, c_count: 1.0 }
    }
}

/// Threshold, budgets and noise scales of a contestable model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContestParams {
    /// Size of the contestation dataset.
    pub n: usize,
    /// Target number of contestations the model must survive.
    pub k: u64,
    pub delta: f64,
    pub constants: BudgetConstants,
    /// Acceptance threshold on `|η|`.
    pub tau: f64,
    /// Maximum number of accepted contestations.
    pub c_max: u64,
    pub privacy_epsilon: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
    /// `σ(ε₁)`: threshold noise scale; comparisons use twice this.
    pub sigma1: f64,
    /// `σ(ε₂)`: estimate noise scale; estimates use twice this.
    pub sigma2: f64,
}

impl ContestParams {
    pub fn new(n: usize, k: u64, delta: f64) -> Result<Self> {
        Self::with_constants(n, k, delta, BudgetConstants::default())
    }

    pub fn with_constants(n: usize, k: u64, delta: f64, constants: BudgetConstants) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("contestation dataset is empty".into()));
        }
        if k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
        }
        if !(constants.c_tau > 0.0 && constants.c_count > 0.0) {
            return Err(Error::Config("budget constants must be positive".into()));
        }
        let nf = n as f64;
        let log_kd = (k as f64 / delta).ln();
        let log_d = (1.0 / delta).ln();
        let tau = constants.c_tau * log_kd.cbrt() * log_d.powf(1.0 / 6.0) / nf.cbrt();
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("threshold {tau} is not a positive number")));
        }
        if tau >= 1.0 {
            return Err(Error::Config(format!(
                "threshold {tau} >= 1: {n} points are too few for K = {k} at delta = {delta}"
            )));
        }
        let c_raw = (constants.c_count / (tau * tau)).ceil();
        if !(c_raw >= 1.0 && c_raw < u64::MAX as f64) {
            return Err(Error::Config(format!("accepted-contestation budget {c_raw} is out of range")));
        }
        let c_max = c_raw as u64;
        let c = c_max as f64;
        let privacy_epsilon = (log_kd * (c * log_d).sqrt() / nf).sqrt();
        let epsilon1 = THRESHOLD_SHARE * privacy_epsilon;
        let epsilon2 = privacy_epsilon - epsilon1;
        let sigma = |eps: f64| (32.0 * c * log_d).sqrt() / (eps * nf);
        Ok(Self {
            n,
            k,
            delta,
            constants,
            tau,
            c_max,
            privacy_epsilon,
            epsilon1,
            epsilon2,
            sigma1: sigma(epsilon1),
            sigma2: sigma(epsilon2),
        })
    }
}
