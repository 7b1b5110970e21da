use bitvec::vec::BitVec;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::laplace::laplace_sample;
use super::params::{BudgetConstants, ContestParams};
use crate::data::{Dataset, Example, GroupMask, PredictionVector};
use crate::error::{Error, Result};
use crate::model::BaseModel;
use crate::scalar::{ordered_sum, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Verdict<S> {
    Accepted {
        /// Applied shift `η̃/μ̃` after the degenerate-mass guard and clipping to `[-1, 1]`.
        delta: S,
        mu_tilde: S,
        eta_tilde: S,
    },
    Rejected,
    /// Budget spent (`c = C` or `t = K`); nothing was evaluated.
    Exhausted,
}

impl<S> Verdict<S> {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Accepted { .. } => "accepted",
            Verdict::Rejected => "rejected",
            Verdict::Exhausted => "exhausted",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContestOutcome<S> {
    /// Index of the attempt, `None` when the contestation was refused as exhausted.
    pub attempt: Option<u64>,
    pub verdict: Verdict<S>,
}

/// One accepted contestation: the group (over the contestation dataset) and its shift.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchEntry {
    pub group: BitVec,
    pub delta: f64,
}

/// A model bundled with a held-out contestation dataset and the noisy-threshold protocol that
/// decides which contestations it accepts.
///
/// Groups are sets of contestation-dataset points, so [`ContestableState::predict`] differs from
/// the base model only on points of that dataset.
#[derive(Debug)]
pub struct ContestableState<S, M> {
    params: ContestParams,
    base: M,
    data: Dataset,
    current: PredictionVector<S>,
    accepted: u64,
    attempted: u64,
    noisy_threshold: S,
    seed: u64,
    rng: ChaCha20Rng,
    patch_log: Vec<PatchEntry>,
}

impl<S: Scalar, M: BaseModel<S>> ContestableState<S, M> {
    /// Wraps `base` with contestation dataset `data`, which must be drawn independently of
    /// how `base` was fit.
    pub fn new(base: M, data: Dataset, k: u64, delta: f64, seed: u64) -> Result<Self> {
        Self::with_constants(base, data, k, delta, seed, BudgetConstants::default())
    }

    pub fn with_constants(
        base: M,
        data: Dataset,
        k: u64,
        delta: f64,
        seed: u64,
        constants: BudgetConstants,
    ) -> Result<Self> {
        let params = ContestParams::with_constants(data.len(), k, delta, constants)?;
        let current = base.predict_all(&data)?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let noisy_threshold = S::of(params.tau + laplace_sample(params.sigma1, &mut rng)?);
        Ok(Self {
            params,
            base,
            data,
            current,
            accepted: 0,
            attempted: 0,
            noisy_threshold,
            seed,
            rng,
            patch_log: Vec::new(),
        })
    }

    pub(super) fn from_parts(parts: RestoredParts<S, M>) -> Result<Self> {
        let RestoredParts { params, base, data, accepted, attempted, noisy_threshold, seed, word_pos, patch_log } =
            parts;
        if params.n != data.len() {
            return Err(Error::Format(format!(
                "checkpoint expects {} contestation points, dataset has {}",
                params.n,
                data.len()
            )));
        }
        if accepted > params.c_max || attempted > params.k || accepted as usize != patch_log.len() {
            return Err(Error::Format("checkpoint counters are inconsistent".into()));
        }
        let mut current = base.predict_all(&data)?;
        for entry in &patch_log {
            if entry.group.len() != data.len() {
                return Err(Error::Format("patch group does not cover the dataset".into()));
            }
            let delta = S::of(entry.delta);
            for i in entry.group.iter_ones() {
                current.values_mut()[i] = current.get(i) + delta;
            }
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_word_pos(word_pos);
        Ok(Self { params, base, data, current, accepted, attempted, noisy_threshold, seed, rng, patch_log })
    }

    pub fn params(&self) -> &ContestParams {
        &self.params
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn base(&self) -> &M {
        &self.base
    }

    /// Current unclamped predictions on the contestation dataset.
    pub fn current(&self) -> &PredictionVector<S> {
        &self.current
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn attempted(&self) -> u64 {
        self.attempted
    }

    pub fn noisy_threshold(&self) -> S {
        self.noisy_threshold
    }

    pub fn patch_log(&self) -> &[PatchEntry] {
        &self.patch_log
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng_word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn is_exhausted(&self) -> bool {
        self.accepted >= self.params.c_max || self.attempted >= self.params.k
    }

    /// Reported prediction of the current model.
    pub fn predict(&self, x: &Example) -> Result<S> {
        let raw = match self.data.position(&x.id) {
            Some(i) => self.current.get(i),
            None => self.base.predict(x)?,
        };
        Ok(raw.clamp_unit())
    }

    /// Unclamped current-model predictions on every point of `data`.
    pub fn predict_all_raw(&self, data: &Dataset) -> Result<PredictionVector<S>> {
        let values = data
            .examples()
            .iter()
            .map(|x| match self.data.position(&x.id) {
                Some(i) => Ok(self.current.get(i)),
                None => self.base.predict(x),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PredictionVector::new(values))
    }

    /// `η(f_c, g) = (1/n) Σ (y - f_c(x)) g(x)` on the contestation dataset.
    pub fn eta(&self, g: &GroupMask) -> Result<S> {
        g.check_aligned(&self.data)?;
        let sum = ordered_sum(g.indices().map(|i| self.data.label::<S>(i) - self.current.get(i)));
        Ok(sum / S::of_usize(self.data.len()))
    }

    /// Unclamped Brier score of the current model on the contestation dataset.
    pub fn brier(&self) -> S {
        crate::measure::brier_score(&self.current, &self.data).expect("current model is aligned")
    }

    fn lap(&mut self, scale: f64) -> Result<S> {
        Ok(S::of(laplace_sample(scale, &mut self.rng)?))
    }

    /// Submits one contestation. Exhausted models refuse without changing state.
    pub fn contest(&mut self, g: &GroupMask) -> Result<ContestOutcome<S>> {
        g.check_aligned(&self.data)?;
        if self.is_exhausted() {
            return Ok(ContestOutcome { attempt: None, verdict: Verdict::Exhausted });
        }
        let attempt = self.attempted;
        let p = self.params;
        let eta = self.eta(g)?;
        let eta_hat = eta.abs() + self.lap(2.0 * p.sigma1)?;
        let verdict = if eta_hat >= self.noisy_threshold {
            let n = S::of_usize(self.data.len());
            let mu_tilde = S::of_usize(g.count()) / n + self.lap(2.0 * p.sigma2)?;
            let eta_tilde = eta + self.lap(2.0 * p.sigma2)?;
            // Noisy masses below tau/2 make the ratio unstable; they only occur outside the
            // high-probability event of the accuracy guarantee.
            let mu_used = mu_tilde.max(S::of(p.tau / 2.0));
            let delta = (eta_tilde / mu_used).max(-S::one()).min(S::one());
            let values = self.current.values_mut();
            for i in g.indices() {
                values[i] = values[i] + delta;
            }
            self.patch_log.push(PatchEntry { group: g.members().iter().copied().collect(), delta: delta.as_f64() });
            self.accepted += 1;
            self.noisy_threshold = S::of(p.tau) + self.lap(p.sigma1)?;
            Verdict::Accepted { delta, mu_tilde, eta_tilde }
        } else {
            Verdict::Rejected
        };
        self.attempted += 1;
        Ok(ContestOutcome { attempt: Some(attempt), verdict })
    }
}

pub(super) struct RestoredParts<S, M> {
    pub params: ContestParams,
    pub base: M,
    pub data: Dataset,
    pub accepted: u64,
    pub attempted: u64,
    pub noisy_threshold: S,
    pub seed: u64,
    pub word_pos: u128,
    pub patch_log: Vec<PatchEntry>,
}
