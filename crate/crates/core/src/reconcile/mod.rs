//! Iterated falsify-and-patch between two models.
//!
//! While the two models ε-disagree on at least an α fraction of the data, the side of the
//! disagreement region and the model with the largest weighted mean-consistency violation
//! are selected, and that model is shifted on that side by its (grid-rounded) residual mean.
//! Each round lowers the patched model's Brier score by at least `αε²/16`, so the loop
//! stops after at most `(B(f1) + B(f2)) * 16 / (αε²)` rounds.

mod replay;
mod transcript;

pub use replay::{reference_class_gap, reference_class_gap_of, PatchedModelPair, ReferenceClassGap};
pub use transcript::{Diagnostics, ModelIndex, Transcript, UpdateRecord};

use crate::data::{Dataset, GroupMask, PredictionVector};
use crate::error::{Error, Result};
use crate::measure::{
    brier_score, disagreement_split, grid_value, round_to_grid, Direction, DisagreementSplit, ViolationStats,
};
use crate::model::BaseModel;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct ReconcileConfig {
    pub alpha: f64,
    pub epsilon: f64,
    /// Rounding grid resolution; never below `ceil(2 / (sqrt(alpha) * epsilon))`.
    pub m: u64,
    pub max_rounds_cap: Option<usize>,
}

impl ReconcileConfig {
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::Parameter(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        Ok(Self { alpha, epsilon, m: Self::min_grid(alpha, epsilon), max_rounds_cap: None })
    }

    pub fn min_grid(alpha: f64, epsilon: f64) -> u64 {
        (2.0 / (alpha.sqrt() * epsilon)).ceil() as u64
    }

    pub fn with_m(mut self, m: u64) -> Result<Self> {
        let min = Self::min_grid(self.alpha, self.epsilon);
        if m < min {
            return Err(Error::Parameter(format!("grid resolution {m} is below the minimum {min}")));
        }
        self.m = m;
        Ok(self)
    }

    pub fn with_round_cap(mut self, cap: usize) -> Self {
        self.max_rounds_cap = Some(cap);
        self
    }

    /// Worst-case round count `32 / (αε²)`.
    pub fn round_bound(&self) -> f64 {
        32.0 / (self.alpha * self.epsilon * self.epsilon)
    }

    /// Guaranteed per-round Brier decrease `αε²/16`.
    pub fn progress_floor(&self) -> f64 {
        self.alpha * self.epsilon * self.epsilon / 16.0
    }

    pub fn round_cap(&self) -> usize {
        self.max_rounds_cap.unwrap_or_else(|| self.round_bound().ceil() as usize + 8)
    }
}

/// Per-round diagnostics of a reconciliation run.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundReport<S> {
    pub t: usize,
    pub model: ModelIndex,
    pub direction: Direction,
    pub k: i64,
    /// Disagreement mass at the start of the round.
    pub disagreement_mass: S,
    /// Statistics of the patched model on the selected group, before the patch.
    pub stats: ViolationStats<S>,
    /// Unrounded residual mean on the group.
    pub delta_tilde: S,
    /// Applied shift `k / m`.
    pub delta: S,
    /// Unclamped Brier score of the patched model before and after the round.
    pub brier_before: S,
    pub brier_after: S,
}

impl<S: Scalar> RoundReport<S> {
    pub fn brier_drop(&self) -> S {
        self.brier_before - self.brier_after
    }
}

/// Adds `delta` to every prediction inside `g`; values are left unclamped.
pub fn patch<S: Scalar>(preds: &PredictionVector<S>, g: &GroupMask, delta: S) -> Result<PredictionVector<S>> {
    if preds.len() != g.len() {
        return Err(Error::Alignment { expected: preds.len(), found: g.len() });
    }
    let mut out = preds.clone();
    patch_in_place(&mut out, g, delta);
    Ok(out)
}

fn patch_in_place<S: Scalar>(preds: &mut PredictionVector<S>, g: &GroupMask, delta: S) {
    for (v, &inside) in preds.values_mut().iter_mut().zip(g.members()) {
        if inside {
            *v = *v + delta;
        }
    }
}

/// The winning `(model, side)` candidate of a round.
#[derive(Clone, Debug)]
pub struct Selection<S> {
    pub model: ModelIndex,
    pub direction: Direction,
    pub group: GroupMask,
    pub weighted_violation: S,
    /// Candidate statistics in tie-break order `(1,gt), (1,lt), (2,gt), (2,lt)`.
    pub candidates: [ViolationStats<S>; 4],
}

impl<S: Scalar> Selection<S> {
    pub fn stats(&self) -> ViolationStats<S> {
        self.candidates[candidate_slot(self.model, self.direction)]
    }
}

const CANDIDATE_ORDER: [(ModelIndex, Direction); 4] = [
    (ModelIndex::First, Direction::Gt),
    (ModelIndex::First, Direction::Lt),
    (ModelIndex::Second, Direction::Gt),
    (ModelIndex::Second, Direction::Lt),
];

fn candidate_slot(model: ModelIndex, direction: Direction) -> usize {
    CANDIDATE_ORDER.iter().position(|&c| c == (model, direction)).expect("all pairs listed")
}

/// Picks the model and disagreement side with the largest `μ(U•)·(v* − v_i)²`.
///
/// Ties go to the first candidate in the order `(1,gt), (1,lt), (2,gt), (2,lt)`.
pub fn select_update<S: Scalar>(
    f1: &PredictionVector<S>,
    f2: &PredictionVector<S>,
    split: &DisagreementSplit<S>,
    data: &Dataset,
) -> Result<Selection<S>> {
    f1.check_aligned(data)?;
    f2.check_aligned(data)?;
    split.u_all.check_aligned(data)?;
    if !split.u_all.any() {
        return Err(Error::Structural("no disagreement region to select an update from".into()));
    }
    let n = data.len();
    let mut candidates = [ViolationStats::default(); 4];
    for direction in Direction::BOTH {
        let (mut count, mut labels, mut s1, mut s2) = (0usize, S::zero(), S::zero(), S::zero());
        for i in split.side(direction).indices() {
            count += 1;
            labels = labels + data.label::<S>(i);
            s1 = s1 + f1.get(i);
            s2 = s2 + f2.get(i);
        }
        candidates[candidate_slot(ModelIndex::First, direction)] = ViolationStats::from_sums(count, n, labels, s1);
        candidates[candidate_slot(ModelIndex::Second, direction)] = ViolationStats::from_sums(count, n, labels, s2);
    }
    let mut best = 0;
    for slot in 1..4 {
        if candidates[slot].weighted_violation > candidates[best].weighted_violation {
            best = slot;
        }
    }
    if candidates[best].mass == S::zero() {
        return Err(Error::Structural("all four update candidates are vacuous".into()));
    }
    let (model, direction) = CANDIDATE_ORDER[best];
    Ok(Selection {
        model,
        direction,
        group: split.side(direction).clone(),
        weighted_violation: candidates[best].weighted_violation,
        candidates,
    })
}

/// Outcome of a reconciliation run on a dataset.
#[derive(Clone, Debug)]
pub struct ReconcileRun<S> {
    pub transcript: Transcript,
    pub reports: Vec<RoundReport<S>>,
    /// Final unclamped predictions of both models on the training data.
    pub f1: PredictionVector<S>,
    pub f2: PredictionVector<S>,
    /// Disagreement mass of the final pair on the training data (`< alpha`).
    pub final_mass: S,
}

/// Runs reconciliation starting from base predictions already evaluated on `data`.
pub fn reconcile_predictions<S: Scalar>(
    f1: PredictionVector<S>,
    f2: PredictionVector<S>,
    data: &Dataset,
    config: &ReconcileConfig,
) -> Result<ReconcileRun<S>> {
    f1.check_aligned(data)?;
    f2.check_aligned(data)?;
    let alpha = S::of(config.alpha);
    let epsilon = S::of(config.epsilon);
    let cap = config.round_cap();
    let mut models = [f1, f2];
    let mut transcript = Transcript::new(config.clone());
    let mut reports = Vec::new();

    loop {
        let split = disagreement_split(&models[0], &models[1], epsilon, data)?;
        let mass = split.mass();
        if mass < alpha {
            let [f1, f2] = models;
            return Ok(ReconcileRun { transcript, reports, f1, f2, final_mass: mass });
        }
        let t = transcript.len();
        if t >= cap {
            return Err(Error::RoundCapExceeded { cap, mass: mass.as_f64() });
        }

        let selection = select_update(&models[0], &models[1], &split, data)?;
        let stats = selection.stats();
        let delta_tilde = stats.residual();
        // Residuals of unclamped models can leave [-1, 1]; the grid cannot.
        let clipped = delta_tilde.max(-S::one()).min(S::one());
        let k = round_to_grid(clipped, config.m)?.k;
        let delta = grid_value::<S>(k, config.m);

        let slot = match selection.model {
            ModelIndex::First => 0,
            ModelIndex::Second => 1,
        };
        let brier_before = brier_score(&models[slot], data)?;
        patch_in_place(&mut models[slot], &selection.group, delta);
        let brier_after = brier_score(&models[slot], data)?;

        transcript.push(UpdateRecord {
            t,
            model: selection.model,
            direction: selection.direction,
            k,
            diagnostics: Some(Diagnostics {
                mass: stats.mass.as_f64(),
                v_star: stats.v_star.as_f64(),
                v_model: stats.v_model.as_f64(),
                brier_drop: (brier_before - brier_after).as_f64(),
            }),
        });
        reports.push(RoundReport {
            t,
            model: selection.model,
            direction: selection.direction,
            k,
            disagreement_mass: mass,
            stats,
            delta_tilde,
            delta,
            brier_before,
            brier_after,
        });
    }
}

/// Reconciles two base models on `data`.
pub fn reconcile<S, M1, M2>(
    f1: M1,
    f2: M2,
    data: &Dataset,
    config: &ReconcileConfig,
) -> Result<(PatchedModelPair<S, M1, M2>, ReconcileRun<S>)>
where
    S: Scalar,
    M1: BaseModel<S>,
    M2: BaseModel<S>,
{
    let p1 = f1.predict_all(data)?;
    let p2 = f2.predict_all(data)?;
    let run = reconcile_predictions(p1, p2, data, config)?;
    let pair = PatchedModelPair::new(f1, f2, run.transcript.clone());
    Ok((pair, run))
}
