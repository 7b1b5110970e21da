use std::marker::PhantomData;

use super::{Diagnostics, Transcript};
use crate::data::{Dataset, Example, GroupMask, PredictionVector};
use crate::error::{Error, Result};
use crate::measure::{brier_score, disagreement_split, grid_value, violation_stats};
use crate::model::BaseModel;
use crate::reconcile::ModelIndex;
use crate::scalar::Scalar;

/// The two reconciled models, represented as base models plus the transcript that patches them.
#[derive(Clone, Debug)]
pub struct PatchedModelPair<S, M1, M2> {
    base_f1: M1,
    base_f2: M2,
    transcript: Transcript,
    _scalar: PhantomData<S>,
}

impl<S, M1, M2> PatchedModelPair<S, M1, M2>
where
    S: Scalar,
    M1: BaseModel<S>,
    M2: BaseModel<S>,
{
    pub fn new(base_f1: M1, base_f2: M2, transcript: Transcript) -> Self {
        Self { base_f1, base_f2, transcript, _scalar: PhantomData }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn base_models(&self) -> (&M1, &M2) {
        (&self.base_f1, &self.base_f2)
    }

    /// Unclamped outputs of both final models at `x`.
    pub fn predict_raw(&self, x: &Example) -> Result<(S, S)> {
        let v1 = self.base_f1.predict(x)?;
        let v2 = self.base_f2.predict(x)?;
        Ok(self.transcript.replay_point(v1, v2))
    }

    /// Reported predictions of both final models at `x`, each in `[0, 1]`.
    pub fn replay_predict(&self, x: &Example) -> Result<(S, S)> {
        let (a, b) = self.predict_raw(x)?;
        Ok((a.clamp_unit(), b.clamp_unit()))
    }

    /// Unclamped final predictions of both models on every point of `data`.
    pub fn predict_all_raw(&self, data: &Dataset) -> Result<(PredictionVector<S>, PredictionVector<S>)> {
        let mut p1 = self.base_f1.predict_all(data)?.into_values();
        let mut p2 = self.base_f2.predict_all(data)?.into_values();
        self.transcript.replay_in_place(&mut p1, &mut p2)?;
        Ok((PredictionVector::new(p1), PredictionVector::new(p2)))
    }

    /// Re-derives every round's diagnostics on `data` by replaying the transcript round by
    /// round from the base models.
    pub fn replay_diagnostics(&self, data: &Dataset) -> Result<Vec<Diagnostics>> {
        let mut models = [self.base_f1.predict_all(data)?, self.base_f2.predict_all(data)?];
        let config = self.transcript.config();
        let epsilon = S::of(config.epsilon);
        let mut out = Vec::with_capacity(self.transcript.len());
        for r in self.transcript.records() {
            let split = disagreement_split(&models[0], &models[1], epsilon, data)?;
            let g = split.side(r.direction);
            let slot = match r.model {
                ModelIndex::First => 0,
                ModelIndex::Second => 1,
            };
            let stats = violation_stats(&models[slot], g, data)?;
            let before = brier_score(&models[slot], data)?;
            models[slot] = super::patch(&models[slot], g, grid_value::<S>(r.k, config.m))?;
            let after = brier_score(&models[slot], data)?;
            out.push(Diagnostics {
                mass: stats.mass.as_f64(),
                v_star: stats.v_star.as_f64(),
                v_model: stats.v_model.as_f64(),
                brier_drop: (before - after).as_f64(),
            });
        }
        Ok(out)
    }
}

/// Mean reported predictions of the two models on a reference class, and the bound
/// `α/μ(E) + ε` their gap must respect after reconciliation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceClassGap<S> {
    pub p1: S,
    pub p2: S,
    pub bound: S,
    pub within_bound: bool,
}

impl<S: Scalar> ReferenceClassGap<S> {
    pub fn gap(&self) -> S {
        (self.p1 - self.p2).abs()
    }
}

/// Reference-class audit from final predictions already evaluated on `data`.
pub fn reference_class_gap_of<S: Scalar>(
    f1: &PredictionVector<S>,
    f2: &PredictionVector<S>,
    class: &GroupMask,
    data: &Dataset,
    alpha: f64,
    epsilon: f64,
) -> Result<ReferenceClassGap<S>> {
    f1.check_aligned(data)?;
    f2.check_aligned(data)?;
    class.check_aligned(data)?;
    let count = class.count();
    if count == 0 {
        return Err(Error::Parameter("reference class is empty".into()));
    }
    let (mut s1, mut s2) = (S::zero(), S::zero());
    for i in class.indices() {
        s1 = s1 + f1.get(i).clamp_unit();
        s2 = s2 + f2.get(i).clamp_unit();
    }
    let c = S::of_usize(count);
    let (p1, p2) = (s1 / c, s2 / c);
    let mass = c / S::of_usize(data.len());
    let bound = S::of(alpha) / mass + S::of(epsilon);
    Ok(ReferenceClassGap { p1, p2, bound, within_bound: (p1 - p2).abs() <= bound })
}

/// Reference-class audit of a reconciled pair on the subset `class` of `data`.
pub fn reference_class_gap<S, M1, M2>(
    pair: &PatchedModelPair<S, M1, M2>,
    class: &GroupMask,
    data: &Dataset,
) -> Result<ReferenceClassGap<S>>
where
    S: Scalar,
    M1: BaseModel<S>,
    M2: BaseModel<S>,
{
    let (f1, f2) = pair.predict_all_raw(data)?;
    let config = pair.transcript().config();
    reference_class_gap_of(&f1, &f2, class, data, config.alpha, config.epsilon)
}
