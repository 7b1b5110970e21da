//! Reconciliation between two contestable models.
//!
//! Each sweep freezes the two disagreement predicates `x ↦ [f1(x) - f2(x) > ε]` and
//! `x ↦ [f2(x) - f1(x) > ε]` at the current pair and submits them to both models. A model that
//! accepts a contestation shifts its predictions on every point satisfying the frozen predicate,
//! so the driver mirrors accepted shifts onto the evaluation set and onto the other model's
//! contestation set.

use super::state::{ContestOutcome, ContestableState, Verdict};
use crate::data::{Dataset, GroupMask, PredictionVector};
use crate::error::{Error, Result};
use crate::measure::{disagreement_side, Direction};
use crate::model::BaseModel;
use crate::reconcile::ModelIndex;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SessionStatus {
    /// Disagreement mass on the evaluation set fell below `α`.
    Converged,
    /// A full sweep produced four rejections.
    Stalled,
    /// One of the models ran out of budget.
    Exhausted,
    /// The caller's sweep limit was reached first.
    SweepLimit,
}

impl SessionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionStatus::Converged => "converged",
            SessionStatus::Stalled => "stalled",
            SessionStatus::Exhausted => "exhausted",
            SessionStatus::SweepLimit => "sweep_limit",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord<S> {
    /// Disagreement mass on the evaluation set when the sweep started.
    pub mass: S,
    /// Outcomes in submission order: `(1,gt), (1,lt), (2,gt), (2,lt)`.
    pub outcomes: [(ModelIndex, Direction, ContestOutcome<S>); 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionOutcome<S> {
    pub status: SessionStatus,
    pub sweeps: usize,
    pub final_mass: S,
    pub records: Vec<SweepRecord<S>>,
    /// Unclamped predictions of both models on the evaluation set at the end.
    pub eval_f1: PredictionVector<S>,
    pub eval_f2: PredictionVector<S>,
}

/// Both models' unclamped predictions on one dataset.
struct Tracked<S> {
    f: [Vec<S>; 2],
}

impl<S: Scalar> Tracked<S> {
    fn sides(&self, epsilon: S) -> [Vec<bool>; 2] {
        let mut gt = Vec::with_capacity(self.f[0].len());
        let mut lt = Vec::with_capacity(self.f[0].len());
        for (&a, &b) in self.f[0].iter().zip(&self.f[1]) {
            let side = disagreement_side(a, b, epsilon);
            gt.push(side == Some(Direction::Gt));
            lt.push(side == Some(Direction::Lt));
        }
        [gt, lt]
    }

    fn mass(&self, epsilon: S) -> S {
        let count =
            self.f[0].iter().zip(&self.f[1]).filter(|(&a, &b)| disagreement_side(a, b, epsilon).is_some()).count();
        S::of_usize(count) / S::of_usize(self.f[0].len())
    }

    fn shift(&mut self, slot: usize, members: &[bool], delta: S) {
        for (v, _) in self.f[slot].iter_mut().zip(members).filter(|(_, &m)| m) {
            *v = *v + delta;
        }
    }
}

fn track<S, M1, M2>(m1: &ContestableState<S, M1>, m2: &ContestableState<S, M2>, data: &Dataset) -> Result<Tracked<S>>
where
    S: Scalar,
    M1: BaseModel<S>,
    M2: BaseModel<S>,
{
    Ok(Tracked { f: [m1.predict_all_raw(data)?.into_values(), m2.predict_all_raw(data)?.into_values()] })
}

/// Drives two contestable models toward `ε`-agreement on `eval`, stopping once the disagreement
/// mass is below `alpha` or after `max_sweeps` sweeps.
///
/// The two contestation datasets and `eval` should not share example ids: a model's patched
/// values are keyed by the ids of its own contestation set.
pub fn contestable_reconcile<S, M1, M2>(
    m1: &mut ContestableState<S, M1>,
    m2: &mut ContestableState<S, M2>,
    eval: &Dataset,
    alpha: f64,
    epsilon: f64,
    max_sweeps: usize,
) -> Result<SessionOutcome<S>>
where
    S: Scalar,
    M1: BaseModel<S>,
    M2: BaseModel<S>,
{
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    crate::measure::check_epsilon(S::of(epsilon))?;
    let eps = S::of(epsilon);
    let d1 = m1.data().clone();
    let d2 = m2.data().clone();
    // index 0: evaluation set, 1: m1's contestation set, 2: m2's contestation set
    let mut views = [track(m1, m2, eval)?, track(m1, m2, &d1)?, track(m1, m2, &d2)?];

    let mut records = Vec::new();
    let status = loop {
        let mass = views[0].mass(eps);
        if mass < S::of(alpha) {
            break SessionStatus::Converged;
        }
        if records.len() >= max_sweeps {
            break SessionStatus::SweepLimit;
        }
        let frozen: Vec<[Vec<bool>; 2]> = views.iter().map(|v| v.sides(eps)).collect();
        let mut outcomes = Vec::with_capacity(4);
        for (slot, model) in [ModelIndex::First, ModelIndex::Second].into_iter().enumerate() {
            for (d, direction) in [Direction::Gt, Direction::Lt].into_iter().enumerate() {
                let own = slot + 1;
                let g = GroupMask::new(frozen[own][d].clone());
                let outcome = match model {
                    ModelIndex::First => m1.contest(&g)?,
                    ModelIndex::Second => m2.contest(&g)?,
                };
                if let Verdict::Accepted { delta, .. } = outcome.verdict {
                    for (view, sides) in views.iter_mut().zip(&frozen) {
                        view.shift(slot, &sides[d], delta);
                    }
                }
                outcomes.push((model, direction, outcome));
            }
        }
        let outcomes: [_; 4] = outcomes.try_into().expect("four contestations per sweep");
        let any_exhausted = outcomes.iter().any(|(_, _, o)| o.verdict == Verdict::Exhausted);
        let all_rejected = outcomes.iter().all(|(_, _, o)| o.verdict == Verdict::Rejected);
        records.push(SweepRecord { mass, outcomes });
        if any_exhausted {
            break SessionStatus::Exhausted;
        }
        if all_rejected {
            break SessionStatus::Stalled;
        }
    };
    debug_assert_eq!(views[1].f[0], m1.current().values());
    debug_assert_eq!(views[2].f[1], m2.current().values());

    let final_mass = views[0].mass(eps);
    let [eval_view, ..] = views;
    let [f1, f2] = eval_view.f;
    Ok(SessionOutcome {
        status,
        sweeps: records.len(),
        final_mass,
        records,
        eval_f1: PredictionVector::new(f1),
        eval_f2: PredictionVector::new(f2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConstantModel;

    fn ones(prefix: &str, n: usize) -> Dataset {
        Dataset::from_labels(prefix, vec![true; n]).unwrap()
    }

    #[test]
    fn agreeing_models_need_no_sweeps() {
        let mut m1 = ContestableState::new(ConstantModel(0.4), ones("a", 5_000), 40, 0.05, 1).unwrap();
        let mut m2 = ContestableState::new(ConstantModel(0.5), ones("b", 5_000), 40, 0.05, 2).unwrap();
        let out = contestable_reconcile(&mut m1, &mut m2, &ones("e", 50), 0.1, 0.2, 100).unwrap();
        assert_eq!(out.status, SessionStatus::Converged);
        assert_eq!(out.sweeps, 0);
        assert_eq!(out.final_mass, 0.0);
        assert_eq!(m1.attempted() + m2.attempted(), 0);
    }

    #[test]
    fn shifts_are_mirrored_onto_the_contestation_sets() {
        let mut m1 = ContestableState::new(ConstantModel(0.9), ones("a", 100_000), 5120, 0.05, 4).unwrap();
        let mut m2 = ContestableState::new(ConstantModel(0.1), ones("b", 100_000), 5120, 0.05, 5).unwrap();
        let out = contestable_reconcile(&mut m1, &mut m2, &ones("e", 100), 0.1, 0.5, 1280).unwrap();
        assert!(out.sweeps >= 1);
        assert_eq!(out.records.len(), out.sweeps);
        // constant base models keep each set constant after every shift
        let v1 = m1.current().get(0);
        assert!(m1.current().values().iter().all(|&v| v == v1));
        assert!(out.eval_f1.values().iter().all(|&v| v == v1));
        let v2 = m2.current().get(0);
        assert!(out.eval_f2.values().iter().all(|&v| v == v2));
    }

    #[test]
    fn sweep_limit_is_reported() {
        let mut m1 = ContestableState::new(ConstantModel(0.9), ones("a", 100_000), 5120, 0.05, 4).unwrap();
        let mut m2 = ContestableState::new(ConstantModel(0.1), ones("b", 100_000), 5120, 0.05, 5).unwrap();
        let out = contestable_reconcile(&mut m1, &mut m2, &ones("e", 10), 0.1, 0.5, 0).unwrap();
        assert_eq!(out.status, SessionStatus::SweepLimit);
        assert_eq!(out.final_mass, 1.0);
    }
}
