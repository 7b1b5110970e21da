//! Reconciliation of two individual-probability forecasters.
//!
//! Two models that disagree by more than `ε` on a non-trivial part of the data cannot both be
//! accurate there. [`reconcile::reconcile`] repeatedly finds which model is worse on one side of
//! the disagreement region and patches it, strictly lowering its Brier score each time, until
//! the models agree on all but an `α` fraction of the data. [`contest`] wraps a model with a
//! held-out dataset so that third parties can contest it an exponential number of times.
//!
//! Everything is generic over the scalar type; [`f64`] aliases are exported at the crate root
//! and [`f32`] aliases under [`single`].

pub mod contest;
pub mod data;
pub mod error;
pub mod io;
pub mod measure;
pub mod model;
pub mod reconcile;
mod scalar;
pub mod synth;

pub use data::{Dataset, Example, ExampleId, GroupMask};
pub use error::{Error, Result};
pub use measure::{brier_score, disagreement_split, group_mass, round_to_grid, violation_stats, Direction};
pub use model::{BaseModel, ConstantModel, FnModel, TabularModel};
pub use reconcile::{reconcile, ReconcileConfig, Transcript};
pub use scalar::Scalar;

pub type PredictionVector = data::PredictionVector<f64>;
pub type DisagreementSplit = measure::DisagreementSplit<f64>;
pub type ViolationStats = measure::ViolationStats<f64>;
pub type RoundReport = reconcile::RoundReport<f64>;
pub type ContestableState<M> = contest::ContestableState<f64, M>;
pub type ContestOutcome = contest::ContestOutcome<f64>;

/// Single-precision aliases.
pub mod single {
    pub type PredictionVector = crate::data::PredictionVector<f32>;
    pub type DisagreementSplit = crate::measure::DisagreementSplit<f32>;
    pub type ViolationStats = crate::measure::ViolationStats<f32>;
    pub type RoundReport = crate::reconcile::RoundReport<f32>;
    pub type ContestableState<M> = crate::contest::ContestableState<f32, M>;
    pub type ContestOutcome = crate::contest::ContestOutcome<f32>;
}
