//! Contestable models: a model guarded by a held-out dataset that accepts only contestations
//! showing a large, noisily-verified mean-consistency violation.

mod checkpoint;
mod laplace;
mod params;
mod session;
mod state;

pub use checkpoint::{Checkpoint, GroupRef, PatchRecord, RngState};
pub use laplace::{laplace_cdf, laplace_from_uniform, laplace_sample};
pub use params::{BudgetConstants, ContestParams, THRESHOLD_SHARE};
pub use session::{contestable_reconcile, SessionOutcome, SessionStatus, SweepRecord};
pub use state::{ContestOutcome, ContestableState, PatchEntry, Verdict};
