use serde::{Deserialize, Serialize};

use super::ReconcileConfig;
use crate::error::{Error, Result};
use crate::measure::{disagreement_side, grid_value, Direction};
use crate::scalar::Scalar;

/// Which of the two models a round patched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum ModelIndex {
    First,
    Second,
}

impl ModelIndex {
    pub fn number(self) -> u8 {
        match self {
            ModelIndex::First => 1,
            ModelIndex::Second => 2,
        }
    }
}

impl From<ModelIndex> for u8 {
    fn from(m: ModelIndex) -> u8 {
        m.number()
    }
}

impl TryFrom<u8> for ModelIndex {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(ModelIndex::First),
            2 => Ok(ModelIndex::Second),
            other => Err(Error::Format(format!("model index must be 1 or 2, got {other}"))),
        }
    }
}

/// Informational per-round values; never used when replaying.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub mass: f64,
    pub v_star: f64,
    pub v_model: f64,
    pub brier_drop: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub t: usize,
    pub model: ModelIndex,
    pub direction: Direction,
    /// Patch size as a grid integer: the applied shift is `k / m`.
    pub k: i64,
    #[serde(skip)]
    pub diagnostics: Option<Diagnostics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ConfigJson {
    alpha: f64,
    epsilon: f64,
    m: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TranscriptJson {
    config: ConfigJson,
    records: Vec<UpdateRecord>,
    t1: usize,
    t2: usize,
}

/// The ordered `(model, direction, k)` choices of a reconciliation run. Together with the two
/// base models it determines both output models everywhere on the feature domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    config: ReconcileConfig,
    records: Vec<UpdateRecord>,
    t1: usize,
    t2: usize,
}

impl Transcript {
    pub fn new(config: ReconcileConfig) -> Self {
        Self { config, records: Vec::new(), t1: 0, t2: 0 }
    }

    pub(crate) fn push(&mut self, record: UpdateRecord) {
        match record.model {
            ModelIndex::First => self.t1 += 1,
            ModelIndex::Second => self.t2 += 1,
        }
        self.records.push(record);
    }

    pub fn config(&self) -> &ReconcileConfig {
        &self.config
    }

    pub fn records(&self) -> &[UpdateRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn t1(&self) -> usize {
        self.t1
    }

    pub fn t2(&self) -> usize {
        self.t2
    }

    /// Unclamped outputs of both models at a point with base predictions `(v1, v2)`.
    pub fn replay_point<S: Scalar>(&self, mut v1: S, mut v2: S) -> (S, S) {
        let epsilon = S::of(self.config.epsilon);
        for r in &self.records {
            if disagreement_side(v1, v2, epsilon) == Some(r.direction) {
                let delta = grid_value::<S>(r.k, self.config.m);
                match r.model {
                    ModelIndex::First => v1 = v1 + delta,
                    ModelIndex::Second => v2 = v2 + delta,
                }
            }
        }
        (v1, v2)
    }

    /// Replays the transcript over whole vectors of base predictions, in place.
    pub fn replay_in_place<S: Scalar>(&self, f1: &mut [S], f2: &mut [S]) -> Result<()> {
        if f1.len() != f2.len() {
            return Err(Error::Alignment { expected: f1.len(), found: f2.len() });
        }
        for (a, b) in f1.iter_mut().zip(f2.iter_mut()) {
            (*a, *b) = self.replay_point(*a, *b);
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = TranscriptJson {
            config: ConfigJson { alpha: self.config.alpha, epsilon: self.config.epsilon, m: self.config.m },
            records: self.records.clone(),
            t1: self.t1,
            t2: self.t2,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: TranscriptJson = serde_json::from_str(s)?;
        let config = ReconcileConfig::new(doc.config.alpha, doc.config.epsilon)?.with_m(doc.config.m)?;
        let mut transcript = Transcript::new(config);
        for (expected_t, r) in doc.records.into_iter().enumerate() {
            if r.t != expected_t {
                return Err(Error::Format(format!("record {expected_t} carries t = {}", r.t)));
            }
            if r.k.unsigned_abs() > transcript.config.m {
                return Err(Error::Format(format!("record {} has |k| > m", r.t)));
            }
            transcript.push(r);
        }
        if (transcript.t1, transcript.t2) != (doc.t1, doc.t2) {
            return Err(Error::Format(format!(
                "per-model counts ({}, {}) disagree with records ({}, {})",
                doc.t1, doc.t2, transcript.t1, transcript.t2
            )));
        }
        Ok(transcript)
    }
}
