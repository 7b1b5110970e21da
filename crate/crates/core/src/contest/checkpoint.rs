//! JSON checkpoint of a contestable model.
//!
//! The current model is not stored; it is rebuilt from the base model and the patch log on
//! restore, so `delta` values are written with round-trip precision.

use bitvec::vec::BitVec;
use serde::{Deserialize, Serialize};

use super::params::ContestParams;
use super::state::{ContestableState, PatchEntry, RestoredParts};
use crate::data::{Dataset, ExampleId};
use crate::error::{Error, Result};
use crate::model::BaseModel;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    /// ChaCha word position, as a decimal string (it does not fit a JSON number).
    pub word_pos: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupRef {
    /// `"all"` or `"none"`
    Named(String),
    Ids(Vec<ExampleId>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchRecord {
    pub group: GroupRef,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub params: ContestParams,
    pub c: u64,
    pub t: u64,
    pub noisy_threshold: f64,
    pub rng_state: RngState,
    pub patch_log: Vec<PatchRecord>,
    /// Where the base model can be loaded from (opaque to this crate).
    pub base_model: String,
    /// Where the contestation dataset can be loaded from (opaque to this crate).
    pub dataset: String,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn encode_group(bits: &BitVec, data: &Dataset) -> GroupRef {
    let count = bits.count_ones();
    if count == 0 {
        GroupRef::Named("none".into())
    } else if count == bits.len() {
        GroupRef::Named("all".into())
    } else {
        GroupRef::Ids(bits.iter_ones().map(|i| data.example(i).id.clone()).collect())
    }
}

fn decode_group(group: &GroupRef, data: &Dataset) -> Result<BitVec> {
    let n = data.len();
    match group {
        GroupRef::Named(name) if name == "all" => Ok(BitVec::repeat(true, n)),
        GroupRef::Named(name) if name == "none" => Ok(BitVec::repeat(false, n)),
        GroupRef::Named(other) => Err(Error::Format(format!("unknown group name `{other}`"))),
        GroupRef::Ids(ids) => {
            let mut bits = BitVec::repeat(false, n);
            for id in ids {
                let i = data.position(id).ok_or_else(|| Error::UnknownExample(id.to_string()))?;
                bits.set(i, true);
            }
            Ok(bits)
        }
    }
}

impl<S: Scalar, M: BaseModel<S>> ContestableState<S, M> {
    pub fn checkpoint(&self, base_model: impl Into<String>, dataset: impl Into<String>) -> Checkpoint {
        Checkpoint {
            params: *self.params(),
            c: self.accepted(),
            t: self.attempted(),
            noisy_threshold: self.noisy_threshold().as_f64(),
            rng_state: RngState { seed: self.seed(), word_pos: self.rng_word_pos().to_string() },
            patch_log: self
                .patch_log()
                .iter()
                .map(|e| PatchRecord { group: encode_group(&e.group, self.data()), delta: e.delta })
                .collect(),
            base_model: base_model.into(),
            dataset: dataset.into(),
        }
    }

    /// Rebuilds a state from a checkpoint and the base model and dataset it refers to.
    pub fn restore(checkpoint: &Checkpoint, base: M, data: Dataset) -> Result<Self> {
        let word_pos = checkpoint
            .rng_state
            .word_pos
            .parse::<u128>()
            .map_err(|e| Error::Format(format!("bad rng word position: {e}")))?;
        let expected = ContestParams::with_constants(
            checkpoint.params.n,
            checkpoint.params.k,
            checkpoint.params.delta,
            checkpoint.params.constants,
        )?;
        if expected != checkpoint.params {
            return Err(Error::Format("checkpoint parameters are not self-consistent".into()));
        }
        let patch_log = checkpoint
            .patch_log
            .iter()
            .map(|p| Ok(PatchEntry { group: decode_group(&p.group, &data)?, delta: p.delta }))
            .collect::<Result<Vec<_>>>()?;
        ContestableState::from_parts(RestoredParts {
            params: checkpoint.params,
            base,
            data,
            accepted: checkpoint.c,
            attempted: checkpoint.t,
            noisy_threshold: S::of(checkpoint.noisy_threshold),
            seed: checkpoint.rng_state.seed,
            word_pos,
            patch_log,
        })
    }
}
