//! Labeled datasets, per-example prediction vectors and group masks.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_aligned, Error, Result};
use crate::scalar::Scalar;

/// Opaque identifier of a single datapoint.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExampleId(String);

impl ExampleId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ExampleId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// A point of the feature domain. Models see the id and the (possibly empty) feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub id: ExampleId,
    pub features: Vec<f64>,
}

impl Example {
    pub fn new(id: impl Into<String>, features: Vec<f64>) -> Self {
        Self { id: ExampleId::new(id), features }
    }

    pub fn bare(id: impl Into<String>) -> Self {
        Self::new(id, Vec::new())
    }
}

/// A finite labeled sample; also read as the uniform (empirical) distribution over its points.
#[derive(Clone, Debug)]
pub struct Dataset {
    examples: Vec<Example>,
    labels: Vec<bool>,
    index: HashMap<ExampleId, usize>,
}

impl Dataset {
    pub fn new(examples: Vec<Example>, labels: Vec<bool>) -> Result<Self> {
        ensure_aligned(examples.len(), labels.len())?;
        if examples.is_empty() {
            return Err(Error::Parameter("dataset must contain at least one point".into()));
        }
        let mut index = HashMap::with_capacity(examples.len());
        for (i, ex) in examples.iter().enumerate() {
            if index.insert(ex.id.clone(), i).is_some() {
                return Err(Error::DuplicateExample(ex.id.to_string()));
            }
        }
        Ok(Self { examples, labels, index })
    }

    /// Featureless dataset whose ids are `prefix0, prefix1, ...`.
    pub fn from_labels(prefix: &str, labels: Vec<bool>) -> Result<Self> {
        let examples = (0..labels.len()).map(|i| Example::bare(format!("{prefix}{i}"))).collect();
        Self::new(examples, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false: construction rejects empty datasets.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn example(&self, i: usize) -> &Example {
        &self.examples[i]
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn label<S: Scalar>(&self, i: usize) -> S {
        if self.labels[i] {
            S::one()
        } else {
            S::zero()
        }
    }

    pub fn position(&self, id: &ExampleId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = &ExampleId> {
        self.examples.iter().map(|e| &e.id)
    }
}

/// Real-valued predictions aligned index-for-index with a [`Dataset`].
///
/// Values produced by patching are kept unclamped; [`PredictionVector::clamped`] gives the
/// reported view with every value in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionVector<S> {
    values: Vec<S>,
    clamped: bool,
}

impl<S: Scalar> PredictionVector<S> {
    pub fn new(values: Vec<S>) -> Self {
        Self { values, clamped: false }
    }

    pub fn constant(value: S, n: usize) -> Self {
        Self::new(vec![value; n])
    }

    pub fn clamped(&self) -> Self {
        Self { values: self.values.iter().map(|v| v.clamp_unit()).collect(), clamped: true }
    }

    pub fn is_clamped(&self) -> bool {
        self.clamped
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> S {
        self.values[i]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [S] {
        self.clamped = false;
        &mut self.values
    }

    pub fn check_aligned(&self, data: &Dataset) -> Result<()> {
        ensure_aligned(data.len(), self.len())
    }
}

/// Indicator of a group over the points of a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupMask {
    members: Vec<bool>,
}

impl GroupMask {
    pub fn new(members: Vec<bool>) -> Self {
        Self { members }
    }

    pub fn all(n: usize) -> Self {
        Self::new(vec![true; n])
    }

    pub fn none(n: usize) -> Self {
        Self::new(vec![false; n])
    }

    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut members = vec![false; n];
        for i in indices {
            members[i] = true;
        }
        Self::new(members)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members[i]
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn any(&self) -> bool {
        self.members.iter().any(|&m| m)
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter_map(|(i, &m)| m.then_some(i))
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::new(self.members.iter().zip(&other.members).map(|(a, b)| *a || *b).collect())
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self::new(self.members.iter().zip(&other.members).map(|(a, b)| *a && *b).collect())
    }

    pub fn complement(&self) -> Self {
        Self::new(self.members.iter().map(|m| !m).collect())
    }

    pub fn check_aligned(&self, data: &Dataset) -> Result<()> {
        ensure_aligned(data.len(), self.len())
    }
}
