//! Base models: anything that maps an example to a prediction in `[0, 1]`.

use std::collections::HashMap;

use crate::data::{Dataset, Example, ExampleId, PredictionVector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub trait BaseModel<S: Scalar>: Send + Sync {
    fn predict(&self, x: &Example) -> Result<S>;

    fn predict_all(&self, data: &Dataset) -> Result<PredictionVector<S>> {
        let values = data.examples().iter().map(|x| self.predict(x)).collect::<Result<Vec<_>>>()?;
        Ok(PredictionVector::new(values))
    }
}

impl<S: Scalar, M: BaseModel<S> + ?Sized> BaseModel<S> for &M {
    fn predict(&self, x: &Example) -> Result<S> {
        (**self).predict(x)
    }
}

impl<S: Scalar, M: BaseModel<S> + ?Sized> BaseModel<S> for Box<M> {
    fn predict(&self, x: &Example) -> Result<S> {
        (**self).predict(x)
    }
}

impl<S: Scalar, M: BaseModel<S> + ?Sized> BaseModel<S> for std::sync::Arc<M> {
    fn predict(&self, x: &Example) -> Result<S> {
        (**self).predict(x)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantModel<S>(pub S);

impl<S: Scalar> BaseModel<S> for ConstantModel<S> {
    fn predict(&self, _x: &Example) -> Result<S> {
        Ok(self.0)
    }
}

/// Predictions looked up by example id, e.g. a prediction file.
#[derive(Clone, Debug, Default)]
pub struct TabularModel<S> {
    table: HashMap<ExampleId, S>,
}

impl<S: Scalar> TabularModel<S> {
    pub fn new(table: HashMap<ExampleId, S>) -> Self {
        Self { table }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (ExampleId, S)>) -> Self {
        Self::new(pairs.into_iter().collect())
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, id: &ExampleId) -> Option<S> {
        self.table.get(id).copied()
    }
}

impl<S: Scalar> BaseModel<S> for TabularModel<S> {
    fn predict(&self, x: &Example) -> Result<S> {
        self.get(&x.id).ok_or_else(|| Error::UnknownExample(x.id.to_string()))
    }
}

/// Rule-backed model over the feature vector.
pub struct FnModel<F>(pub F);

impl<S, F> BaseModel<S> for FnModel<F>
where
    S: Scalar,
    F: Fn(&[f64]) -> S + Send + Sync,
{
    fn predict(&self, x: &Example) -> Result<S> {
        Ok((self.0)(&x.features))
    }
}
