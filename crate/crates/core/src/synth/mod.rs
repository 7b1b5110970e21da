//! Finite-support distributions with known individual probabilities.
//!
//! Because the support is finite, distributional Brier scores and disagreement masses are exact
//! weighted sums, which lets the out-of-sample guarantees of reconciliation be checked by
//! Monte Carlo against ground truth.

mod experiment;
mod pairs;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

pub use experiment::{
    binomial_required_passes, brier_error_term, generalization_experiment, mass_error_term, ExperimentConfig,
    ExperimentReport, Quantiles, TrialResult,
};
pub use pairs::PairMaker;

use crate::data::{Dataset, Example};
use crate::error::{Error, Result};
use crate::measure::disagreement_side;
use crate::model::BaseModel;
use crate::reconcile::PatchedModelPair;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionKind {
    /// `p* ≡ 1/2`.
    ConstantHalf,
    /// `p*(x)` drawn uniformly from `[0, 1]`.
    RandomBernoulli,
    /// `p*(x) ∈ {0, 1}` by a fair coin per point: outcomes are fixed, yet look like coin flips.
    DeterministicCoin,
    /// `p*` constant on contiguous blocks of the support, one value per block.
    PiecewiseGroups { blocks: Vec<f64> },
}

impl DistributionKind {
    pub fn name(&self) -> &'static str {
        match self {
            DistributionKind::ConstantHalf => "constant_half",
            DistributionKind::RandomBernoulli => "random_bernoulli",
            DistributionKind::DeterministicCoin => "deterministic_coin",
            DistributionKind::PiecewiseGroups { .. } => "piecewise_groups",
        }
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionKind::PiecewiseGroups { blocks } => {
                let values: Vec<String> = blocks.iter().map(|b| b.to_string()).collect();
                write!(f, "piecewise_groups:{}", values.join(","))
            }
            other => f.write_str(other.name()),
        }
    }
}

/// Parses `constant_half`, `random_bernoulli`, `deterministic_coin`, `piecewise_groups` (two
/// blocks at 0.2 and 0.8) or `piecewise_groups:v1,v2,...`.
impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let kind = match (name, arg) {
            ("constant_half", None) => DistributionKind::ConstantHalf,
            ("random_bernoulli", None) => DistributionKind::RandomBernoulli,
            ("deterministic_coin", None) => DistributionKind::DeterministicCoin,
            ("piecewise_groups", None) => DistributionKind::PiecewiseGroups { blocks: vec![0.2, 0.8] },
            ("piecewise_groups", Some(list)) => {
                let blocks = list
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Parameter(format!("bad block value in `{s}`: {e}")))?;
                DistributionKind::PiecewiseGroups { blocks }
            }
            _ => return Err(Error::Parameter(format!("unknown distribution kind `{s}`"))),
        };
        Ok(kind)
    }
}

/// A distribution over support points `0..M` with weights `w` and label probabilities `p*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDistribution {
    kind: DistributionKind,
    weights: Vec<f64>,
    p_star: Vec<f64>,
}

impl SyntheticDistribution {
    pub fn new(kind: DistributionKind, weights: Vec<f64>, p_star: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Parameter("support is empty".into()));
        }
        if weights.len() != p_star.len() {
            return Err(Error::Alignment { expected: weights.len(), found: p_star.len() });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Parameter(format!("weight {w} is not a non-negative number")));
        }
        if let Some(p) = p_star.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Parameter(format!("p* value {p} is outside [0, 1]")));
        }
        let total = compensated_sum(&weights);
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { kind, weights, p_star })
    }

    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn p_star(&self) -> &[f64] {
        &self.p_star
    }

    pub fn support_id(i: usize) -> String {
        format!("x{i}")
    }

    /// Support point `i` as an example whose single feature is its index.
    pub fn support_example(&self, i: usize) -> Example {
        Example::new(Self::support_id(i), vec![i as f64])
    }

    pub fn support(&self) -> impl Iterator<Item = Example> + '_ {
        (0..self.len()).map(|i| self.support_example(i))
    }

    /// The ground-truth model `x ↦ p*(x)`.
    pub fn truth<S: Scalar>(&self) -> SupportModel<S> {
        SupportModel::new(self.p_star.iter().map(|&p| S::of(p)).collect())
    }

    /// Writes `x_id,weight,p_star` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x_id", "weight", "p_star"])?;
        for i in 0..self.len() {
            w.write_record([
                Self::support_id(i),
                crate::io::format_float(self.weights[i]),
                crate::io::format_float(self.p_star[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads rows written by [`SyntheticDistribution::write_csv`]; ids must be `x0, x1, ...` in order.
    pub fn read_csv<R: Read>(input: R, kind: DistributionKind) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let (mut weights, mut p_star) = (Vec::new(), Vec::new());
        for (i, row) in r.records().enumerate() {
            let row = row?;
            if row.len() != 3 {
                return Err(Error::Format(format!("row {} has {} fields, expected 3", i + 1, row.len())));
            }
            if row[0] != Self::support_id(i) {
                return Err(Error::Format(format!("row {} has id `{}`, expected `x{i}`", i + 1, &row[0])));
            }
            weights.push(crate::io::parse_float(&row[1])?);
            p_star.push(crate::io::parse_float(&row[2])?);
        }
        Self::new(kind, weights, p_star)
    }
}

/// Neumaier summation, so large uniform supports still sum to 1 within 1e-12.
fn compensated_sum(values: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Builds a distribution of `size` equally weighted support points.
pub fn make_distribution(kind: DistributionKind, size: usize, seed: u64) -> Result<SyntheticDistribution> {
    if size == 0 {
        return Err(Error::Parameter("support size must be at least 1".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let p_star: Vec<f64> = match &kind {
        DistributionKind::ConstantHalf => vec![0.5; size],
        DistributionKind::RandomBernoulli => (0..size).map(|_| rng.gen::<f64>()).collect(),
        DistributionKind::DeterministicCoin => (0..size).map(|_| if rng.gen::<bool>() { 1.0 } else { 0.0 }).collect(),
        DistributionKind::PiecewiseGroups { blocks } => {
            if blocks.is_empty() || blocks.len() > size {
                return Err(Error::Parameter(format!(
                    "{} blocks cannot tile a support of {size} points",
                    blocks.len()
                )));
            }
            // block b covers [b*size/B, (b+1)*size/B)
            (0..size).map(|i| blocks[i * blocks.len() / size]).collect()
        }
    };
    let weights = vec![1.0 / size as f64; size];
    // equal weights may miss 1 by a few ulps; SyntheticDistribution::new tolerates 1e-12
    SyntheticDistribution::new(kind, weights, p_star)
}

/// Draws `n` i.i.d. labeled points. Example `j` has id `s{j}` and its support index as feature.
pub fn sample(dist: &SyntheticDistribution, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Parameter("sample size must be at least 1".into()));
    }
    let index =
        WeightedIndex::new(&dist.weights).map_err(|e| Error::Parameter(format!("weights cannot be sampled: {e}")))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut examples = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for j in 0..n {
        let i = index.sample(&mut rng);
        examples.push(Example::new(format!("s{j}"), vec![i as f64]));
        labels.push(rng.gen::<f64>() < dist.p_star[i]);
    }
    Dataset::new(examples, labels)
}

/// A model defined by one value per support point, looked up through the example's first
/// feature.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportModel<S> {
    values: Vec<S>,
}

impl<S: Scalar> SupportModel<S> {
    pub fn new(values: Vec<S>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }
}

impl<S: Scalar> BaseModel<S> for SupportModel<S> {
    fn predict(&self, x: &Example) -> Result<S> {
        let index = x
            .features
            .first()
            .filter(|f| f.fract() == 0.0 && **f >= 0.0)
            .map(|f| *f as usize)
            .filter(|&i| i < self.values.len());
        index.map(|i| self.values[i]).ok_or_else(|| Error::UnknownExample(x.id.to_string()))
    }
}

/// Exact `B(f, 𝒟)` for predictions given on every support point.
pub fn exact_brier_values<S: Scalar>(values: &[S], dist: &SyntheticDistribution) -> Result<S> {
    if values.len() != dist.len() {
        return Err(Error::Alignment { expected: dist.len(), found: values.len() });
    }
    let mut total = S::zero();
    for ((&f, &w), &p) in values.iter().zip(&dist.weights).zip(&dist.p_star) {
        let (w, p) = (S::of(w), S::of(p));
        let miss = S::one() - f;
        total = total + w * (p * miss * miss + (S::one() - p) * f * f);
    }
    Ok(total)
}

/// Exact `B(f, 𝒟) = Σ w(x) [p*(x)(1 - f(x))² + (1 - p*(x)) f(x)²]`.
pub fn exact_brier<S: Scalar, M: BaseModel<S>>(model: &M, dist: &SyntheticDistribution) -> Result<S> {
    let values = dist.support().map(|x| model.predict(&x)).collect::<Result<Vec<_>>>()?;
    exact_brier_values(&values, dist)
}

/// Reported predictions of both reconciled models on every support point.
pub fn replay_on_support<S, M1, M2>(
    pair: &PatchedModelPair<S, M1, M2>,
    dist: &SyntheticDistribution,
) -> Result<(Vec<S>, Vec<S>)>
where
    S: Scalar,
    M1: BaseModel<S>,
    M2: BaseModel<S>,
{
    let mut f1 = Vec::with_capacity(dist.len());
    let mut f2 = Vec::with_capacity(dist.len());
    for x in dist.support() {
        let (a, b) = pair.replay_predict(&x)?;
        f1.push(a);
        f2.push(b);
    }
    Ok((f1, f2))
}

/// Exact `μ(U_ε)` for predictions given on every support point.
pub fn exact_disagreement_mass_values<S: Scalar>(
    f1: &[S],
    f2: &[S],
    dist: &SyntheticDistribution,
    epsilon: f64,
) -> Result<S> {
    if f1.len() != dist.len() || f2.len() != dist.len() {
        return Err(Error::Alignment { expected: dist.len(), found: f1.len().min(f2.len()) });
    }
    crate::measure::check_epsilon(S::of(epsilon))?;
    let eps = S::of(epsilon);
    let mut mass = S::zero();
    for ((&a, &b), &w) in f1.iter().zip(f2).zip(&dist.weights) {
        if disagreement_side(a, b, eps).is_some() {
            mass = mass + S::of(w);
        }
    }
    Ok(mass)
}

/// Exact `μ(U_ε(f1, f2))` under `dist` for a reconciled pair.
pub fn exact_disagreement_mass<S, M1, M2>(
    pair: &PatchedModelPair<S, M1, M2>,
    dist: &SyntheticDistribution,
    epsilon: f64,
) -> Result<S>
where
    S: Scalar,
    M1: BaseModel<S>,
    M2: BaseModel<S>,
{
    let (f1, f2) = replay_on_support(pair, dist)?;
    exact_disagreement_mass_values(&f1, &f2, dist, epsilon)
}
