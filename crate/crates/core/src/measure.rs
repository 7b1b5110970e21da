//! Empirical quantities over a dataset: Brier score, group mass, ε-disagreement regions,
//! group-conditional mean consistency and the rounding grid used for patch sizes.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GroupMask, PredictionVector};
use crate::error::{Error, Result};
use crate::scalar::{ordered_sum, Scalar};

/// Which side of an ε-disagreement a point falls on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `f1(x) - f2(x) > ε`
    Gt,
    /// `f2(x) - f1(x) > ε`
    Lt,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Gt, Direction::Lt];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Gt => "gt",
            Direction::Lt => "lt",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gt" => Ok(Direction::Gt),
            "lt" => Ok(Direction::Lt),
            other => Err(Error::Format(format!("unknown direction `{other}`"))),
        }
    }
}

/// Mean squared error against the binary labels. Pass `preds.clamped()` for the reported score.
pub fn brier_score<S: Scalar>(preds: &PredictionVector<S>, data: &Dataset) -> Result<S> {
    preds.check_aligned(data)?;
    let total = ordered_sum(preds.values().iter().enumerate().map(|(i, &f)| {
        let r = f - data.label::<S>(i);
        r * r
    }));
    Ok(total / S::of_usize(data.len()))
}

/// Fraction of the dataset inside `g`.
pub fn group_mass<S: Scalar>(g: &GroupMask, data: &Dataset) -> Result<S> {
    g.check_aligned(data)?;
    Ok(S::of_usize(g.count()) / S::of_usize(data.len()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisagreementSplit<S> {
    pub u_all: GroupMask,
    pub u_gt: GroupMask,
    pub u_lt: GroupMask,
    pub epsilon: S,
}

impl<S: Scalar> DisagreementSplit<S> {
    pub fn side(&self, direction: Direction) -> &GroupMask {
        match direction {
            Direction::Gt => &self.u_gt,
            Direction::Lt => &self.u_lt,
        }
    }

    pub fn mass(&self) -> S {
        S::of_usize(self.u_all.count()) / S::of_usize(self.u_all.len())
    }
}

/// Side of the ε-disagreement for a single pair of reported (clamped) predictions.
#[inline]
pub fn disagreement_side<S: Scalar>(p1: S, p2: S, epsilon: S) -> Option<Direction> {
    let (c1, c2) = (p1.clamp_unit(), p2.clamp_unit());
    if c1 - c2 > epsilon {
        Some(Direction::Gt)
    } else if c2 - c1 > epsilon {
        Some(Direction::Lt)
    } else {
        None
    }
}

pub(crate) fn check_epsilon<S: Scalar>(epsilon: S) -> Result<()> {
    if epsilon > S::zero() && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")))
    }
}

/// Splits the points where the two models' reported predictions differ by strictly more
/// than `epsilon` into the side where `f1` is higher and the side where `f2` is higher.
pub fn disagreement_split<S: Scalar>(
    f1: &PredictionVector<S>,
    f2: &PredictionVector<S>,
    epsilon: S,
    data: &Dataset,
) -> Result<DisagreementSplit<S>> {
    check_epsilon(epsilon)?;
    f1.check_aligned(data)?;
    f2.check_aligned(data)?;
    let n = data.len();
    let (mut all, mut gt, mut lt) = (vec![false; n], vec![false; n], vec![false; n]);
    for (i, (&a, &b)) in f1.values().iter().zip(f2.values()).enumerate() {
        match disagreement_side(a, b, epsilon) {
            Some(Direction::Gt) => {
                gt[i] = true;
                all[i] = true;
            }
            Some(Direction::Lt) => {
                lt[i] = true;
                all[i] = true;
            }
            None => {}
        }
    }
    Ok(DisagreementSplit { u_all: GroupMask::new(all), u_gt: GroupMask::new(gt), u_lt: GroupMask::new(lt), epsilon })
}

/// Group-conditional mean statistics of a model on one group.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationStats<S> {
    pub mass: S,
    /// Mean label on the group.
    pub v_star: S,
    /// Mean prediction on the group.
    pub v_model: S,
    /// `mass * (v_star - v_model)^2`
    pub weighted_violation: S,
}

impl<S: Scalar> ViolationStats<S> {
    pub(crate) fn from_sums(count: usize, n: usize, label_sum: S, pred_sum: S) -> Self {
        if count == 0 {
            return Self::default();
        }
        let c = S::of_usize(count);
        let mass = c / S::of_usize(n);
        let v_star = label_sum / c;
        let v_model = pred_sum / c;
        let gap = v_star - v_model;
        Self { mass, v_star, v_model, weighted_violation: mass * gap * gap }
    }

    /// Residual mean `E[y - f(x) | g]`, the exact patch size.
    pub fn residual(&self) -> S {
        self.v_star - self.v_model
    }

    /// Whether the group witnesses a failure of α-approximate group-conditional mean
    /// consistency. Empty groups never do.
    pub fn violates(&self, alpha: S) -> bool {
        self.weighted_violation > alpha
    }
}

pub fn violation_stats<S: Scalar>(
    preds: &PredictionVector<S>,
    g: &GroupMask,
    data: &Dataset,
) -> Result<ViolationStats<S>> {
    preds.check_aligned(data)?;
    g.check_aligned(data)?;
    let (mut count, mut label_sum, mut pred_sum) = (0usize, S::zero(), S::zero());
    for i in g.indices() {
        count += 1;
        label_sum = label_sum + data.label::<S>(i);
        pred_sum = pred_sum + preds.get(i);
    }
    Ok(ViolationStats::from_sums(count, data.len(), label_sum, pred_sum))
}

/// A point `k / m` of the signed rounding grid `{-m/m, ..., m/m}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint<S> {
    pub k: i64,
    pub value: S,
}

/// Grid value `k / m`; every consumer goes through here so replays are bit-identical.
pub fn grid_value<S: Scalar>(k: i64, m: u64) -> S {
    S::of_i64(k) / S::of_i64(m as i64)
}

/// Nearest point of the signed grid with spacing `1/m`; ties go to the smaller `k`.
pub fn round_to_grid<S: Scalar>(v: S, m: u64) -> Result<GridPoint<S>> {
    if m == 0 {
        return Err(Error::Parameter("grid resolution m must be at least 1".into()));
    }
    if !v.is_finite() || v.abs() > S::one() {
        return Err(Error::Parameter(format!("grid rounding needs |v| <= 1, got {v}")));
    }
    let mi = m as i64;
    let base = (v * S::of_i64(mi)).floor().to_i64().unwrap_or(0);
    // floor(v*m) may be off by one after floating point rounding; scan its neighbours.
    let mut best: Option<(i64, S)> = None;
    for k in (base - 1)..=(base + 2) {
        if k < -mi || k > mi {
            continue;
        }
        let dist = (v - grid_value::<S>(k, m)).abs();
        match best {
            Some((_, d)) if dist >= d => {}
            _ => best = Some((k, dist)),
        }
    }
    let (k, _) = best.expect("grid always has a candidate within range");
    Ok(GridPoint { k, value: grid_value(k, m) })
}
