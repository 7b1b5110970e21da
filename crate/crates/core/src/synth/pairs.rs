use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{SupportModel, SyntheticDistribution};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Recipes for two models that disagree widely on a distribution. They depend only on the
/// distribution and a seed, never on a sample drawn from it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pair", rename_all = "snake_case")]
pub enum PairMaker {
    /// `p* + b` and `p* - b` on even support points, reversed on odd ones.
    OppositeBiases { bias: f64 },
    /// `p*` against the constant `1/2`.
    TruthVsHalf,
    /// Two copies of `p*`, each perturbed by independent uniform noise on `[-noise, noise]`.
    CorruptedCopies { noise: f64 },
}

impl Default for PairMaker {
    fn default() -> Self {
        PairMaker::OppositeBiases { bias: 0.3 }
    }
}

impl PairMaker {
    pub fn name(&self) -> &'static str {
        match self {
            PairMaker::OppositeBiases { .. } => "opposite_biases",
            PairMaker::TruthVsHalf => "truth_vs_half",
            PairMaker::CorruptedCopies { .. } => "corrupted_copies",
        }
    }

    /// Both models, with predictions clamped to `[0, 1]`.
    pub fn make<S: Scalar>(&self, dist: &SyntheticDistribution, seed: u64) -> (SupportModel<S>, SupportModel<S>) {
        let p = dist.p_star();
        let clamp = |v: f64| S::of(v.clamp(0.0, 1.0));
        let (f1, f2): (Vec<S>, Vec<S>) = match *self {
            PairMaker::OppositeBiases { bias } => p
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let b = if i % 2 == 0 { bias } else { -bias };
                    (clamp(v + b), clamp(v - b))
                })
                .unzip(),
            PairMaker::TruthVsHalf => p.iter().map(|&v| (clamp(v), S::of(0.5))).unzip(),
            PairMaker::CorruptedCopies { noise } => {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                p.iter()
                    .map(|&v| {
                        let a = v + rng.gen_range(-noise..=noise);
                        let b = v + rng.gen_range(-noise..=noise);
                        (clamp(a), clamp(b))
                    })
                    .unzip()
            }
        };
        (SupportModel::new(f1), SupportModel::new(f2))
    }
}

impl fmt::Display for PairMaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairMaker::OppositeBiases { bias } => write!(f, "opposite_biases:{bias}"),
            PairMaker::TruthVsHalf => f.write_str("truth_vs_half"),
            PairMaker::CorruptedCopies { noise } => write!(f, "corrupted_copies:{noise}"),
        }
    }
}

/// Parses `opposite_biases[:b]`, `truth_vs_half` or `corrupted_copies[:noise]`.
impl FromStr for PairMaker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let number = |a: Option<&str>, default: f64| -> Result<f64> {
            let v = match a {
                Some(a) => a.trim().parse::<f64>().map_err(|e| Error::Parameter(format!("bad value in `{s}`: {e}")))?,
                None => default,
            };
            if v > 0.0 && v <= 1.0 {
                Ok(v)
            } else {
                Err(Error::Parameter(format!("`{s}`: the magnitude must lie in (0, 1]")))
            }
        };
        match (name, arg) {
            ("opposite_biases", a) => Ok(PairMaker::OppositeBiases { bias: number(a, 0.3)? }),
            ("truth_vs_half", None) => Ok(PairMaker::TruthVsHalf),
            ("corrupted_copies", a) => Ok(PairMaker::CorruptedCopies { noise: number(a, 0.5)? }),
            _ => Err(Error::Parameter(format!("unknown model pair `{s}`"))),
        }
    }
}
