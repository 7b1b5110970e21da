//! Centered Laplace noise by inverse-CDF sampling.

use rand::distributions::Open01;
use rand::Rng;

use crate::error::{Error, Result};

/// Inverse CDF of `Lap(b)` written in terms of `u = U - 1/2` with `U` uniform on `(0, 1)`:
/// `-b * sgn(u) * ln(1 - 2|u|)`.
pub fn laplace_from_uniform(u: f64, scale: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// One draw from the centered Laplace distribution with scale `b`.
pub fn laplace_sample<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Parameter(format!("Laplace scale must be positive, got {scale}")));
    }
    let u: f64 = rng.sample(Open01);
    Ok(laplace_from_uniform(u - 0.5, scale))
}

pub fn laplace_cdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}
