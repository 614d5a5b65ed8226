//! Principal branch of the Lambert W function.

use std::f64::consts::E;

use crate::{Error, Result};

const INV_E: f64 = 1.0 / E;
const MAX_ITER: usize = 64;

/// `W0(x)`: the solution `w >= -1` of `w * e^w = x`, for `x >= -1/e`.
///
/// Starts from a branch-point series near `-1/e`, a Padé-style guess around
/// zero and the asymptotic expansion for large `x`, then applies Halley
/// steps until `|w e^w - x|` is within a few ulps of `|x|` or the step
/// stalls.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E {
        return Err(Error::LambertDomain(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == -INV_E {
        return Ok(-1.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }

    let mut w = initial_guess(x);
    let tol = 1e-15 * x.abs();
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= tol {
            break;
        }
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        let next = (w - step).max(-1.0);
        if next == w {
            break;
        }
        w = next;
    }
    Ok(w)
}

fn initial_guess(x: f64) -> f64 {
    if x < -0.25 {
        // expansion in p = sqrt(2 (e x + 1)) around the branch point
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        let l = x.ln_1p();
        l * (1.0 - l.ln_1p() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}
