//! Limiting density of a relay energy buffer.
//!
//! A buffer that harvests `Exp(lambda)` energy every slot and spends `m`
//! with probability `b` whenever it holds at least `m` has, when
//! `b * lambda * m > 1`, the stationary density
//!
//! ```text
//! g(x) = (1 - e^{q x}) / m                    0 <= x < m
//! g(x) = k e^{q x},  k = -q / (m (b lambda + q))   x >= m
//! ```
//!
//! where `q < 0` is the non-trivial root of `b lambda e^{q m} = b lambda + q`.

use super::lambert::lambert_w0;
use crate::{Error, Result};

/// Products `b * lambda * m` closer to 1 than this are treated as unstable:
/// the root collapses onto `q = 0` and cannot be separated numerically.
pub const STABILITY_MARGIN: f64 = 1e-9;

fn check_stable(b: f64, lambda: f64, m: f64) -> Result<f64> {
    let psi = b * lambda * m;
    if !(b > 0.0 && lambda > 0.0 && m > 0.0) || !(psi > 1.0 + STABILITY_MARGIN) || !psi.is_finite() {
        return Err(Error::UnstableBuffer { psi });
    }
    Ok(psi)
}

/// Negative root `q` of `b lambda e^{q m} = b lambda + q`.
pub fn characteristic_root(b: f64, lambda: f64, m: f64) -> Result<f64> {
    root_and_gap(b, lambda, m).map(|(q, _)| q)
}

/// Returns `q` together with `s = b lambda + q`.
///
/// `s = -W0(-psi e^{-psi}) / m` with `psi = b lambda m` is computed
/// directly rather than as a difference, since it is of order `e^{-psi}`
/// and would otherwise cancel away for large `psi`. It is then polished
/// with Newton steps on `s = b lambda e^{s m - psi}`.
fn root_and_gap(b: f64, lambda: f64, m: f64) -> Result<(f64, f64)> {
    let psi = check_stable(b, lambda, m)?;
    let bl = b * lambda;
    // -psi e^{-psi} can round a hair below -1/e when psi ~ 1
    let arg = (-psi * (-psi).exp()).max(-(-1f64).exp());
    let mut s = -lambert_w0(arg)? / m;

    for _ in 0..8 {
        let g = bl * (s * m - psi).exp();
        let f = s - g;
        let df = 1.0 - m * g;
        if f == 0.0 || !(df > 0.0) {
            break;
        }
        let next = s - f / df;
        if !(next > 0.0 && next < bl) {
            break;
        }
        let done = (next - s).abs() <= 4.0 * f64::EPSILON * s;
        s = next;
        if done {
            break;
        }
    }
    Ok((s - bl, s))
}

/// `P{B >= m}` in the stationary regime: `1 / (m b lambda)`.
pub fn pr_buffer_available(b: f64, lambda: f64, m: f64) -> Result<f64> {
    let psi = check_stable(b, lambda, m)?;
    Ok(1.0 / psi)
}

/// Piecewise-exponential stationary density of one buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitingPdf {
    /// Probability of spending `m` in a slot where the buffer can afford it.
    pub b: f64,
    pub lambda: f64,
    pub m: f64,
    /// Characteristic root, strictly negative.
    pub q: f64,
    /// Tail coefficient `-q / (m (b lambda + q))`.
    pub k: f64,
}

impl LimitingPdf {
    pub fn new(b: f64, lambda: f64, m: f64) -> Result<Self> {
        let (q, s) = root_and_gap(b, lambda, m)?;
        Ok(Self {
            b,
            lambda,
            m,
            q,
            k: -q / (m * s),
        })
    }

    /// Builds the density around a given root without checking it. Used to
    /// probe how sensitive the residual checks are to a wrong root.
    pub fn from_root(b: f64, lambda: f64, m: f64, q: f64) -> Self {
        let k = -q / (m * (b * lambda + q));
        Self { b, lambda, m, q, k }
    }

    /// `b * lambda * m`, the stabilization parameter of this buffer.
    pub fn psi(&self) -> f64 {
        self.b * self.lambda * self.m
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x < self.m {
            self.head(x)
        } else {
            self.tail(x)
        }
    }

    /// `(1 - e^{q x}) / m`, the branch below `m`.
    pub fn head(&self, x: f64) -> f64 {
        -(self.q * x).exp_m1() / self.m
    }

    /// `k e^{q x}`, the branch at and above `m`.
    pub fn tail(&self, x: f64) -> f64 {
        self.k * (self.q * x).exp()
    }

    /// `P{B >= m}` from the tail: `-k e^{q m} / q`.
    pub fn tail_mass(&self) -> f64 {
        -self.k * (self.q * self.m).exp() / self.q
    }

    /// `P{B >= m}` in its simplified form `1 / (m b lambda)`.
    pub fn pr_available(&self) -> f64 {
        1.0 / self.psi()
    }

    /// `P{B <= x}`.
    pub fn cdf(&self, x: f64) -> f64 {
        let q = self.q;
        if x <= 0.0 {
            0.0
        } else if x < self.m {
            (x - (q * x).exp_m1() / q) / self.m
        } else {
            let head = (self.m - (q * self.m).exp_m1() / q) / self.m;
            head + self.k * ((q * x).exp() - (q * self.m).exp()) / q
        }
    }

    /// Mass of `[lo, hi)` under the density.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        self.cdf(hi) - self.cdf(lo)
    }

    /// Residual of the defining equation `b lambda e^{q m} - b lambda - q`.
    pub fn root_residual(&self) -> f64 {
        let bl = self.b * self.lambda;
        bl * (self.q * self.m).exp() - bl - self.q
    }
}
