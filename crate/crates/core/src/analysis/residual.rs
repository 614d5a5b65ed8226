//! Numerical check that a limiting density solves the buffer's
//! stationarity integral equations.

use super::pdf::LimitingPdf;
use crate::quad::integrate;

const TOL: f64 = 1e-10;

/// Right-hand side of the stationarity equation at level `x`.
///
/// A level `x >= m` is reached from any head level by a harvest, from a tail
/// level without spending, or from a tail level after spending `m`. A level
/// below `m` can only come from a lower head level or from a tail level
/// after spending.
pub fn stationarity_rhs(pdf: &LimitingPdf, x: f64) -> f64 {
    let (b, lambda, m) = (pdf.b, pdf.lambda, pdf.m);
    let f = |y: f64| if y < 0.0 { 0.0 } else { lambda * (-lambda * y).exp() };
    let spent = b * integrate(|mu| f(x + m - mu) * pdf.tail(mu), m, x + m, TOL).value;
    if x >= m {
        let from_head = integrate(|mu| f(x - mu) * pdf.head(mu), 0.0, m, TOL).value;
        let kept = (1.0 - b) * integrate(|mu| f(x - mu) * pdf.tail(mu), m, x, TOL).value;
        from_head + kept + spent
    } else {
        spent + integrate(|mu| f(x - mu) * pdf.head(mu), 0.0, x, TOL).value
    }
}

/// Largest `|g(x) - rhs(x)|` over the sample points.
pub fn verify_stationarity_residual(pdf: &LimitingPdf, xs: &[f64]) -> f64 {
    xs.iter()
        .map(|&x| (pdf.density(x) - stationarity_rhs(pdf, x)).abs())
        .fold(0.0, f64::max)
}
