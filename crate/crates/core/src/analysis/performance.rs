//! Outage probability, throughput and its rate derivative.

use std::f64::consts::LN_2;

use super::pdf::LimitingPdf;
use super::stm::{r1_consumption, r2_consumption, stationary_distribution, RelayParams, StationaryDistribution};
use crate::radio::{derive_links, LinkSet, NetworkConfig};
use crate::{Error, Result};

/// Per-slot consumption probabilities of both relays and their stability
/// parameters `psi = lambda m b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub psi1: f64,
    pub psi2: f64,
    pub b1: f64,
    pub b2: f64,
}

impl Stability {
    pub fn is_stable(&self) -> bool {
        self.psi1 > 1.0 && self.psi2 > 1.0
    }

    fn require_stable(&self) -> Result<()> {
        if self.is_stable() {
            Ok(())
        } else {
            Err(Error::Unstable {
                psi1: self.psi1,
                psi2: self.psi2,
            })
        }
    }
}

/// `P{B2 >= M2}` as seen by R1. An unstable R2 always has energy in the
/// limit, so the value is capped at 1.
fn r2_availability_capped(b2: f64, relays: &RelayParams) -> f64 {
    (1.0 / (b2 * relays.lambda2 * relays.m2)).min(1.0)
}

pub fn stability(links: &LinkSet, p: &[f64; 4], relays: &RelayParams) -> Stability {
    let e = links.success();
    let b2 = r2_consumption(&e, p);
    let b1 = r1_consumption(&e, p, r2_availability_capped(b2, relays));
    Stability {
        psi1: relays.lambda1 * relays.m1 * b1,
        psi2: relays.lambda2 * relays.m2 * b2,
        b1,
        b2,
    }
}

/// Delivery probability contributed by each CBN set, `P_s1..P_s4`.
/// Requires both buffers to be stable.
pub fn delivery_terms(links: &LinkSet, p: &[f64; 4], relays: &RelayParams) -> Result<[f64; 4]> {
    let st = stability(links, p, relays);
    st.require_stable()?;
    let e = links.success();
    let miss = 1.0 - e.sd;
    let a1 = 1.0 / (st.b1 * relays.lambda1 * relays.m1);
    let a2 = 1.0 / (st.b2 * relays.lambda2 * relays.m2);
    Ok([
        p[0] * e.sd,
        p[1] * (e.sd + miss * e.r1d * a1),
        p[2] * (e.sd + miss * e.r2d * a2),
        p[3] * (e.sd + miss * e.r2d * a2 + miss * e.r1d * a1 * (1.0 - e.r2d * a2)),
    ])
}

/// Outage probability in collapsed form, where `p3 + p4` has been folded
/// into `b2` so the R2 contribution reduces to `1 / (lambda2 m2)`.
///
/// Returns 0 when the direct link cannot fail, whatever the buffers do.
pub fn outage_probability(links: &LinkSet, p: &[f64; 4], relays: &RelayParams) -> Result<f64> {
    let e = links.success();
    let miss = 1.0 - e.sd;
    if miss == 0.0 {
        return Ok(0.0);
    }
    let st = stability(links, p, relays);
    st.require_stable()?;
    let a2 = 1.0 / (st.b2 * relays.lambda2 * relays.m2);
    let weight = p[1] + p[3] * (1.0 - e.r2d * a2);
    let success = e.sd
        + 1.0 / (relays.lambda2 * relays.m2)
        + weight * miss * e.r1d / (st.b1 * relays.lambda1 * relays.m1);
    Ok(1.0 - success)
}

/// `eta r0 (1 - op)`, with `r0` recovered from the link threshold.
pub fn throughput(links: &LinkSet, p: &[f64; 4], relays: &RelayParams, eta: f64) -> Result<f64> {
    let op = outage_probability(links, p, relays)?;
    Ok(eta * rate_of(links) * (1.0 - op))
}

fn rate_of(links: &LinkSet) -> f64 {
    links.gamma_th.ln_1p() / LN_2
}

/// `d pi / d r0` with the CBN distribution `p` and R2's consumption
/// probability `b2` held fixed; only `b1` and the link terms move with the
/// rate.
pub fn throughput_derivative(links: &LinkSet, p: &[f64; 4], relays: &RelayParams, eta: f64) -> Result<f64> {
    let st = stability(links, p, relays);
    st.require_stable()?;
    let e = links.success();
    let r0 = rate_of(links);
    let g = r0.exp2() * LN_2; // dGamma/dr0
    let miss = 1.0 - e.sd;
    let a2 = 1.0 / (st.b2 * relays.lambda2 * relays.m2);
    let l1m1 = relays.lambda1 * relays.m1;
    let b1 = st.b1;

    // derivatives of the link success probabilities and of 1 - e_sd
    let d = |omega: f64, succ: f64| -omega * g * succ;
    let (d_sd, d_sr2, d_r1d, d_r1r2, d_r2d) = (
        d(links.omega_sd, e.sd),
        d(links.omega_sr2, e.sr2),
        d(links.omega_r1d, e.r1d),
        d(links.omega_r1r2, e.r1r2),
        d(links.omega_r2d, e.r2d),
    );
    let d_miss = -d_sd;

    let h = p[1] * e.r1d
        + p[1] * (1.0 - e.r1d) * (1.0 - e.sr2) * e.r1r2
        + p[3] * e.r1d * (1.0 - e.r2d * a2);
    let d_h = p[1] * d_r1d
        + p[1]
            * (-d_r1d * (1.0 - e.sr2) * e.r1r2 - (1.0 - e.r1d) * d_sr2 * e.r1r2
                + (1.0 - e.r1d) * (1.0 - e.sr2) * d_r1r2)
        + p[3] * (d_r1d * (1.0 - e.r2d * a2) - e.r1d * d_r2d * a2);
    let d_b1 = d_miss * h + miss * d_h;

    let weight = p[1] + p[3] * (1.0 - e.r2d * a2);
    let d_weight = -p[3] * d_r2d * a2;
    let relay = miss * e.r1d;
    let d_relay = d_miss * e.r1d + miss * d_r1d;

    let success = e.sd + 1.0 / (relays.lambda2 * relays.m2) + weight * relay / (b1 * l1m1);
    let d_success = d_sd + d_weight * relay / (b1 * l1m1) + weight * d_relay / (b1 * l1m1)
        - weight * relay * d_b1 / (b1 * b1 * l1m1);

    Ok(eta * success + eta * r0 * d_success)
}

/// The rate derivative transcribed term for term from its published
/// closed form.
///
/// Kept for comparison only. Three of its terms differ from the derivative
/// of the throughput expression it starts from, so it does not agree with a
/// finite difference; use [`throughput_derivative`].
pub fn throughput_derivative_printed(
    links: &LinkSet,
    p: &[f64; 4],
    relays: &RelayParams,
    eta: f64,
) -> Result<f64> {
    let st = stability(links, p, relays);
    st.require_stable()?;
    let e = links.success();
    let r0 = rate_of(links);
    let g = r0.exp2() * LN_2;
    let (b1, b2) = (st.b1, st.b2);
    let (l1m1, l2m2) = (relays.lambda1 * relays.m1, relays.lambda2 * relays.m2);
    let (o_sd, o_sr2, o_r1d, o_r1r2) = (links.omega_sd, links.omega_sr2, links.omega_r1d, links.omega_r1r2);
    let all3 = e.sd * e.r1d * e.r2d;
    let weight = p[1] + p[3] * (1.0 - e.r2d / (b2 * l2m2));

    let db1 = p[1] * g * o_sd * e.sd * (e.r1d + (1.0 - e.r1d) * (1.0 - e.sr2) * e.r1r2)
        + p[1]
            * (1.0 - e.sd)
            * (g * o_r1d * e.r1d * ((1.0 - e.sr2) * e.r1r2 - 1.0)
                + g * (1.0 - e.r1d) * e.r1r2 * ((o_sr2 + o_r1r2) * e.sr2 - o_r1r2))
        + p[3] * g * e.r1d * ((o_sd + o_r1d) * e.sd - o_r1d) * (1.0 - e.r2d / (b2 * l2m2))
        + p[3] * g * o_sd * all3 / (b2 * l2m2);

    let value = (e.sd + 1.0 / l2m2 + weight * (1.0 - e.sd) * e.r1d / (b1 * l1m1)) * eta
        + p[3] * g * eta * r0 * o_sd / (b1 * b2 * l1m1 * l2m2) * all3
        - g * eta * r0 * o_sd * e.r1d
        + eta
            * r0
            * weight
            * (g * e.r1d / (b1 * l1m1) * (e.r1d * (o_sd + o_r1d) - o_r1d)
                - (1.0 - e.sd) * e.r1d / (b1 * b1 * l1m1) * db1);
    Ok(value)
}

/// Everything the analysis engine reports for one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateReport {
    pub p: StationaryDistribution,
    pub b1: f64,
    pub b2: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub pdf1: LimitingPdf,
    pub pdf2: LimitingPdf,
    pub pr_b1_ge: f64,
    pub pr_b2_ge: f64,
    pub op: f64,
    pub throughput: f64,
}

/// Relay parameters of a configuration.
pub fn relay_params(config: &NetworkConfig) -> RelayParams {
    RelayParams::new(config.lambda1, config.lambda2, config.m1, config.m2)
}

/// Runs the fixed-point iteration and evaluates every closed form.
///
/// Fails with [`Error::Unstable`] when either buffer has `psi <= 1` or the
/// iteration had to stop on an invalid transition matrix.
pub fn analyze(config: &NetworkConfig) -> Result<SteadyStateReport> {
    let links = derive_links(config)?;
    let relays = relay_params(config);
    let p = stationary_distribution(&links, &relays)?;
    let st = stability(&links, &p.p, &relays);
    if !p.converged || !st.is_stable() {
        return Err(Error::Unstable {
            psi1: st.psi1,
            psi2: st.psi2,
        });
    }
    let pdf1 = LimitingPdf::new(st.b1, relays.lambda1, relays.m1)?;
    let pdf2 = LimitingPdf::new(st.b2, relays.lambda2, relays.m2)?;
    let op = outage_probability(&links, &p.p, &relays)?;
    Ok(SteadyStateReport {
        p,
        b1: st.b1,
        b2: st.b2,
        psi1: st.psi1,
        psi2: st.psi2,
        pr_b1_ge: pdf1.pr_available(),
        pr_b2_ge: pdf2.pr_available(),
        pdf1,
        pdf2,
        op,
        throughput: config.eta * config.r0 * (1.0 - op),
    })
}

pub const RATE_GRID_START: f64 = 0.1;
pub const RATE_GRID_STOP: f64 = 4.0;
pub const RATE_GRID_STEP: f64 = 0.05;

/// Maximizer of the self-consistent throughput over the rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalRate {
    pub r0: f64,
    pub throughput: f64,
    /// Best grid point before refinement.
    pub grid_r0: f64,
    /// The grid maximum sits on the first or last stable grid point.
    pub at_boundary: bool,
}

/// Throughput with the fixed point re-solved at `r0`; `None` when unstable.
pub fn throughput_at_rate(config: &NetworkConfig, r0: f64) -> Option<f64> {
    analyze(&NetworkConfig { r0, ..*config }).ok().map(|r| r.throughput)
}

/// `start, start + step, ..., <= stop` computed by index so the points do
/// not drift.
pub fn rate_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// Grid search over `[0.1, 4.0]` in steps of 0.05 followed by a
/// golden-section refinement between the neighbours of the best point.
/// Unstable grid points are skipped.
pub fn optimal_rate(config: &NetworkConfig) -> Result<OptimalRate> {
    optimal_rate_on(config, &rate_grid(RATE_GRID_START, RATE_GRID_STOP, RATE_GRID_STEP))
}

pub fn optimal_rate_on(config: &NetworkConfig, grid: &[f64]) -> Result<OptimalRate> {
    config.validate()?;
    let values: Vec<(usize, f64)> = grid
        .iter()
        .enumerate()
        .filter_map(|(i, &r)| throughput_at_rate(config, r).map(|t| (i, t)))
        .collect();
    let Some(&(best_i, best_t)) = values.iter().max_by(|a, b| a.1.total_cmp(&b.1)) else {
        return Err(Error::InvalidConfig("no stable rate on the search grid".into()));
    };
    let first = values.first().map(|v| v.0);
    let last = values.last().map(|v| v.0);
    let at_boundary = Some(best_i) == first || Some(best_i) == last;

    let mut result = OptimalRate {
        r0: grid[best_i],
        throughput: best_t,
        grid_r0: grid[best_i],
        at_boundary,
    };
    if at_boundary || best_i == 0 || best_i + 1 >= grid.len() {
        return Ok(result);
    }

    let f = |r: f64| throughput_at_rate(config, r).unwrap_or(f64::NEG_INFINITY);
    let (mut lo, mut hi) = (grid[best_i - 1], grid[best_i + 1]);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-6 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let (r, t) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    if t > result.throughput {
        result.r0 = r;
        result.throughput = t;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::stm::build_stm;
    use crate::radio::NodeLayout;

    fn cfg(p_s: f64, m1: f64, m2: f64, l1: f64, l2: f64, r0: f64) -> NetworkConfig {
        NetworkConfig::from_log_units(NodeLayout::reference(), p_s, -50.0, m1, m2, l1, l2, 3.0, r0, 0.05)
    }

    fn solved(c: &NetworkConfig) -> (LinkSet, RelayParams, [f64; 4]) {
        let links = derive_links(c).unwrap();
        let relays = relay_params(c);
        let p = stationary_distribution(&links, &relays).unwrap();
        assert!(p.converged);
        (links, relays, p.p)
    }

    // Independent statement of the throughput with p and b2 frozen; b1 is
    // rebuilt from its definition at the new rate.
    fn frozen_throughput(links: &LinkSet, p: &[f64; 4], relays: &RelayParams, b2: f64, eta: f64, r0: f64) -> f64 {
        let g = r0.exp2() - 1.0;
        let s = |o: f64| (-o * g).exp();
        let (sd, sr2, r1d, r1r2, r2d) = (
            s(links.omega_sd),
            s(links.omega_sr2),
            s(links.omega_r1d),
            s(links.omega_r1r2),
            s(links.omega_r2d),
        );
        let a2 = 1.0 / (b2 * relays.lambda2 * relays.m2);
        let b1 = (1.0 - sd)
            * (p[1] * r1d + p[1] * (1.0 - r1d) * (1.0 - sr2) * r1r2 + p[3] * r1d * (1.0 - r2d * a2));
        let ok = sd
            + 1.0 / (relays.lambda2 * relays.m2)
            + (p[1] + p[3] * (1.0 - r2d * a2)) * (1.0 - sd) * r1d / (b1 * relays.lambda1 * relays.m1);
        eta * r0 * ok
    }

    #[test]
    fn collapsed_outage_matches_term_sum() {
        for r0 in [1.0, 1.5, 2.0] {
            let c = cfg(10.0, 15.0, 10.0, -6.0, -5.0, r0);
            let (links, relays, p) = solved(&c);
            let terms = delivery_terms(&links, &p, &relays).unwrap();
            let op = outage_probability(&links, &p, &relays).unwrap();
            assert!((op - (1.0 - terms.iter().sum::<f64>())).abs() < 1e-12);
        }
    }

    #[test]
    fn outage_zero_when_direct_link_certain() {
        let c = cfg(10.0, 15.0, 10.0, -6.0, -5.0, 1.0);
        let (links, relays, _) = solved(&c);
        let links = LinkSet { gamma_th: 0.0, ..links };
        assert_eq!(outage_probability(&links, &[1.0, 0.0, 0.0, 0.0], &relays).unwrap(), 0.0);
    }

    #[test]
    fn stability_identities() {
        let c = cfg(15.0, 10.0, 8.0, -6.0, -8.0, 3.0);
        let (links, relays, p) = solved(&c);
        let st = stability(&links, &p, &relays);
        assert_eq!(st.psi2 / st.b2, relays.lambda2 * relays.m2);
        assert!(st.psi1 > 1.0 && st.psi2 > 1.0, "{st:?}");

        let st0 = stability(&links, &[0.5, 0.5, 0.0, 0.0], &relays);
        assert_eq!(st0.b2, 0.0);
        assert_eq!(st0.psi2, 0.0);
        assert!(st0.b1.is_finite());
    }

    #[test]
    fn throughput_limits() {
        let c = cfg(10.0, 15.0, 10.0, -6.0, -5.0, 1.0);
        let (links, relays, p) = solved(&c);
        let op = outage_probability(&links, &p, &relays).unwrap();
        let pi = throughput(&links, &p, &relays, c.eta).unwrap();
        assert!((pi - 0.05 * (1.0 - op)).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_frozen_difference() {
        for r0 in [0.5, 1.0, 1.5, 2.0] {
            let c = cfg(11.0, 10.0, 8.0, -7.0, -7.0, r0);
            let links = derive_links(&c).unwrap();
            let relays = relay_params(&c);
            let p = stationary_distribution(&links, &relays).unwrap().p;
            let st = stability(&links, &p, &relays);
            if !st.is_stable() {
                continue;
            }
            let h = 1e-5;
            let fd = (frozen_throughput(&links, &p, &relays, st.b2, c.eta, r0 + h)
                - frozen_throughput(&links, &p, &relays, st.b2, c.eta, r0 - h))
                / (2.0 * h);
            let d = throughput_derivative(&links, &p, &relays, c.eta).unwrap();
            assert!(((d - fd) / fd).abs() < 1e-4, "r0={r0}: {d} vs {fd}");
        }
    }

    #[test]
    fn derivative_linear_in_eta() {
        let c = cfg(11.0, 10.0, 8.0, -7.0, -7.0, 1.0);
        let (links, relays, p) = solved(&c);
        let d1 = throughput_derivative(&links, &p, &relays, 0.05).unwrap();
        let d2 = throughput_derivative(&links, &p, &relays, 0.10).unwrap();
        assert!((d2 - 2.0 * d1).abs() < 1e-15 * d1.abs().max(1.0));
        let q1 = throughput_derivative_printed(&links, &p, &relays, 0.05).unwrap();
        let q2 = throughput_derivative_printed(&links, &p, &relays, 0.10).unwrap();
        assert!((q2 - 2.0 * q1).abs() < 1e-14 * q1.abs().max(1.0));
    }

    #[test]
    fn report_is_consistent() {
        let c = cfg(15.0, 10.0, 8.0, -6.0, -8.0, 3.0);
        let r = analyze(&c).unwrap();
        assert!(r.pr_b1_ge > 0.0 && r.pr_b1_ge < 1.0);
        assert!((r.pr_b2_ge - 1.0 / (c.m2 * r.b2 * c.lambda2)).abs() < 1e-15);
        assert!((0.0..=1.0).contains(&r.op));
        let links = derive_links(&c).unwrap();
        let stm = build_stm(&links, &r.p.p, &relay_params(&c)).unwrap();
        for s in stm.row_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unstable_relay_is_reported() {
        // plentiful harvest at R2
        let c = cfg(10.0, 15.0, 10.0, -6.0, 10.0, 1.0);
        assert!(matches!(analyze(&c), Err(Error::Unstable { .. })));
    }

    #[test]
    fn grid_is_exact() {
        let g = rate_grid(0.1, 4.0, 0.05);
        assert_eq!(g.len(), 79);
        assert!((g[78] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_rate_dominates_grid() {
        let c = cfg(11.0, 10.0, 8.0, -7.0, -7.0, 1.0);
        let best = optimal_rate(&c).unwrap();
        for r in rate_grid(RATE_GRID_START, RATE_GRID_STOP, RATE_GRID_STEP) {
            if let Some(t) = throughput_at_rate(&c, r) {
                assert!(best.throughput >= t);
            }
        }
        assert!(!best.at_boundary);
    }
}
