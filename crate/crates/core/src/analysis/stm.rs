//! CBN-set transition matrix and its fixed-point iteration.
//!
//! The transition probabilities depend on `P{B1 >= M1}` and `P{B2 >= M2}`,
//! which in turn depend on how often the chain visits the states where each
//! relay may transmit. The stationary distribution is therefore found by
//! iterating `p <- p T(p)` from the uniform start.

use crate::protocol::CbnSet;
use crate::radio::{LinkSet, LinkSuccess};
use crate::{Error, Result};

pub const CONVERGENCE_TOL: f64 = 1e-7;
pub const MAX_ITERATIONS: usize = 100_000;

/// Energy quanta and harvest rates of both relays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub m1: f64,
    pub m2: f64,
}

impl RelayParams {
    pub fn new(lambda1: f64, lambda2: f64, m1: f64, m2: f64) -> Self {
        Self { lambda1, lambda2, m1, m2 }
    }
}

/// Row-stochastic 4x4 matrix indexed `[from][to]` over `s1..s4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stm(pub [[f64; 4]; 4]);

impl Stm {
    pub fn get(&self, from: CbnSet, to: CbnSet) -> f64 {
        self.0[from.index()][to.index()]
    }

    pub fn row_sums(&self) -> [f64; 4] {
        self.0.map(|row| row.iter().sum())
    }

    /// Row vector times matrix.
    pub fn apply(&self, p: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, pi) in p.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += pi * self.0[i][j];
            }
        }
        out
    }
}

/// Result of the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryDistribution {
    /// `[p1, p2, p3, p4]`, the occupancy of `s1..s4`.
    pub p: [f64; 4],
    pub iterations: usize,
    /// False when the iteration stopped on an invalid transition matrix; `p`
    /// is then the last iterate that produced a valid one.
    pub converged: bool,
}

impl StationaryDistribution {
    pub fn get(&self, s: CbnSet) -> f64 {
        self.p[s.index()]
    }
}

/// Per-slot consumption probability of R2 given it can afford a
/// transmission: `(p3 + p4) (1 - e_sd) e_r2d`.
pub(crate) fn r2_consumption(e: &LinkSuccess, p: &[f64; 4]) -> f64 {
    (p[2] + p[3]) * (1.0 - e.sd) * e.r2d
}

/// Per-slot consumption probability of R1 given it can afford a
/// transmission. `pr_b2_ge` is R2's availability.
pub(crate) fn r1_consumption(e: &LinkSuccess, p: &[f64; 4], pr_b2_ge: f64) -> f64 {
    let miss_sd = 1.0 - e.sd;
    let s2 = p[1] * e.r1d + p[1] * (1.0 - e.r1d) * (1.0 - e.sr2) * e.r1r2;
    // skip the product when p4 = 0 so an infinite availability cannot poison it
    let s4 = if p[3] == 0.0 {
        0.0
    } else {
        p[3] * e.r1d * (1.0 - e.r2d * pr_b2_ge)
    };
    miss_sd * (s2 + s4)
}

fn availability(b: f64, lambda: f64, m: f64, which: &str) -> Result<f64> {
    let a = 1.0 / (b * lambda * m);
    if !(a >= 0.0 && a <= 1.0) {
        return Err(Error::NegativeEntry(format!(
            "P{{{which} >= M}} = 1/(b lambda M) = {a} is not a probability (b = {b})"
        )));
    }
    Ok(a)
}

/// Builds `T(p)` entry by entry from the closed-form transition
/// probabilities, with `1 / (b lambda M)` standing in for each relay's
/// buffer availability.
///
/// When the direct link never fails (`e_sd = 1`) every state delivers in
/// one slot and the buffers never matter, so every row is `[1, 0, 0, 0]`.
pub fn build_stm(links: &LinkSet, p: &[f64; 4], relays: &RelayParams) -> Result<Stm> {
    let e = links.success();
    let miss = 1.0 - e.sd;
    if miss == 0.0 {
        return Ok(Stm([[1.0, 0.0, 0.0, 0.0]; 4]));
    }

    let b2 = r2_consumption(&e, p);
    let a2 = availability(b2, relays.lambda2, relays.m2, "B2")?;
    let b1 = r1_consumption(&e, p, a2);
    let a1 = availability(b1, relays.lambda1, relays.m1, "B1")?;

    let mut t = [[0.0; 4]; 4];

    t[0][0] = miss * (1.0 - e.sr1) * (1.0 - e.sr2) + e.sd;
    t[0][1] = miss * e.sr1 * (1.0 - e.sr2);
    t[0][2] = miss * (1.0 - e.sr1) * e.sr2;
    t[0][3] = miss * e.sr1 * e.sr2;

    t[1][0] = e.sd + miss * e.r1d * a1;
    t[1][1] = miss * (1.0 - e.sr2) * ((1.0 - e.r1d) * (1.0 - e.r1r2) * a1 + (1.0 - a1));
    t[1][2] = 0.0;
    t[1][3] = miss * (e.sr2 * (1.0 - e.r1d * a1) + (1.0 - e.r1d) * (1.0 - e.sr2) * e.r1r2 * a1);

    t[2][0] = e.sd + miss * e.r2d * a2;
    t[2][1] = 0.0;
    t[2][2] = miss * (1.0 - e.r2d * a2);
    t[2][3] = 0.0;

    t[3][0] = e.sd + miss * e.r2d * a2 + miss * e.r1d * a1 * (1.0 - e.r2d * a2);
    t[3][1] = 0.0;
    t[3][2] = 0.0;
    t[3][3] = 1.0 - t[3][0];

    for (i, row) in t.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(v >= 0.0) {
                return Err(Error::NegativeEntry(format!("T[{}][{}] = {v}", i + 1, j + 1)));
            }
        }
    }
    Ok(Stm(t))
}

/// Iterates `p(i+1) = p(i) T(p(i))` from `[1/4; 4]` until
/// `||p(i) - p(i+1)||_2 < 1e-7`.
///
/// If `T(p(i))` cannot be built, or `p(i)` has a negative entry, the
/// iteration stops and returns `p(i-1)` with `converged = false`.
pub fn stationary_distribution(links: &LinkSet, relays: &RelayParams) -> Result<StationaryDistribution> {
    let mut p = [0.25; 4];
    let mut last_valid = p;
    for i in 0..MAX_ITERATIONS {
        let stm = if p.iter().any(|&v| v < 0.0) {
            None
        } else {
            build_stm(links, &p, relays).ok()
        };
        let Some(stm) = stm else {
            return Ok(StationaryDistribution {
                p: last_valid,
                iterations: i,
                converged: false,
            });
        };
        let next = stm.apply(&p);
        let step = p.iter().zip(&next).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if step < CONVERGENCE_TOL {
            return Ok(StationaryDistribution {
                p,
                iterations: i,
                converged: true,
            });
        }
        last_valid = p;
        p = next;
    }
    Err(Error::MaxIterations(MAX_ITERATIONS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::condition_probabilities;
    use crate::radio::{derive_links, NetworkConfig, NodeLayout};

    fn fig6(r0: f64) -> (LinkSet, RelayParams) {
        let cfg = NetworkConfig::from_log_units(NodeLayout::reference(), 10.0, -50.0, 15.0, 10.0, -6.0, -5.0, 3.0, r0, 0.05);
        (derive_links(&cfg).unwrap(), RelayParams::new(cfg.lambda1, cfg.lambda2, cfg.m1, cfg.m2))
    }

    #[test]
    fn zero_threshold_rows() {
        let (links, relays) = fig6(1.0);
        let links = LinkSet { gamma_th: 0.0, ..links };
        let stm = build_stm(&links, &[0.25; 4], &relays).unwrap();
        assert_eq!(stm.0[0], [1.0, 0.0, 0.0, 0.0]);
        let p = stationary_distribution(&links, &relays).unwrap();
        assert!(p.converged);
        assert_eq!(p.p, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn unreachable_relays_collapse_to_s1() {
        let (links, _) = fig6(1.0);
        let links = LinkSet {
            omega_sr1: 1e9,
            omega_sr2: 1e9,
            ..links
        };
        // scarce harvests keep both buffers stable while s2..s4 drain
        let relays = RelayParams::new(1e9, 1e9, 15.0, 10.0);
        let p = stationary_distribution(&links, &relays).unwrap();
        assert!(p.p[0] > 1.0 - 1e-4, "{:?}", p);
    }

    #[test]
    fn rows_stochastic_and_structural_zeros() {
        for r0 in [1.0, 1.5, 2.0] {
            let (links, relays) = fig6(r0);
            let p = stationary_distribution(&links, &relays).unwrap();
            assert!(p.converged);
            let stm = build_stm(&links, &p.p, &relays).unwrap();
            for s in stm.row_sums() {
                assert!((s - 1.0).abs() < 1e-12);
            }
            assert_eq!(stm.0[1][2], 0.0);
            assert_eq!(stm.0[2][1], 0.0);
            assert_eq!(stm.0[2][3], 0.0);
            assert_eq!(stm.0[3][1], 0.0);
            assert_eq!(stm.0[3][2], 0.0);
            assert_eq!(stm.0[3][3], 1.0 - stm.0[3][0]);

            let fixed = stm.apply(&p.p);
            let resid = p.p.iter().zip(&fixed).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(resid < 1e-6);
            assert!((p.p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn matrix_agrees_with_condition_table() {
        let (links, relays) = fig6(1.5);
        let p = [0.3, 0.1, 0.1, 0.5];
        let stm = build_stm(&links, &p, &relays).unwrap();
        let e = links.success();
        let b2 = r2_consumption(&e, &p);
        let a2 = 1.0 / (b2 * relays.lambda2 * relays.m2);
        let a1 = 1.0 / (r1_consumption(&e, &p, a2) * relays.lambda1 * relays.m1);
        let table = condition_probabilities(&links, a1, a2);
        for from in CbnSet::ALL {
            for to in CbnSet::ALL {
                let via_table = table.transition(from, to);
                assert!((stm.get(from, to) - via_table).abs() < 1e-14, "{from:?}->{to:?}");
            }
        }
    }

    #[test]
    fn availability_above_one_is_rejected() {
        let (links, _) = fig6(1.0);
        // huge harvests: psi well below one
        let relays = RelayParams::new(0.01, 0.01, 15.0, 10.0);
        assert!(matches!(build_stm(&links, &[0.25; 4], &relays), Err(Error::NegativeEntry(_))));
        let p = stationary_distribution(&links, &relays).unwrap();
        assert!(!p.converged);
        assert_eq!(p.p, [0.25; 4]);
        assert_eq!(p.iterations, 0);
    }
}
