//! Geometry, link parameters and Rayleigh-fading SNR draws.
//!
//! Under Rayleigh fading the received SNR of a link with transmit power `P`,
//! distance `d`, path-loss exponent `alpha` and noise power `N0` is
//! exponentially distributed with rate `omega = d^alpha * N0 / P`. Every
//! link is therefore described by one rate parameter.

use rand::Rng;

use crate::{Error, Result};

/// Converts a power in dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Converts a dB ratio to a linear factor.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Positions of the four nodes, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeLayout {
    pub s: Point,
    pub r1: Point,
    pub r2: Point,
    pub d: Point,
}

impl NodeLayout {
    /// The planar layout used for all reference experiments.
    pub const fn reference() -> Self {
        Self {
            s: Point::new(0.0, 0.0),
            r1: Point::new(30.0, 20.0),
            r2: Point::new(60.0, -20.0),
            d: Point::new(100.0, 0.0),
        }
    }

    fn named(&self) -> [(&'static str, Point); 4] {
        [("S", self.s), ("R1", self.r1), ("R2", self.r2), ("D", self.d)]
    }

    pub fn validate(&self) -> Result<()> {
        let nodes = self.named();
        for (i, (a, pa)) in nodes.iter().enumerate() {
            if !pa.x.is_finite() || !pa.y.is_finite() {
                return Err(Error::InvalidConfig(format!("position of {a} is not finite")));
            }
            for (b, pb) in &nodes[i + 1..] {
                if !(pa.distance(pb) > 0.0) {
                    return Err(Error::CoincidentNodes(a, b));
                }
            }
        }
        Ok(())
    }
}

impl Default for NodeLayout {
    fn default() -> Self {
        Self::reference()
    }
}

/// Full parameterization of the network.
///
/// Slots last one second, so a relay transmit power in mW equals its
/// per-slot energy quantum in mJ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    pub layout: NodeLayout,
    /// Source transmit power, mW.
    pub p_s: f64,
    /// Energy spent by R1 per transmission, mJ.
    pub m1: f64,
    /// Energy spent by R2 per transmission, mJ.
    pub m2: f64,
    /// Harvest rate at R1, 1/mJ (mean harvest per slot is `1 / lambda1`).
    pub lambda1: f64,
    /// Harvest rate at R2, 1/mJ.
    pub lambda2: f64,
    /// Noise power, mW.
    pub n0: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Data rate, bit/s/Hz.
    pub r0: f64,
    /// Throughput loss factor for the pilot and acknowledgement sub-slots.
    pub eta: f64,
}

impl NetworkConfig {
    /// Builds a configuration from the log-scale quantities used in the
    /// experiment captions: powers in dBm, mean harvests in dB relative to
    /// 1 mJ.
    #[allow(clippy::too_many_arguments)]
    pub fn from_log_units(
        layout: NodeLayout,
        p_s_dbm: f64,
        n0_dbm: f64,
        m1: f64,
        m2: f64,
        inv_lambda1_db: f64,
        inv_lambda2_db: f64,
        alpha: f64,
        r0: f64,
        eta: f64,
    ) -> Self {
        Self {
            layout,
            p_s: dbm_to_mw(p_s_dbm),
            m1,
            m2,
            lambda1: 1.0 / db_to_linear(inv_lambda1_db),
            lambda2: 1.0 / db_to_linear(inv_lambda2_db),
            n0: dbm_to_mw(n0_dbm),
            alpha,
            r0,
            eta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("p_s", self.p_s),
            ("m1", self.m1),
            ("m2", self.m2),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("n0", self.n0),
            ("alpha", self.alpha),
            ("r0", self.r0),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        self.layout.validate()
    }

    /// SNR threshold `2^r0 - 1`.
    pub fn gamma_th(&self) -> f64 {
        rate_threshold(self.r0)
    }
}

/// SNR needed to decode at `r0` bit/s/Hz.
pub fn rate_threshold(r0: f64) -> f64 {
    r0.exp2() - 1.0
}

/// Exponential SNR rate parameters of the six links plus the decoding
/// threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSet {
    pub omega_sd: f64,
    pub omega_sr1: f64,
    pub omega_sr2: f64,
    pub omega_r1d: f64,
    pub omega_r1r2: f64,
    pub omega_r2d: f64,
    pub gamma_th: f64,
}

/// Success probability of each link at the current threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSuccess {
    pub sd: f64,
    pub sr1: f64,
    pub sr2: f64,
    pub r1d: f64,
    pub r1r2: f64,
    pub r2d: f64,
}

impl LinkSet {
    /// The same links evaluated at another data rate.
    pub fn with_rate(&self, r0: f64) -> Self {
        Self {
            gamma_th: rate_threshold(r0),
            ..*self
        }
    }

    pub fn success(&self) -> LinkSuccess {
        let p = |omega| p_link_success(omega, self.gamma_th);
        LinkSuccess {
            sd: p(self.omega_sd),
            sr1: p(self.omega_sr1),
            sr2: p(self.omega_sr2),
            r1d: p(self.omega_r1d),
            r1r2: p(self.omega_r1r2),
            r2d: p(self.omega_r2d),
        }
    }
}

/// Computes `omega = d^alpha * N0 / P` for every link. Source links use
/// `p_s`; links leaving R1 use `m1` and the R2 to D link uses `m2`.
pub fn derive_links(config: &NetworkConfig) -> Result<LinkSet> {
    config.validate()?;
    let l = &config.layout;
    let omega = |a: &Point, b: &Point, power: f64| a.distance(b).powf(config.alpha) * config.n0 / power;
    Ok(LinkSet {
        omega_sd: omega(&l.s, &l.d, config.p_s),
        omega_sr1: omega(&l.s, &l.r1, config.p_s),
        omega_sr2: omega(&l.s, &l.r2, config.p_s),
        omega_r1d: omega(&l.r1, &l.d, config.m1),
        omega_r1r2: omega(&l.r1, &l.r2, config.m1),
        omega_r2d: omega(&l.r2, &l.d, config.m2),
        gamma_th: config.gamma_th(),
    })
}

/// Inverse-CDF transform of a uniform `u` in `(0, 1]` into an exponential
/// variate with the given rate.
#[inline]
pub fn exponential_from_uniform(u: f64, rate: f64) -> f64 {
    -u.ln() / rate
}

/// Draws one exponential variate with the given rate.
#[inline]
pub fn sample_exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    // random() is in [0, 1); flip it so ln never sees zero
    let u = 1.0 - rng.random::<f64>();
    exponential_from_uniform(u, rate)
}

/// Draws the instantaneous SNR of a Rayleigh-faded link with rate `omega`.
#[inline]
pub fn sample_snr<R: Rng + ?Sized>(omega: f64, rng: &mut R) -> f64 {
    sample_exponential(omega, rng)
}

/// `P{snr >= gamma_th}` for a link with rate `omega`.
#[inline]
pub fn p_link_success(omega: f64, gamma_th: f64) -> f64 {
    (-omega * gamma_th).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fig6_config() -> NetworkConfig {
        NetworkConfig::from_log_units(NodeLayout::reference(), 10.0, -50.0, 15.0, 10.0, -6.0, -5.0, 3.0, 1.0, 0.05)
    }

    #[test]
    fn omega_sd_reference_geometry() {
        let links = derive_links(&fig6_config()).unwrap();
        // 100^3 * 1e-5 / 10
        assert!((links.omega_sd - 1.0).abs() < 1e-12);
        assert!((links.gamma_th - 1.0).abs() < 1e-15);
    }

    #[test]
    fn full_link_set_by_hand() {
        let links = derive_links(&fig6_config()).unwrap();
        let n0 = 1e-5;
        let d3 = |dx: f64, dy: f64| (dx * dx + dy * dy).powf(1.5);
        let expected = [
            (links.omega_sd, d3(100.0, 0.0) * n0 / 10.0),
            (links.omega_sr1, d3(30.0, 20.0) * n0 / 10.0),
            (links.omega_sr2, d3(60.0, -20.0) * n0 / 10.0),
            (links.omega_r1d, d3(70.0, -20.0) * n0 / 15.0),
            (links.omega_r1r2, d3(30.0, -40.0) * n0 / 15.0),
            (links.omega_r2d, d3(40.0, 20.0) * n0 / 10.0),
        ];
        for (got, want) in expected {
            assert!((got - want).abs() < 1e-12 * want.max(1.0), "{got} vs {want}");
        }
        // R1 -> R2 is exactly 50 m
        assert!((links.omega_r1r2 - 125_000.0 * n0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn coincident_nodes_rejected() {
        let mut cfg = fig6_config();
        cfg.layout.r2 = cfg.layout.r1;
        assert_eq!(derive_links(&cfg), Err(Error::CoincidentNodes("R1", "R2")));
    }

    #[test]
    fn invalid_scalars_rejected() {
        let mut cfg = fig6_config();
        cfg.eta = 0.0;
        assert!(derive_links(&cfg).is_err());
        let mut cfg = fig6_config();
        cfg.lambda2 = -1.0;
        assert!(derive_links(&cfg).is_err());
    }

    #[test]
    fn scale_consistency() {
        let cfg = fig6_config();
        let mut doubled = cfg;
        doubled.n0 *= 2.0;
        doubled.p_s *= 2.0;
        doubled.m1 *= 2.0;
        doubled.m2 *= 2.0;
        let a = derive_links(&cfg).unwrap();
        let b = derive_links(&doubled).unwrap();
        for (x, y) in [
            (a.omega_sd, b.omega_sd),
            (a.omega_sr1, b.omega_sr1),
            (a.omega_sr2, b.omega_sr2),
            (a.omega_r1d, b.omega_r1d),
            (a.omega_r1r2, b.omega_r1r2),
            (a.omega_r2d, b.omega_r2d),
        ] {
            assert!((x - y).abs() <= 1e-15 * x.max(1.0));
        }
    }

    #[test]
    fn inverse_cdf_identity() {
        assert!((exponential_from_uniform(0.5, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(exponential_from_uniform(1.0, 3.0), 0.0);
    }

    #[test]
    fn snr_mean_and_exceedance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_snr(2.0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");

        let hits = (0..n).filter(|_| sample_snr(1.0, &mut rng) >= 1.0).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - (-1f64).exp()).abs() < 0.002, "freq {freq}");
    }

    #[test]
    fn exceedance_matches_closed_form_on_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        for &omega in &[0.05, 0.3, 1.0, 4.0] {
            for &gamma in &[0.1, 1.0, 3.0] {
                let p = p_link_success(omega, gamma);
                let hits = (0..n).filter(|_| sample_snr(omega, &mut rng) >= gamma).count();
                let freq = hits as f64 / n as f64;
                let se = (p * (1.0 - p) / n as f64).sqrt().max(1.0 / n as f64);
                assert!((freq - p).abs() < 3.0 * se + 1e-12, "omega={omega} gamma={gamma}: {freq} vs {p}");
            }
        }
    }

    #[test]
    fn link_success_limits() {
        assert_eq!(p_link_success(3.0, 0.0), 1.0);
        assert!((p_link_success(1.0, 1.0) - (-1f64).exp()).abs() < 1e-16);
        let mut prev = 1.0;
        for k in 1..50 {
            let p = p_link_success(k as f64, 1.0);
            assert!(p < prev && p > 0.0);
            prev = p;
        }
    }

    #[test]
    fn unit_conversions() {
        assert!((dbm_to_mw(10.0) - 10.0).abs() < 1e-12);
        assert!((dbm_to_mw(-50.0) - 1e-5).abs() < 1e-18);
        assert!((1.0 / db_to_linear(-6.0) - 3.981_071_705_534_972).abs() < 1e-12);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn success_in_unit_interval_and_decreasing(omega in 1e-3f64..10.0, gamma in 1e-3f64..10.0) {
                let p = p_link_success(omega, gamma);
                prop_assert!(p > 0.0 && p <= 1.0);
                prop_assert!(p_link_success(omega * 1.01, gamma) < p);
                prop_assert!(p_link_success(omega, gamma * 1.01) < p);
            }
        }
    }
}
