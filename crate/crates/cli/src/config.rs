//! Config and sweep files.
//!
//! Both are TOML with one flat key per network parameter. Powers are in dBm
//! and mean harvests in dB relative to 1 mJ; they are converted to linear
//! units here and nowhere else.

use std::fmt;
use std::path::Path;

use ehor_core::{NetworkConfig, NodeLayout, Point};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub s_x: f64,
    pub s_y: f64,
    pub r1_x: f64,
    pub r1_y: f64,
    pub r2_x: f64,
    pub r2_y: f64,
    pub d_x: f64,
    pub d_y: f64,
    pub p_s_dbm: f64,
    pub n0_dbm: f64,
    pub alpha: f64,
    pub r0: f64,
    pub eta: f64,
    pub m1_mj: f64,
    pub m2_mj: f64,
    pub inv_lambda1_db: f64,
    pub inv_lambda2_db: f64,
}

impl FileConfig {
    pub fn network(&self) -> Result<NetworkConfig, ConfigError> {
        let layout = NodeLayout {
            s: Point::new(self.s_x, self.s_y),
            r1: Point::new(self.r1_x, self.r1_y),
            r2: Point::new(self.r2_x, self.r2_y),
            d: Point::new(self.d_x, self.d_y),
        };
        let c = NetworkConfig::from_log_units(
            layout,
            self.p_s_dbm,
            self.n0_dbm,
            self.m1_mj,
            self.m2_mj,
            self.inv_lambda1_db,
            self.inv_lambda2_db,
            self.alpha,
            self.r0,
            self.eta,
        );
        c.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(c)
    }

    pub fn get(&self, p: SweepParam) -> f64 {
        match p {
            SweepParam::Lambda1Db => self.inv_lambda1_db,
            SweepParam::Lambda2Db => self.inv_lambda2_db,
            SweepParam::PsDbm => self.p_s_dbm,
            SweepParam::R0 => self.r0,
            SweepParam::M1 => self.m1_mj,
            SweepParam::M2 => self.m2_mj,
        }
    }

    pub fn with(&self, p: SweepParam, value: f64) -> Self {
        let mut c = *self;
        match p {
            SweepParam::Lambda1Db => c.inv_lambda1_db = value,
            SweepParam::Lambda2Db => c.inv_lambda2_db = value,
            SweepParam::PsDbm => c.p_s_dbm = value,
            SweepParam::R0 => c.r0 = value,
            SweepParam::M1 => c.m1_mj = value,
            SweepParam::M2 => c.m2_mj = value,
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "lambda1_db")]
    Lambda1Db,
    #[serde(rename = "lambda2_db")]
    Lambda2Db,
    #[serde(rename = "p_s_dbm")]
    PsDbm,
    #[serde(rename = "r0")]
    R0,
    #[serde(rename = "m1")]
    M1,
    #[serde(rename = "m2")]
    M2,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Lambda1Db => "lambda1_db",
            SweepParam::Lambda2Db => "lambda2_db",
            SweepParam::PsDbm => "p_s_dbm",
            SweepParam::R0 => "r0",
            SweepParam::M1 => "m1",
            SweepParam::M2 => "m2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepTable {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// A base configuration plus one swept parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: FileConfig,
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepSpec {
    /// Swept values in ascending order, `start` through `stop` inclusive.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(ConfigError::Invalid(format!("sweep step must be positive, got {}", self.step)));
        }
        if !(self.start <= self.stop) {
            return Err(ConfigError::Invalid(format!(
                "sweep start {} exceeds stop {}",
                self.start, self.stop
            )));
        }
        for v in [self.start, self.stop] {
            self.base.with(self.param, v).network()?;
        }
        Ok(())
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Io(String, std::io::Error),
    Parse(String, String),
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(path, e) => write!(f, "{path}: {e}"),
            // toml errors carry the line, column and a source excerpt
            ConfigError::Parse(path, msg) => write!(f, "{path}: {msg}"),
            ConfigError::Invalid(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.display().to_string(), e))
}

pub fn parse_config(text: &str, origin: &str) -> Result<FileConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(origin.to_string(), e.to_string()))
}

pub fn load_config(path: &Path) -> Result<FileConfig, ConfigError> {
    let cfg = parse_config(&read(path)?, &path.display().to_string())?;
    cfg.network()?;
    Ok(cfg)
}

#[derive(Deserialize)]
struct SweepFile {
    sweep: SweepTable,
    #[serde(flatten)]
    rest: toml::Table,
}

pub fn parse_sweep(text: &str, origin: &str) -> Result<SweepSpec, ConfigError> {
    let parse_err = |e: toml::de::Error| ConfigError::Parse(origin.to_string(), e.to_string());
    let file: SweepFile = toml::from_str(text).map_err(parse_err)?;
    // re-render the remaining keys so unknown or missing ones are reported
    // the same way as in a plain config
    let base = parse_config(&toml::to_string(&file.rest).unwrap_or_default(), origin)?;
    let spec = SweepSpec {
        base,
        param: file.sweep.param,
        start: file.sweep.start,
        stop: file.sweep.stop,
        step: file.sweep.step,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn load_sweep(path: &Path) -> Result<SweepSpec, ConfigError> {
    parse_sweep(&read(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const BASELINE: &str = "\
s_x = 0.0
s_y = 0.0
r1_x = 30.0
r1_y = 20.0
r2_x = 60.0
r2_y = -20.0
d_x = 100.0
d_y = 0.0
p_s_dbm = 10.0
n0_dbm = -50.0
alpha = 3.0
r0 = 1.0
eta = 0.05
m1_mj = 15.0
m2_mj = 10.0
inv_lambda1_db = -6.0
inv_lambda2_db = -5.0
";

    #[test]
    fn baseline_converts_units() {
        let c = parse_config(BASELINE, "t").unwrap().network().unwrap();
        assert!((c.p_s - 10.0).abs() < 1e-12);
        assert!((c.n0 - 1e-5).abs() < 1e-20);
        assert!((1.0 / c.lambda2 - 10f64.powf(-0.5)).abs() < 1e-15);
        assert_eq!(c.layout, NodeLayout::reference());
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = format!("{BASELINE}bogus = 1\n");
        let msg = parse_config(&text, "t").unwrap_err().to_string();
        assert!(msg.contains("bogus"), "{msg}");
        assert!(msg.contains("line 18"), "{msg}");
    }

    #[test]
    fn missing_key_is_rejected() {
        let text = BASELINE.replace("eta = 0.05\n", "");
        let msg = parse_config(&text, "t").unwrap_err().to_string();
        assert!(msg.contains("eta"), "{msg}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = BASELINE.replace("alpha = 3.0", "alpha = = 3.0");
        let msg = parse_config(&text, "t").unwrap_err().to_string();
        assert!(msg.contains("line 11"), "{msg}");
    }

    #[test]
    fn coincident_nodes_are_invalid() {
        let text = BASELINE.replace("r1_x = 30.0", "r1_x = 0.0").replace("r1_y = 20.0", "r1_y = 0.0");
        assert!(parse_config(&text, "t").unwrap().network().is_err());
    }

    #[test]
    fn sweep_spec_round_trip() {
        let text = format!("{BASELINE}\n[sweep]\nparam = \"lambda1_db\"\nstart = -10.0\nstop = 0.0\nstep = 2.5\n");
        let s = parse_sweep(&text, "t").unwrap();
        assert_eq!(s.param, SweepParam::Lambda1Db);
        assert_eq!(s.values(), vec![-10.0, -7.5, -5.0, -2.5, 0.0]);
    }

    #[test]
    fn sweep_spec_rejects_bad_ranges() {
        let bad = |tail: &str| parse_sweep(&format!("{BASELINE}\n[sweep]\n{tail}"), "t").is_err();
        assert!(bad("param = \"r0\"\nstart = 1.0\nstop = 2.0\nstep = 0.0\n"));
        assert!(bad("param = \"r0\"\nstart = 2.0\nstop = 1.0\nstep = 0.5\n"));
        assert!(bad("param = \"r0\"\nstart = -1.0\nstop = 1.0\nstep = 0.5\n"));
        assert!(bad("param = \"gamma\"\nstart = 1.0\nstop = 2.0\nstep = 0.5\n"));
        assert!(bad("param = \"r0\"\nstart = 1.0\nstop = 2.0\nstep = 0.5\nextra = 1\n"));
    }
}
