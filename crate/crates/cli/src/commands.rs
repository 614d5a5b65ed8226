//! The CLI verbs. Each writes CSV to the given sink.

use std::io::Write;

use ehor_core::analysis::{analyze, optimal_rate, relay_params, stability, stationary_distribution, SteadyStateReport};
use ehor_core::radio::derive_links;
use ehor_core::sim::{run, SimStats};
use ehor_core::{Error, NetworkConfig};
use rayon::prelude::*;

use crate::config::SweepSpec;

pub type CmdResult<T = ()> = Result<T, Box<dyn std::error::Error>>;

/// Simulation length and seed shared by the simulating verbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    pub slots: u64,
    pub warmup: u64,
}

pub const ANALYZE_HEADER: [&str; 14] = [
    "p1", "p2", "p3", "p4", "psi1", "psi2", "b1", "b2", "q1", "q2", "pr_b1_ge", "pr_b2_ge", "op", "throughput",
];
pub const COMPARE_HEADER: [&str; 5] = ["quantity", "theory", "sim", "abs_diff", "stderr"];
pub const SIMULATE_HEADER: [&str; 3] = ["quantity", "value", "stderr"];
pub const QUANTITIES: [&str; 8] = ["p1", "p2", "p3", "p4", "pr_b1_ge", "pr_b2_ge", "op", "throughput"];
pub const SWEEP_HEADER: [&str; 13] = [
    "swept_param",
    "value",
    "op_theory",
    "op_sim",
    "thr_theory",
    "thr_sim",
    "p1_theory",
    "p2_theory",
    "p3_theory",
    "p4_theory",
    "psi1",
    "psi2",
    "stable_flag",
];
pub const PDF_HEADER: [&str; 3] = ["x", "g_theory", "g_empirical"];
pub const OPTIMAL_RATE_HEADER: [&str; 4] = ["r0_star", "throughput", "grid_r0", "at_boundary"];

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(out)
}

/// `analyze`: one row, or `Error::Unstable` with nothing written.
pub fn analyze_cmd<W: Write>(config: &NetworkConfig, out: W) -> CmdResult<Result<(), Error>> {
    let r = match analyze(config) {
        Ok(r) => r,
        Err(e @ Error::Unstable { .. }) => return Ok(Err(e)),
        Err(e) => return Err(e.into()),
    };
    let mut w = writer(out);
    w.write_record(ANALYZE_HEADER)?;
    let p = r.p.p;
    w.write_record(
        [
            p[0], p[1], p[2], p[3], r.psi1, r.psi2, r.b1, r.b2, r.pdf1.q, r.pdf2.q, r.pr_b1_ge, r.pr_b2_ge, r.op,
            r.throughput,
        ]
        .map(num),
    )?;
    w.flush()?;
    Ok(Ok(()))
}

fn sim_values(s: &SimStats) -> [(f64, f64); 8] {
    let se = &s.stderr;
    [
        (s.cbn_freq[0], se.cbn[0]),
        (s.cbn_freq[1], se.cbn[1]),
        (s.cbn_freq[2], se.cbn[2]),
        (s.cbn_freq[3], se.cbn[3]),
        (s.pr_b1_ge_emp, se.pr_b1_ge),
        (s.pr_b2_ge_emp, se.pr_b2_ge),
        (s.op_emp, se.op),
        (s.throughput_emp, se.throughput),
    ]
}

fn theory_values(r: &SteadyStateReport) -> [f64; 8] {
    let p = r.p.p;
    [p[0], p[1], p[2], p[3], r.pr_b1_ge, r.pr_b2_ge, r.op, r.throughput]
}

fn simulate(config: &NetworkConfig, opts: &RunOptions) -> CmdResult<SimStats> {
    Ok(run(config, opts.seed, opts.slots, opts.warmup)?)
}

pub fn simulate_cmd<W: Write>(config: &NetworkConfig, opts: &RunOptions, out: W) -> CmdResult {
    let s = simulate(config, opts)?;
    let mut w = writer(out);
    w.write_record(SIMULATE_HEADER)?;
    for (name, (v, se)) in QUANTITIES.iter().zip(sim_values(&s)) {
        w.write_record([name.to_string(), num(v), num(se)])?;
    }
    w.flush()?;
    Ok(())
}

/// Theory for a configuration, `None` when it has no stationary regime.
fn theory(config: &NetworkConfig) -> CmdResult<Option<SteadyStateReport>> {
    match analyze(config) {
        Ok(r) => Ok(Some(r)),
        Err(Error::Unstable { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn compare_cmd<W: Write>(config: &NetworkConfig, opts: &RunOptions, out: W) -> CmdResult {
    let t = theory(config)?;
    let s = simulate(config, opts)?;
    let mut w = writer(out);
    w.write_record(COMPARE_HEADER)?;
    let tv = t.as_ref().map(theory_values);
    for (i, (name, (v, se))) in QUANTITIES.iter().zip(sim_values(&s)).enumerate() {
        let th = tv.map(|t| t[i]);
        w.write_record([name.to_string(), opt(th), num(v), opt(th.map(|t| (t - v).abs())), num(se)])?;
    }
    w.flush()?;
    Ok(())
}

struct SweepRow {
    value: f64,
    theory: Option<SteadyStateReport>,
    psi: Option<(f64, f64)>,
    sim: SimStats,
}

fn sweep_point(config: &NetworkConfig, value: f64, opts: &RunOptions) -> CmdResult<SweepRow> {
    let theory = theory(config)?;
    // psi is still informative when the closed forms are refused
    let psi = theory.as_ref().map(|r| (r.psi1, r.psi2)).or_else(|| {
        let links = derive_links(config).ok()?;
        let relays = relay_params(config);
        let p = stationary_distribution(&links, &relays).ok()?;
        let st = stability(&links, &p.p, &relays);
        Some((st.psi1, st.psi2))
    });
    let sim = simulate(config, opts)?;
    Ok(SweepRow { value, theory, psi, sim })
}

/// Runs every sweep point, in parallel, with seed `base + index`.
pub fn sweep_cmd<W: Write>(spec: &SweepSpec, opts: &RunOptions, out: W) -> CmdResult {
    let points: Vec<(usize, f64)> = spec.values().into_iter().enumerate().collect();
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&(i, v)| {
            let config = spec.base.with(spec.param, v).network().map_err(|e| e.to_string())?;
            let point_opts = RunOptions {
                seed: opts.seed.wrapping_add(i as u64),
                ..*opts
            };
            sweep_point(&config, v, &point_opts).map_err(|e| e.to_string())
        })
        .collect::<Result<_, String>>()?;

    let mut w = writer(out);
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        let t = row.theory.as_ref();
        let p = t.map(|r| r.p.p);
        w.write_record([
            spec.param.name().to_string(),
            num(row.value),
            opt(t.map(|r| r.op)),
            num(row.sim.op_emp),
            opt(t.map(|r| r.throughput)),
            num(row.sim.throughput_emp),
            opt(p.map(|p| p[0])),
            opt(p.map(|p| p[1])),
            opt(p.map(|p| p[2])),
            opt(p.map(|p| p[3])),
            opt(row.psi.map(|p| p.0)),
            opt(row.psi.map(|p| p.1)),
            t.is_some().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relay {
    R1,
    R2,
}

/// Theoretical density next to the normalized histogram of a fresh run.
/// Row `x` covers the histogram bin `[x, x + m / 20)`; `g_theory` is the
/// density at `x`.
pub fn pdf_cmd<W: Write>(config: &NetworkConfig, relay: Relay, opts: &RunOptions, out: W) -> CmdResult<Result<(), Error>> {
    let r = match analyze(config) {
        Ok(r) => r,
        Err(e @ Error::Unstable { .. }) => return Ok(Err(e)),
        Err(e) => return Err(e.into()),
    };
    let s = simulate(config, opts)?;
    let (pdf, hist) = match relay {
        Relay::R1 => (r.pdf1, s.buffer1_hist),
        Relay::R2 => (r.pdf2, s.buffer2_hist),
    };
    let mut w = writer(out);
    w.write_record(PDF_HEADER)?;
    for (i, g) in hist.density().into_iter().enumerate() {
        let x = i as f64 * hist.bin_width;
        w.write_record([num(x), num(pdf.density(x)), num(g)])?;
    }
    w.flush()?;
    Ok(Ok(()))
}

pub fn optimal_rate_cmd<W: Write>(config: &NetworkConfig, out: W) -> CmdResult {
    let o = optimal_rate(config)?;
    let mut w = writer(out);
    w.write_record(OPTIMAL_RATE_HEADER)?;
    w.write_record([num(o.r0), num(o.throughput), num(o.grid_r0), o.at_boundary.to_string()])?;
    w.flush()?;
    Ok(())
}
