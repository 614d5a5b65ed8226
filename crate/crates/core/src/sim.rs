//! Slot-by-slot Monte-Carlo simulation of the network.
//!
//! Each slot draws the six link SNRs, lets the rule table pick a
//! broadcaster, pays the broadcaster's energy quantum, credits both relays
//! with a fresh harvest and advances the CBN set. Statistics cover the slots
//! after the warmup only.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{relay_params, stability, stationary_distribution};
use crate::energy::{sample_harvest, EnergyBuffer};
use crate::protocol::{evaluate, CbnSet, Condition, RelayEnergy, SlotDecision, SlotSnrs};
use crate::radio::{derive_links, sample_snr, LinkSet, NetworkConfig};
use crate::{Error, Result};

pub const BATCHES: usize = 20;
pub const BINS_PER_QUANTUM: usize = 20;
/// Histogram range in multiples of the quantum.
pub const HIST_QUANTA: usize = 10;

/// Fixed-width histogram over `[0, bins * width)` plus an overflow bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(bin_width: f64, bins: usize) -> Self {
        Self {
            bin_width,
            counts: vec![0; bins],
            overflow: 0,
        }
    }

    /// Bins of width `m / 20` covering `[0, 10 m)`.
    pub fn for_quantum(m: f64) -> Self {
        Self::new(m / BINS_PER_QUANTUM as f64, BINS_PER_QUANTUM * HIST_QUANTA)
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let i = (x / self.bin_width) as usize;
        match self.counts.get_mut(i) {
            Some(c) => *c += 1,
            None => self.overflow += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }

    /// Density estimate per bin: `count / (total * width)`.
    pub fn density(&self) -> Vec<f64> {
        let norm = self.total() as f64 * self.bin_width;
        self.counts.iter().map(|&c| c as f64 / norm).collect()
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.bin_width
    }

    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.counts.len(), other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.overflow += other.overflow;
    }
}

/// Batch-means standard errors of the headline estimates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StdErrors {
    pub cbn: [f64; 4],
    pub pr_b1_ge: f64,
    pub pr_b2_ge: f64,
    pub op: f64,
    pub throughput: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    /// Slots counted, warmup excluded.
    pub n_slots: u64,
    pub cbn_counts: [u64; 4],
    pub cbn_freq: [f64; 4],
    pub delivered: u64,
    /// `[state][condition]` counts, conditions in `Condition::ALL` order.
    pub condition_counts: [[u64; 12]; 4],
    /// Post-slot buffer levels.
    pub buffer1_hist: Histogram,
    pub buffer2_hist: Histogram,
    /// Fraction of slots that started with `B >= M`.
    pub pr_b1_ge_emp: f64,
    pub pr_b2_ge_emp: f64,
    /// Transmissions by each relay.
    pub consumed1: u64,
    pub consumed2: u64,
    pub op_emp: f64,
    pub throughput_emp: f64,
    pub stderr: StdErrors,
}

impl SimStats {
    pub fn condition_count(&self, cbn: CbnSet, c: Condition) -> u64 {
        self.condition_counts[cbn.index()][c.index()]
    }

    /// Empirical consumption probability of R1 given it can afford a
    /// transmission.
    pub fn b1_emp(&self) -> f64 {
        self.consumed1 as f64 / (self.pr_b1_ge_emp * self.n_slots as f64)
    }

    pub fn b2_emp(&self) -> f64 {
        self.consumed2 as f64 / (self.pr_b2_ge_emp * self.n_slots as f64)
    }
}

/// What happened in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord {
    pub cbn: CbnSet,
    /// Levels at the start of the slot.
    pub b1_before: f64,
    pub b2_before: f64,
    pub decision: SlotDecision,
    pub b1_after: f64,
    pub b2_after: f64,
}

/// The network state plus its random stream. Both buffers start empty and
/// the packet starts at the source.
pub struct Simulator {
    config: NetworkConfig,
    links: LinkSet,
    rng: ChaCha8Rng,
    cbn: CbnSet,
    b1: EnergyBuffer,
    b2: EnergyBuffer,
}

impl Simulator {
    pub fn new(config: &NetworkConfig, seed: u64) -> Result<Self> {
        Ok(Self {
            config: *config,
            links: derive_links(config)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
            cbn: CbnSet::S1,
            b1: EnergyBuffer::empty(),
            b2: EnergyBuffer::empty(),
        })
    }

    pub fn links(&self) -> &LinkSet {
        &self.links
    }

    /// Advances one slot. Draw order: SNRs of sd, sr1, sr2, r1d, r1r2, r2d,
    /// then the R1 and R2 harvests.
    pub fn step(&mut self) -> Result<SlotRecord> {
        let l = &self.links;
        let rng = &mut self.rng;
        let snrs = SlotSnrs {
            gamma_sd: sample_snr(l.omega_sd, rng),
            gamma_sr1: sample_snr(l.omega_sr1, rng),
            gamma_sr2: sample_snr(l.omega_sr2, rng),
            gamma_r1d: sample_snr(l.omega_r1d, rng),
            gamma_r1r2: sample_snr(l.omega_r1r2, rng),
            gamma_r2d: sample_snr(l.omega_r2d, rng),
        };
        let x1 = sample_harvest(self.config.lambda1, rng);
        let x2 = sample_harvest(self.config.lambda2, rng);

        let (m1, m2) = (self.config.m1, self.config.m2);
        let energy = RelayEnergy {
            b1: self.b1.level(),
            b2: self.b2.level(),
            m1,
            m2,
        };
        let decision = evaluate(self.cbn, &snrs, &energy, l.gamma_th);
        let record_cbn = self.cbn;
        self.b1 = self.b1.update(decision.consume_r1, m1, x1)?;
        self.b2 = self.b2.update(decision.consume_r2, m2, x2)?;
        self.cbn = decision.next_cbn;
        Ok(SlotRecord {
            cbn: record_cbn,
            b1_before: energy.b1,
            b2_before: energy.b2,
            decision,
            b1_after: self.b1.level(),
            b2_after: self.b2.level(),
        })
    }
}

#[derive(Default, Clone, Copy)]
struct Batch {
    slots: u64,
    cbn: [u64; 4],
    b1_ge: u64,
    b2_ge: u64,
    delivered: u64,
}

fn std_error(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Runs `n_slots` slots in total and keeps statistics for the last
/// `n_slots - warmup`. Identical `(config, seed)` gives identical output.
pub fn run(config: &NetworkConfig, seed: u64, n_slots: u64, warmup: u64) -> Result<SimStats> {
    if n_slots <= warmup {
        return Err(Error::Simulation(format!(
            "slot count {n_slots} must exceed the warmup {warmup}"
        )));
    }
    let mut sim = Simulator::new(config, seed)?;
    for _ in 0..warmup {
        sim.step()?;
    }

    let n = n_slots - warmup;
    let mut batches = [Batch::default(); BATCHES];
    let mut conditions = [[0u64; 12]; 4];
    let mut h1 = Histogram::for_quantum(config.m1);
    let mut h2 = Histogram::for_quantum(config.m2);
    let (mut consumed1, mut consumed2) = (0u64, 0u64);

    for k in 0..n {
        let r = sim.step()?;
        let batch = &mut batches[(k as u128 * BATCHES as u128 / n as u128) as usize];
        batch.slots += 1;
        batch.cbn[r.cbn.index()] += 1;
        batch.b1_ge += u64::from(r.b1_before >= config.m1);
        batch.b2_ge += u64::from(r.b2_before >= config.m2);
        batch.delivered += u64::from(r.decision.delivered);
        conditions[r.cbn.index()][r.decision.fired.index()] += 1;
        consumed1 += u64::from(r.decision.consume_r1);
        consumed2 += u64::from(r.decision.consume_r2);
        h1.add(r.b1_after);
        h2.add(r.b2_after);
    }

    let total = batches.iter().fold(Batch::default(), |mut acc, b| {
        acc.slots += b.slots;
        for i in 0..4 {
            acc.cbn[i] += b.cbn[i];
        }
        acc.b1_ge += b.b1_ge;
        acc.b2_ge += b.b2_ge;
        acc.delivered += b.delivered;
        acc
    });
    let nf = n as f64;
    let op_emp = 1.0 - total.delivered as f64 / nf;
    let scale = config.eta * config.r0;

    let used: Vec<Batch> = batches.iter().copied().filter(|b| b.slots > 0).collect();
    let frac = |f: fn(&Batch) -> u64| used.iter().map(move |b| f(b) as f64 / b.slots as f64);
    let mut cbn_se = [0.0; 4];
    for (i, se) in cbn_se.iter_mut().enumerate() {
        *se = std_error(used.iter().map(|b| b.cbn[i] as f64 / b.slots as f64));
    }
    let op_se = std_error(frac(|b| b.delivered));

    Ok(SimStats {
        n_slots: n,
        cbn_counts: total.cbn,
        cbn_freq: total.cbn.map(|c| c as f64 / nf),
        delivered: total.delivered,
        condition_counts: conditions,
        buffer1_hist: h1,
        buffer2_hist: h2,
        pr_b1_ge_emp: total.b1_ge as f64 / nf,
        pr_b2_ge_emp: total.b2_ge as f64 / nf,
        consumed1,
        consumed2,
        op_emp,
        throughput_emp: scale * (1.0 - op_emp),
        stderr: StdErrors {
            cbn: cbn_se,
            pr_b1_ge: std_error(frac(|b| b.b1_ge)),
            pr_b2_ge: std_error(frac(|b| b.b2_ge)),
            op: op_se,
            throughput: scale * op_se,
        },
    })
}

/// Long-run behaviour of R2's buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailAvailability {
    /// Fraction of slots in the last fifth of the run that started with
    /// `B2 >= M2`.
    pub fraction: f64,
    pub mean_level_first_quintile: f64,
    pub mean_level_last_quintile: f64,
}

/// Runs `n_slots` from empty buffers and summarizes R2's buffer over the
/// first and last fifth of the run.
pub fn r2_tail_availability(config: &NetworkConfig, seed: u64, n_slots: u64) -> Result<TailAvailability> {
    if n_slots < 5 {
        return Err(Error::Simulation(format!("need at least 5 slots, got {n_slots}")));
    }
    let mut sim = Simulator::new(config, seed)?;
    let fifth = n_slots / 5;
    let last_start = n_slots - fifth;
    let (mut first_sum, mut last_sum, mut last_ge) = (0.0, 0.0, 0u64);
    for i in 0..n_slots {
        let r = sim.step()?;
        if i < fifth {
            first_sum += r.b2_before;
        } else if i >= last_start {
            last_sum += r.b2_before;
            last_ge += u64::from(r.b2_before >= config.m2);
        }
    }
    let f = fifth as f64;
    Ok(TailAvailability {
        fraction: last_ge as f64 / f,
        mean_level_first_quintile: first_sum / f,
        mean_level_last_quintile: last_sum / f,
    })
}

/// [`r2_tail_availability`] restricted to configurations whose R2 buffer
/// has no stationary distribution (`psi2 <= 1` at the analytical fixed
/// point). There the buffer should almost always hold a full quantum.
pub fn run_degenerate_check(config: &NetworkConfig, seed: u64, n_slots: u64) -> Result<TailAvailability> {
    let links = derive_links(config)?;
    let relays = relay_params(config);
    let p = stationary_distribution(&links, &relays)?;
    let psi2 = stability(&links, &p.p, &relays).psi2;
    if psi2 > 1.0 {
        return Err(Error::InvalidConfig(format!(
            "R2 buffer is stable (psi2 = {psi2}); the degenerate check needs psi2 <= 1"
        )));
    }
    r2_tail_availability(config, seed, n_slots)
}
