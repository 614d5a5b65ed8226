//! The opportunistic-routing rule table.
//!
//! Each slot starts with a candidate broadcast node (CBN) set: the nodes that
//! currently hold the packet. Given the six instantaneous SNRs and the two
//! relay buffer levels, [`evaluate`] selects at most one broadcaster, decides
//! whether the destination got the packet and returns the next CBN set.
//! Priority for the same receiver is S, then R2, then R1.

use crate::radio::LinkSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CbnSet {
    /// `{S}`
    S1,
    /// `{S, R1}`
    S2,
    /// `{S, R2}`
    S3,
    /// `{S, R1, R2}`
    S4,
}

impl CbnSet {
    pub const ALL: [CbnSet; 4] = [CbnSet::S1, CbnSet::S2, CbnSet::S3, CbnSet::S4];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            CbnSet::S1 => "s1",
            CbnSet::S2 => "s2",
            CbnSet::S3 => "s3",
            CbnSet::S4 => "s4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Broadcaster {
    S,
    R1,
    R2,
    /// Nobody transmits this slot.
    None,
}

/// Which row of the rule table fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
    C10,
    C11,
    Others,
}

impl Condition {
    pub const ALL: [Condition; 12] = [
        Condition::C1,
        Condition::C2,
        Condition::C3,
        Condition::C4,
        Condition::C5,
        Condition::C6,
        Condition::C7,
        Condition::C8,
        Condition::C9,
        Condition::C10,
        Condition::C11,
        Condition::Others,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    /// Conditions under which the packet reaches the destination.
    pub fn delivers(self) -> bool {
        matches!(
            self,
            Condition::C1 | Condition::C5 | Condition::C9 | Condition::C10 | Condition::C11
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            Condition::C1 => "C1",
            Condition::C2 => "C2",
            Condition::C3 => "C3",
            Condition::C4 => "C4",
            Condition::C5 => "C5",
            Condition::C6 => "C6",
            Condition::C7 => "C7",
            Condition::C8 => "C8",
            Condition::C9 => "C9",
            Condition::C10 => "C10",
            Condition::C11 => "C11",
            Condition::Others => "Others",
        }
    }

    /// The rows that can fire from `cbn`, `Others` last.
    pub fn reachable_from(cbn: CbnSet) -> &'static [Condition] {
        use Condition::*;
        match cbn {
            CbnSet::S1 => &[C1, C2, C3, C4, Others],
            CbnSet::S2 => &[C1, C5, C6, C7, C8, Others],
            CbnSet::S3 => &[C1, C9, Others],
            CbnSet::S4 => &[C1, C9, C10, C11, Others],
        }
    }
}

/// Instantaneous SNRs of the six links in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SlotSnrs {
    pub gamma_sd: f64,
    pub gamma_sr1: f64,
    pub gamma_sr2: f64,
    pub gamma_r1d: f64,
    pub gamma_r1r2: f64,
    pub gamma_r2d: f64,
}

/// Relay buffer state as seen by the protocol in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayEnergy {
    pub b1: f64,
    pub b2: f64,
    pub m1: f64,
    pub m2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotDecision {
    pub bn: Broadcaster,
    pub delivered: bool,
    pub consume_r1: bool,
    pub consume_r2: bool,
    pub next_cbn: CbnSet,
    pub fired: Condition,
}

impl SlotDecision {
    fn new(bn: Broadcaster, fired: Condition, next_cbn: CbnSet) -> Self {
        Self {
            bn,
            delivered: fired.delivers(),
            consume_r1: bn == Broadcaster::R1,
            consume_r2: bn == Broadcaster::R2,
            next_cbn,
            fired,
        }
    }

    fn idle(cbn: CbnSet) -> Self {
        Self::new(Broadcaster::None, Condition::Others, cbn)
    }
}

/// Applies the rule table to one slot. Exactly one row fires.
///
/// SNR and energy comparisons are `>=` for success, so ties at the threshold
/// or at exactly `m` energy count as success.
pub fn evaluate(cbn: CbnSet, snrs: &SlotSnrs, energy: &RelayEnergy, gamma_th: f64) -> SlotDecision {
    use Broadcaster as Bn;
    use CbnSet::*;
    use Condition::*;

    let sd = snrs.gamma_sd >= gamma_th;
    let sr1 = snrs.gamma_sr1 >= gamma_th;
    let sr2 = snrs.gamma_sr2 >= gamma_th;
    let r1d = snrs.gamma_r1d >= gamma_th;
    let r1r2 = snrs.gamma_r1r2 >= gamma_th;
    let r2d = snrs.gamma_r2d >= gamma_th;
    let r1_ready = energy.b1 >= energy.m1;
    let r2_ready = energy.b2 >= energy.m2;

    if sd {
        return SlotDecision::new(Bn::S, C1, S1);
    }

    match cbn {
        S1 => match (sr1, sr2) {
            (true, false) => SlotDecision::new(Bn::S, C2, S2),
            (false, true) => SlotDecision::new(Bn::S, C3, S3),
            (true, true) => SlotDecision::new(Bn::S, C4, S4),
            (false, false) => SlotDecision::idle(S1),
        },
        S2 => {
            if r1_ready {
                if r1d {
                    SlotDecision::new(Bn::R1, C5, S1)
                } else if sr2 {
                    SlotDecision::new(Bn::S, C6, S4)
                } else if r1r2 {
                    SlotDecision::new(Bn::R1, C8, S4)
                } else {
                    SlotDecision::idle(S2)
                }
            } else if sr2 {
                SlotDecision::new(Bn::S, C7, S4)
            } else {
                SlotDecision::idle(S2)
            }
        }
        S3 => {
            if r2_ready && r2d {
                SlotDecision::new(Bn::R2, C9, S1)
            } else {
                SlotDecision::idle(S3)
            }
        }
        S4 => {
            if r2_ready && r2d {
                SlotDecision::new(Bn::R2, C9, S1)
            } else if r1_ready && r1d {
                // C10 when R2 had energy but a bad link, C11 when it was empty
                let fired = if r2_ready { C10 } else { C11 };
                SlotDecision::new(Bn::R1, fired, S1)
            } else {
                SlotDecision::idle(S4)
            }
        }
    }
}

/// Per-state probabilities of every rule-table row.
///
/// `prob[state][condition]` is `P{condition fires | CBN = state}`; entries for
/// rows that cannot fire from a state are zero and each state's row sums to
/// one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionTable {
    pub prob: [[f64; 12]; 4],
}

impl ConditionTable {
    pub fn get(&self, cbn: CbnSet, condition: Condition) -> f64 {
        self.prob[cbn.index()][condition.index()]
    }

    /// Transition probability from `from` to `to` obtained by summing the rows
    /// that lead there.
    pub fn transition(&self, from: CbnSet, to: CbnSet) -> f64 {
        Condition::reachable_from(from)
            .iter()
            .filter(|&&c| next_state(from, c) == to)
            .map(|&c| self.get(from, c))
            .sum()
    }

    /// Probability that the destination receives the packet given the state.
    pub fn delivery(&self, cbn: CbnSet) -> f64 {
        Condition::reachable_from(cbn)
            .iter()
            .filter(|c| c.delivers())
            .map(|&c| self.get(cbn, c))
            .sum()
    }
}

/// Next CBN set implied by a fired row.
pub fn next_state(from: CbnSet, fired: Condition) -> CbnSet {
    use CbnSet::*;
    use Condition::*;
    match fired {
        C1 | C5 | C9 | C10 | C11 => S1,
        C2 => S2,
        C3 => S3,
        C4 | C6 | C7 | C8 => S4,
        Others => from,
    }
}

/// Closed-form row probabilities, assuming all six SNRs and both buffer
/// events are independent. `pr_b1_ge` and `pr_b2_ge` are `P{B1 >= M1}` and
/// `P{B2 >= M2}`.
pub fn condition_probabilities(links: &LinkSet, pr_b1_ge: f64, pr_b2_ge: f64) -> ConditionTable {
    use CbnSet::*;
    use Condition::*;

    let e = links.success();
    let miss_sd = 1.0 - e.sd;
    let (a1, a2) = (pr_b1_ge, pr_b2_ge);
    let mut prob = [[0.0; 12]; 4];

    let mut set = |s: CbnSet, c: Condition, p: f64| prob[s.index()][c.index()] = p;

    for s in CbnSet::ALL {
        set(s, C1, e.sd);
    }

    set(S1, C2, miss_sd * e.sr1 * (1.0 - e.sr2));
    set(S1, C3, miss_sd * (1.0 - e.sr1) * e.sr2);
    set(S1, C4, miss_sd * e.sr1 * e.sr2);
    set(S1, Others, miss_sd * (1.0 - e.sr1) * (1.0 - e.sr2));

    set(S2, C5, miss_sd * a1 * e.r1d);
    set(S2, C6, miss_sd * a1 * (1.0 - e.r1d) * e.sr2);
    set(S2, C7, miss_sd * (1.0 - a1) * e.sr2);
    set(S2, C8, miss_sd * a1 * (1.0 - e.r1d) * (1.0 - e.sr2) * e.r1r2);
    set(
        S2,
        Others,
        miss_sd * (1.0 - e.sr2) * (a1 * (1.0 - e.r1d) * (1.0 - e.r1r2) + (1.0 - a1)),
    );

    set(S3, C9, miss_sd * a2 * e.r2d);
    set(S3, Others, miss_sd * (1.0 - a2 * e.r2d));

    set(S4, C9, miss_sd * a2 * e.r2d);
    set(S4, C10, miss_sd * a2 * (1.0 - e.r2d) * a1 * e.r1d);
    set(S4, C11, miss_sd * (1.0 - a2) * a1 * e.r1d);
    set(S4, Others, miss_sd * (1.0 - a2 * e.r2d) * (1.0 - a1 * e.r1d));

    ConditionTable { prob }
}
