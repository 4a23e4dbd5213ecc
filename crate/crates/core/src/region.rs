//! Exhaustive classification of integral rate tuples on small channels.
//!
//! Every component is swept over `0..=n1`; no outer-bound member has a larger
//! component. Tuples outside the outer region are classified without
//! scheduling (they cannot be achievable).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitsim::{verify_plan, VerificationVerdict, DEFAULT_SEED, DEFAULT_TRIALS};
use crate::bounds::{in_outer_region, lemma1_condition};
use crate::channel::{ChannelConfig, MessageId, RateTuple};
use crate::error::SweepError;
use crate::scheduler::{schedule, InfeasibilityReport, Schedule, SchedulerOptions};

/// Default cap on the number of tuples a single sweep may visit.
pub const DEFAULT_CAP: u64 = 1 << 24;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct TupleFlags {
    pub in_outer: bool,
    pub lemma1_ok: bool,
    pub gos_ok: bool,
    /// Pure-GOS plan passed bitsim verification. Implies `gos_ok`.
    pub verified: bool,
    /// Scheduling with the repair pass succeeded and verified.
    pub repair_ok: bool,
    pub d3_nonzero: bool,
}

impl fmt::Display for TupleFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = |v: bool| v as u8;
        write!(
            f,
            "in_outer={} lemma1_ok={} gos_ok={} verified={} repair_ok={} d3_nonzero={}",
            b(self.in_outer),
            b(self.lemma1_ok),
            b(self.gos_ok),
            b(self.verified),
            b(self.repair_ok),
            b(self.d3_nonzero)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleRecord {
    pub rates: RateTuple,
    pub flags: TupleFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    pub cap: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub jobs: Option<usize>,
    pub trials: u32,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            cap: DEFAULT_CAP,
            jobs: None,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
        }
    }
}

/// Everything computed for one in-region tuple, handed to sweep observers.
pub struct Probe<'a> {
    pub config: &'a ChannelConfig,
    pub rates: &'a RateTuple,
    pub gos: &'a Result<Schedule, Box<InfeasibilityReport>>,
    /// Verdict on the pure-GOS plan, when there is one.
    pub verdict: Option<&'a VerificationVerdict>,
    /// Repaired schedule, when the pure GOS failed and repair succeeded.
    pub repaired: Option<&'a Schedule>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionSweep {
    pub config: ChannelConfig,
    /// Records in lexicographic order of the rate tuple.
    pub records: Vec<TupleRecord>,
}

/// Number of tuples a full sweep of `config` visits.
pub fn sweep_size(config: &ChannelConfig) -> Option<u64> {
    u64::from(config.n1() + 1).checked_pow(9)
}

fn tuple_at(mut index: u64, base: u64) -> RateTuple {
    let mut r = [0u32; 9];
    for slot in r.iter_mut().rev() {
        *slot = (index % base) as u32;
        index /= base;
    }
    RateTuple(r)
}

/// Classifies one tuple, reporting intermediate results to `observe`.
pub fn classify<F>(
    rates: &RateTuple,
    config: &ChannelConfig,
    opts: &SweepOptions,
    observe: &F,
) -> TupleFlags
where
    F: Fn(&Probe) + ?Sized,
{
    let lemma1_ok = lemma1_condition(rates, config).1;
    if !in_outer_region(rates, config) {
        return TupleFlags {
            lemma1_ok,
            ..TupleFlags::default()
        };
    }
    let gos = schedule(rates, config, SchedulerOptions { repair: false });
    let mut flags = TupleFlags {
        in_outer: true,
        lemma1_ok,
        ..TupleFlags::default()
    };
    match &gos {
        Ok(s) => {
            let verdict = verify_plan(&s.plan, rates, opts.trials, opts.seed);
            flags.gos_ok = true;
            flags.verified = verdict.ok;
            // the repair pass only acts on residual bits, so it changes nothing here
            flags.repair_ok = verdict.ok;
            flags.d3_nonzero = s.trace.d3_nonzero();
            observe(&Probe {
                config,
                rates,
                gos: &gos,
                verdict: Some(&verdict),
                repaired: None,
            });
        }
        Err(report) => {
            flags.d3_nonzero = report.trace.d3_nonzero();
            let repaired = schedule(rates, config, SchedulerOptions { repair: true }).ok();
            if let Some(r) = &repaired {
                flags.repair_ok = verify_plan(&r.plan, rates, opts.trials, opts.seed).ok;
            }
            observe(&Probe {
                config,
                rates,
                gos: &gos,
                verdict: None,
                repaired: repaired.as_ref(),
            });
        }
    }
    flags
}

/// Sweeps every tuple with components in `0..=n1`.
pub fn enumerate(config: &ChannelConfig, opts: &SweepOptions) -> Result<RegionSweep, SweepError> {
    enumerate_with(config, opts, &|_: &Probe| {})
}

/// Like [`enumerate`], calling `observe` on every in-region tuple (from
/// worker threads, in no particular order).
pub fn enumerate_with<F>(
    config: &ChannelConfig,
    opts: &SweepOptions,
    observe: &F,
) -> Result<RegionSweep, SweepError>
where
    F: Fn(&Probe) + Sync + ?Sized,
{
    let size = sweep_size(config).unwrap_or(u64::MAX);
    if size > opts.cap {
        return Err(SweepError::BudgetExceeded {
            requested: size,
            cap: opts.cap,
        });
    }
    let base = u64::from(config.n1() + 1);
    let work = || -> Vec<TupleRecord> {
        (0..size)
            .into_par_iter()
            .map(|i| {
                let rates = tuple_at(i, base);
                let flags = classify(&rates, config, opts, observe);
                TupleRecord { rates, flags }
            })
            .collect()
    };
    let records = match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(work),
        None => work(),
    };
    Ok(RegionSweep {
        config: *config,
        records,
    })
}

impl RegionSweep {
    /// Counts per flag combination.
    pub fn summary(&self) -> BTreeMap<TupleFlags, u64> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.flags).or_insert(0) += 1;
        }
        counts
    }

    pub fn summary_text(&self) -> String {
        let mut out = format!("channel {}\nswept {}\n", self.config, self.records.len());
        for (flags, count) in self.summary() {
            out.push_str(&format!("{flags}: {count}\n"));
        }
        out
    }

    pub fn get(&self, rates: &RateTuple) -> Option<&TupleRecord> {
        let base = u64::from(self.config.n1() + 1);
        if rates.0.iter().any(|&c| u64::from(c) >= base) {
            return None;
        }
        let index = rates
            .0
            .iter()
            .fold(0u64, |acc, &c| acc * base + u64::from(c));
        self.records
            .get(index as usize)
            .filter(|r| r.rates == *rates)
            .or_else(|| self.records.iter().find(|r| r.rates == *rates))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SweepError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = MessageId::ALL.iter().map(|m| column_name(*m)).collect();
        header.extend(FLAG_COLUMNS.iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for r in &self.records {
            let f = r.flags;
            let mut row: Vec<String> = r.rates.0.iter().map(u32::to_string).collect();
            for v in [
                f.in_outer,
                f.lemma1_ok,
                f.gos_ok,
                f.verified,
                f.repair_ok,
                f.d3_nonzero,
            ] {
                row.push((v as u8).to_string());
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(config: ChannelConfig, reader: R) -> Result<Self, SweepError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let expected: Vec<String> = MessageId::ALL
            .iter()
            .map(|m| column_name(*m))
            .chain(FLAG_COLUMNS.iter().map(|s| s.to_string()))
            .collect();
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != expected {
            return Err(SweepError::BadRow {
                row: 0,
                msg: format!("expected columns {}", expected.join(",")),
            });
        }
        let mut records = Vec::new();
        for (k, row) in rdr.records().enumerate() {
            let row = row?;
            let bad = |msg: String| SweepError::BadRow { row: k + 1, msg };
            let mut rates = [0u32; 9];
            for (slot, field) in rates.iter_mut().zip(row.iter()) {
                *slot = field
                    .parse()
                    .map_err(|_| bad(format!("bad rate {field:?}")))?;
            }
            let mut bits = [false; 6];
            for (slot, field) in bits.iter_mut().zip(row.iter().skip(9)) {
                *slot = match field {
                    "0" | "false" => false,
                    "1" | "true" => true,
                    other => return Err(bad(format!("bad flag {other:?}"))),
                };
            }
            let [in_outer, lemma1_ok, gos_ok, verified, repair_ok, d3_nonzero] = bits;
            records.push(TupleRecord {
                rates: RateTuple(rates),
                flags: TupleFlags {
                    in_outer,
                    lemma1_ok,
                    gos_ok,
                    verified,
                    repair_ok,
                    d3_nonzero,
                },
            });
        }
        records.sort_by_key(|r| r.rates);
        Ok(RegionSweep { config, records })
    }
}

const FLAG_COLUMNS: [&str; 6] = [
    "in_outer",
    "lemma1_ok",
    "gos_ok",
    "verified",
    "repair_ok",
    "d3_nonzero",
];

fn column_name(m: MessageId) -> String {
    match m {
        MessageId::Private { from, to } => format!("r{}{}", from.number(), to.number()),
        MessageId::Common { from } => format!("r{}c", from.number()),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct D3Stats {
    pub failures_with_d3: u64,
    pub failures_without_d3: u64,
    pub successes_with_d3: u64,
    pub successes_without_d3: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureViolation {
    /// Achievable tuple.
    pub achieved: RateTuple,
    /// Component-wise smaller tuple that failed.
    pub failed: RateTuple,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub channel: ChannelConfig,
    pub swept: u64,
    /// In the outer region and the sufficient condition, yet not scheduled.
    pub lemma1_counterexamples: Vec<RateTuple>,
    /// Scheduled although the sufficient condition fails.
    pub beyond_lemma1: Vec<RateTuple>,
    /// For `n1 = n2` only: outer-region tuples the scheduler misses.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub capacity_gaps: Option<Vec<RateTuple>>,
    /// Scheduled tuples whose plan failed verification.
    pub verification_defects: Vec<RateTuple>,
    /// Outer-region tuples rescued by the repair pass.
    pub repair_rescues: u64,
    /// Outer-region tuples only, split by outcome and d3 usage.
    pub d3: D3Stats,
    pub downward_closure_violations: Vec<ClosureViolation>,
}

pub fn compare(sweep: &RegionSweep) -> ComparisonReport {
    let mut report = ComparisonReport {
        channel: sweep.config,
        swept: sweep.records.len() as u64,
        lemma1_counterexamples: Vec::new(),
        beyond_lemma1: Vec::new(),
        capacity_gaps: (sweep.config.n1() == sweep.config.n2()).then(Vec::new),
        verification_defects: Vec::new(),
        repair_rescues: 0,
        d3: D3Stats::default(),
        downward_closure_violations: Vec::new(),
    };
    let lookup: HashMap<RateTuple, TupleFlags> =
        sweep.records.iter().map(|r| (r.rates, r.flags)).collect();
    for r in &sweep.records {
        let f = r.flags;
        if !f.in_outer {
            continue;
        }
        if f.lemma1_ok && !f.gos_ok {
            report.lemma1_counterexamples.push(r.rates);
        }
        if !f.lemma1_ok && f.gos_ok {
            report.beyond_lemma1.push(r.rates);
        }
        if !f.gos_ok {
            if let Some(gaps) = report.capacity_gaps.as_mut() {
                gaps.push(r.rates);
            }
            if f.repair_ok {
                report.repair_rescues += 1;
            }
        }
        if f.gos_ok && !f.verified {
            report.verification_defects.push(r.rates);
        }
        match (f.gos_ok, f.d3_nonzero) {
            (false, true) => report.d3.failures_with_d3 += 1,
            (false, false) => report.d3.failures_without_d3 += 1,
            (true, true) => report.d3.successes_with_d3 += 1,
            (true, false) => report.d3.successes_without_d3 += 1,
        }
        if f.gos_ok {
            // single-step predecessors suffice: closure then follows by induction
            for k in 0..9 {
                if r.rates.0[k] == 0 {
                    continue;
                }
                let mut below = r.rates;
                below.0[k] -= 1;
                if lookup.get(&below).is_some_and(|g| !g.gos_ok) {
                    report.downward_closure_violations.push(ClosureViolation {
                        achieved: r.rates,
                        failed: below,
                    });
                }
            }
        }
    }
    report
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "channel {}", self.channel)?;
        writeln!(f, "swept {}", self.swept)?;
        writeln!(
            f,
            "lemma1 counterexamples: {}",
            self.lemma1_counterexamples.len()
        )?;
        for r in &self.lemma1_counterexamples {
            writeln!(f, "  {r}")?;
        }
        writeln!(f, "scheduled beyond lemma1: {}", self.beyond_lemma1.len())?;
        match &self.capacity_gaps {
            Some(g) => {
                writeln!(f, "capacity gaps (n1 = n2): {}", g.len())?;
                for r in g {
                    writeln!(f, "  {r}")?;
                }
            }
            None => writeln!(f, "capacity gaps: n/a (n1 > n2)")?,
        }
        writeln!(
            f,
            "verification defects: {}",
            self.verification_defects.len()
        )?;
        writeln!(f, "repair rescues: {}", self.repair_rescues)?;
        let d = &self.d3;
        writeln!(
            f,
            "d3: failures with/without {}/{}, successes with/without {}/{}",
            d.failures_with_d3, d.failures_without_d3, d.successes_with_d3, d.successes_without_d3
        )?;
        writeln!(
            f,
            "downward-closure violations: {}",
            self.downward_closure_violations.len()
        )?;
        for v in &self.downward_closure_violations {
            writeln!(f, "  {} ok but {} fails", v.achieved, v.failed)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: &str) -> ChannelConfig {
        s.parse().unwrap()
    }

    fn quick() -> SweepOptions {
        SweepOptions {
            trials: 4,
            ..SweepOptions::default()
        }
    }

    #[test]
    fn tuple_indexing_is_lexicographic() {
        assert_eq!(tuple_at(0, 3), RateTuple::ZERO);
        assert_eq!(tuple_at(1, 3).0, [0, 0, 0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(tuple_at(3, 3).0, [0, 0, 0, 0, 0, 0, 0, 1, 0]);
    }

    #[test]
    fn zero_channel_sweep() {
        let s = enumerate(&cfg("0,0,0"), &quick()).unwrap();
        assert_eq!(s.records.len(), 1);
        let f = s.records[0].flags;
        assert!(f.in_outer && f.gos_ok && f.verified && f.lemma1_ok);
        let c = compare(&s);
        assert!(c.lemma1_counterexamples.is_empty());
        assert_eq!(c.capacity_gaps, Some(vec![]));
        assert!(c.beyond_lemma1.is_empty() && c.downward_closure_violations.is_empty());
    }

    #[test]
    fn unit_channel_sweep() {
        let s = enumerate(&cfg("1,1,1"), &quick()).unwrap();
        assert_eq!(s.records.len(), 512);
        for r in &s.records {
            if r.flags.in_outer && r.flags.lemma1_ok {
                assert!(r.flags.gos_ok && r.flags.verified, "{}", r.rates);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let opts = SweepOptions {
            cap: 511,
            ..quick()
        };
        let e = enumerate(&cfg("1,1,1"), &opts).unwrap_err();
        assert!(matches!(
            e,
            SweepError::BudgetExceeded {
                requested: 512,
                cap: 511
            }
        ));
    }

    #[test]
    fn csv_round_trip() {
        let s = enumerate(&cfg("1,1,0"), &quick()).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("r12,r13,r1c,r21,r23,r2c,r31,r32,r3c,in_outer,lemma1_ok,gos_ok,verified,repair_ok,d3_nonzero\n"));
        let back = RegionSweep::read_csv(cfg("1,1,0"), buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn bad_csv_header_rejected() {
        let e = RegionSweep::read_csv(cfg("1,1,1"), "a,b\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(e, SweepError::BadRow { row: 0, .. }));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let one = enumerate(
            &cfg("1,1,1"),
            &SweepOptions {
                jobs: Some(1),
                ..quick()
            },
        )
        .unwrap();
        let four = enumerate(
            &cfg("1,1,1"),
            &SweepOptions {
                jobs: Some(4),
                ..quick()
            },
        )
        .unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn lookup_by_tuple() {
        let s = enumerate(&cfg("1,1,1"), &quick()).unwrap();
        let r: RateTuple = "1,0,0,1,0,0,0,0,0".parse().unwrap();
        assert_eq!(s.get(&r).unwrap().rates, r);
        assert!(s.get(&"2,0,0,0,0,0,0,0,0".parse().unwrap()).is_none());
    }
}
