//! Gain Ordering Scheme.
//!
//! Traffic is served in order of decreasing gain: bidirectional pairs first
//! (2 bits/level), then the hub templates (1.5 bits/level) with the most
//! common messages first, then plain routing (1 bit/level). Free levels are
//! tracked as explicit sets per direction; the closed-form counts in
//! [`closed_form_levels`] are a cross-check on that bookkeeping.

mod levels;
mod stages;
pub mod templates;

use serde::{Deserialize, Serialize};

use crate::bounds::{in_outer_region, lemma1_condition};
use crate::channel::{ChannelConfig, LevelIndex, MessageId, RateTuple, User, UserSet};
use crate::plan::{BitRef, DecodeStep, DownlinkLevel, StageId, TransmissionPlan, UplinkLevel};

pub use levels::{closed_form_step, ClassTally, LevelPool};
pub use stages::{stage_by_name, Pipeline, Stage, STAGE_NAMES};
use templates::{HubTemplate, Side};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulerOptions {
    /// Allow a residual common bit to go out on two downlink levels, one per receiver.
    pub repair: bool,
}

/// Amount placed with one template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateAmount {
    pub template: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kind: Option<String>,
    pub amount: u32,
}

/// Residual rates and per-user free level counts after a stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSnapshot {
    pub stage: StageId,
    pub rates: RateTuple,
    pub uplink_free: [u32; 3],
    pub downlink_free: [u32; 3],
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GosTrace {
    /// Bidirectional amounts for pairs (1,2), (1,3), (2,3).
    pub a: [u32; 3],
    pub b: u32,
    pub c_amounts: Vec<TemplateAmount>,
    pub d_amounts: Vec<TemplateAmount>,
    pub d1: u32,
    pub d2: u32,
    pub d3: u32,
    pub e1: u32,
    pub e2: u32,
    pub e_amounts: Vec<TemplateAmount>,
    pub f_amounts: Vec<(MessageId, u32)>,
    pub repair_amounts: Vec<(MessageId, u32)>,
    /// Stages that placed less than their nominal amount for lack of levels.
    pub truncated: Vec<StageId>,
    pub residuals: Vec<StageSnapshot>,
}

impl GosTrace {
    pub fn final_residual(&self) -> Option<&RateTuple> {
        self.residuals.last().map(|s| &s.rates)
    }

    /// Whether any one-common-two-private template with both privates
    /// addressed to the hub user was used.
    pub fn d3_nonzero(&self) -> bool {
        self.d3 > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfeasibilityReason {
    NoDownlinkLevelForCommon,
    NoDownlinkLevel,
    NoUplinkLevel,
    Lemma1Violated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockedMessage {
    pub message: MessageId,
    pub undeliverable: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfeasibilityReport {
    pub failing_stage: StageId,
    /// First entry is the first message that could not be placed.
    pub blocked: Vec<BlockedMessage>,
    pub reason: InfeasibilityReason,
    /// Placement failure that triggered the report, before diagnosis.
    pub cause: InfeasibilityReason,
    pub lemma1_value: u32,
    /// Trace up to the point of failure.
    pub trace: GosTrace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub plan: TransmissionPlan,
    pub trace: GosTrace,
}

/// Mutable state of one scheduler invocation, handed from stage to stage.
pub struct SchedulerState {
    config: ChannelConfig,
    residual: RateTuple,
    uplink: LevelPool,
    downlink: LevelPool,
    next_bit: [u32; 9],
    plan: TransmissionPlan,
    trace: GosTrace,
    first_failure: Option<(StageId, MessageId, InfeasibilityReason)>,
    options: SchedulerOptions,
}

impl SchedulerState {
    fn new(rates: RateTuple, config: ChannelConfig, options: SchedulerOptions) -> Self {
        SchedulerState {
            config,
            residual: rates,
            uplink: LevelPool::new(config),
            downlink: LevelPool::new(config),
            next_bit: [0; 9],
            plan: TransmissionPlan::empty(config, rates),
            trace: GosTrace::default(),
            first_failure: None,
            options,
        }
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn residual(&self) -> &RateTuple {
        &self.residual
    }

    pub fn options(&self) -> SchedulerOptions {
        self.options
    }

    pub fn trace_mut(&mut self) -> &mut GosTrace {
        &mut self.trace
    }

    fn next_bit(&mut self, m: MessageId) -> BitRef {
        let k = m.index();
        debug_assert!(self.residual.0[k] > 0);
        self.residual.0[k] -= 1;
        let bit = BitRef::new(m, self.next_bit[k]);
        self.next_bit[k] += 1;
        bit
    }

    fn push_uplink(&mut self, level: LevelIndex, stage: StageId, contributors: Vec<BitRef>) {
        self.plan.uplink.insert(
            level,
            UplinkLevel {
                stage,
                contributors,
            },
        );
    }

    fn push_downlink(&mut self, level: LevelIndex, stage: StageId, source: LevelIndex) {
        let payload = self.plan.uplink[&source].contributors.clone();
        self.plan.downlink.insert(
            level,
            DownlinkLevel {
                stage,
                sources: vec![source],
                payload,
            },
        );
    }

    fn push_decode(&mut self, user: User, level: LevelIndex, solves: BitRef) {
        self.plan
            .decode
            .entry(user)
            .or_default()
            .push(DecodeStep { level, solves });
    }

    /// One bit in each direction of a bidirectional pair `i <-> j`.
    pub fn place_pair(&mut self, i: User, j: User) -> bool {
        let (ij, ji) = (MessageId::private(i, j), MessageId::private(j, i));
        if self.residual.get(ij) == 0 || self.residual.get(ji) == 0 {
            return false;
        }
        let aud = UserSet::of(&[i, j]);
        let Some(up) = self.uplink.take(aud) else {
            return false;
        };
        let Some(down) = self.downlink.take(aud) else {
            self.uplink.release(&[up]);
            return false;
        };
        let (bij, bji) = (self.next_bit(ij), self.next_bit(ji));
        self.push_uplink(up, StageId::MaxGain, vec![bij, bji]);
        self.push_downlink(down, StageId::MaxGain, up);
        self.push_decode(i, down, bji);
        self.push_decode(j, down, bij);
        true
    }

    /// One unit (one bit of each of the three messages) of a hub template.
    pub fn place_hub(&mut self, t: &HubTemplate, stage: StageId) -> bool {
        if t.messages().iter().any(|&m| self.residual.get(m) == 0) {
            return false;
        }
        let Some(up) = self.uplink.take_all(&t.uplink_audiences()) else {
            return false;
        };
        let Some(down) = self.downlink.take_all(&t.downlink_audiences()) else {
            self.uplink.release(&up);
            return false;
        };
        let h = self.next_bit(t.hub);
        let p = self.next_bit(t.p_msg);
        let q = self.next_bit(t.q_msg);
        self.push_uplink(up[0], stage, vec![h, p]);
        self.push_uplink(up[1], stage, vec![h, q]);
        self.push_downlink(down[0], stage, up[0]);
        self.push_downlink(down[1], stage, up[1]);
        for (user, side, role) in t.decode_steps() {
            let level = match side {
                Side::A => down[0],
                Side::B => down[1],
            };
            let bit = match role {
                templates::Role::Hub => h,
                templates::Role::P => p,
                templates::Role::Q => q,
            };
            self.push_decode(user, level, bit);
        }
        true
    }

    /// Route one bit on its own level in each direction.
    pub fn place_single(&mut self, m: MessageId) -> Result<(), InfeasibilityReason> {
        let Some(up) = self.uplink.take(UserSet::of(&[m.origin()])) else {
            return Err(InfeasibilityReason::NoUplinkLevel);
        };
        let Some(down) = self.downlink.take(m.destinations()) else {
            self.uplink.release(&[up]);
            return Err(if m.is_common() {
                InfeasibilityReason::NoDownlinkLevelForCommon
            } else {
                InfeasibilityReason::NoDownlinkLevel
            });
        };
        let bit = self.next_bit(m);
        self.push_uplink(up, StageId::MinGain, vec![bit]);
        self.push_downlink(down, StageId::MinGain, up);
        for u in m.destinations().iter() {
            self.push_decode(u, down, bit);
        }
        Ok(())
    }

    /// Route one common bit once on the uplink and twice on the downlink,
    /// one copy per receiver.
    pub fn place_duplicated(&mut self, m: MessageId) -> Result<(), InfeasibilityReason> {
        debug_assert!(m.is_common());
        let [r1, r2] = m.origin().others();
        let Some(up) = self.uplink.take(UserSet::of(&[m.origin()])) else {
            return Err(InfeasibilityReason::NoUplinkLevel);
        };
        let Some(down) = self
            .downlink
            .take_all(&[UserSet::of(&[r1]), UserSet::of(&[r2])])
        else {
            self.uplink.release(&[up]);
            return Err(InfeasibilityReason::NoDownlinkLevelForCommon);
        };
        let bit = self.next_bit(m);
        self.push_uplink(up, StageId::Repair, vec![bit]);
        self.push_downlink(down[0], StageId::Repair, up);
        self.push_downlink(down[1], StageId::Repair, up);
        self.push_decode(r1, down[0], bit);
        self.push_decode(r2, down[1], bit);
        Ok(())
    }

    /// Records the first unplaceable message; later failures are ignored.
    pub fn record_failure(&mut self, stage: StageId, m: MessageId, reason: InfeasibilityReason) {
        if self.first_failure.is_none() {
            self.first_failure = Some((stage, m, reason));
        }
    }

    pub fn mark_truncated(&mut self, stage: StageId) {
        if !self.trace.truncated.contains(&stage) {
            self.trace.truncated.push(stage);
        }
    }

    fn snapshot(&mut self, stage: StageId) {
        self.trace.residuals.push(StageSnapshot {
            stage,
            rates: self.residual,
            uplink_free: self.uplink.free_per_user(),
            downlink_free: self.downlink.free_per_user(),
        });
    }
}

/// Runs the Gain Ordering Scheme on any rate tuple.
///
/// Returns the plan and trace when every bit is placed, otherwise an
/// [`InfeasibilityReport`]. Tuples outside the outer region are handled; they
/// simply fail.
pub fn schedule(
    rates: &RateTuple,
    config: &ChannelConfig,
    options: SchedulerOptions,
) -> Result<Schedule, Box<InfeasibilityReport>> {
    Pipeline::gos(options).run(rates, config, options)
}

impl Pipeline {
    pub fn run(
        &self,
        rates: &RateTuple,
        config: &ChannelConfig,
        options: SchedulerOptions,
    ) -> Result<Schedule, Box<InfeasibilityReport>> {
        let mut state = SchedulerState::new(*rates, *config, options);
        for stage in self.stages() {
            stage.run(&mut state);
            state.snapshot(stage.id());
        }
        if state.residual.is_zero() {
            return Ok(Schedule {
                plan: state.plan,
                trace: state.trace,
            });
        }
        let (lemma1_value, lemma1_ok) = lemma1_condition(rates, config);
        let (failing_stage, first, cause) = state.first_failure.unwrap_or_else(|| {
            // a stage left bits behind without a placement attempt
            let m = state
                .residual
                .nonzero()
                .next()
                .map(|(m, _)| m)
                .expect("nonzero residual");
            (StageId::MinGain, m, InfeasibilityReason::NoUplinkLevel)
        });
        let mut blocked = vec![BlockedMessage {
            message: first,
            undeliverable: state.residual.get(first),
        }];
        for (m, r) in state.residual.nonzero() {
            if m != first {
                blocked.push(BlockedMessage {
                    message: m,
                    undeliverable: r,
                });
            }
        }
        let reason = if !lemma1_ok && in_outer_region(rates, config) {
            InfeasibilityReason::Lemma1Violated
        } else {
            cause
        };
        Err(Box::new(InfeasibilityReport {
            failing_stage,
            blocked,
            reason,
            cause,
            lemma1_value,
            trace: state.trace,
        }))
    }
}

fn tally_hub(up: &mut ClassTally, down: &mut ClassTally, t: &HubTemplate, amount: u32) {
    for a in t.uplink_audiences() {
        up.add(a, amount);
    }
    for a in t.downlink_audiences() {
        down.add(a, amount);
    }
}

fn tally_templates(up: &mut ClassTally, down: &mut ClassTally, list: &[TemplateAmount]) {
    for ta in list {
        let t: HubTemplate = ta.template.parse().expect("trace holds valid template ids");
        tally_hub(up, down, &t, ta.amount);
    }
}

/// Per-user free level counts after each recorded stage, predicted by the
/// closed-form recurrence from the stage amounts alone. Entries pair up with
/// `trace.residuals` as `(uplink, downlink)`.
pub fn closed_form_levels(config: &ChannelConfig, trace: &GosTrace) -> Vec<([i64; 3], [i64; 3])> {
    let start = config.gains().map(i64::from);
    let (mut up, mut down) = (start, start);
    let mut out = Vec::new();
    for snap in &trace.residuals {
        let mut tu = ClassTally::default();
        let mut td = ClassTally::default();
        match snap.stage {
            StageId::MaxGain => {
                let pairs = [
                    [User::ONE, User::TWO],
                    [User::ONE, User::THREE],
                    [User::TWO, User::THREE],
                ];
                for (amount, pair) in trace.a.iter().zip(pairs) {
                    tu.add(UserSet::of(&pair), *amount);
                    td.add(UserSet::of(&pair), *amount);
                }
            }
            StageId::FullCommon => {
                tally_hub(&mut tu, &mut td, &HubTemplate::full_common(), trace.b);
            }
            StageId::TwoCommonOnePrivate => tally_templates(&mut tu, &mut td, &trace.c_amounts),
            StageId::OneCommonTwoPrivate => tally_templates(&mut tu, &mut td, &trace.d_amounts),
            StageId::Cyclic => tally_templates(&mut tu, &mut td, &trace.e_amounts),
            StageId::MinGain => {
                for &(m, amount) in &trace.f_amounts {
                    tu.add(UserSet::of(&[m.origin()]), amount);
                    td.add(m.destinations(), amount);
                }
            }
            StageId::Repair => {
                for &(m, amount) in &trace.repair_amounts {
                    tu.add(UserSet::of(&[m.origin()]), amount);
                    for r in m.origin().others() {
                        td.add(UserSet::of(&[r]), amount);
                    }
                }
            }
        }
        up = closed_form_step(up, &tu);
        down = closed_form_step(down, &td);
        out.push((up, down));
    }
    out
}

#[cfg(test)]
mod tests;
