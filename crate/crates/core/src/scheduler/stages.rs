use crate::channel::{MessageId, User};
use crate::plan::StageId;

use super::templates::{ranked_for, DType, HubTemplate};
use super::{SchedulerOptions, SchedulerState, TemplateAmount};

/// One step of the scheduling pipeline.
pub trait Stage: Send + Sync {
    fn id(&self) -> StageId;
    fn run(&self, state: &mut SchedulerState);
}

pub struct MaxGain;
pub struct FullCommon;
pub struct TwoCommonOnePrivate;
pub struct OneCommonTwoPrivate;
pub struct Cyclic;
pub struct MinGain;
pub struct Repair;

/// Registered stage names, in pipeline order.
pub const STAGE_NAMES: [&str; 7] = [
    "max-gain",
    "full-common",
    "two-common-one-private",
    "one-common-two-private",
    "cyclic",
    "min-gain",
    "repair",
];

pub fn stage_by_name(name: &str) -> Option<Box<dyn Stage>> {
    let stage: Box<dyn Stage> = match name {
        "max-gain" => Box::new(MaxGain),
        "full-common" => Box::new(FullCommon),
        "two-common-one-private" => Box::new(TwoCommonOnePrivate),
        "one-common-two-private" => Box::new(OneCommonTwoPrivate),
        "cyclic" => Box::new(Cyclic),
        "min-gain" => Box::new(MinGain),
        "repair" => Box::new(Repair),
        _ => return None,
    };
    Some(stage)
}

/// An ordered list of stages.
pub struct Pipeline {
    stages: Vec<Box<dyn Stage>>,
}

impl Pipeline {
    /// The Gain Ordering Scheme: every stage in priority order, with the
    /// repair pass appended when enabled.
    pub fn gos(options: SchedulerOptions) -> Self {
        let count = if options.repair { 7 } else { 6 };
        let stages = STAGE_NAMES[..count]
            .iter()
            .map(|n| stage_by_name(n).expect("registered stage"))
            .collect();
        Pipeline { stages }
    }

    pub fn from_names(names: &[&str]) -> Option<Self> {
        let stages = names
            .iter()
            .map(|n| stage_by_name(n))
            .collect::<Option<Vec<_>>>()?;
        Some(Pipeline { stages })
    }

    pub fn stages(&self) -> impl Iterator<Item = &dyn Stage> {
        self.stages.iter().map(|s| s.as_ref())
    }

    pub fn ids(&self) -> Vec<StageId> {
        self.stages.iter().map(|s| s.id()).collect()
    }
}

impl Stage for MaxGain {
    fn id(&self) -> StageId {
        StageId::MaxGain
    }

    fn run(&self, state: &mut SchedulerState) {
        let pairs = [
            (User::ONE, User::TWO),
            (User::ONE, User::THREE),
            (User::TWO, User::THREE),
        ];
        for (k, (i, j)) in pairs.into_iter().enumerate() {
            let r = state.residual();
            let want = r
                .get(MessageId::private(i, j))
                .min(r.get(MessageId::private(j, i)));
            let mut placed = 0;
            while placed < want && state.place_pair(i, j) {
                placed += 1;
            }
            if placed < want {
                state.mark_truncated(self.id());
            }
            state.trace_mut().a[k] = placed;
        }
    }
}

impl Stage for FullCommon {
    fn id(&self) -> StageId {
        StageId::FullCommon
    }

    fn run(&self, state: &mut SchedulerState) {
        let t = HubTemplate::full_common();
        let want = t
            .messages()
            .iter()
            .map(|&m| state.residual().get(m))
            .min()
            .unwrap_or(0);
        let mut placed = 0;
        while placed < want && state.place_hub(&t, self.id()) {
            placed += 1;
        }
        if placed < want {
            state.mark_truncated(self.id());
        }
        state.trace_mut().b = placed;
    }
}

/// Repeatedly takes the best-ranked template that still has traffic and
/// fits at least one unit, placing as many units as fit.
fn greedy_templates(state: &mut SchedulerState, stage: StageId) -> Vec<(HubTemplate, u32)> {
    let ranked = ranked_for(stage);
    let mut used: Vec<(HubTemplate, u32)> = Vec::new();
    loop {
        let mut progressed = false;
        for t in &ranked {
            let want = t
                .messages()
                .iter()
                .map(|&m| state.residual().get(m))
                .min()
                .unwrap_or(0);
            if want == 0 {
                continue;
            }
            let mut placed = 0;
            while placed < want && state.place_hub(t, stage) {
                placed += 1;
            }
            if placed == 0 {
                continue;
            }
            if placed < want {
                state.mark_truncated(stage);
            }
            match used.iter_mut().find(|(u, _)| u == t) {
                Some((_, n)) => *n += placed,
                None => used.push((*t, placed)),
            }
            progressed = true;
            break;
        }
        if !progressed {
            return used;
        }
    }
}

fn amounts(used: &[(HubTemplate, u32)]) -> Vec<TemplateAmount> {
    used.iter()
        .map(|(t, n)| TemplateAmount {
            template: t.to_string(),
            kind: t.d_type().map(|d| d.label().to_string()),
            amount: *n,
        })
        .collect()
}

impl Stage for TwoCommonOnePrivate {
    fn id(&self) -> StageId {
        StageId::TwoCommonOnePrivate
    }

    fn run(&self, state: &mut SchedulerState) {
        let used = greedy_templates(state, self.id());
        state.trace_mut().c_amounts = amounts(&used);
    }
}

impl Stage for OneCommonTwoPrivate {
    fn id(&self) -> StageId {
        StageId::OneCommonTwoPrivate
    }

    fn run(&self, state: &mut SchedulerState) {
        let used = greedy_templates(state, self.id());
        let trace = state.trace_mut();
        for (t, n) in &used {
            match t.d_type() {
                Some(DType::D1) => trace.d1 += n,
                Some(DType::D2) => trace.d2 += n,
                Some(DType::D3) => trace.d3 += n,
                None => {}
            }
        }
        trace.d_amounts = amounts(&used);
    }
}

impl Stage for Cyclic {
    fn id(&self) -> StageId {
        StageId::Cyclic
    }

    fn run(&self, state: &mut SchedulerState) {
        let r = *state.residual();
        let e1 = r.r12().min(r.r23()).min(r.r31());
        let e2 = r.r13().min(r.r32()).min(r.r21());
        // opposed pairs are exhausted unless max-gain ran out of levels
        debug_assert!(
            e1 == 0 || e2 == 0 || state.trace_mut().truncated.contains(&StageId::MaxGain),
            "both cycles active after a complete max-gain stage"
        );
        let used = greedy_templates(state, self.id());
        let trace = state.trace_mut();
        for (t, n) in &used {
            let mut idx = t.messages().map(|m| m.index());
            idx.sort_unstable();
            // 1->2->3->1 is {R12, R23, R31}; 1->3->2->1 is {R13, R21, R32}
            if idx == [0, 4, 6] {
                trace.e1 += n;
            } else {
                trace.e2 += n;
            }
        }
        trace.e_amounts = amounts(&used);
    }
}

/// Message order for routing: common messages first, then canonical order.
fn routing_order() -> impl Iterator<Item = MessageId> {
    let commons = MessageId::ALL.into_iter().filter(|m| m.is_common());
    let privates = MessageId::ALL.into_iter().filter(|m| !m.is_common());
    commons.chain(privates)
}

impl Stage for MinGain {
    fn id(&self) -> StageId {
        StageId::MinGain
    }

    fn run(&self, state: &mut SchedulerState) {
        let mut placed_amounts = Vec::new();
        for m in routing_order() {
            let want = state.residual().get(m);
            let mut placed = 0;
            while placed < want {
                match state.place_single(m) {
                    Ok(()) => placed += 1,
                    Err(reason) => {
                        state.record_failure(self.id(), m, reason);
                        break;
                    }
                }
            }
            if placed > 0 {
                placed_amounts.push((m, placed));
            }
        }
        state.trace_mut().f_amounts = placed_amounts;
    }
}

impl Stage for Repair {
    fn id(&self) -> StageId {
        StageId::Repair
    }

    fn run(&self, state: &mut SchedulerState) {
        let mut placed_amounts = Vec::new();
        for m in MessageId::ALL.into_iter().filter(|m| m.is_common()) {
            let want = state.residual().get(m);
            let mut placed = 0;
            while placed < want && state.place_duplicated(m).is_ok() {
                placed += 1;
            }
            if placed > 0 {
                placed_amounts.push((m, placed));
            }
        }
        state.trace_mut().repair_amounts = placed_amounts;
    }
}
