//! Bit-exact execution of a plan over GF(2).
//!
//! The uplink superimposes (XORs) everything sent on a level; the relay
//! forwards XORs of whole received levels; each user then runs a peeling
//! decoder over the levels it hears, seeded with its own message bits.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{LevelIndex, Message, MessageId, RateTuple, User};
use crate::error::SimError;
use crate::plan::{BitRef, TransmissionPlan};

pub const DEFAULT_TRIALS: u32 = 200;
pub const DEFAULT_SEED: u64 = 0;

/// Bit received by the relay on every level; idle levels read 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelayObservation {
    pub levels: BTreeMap<LevelIndex, bool>,
}

/// Result of one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockOutcome {
    pub relay: RelayObservation,
    pub downlink: BTreeMap<LevelIndex, bool>,
    /// Bits each user solved (own bits excluded).
    pub decoded: BTreeMap<User, BTreeMap<BitRef, bool>>,
}

struct MessageTable<'a> {
    bits: BTreeMap<MessageId, &'a [bool]>,
}

impl<'a> MessageTable<'a> {
    fn new(messages: &'a [Message]) -> Result<Self, SimError> {
        let mut bits = BTreeMap::new();
        for m in messages {
            if bits.insert(m.id(), m.bits.as_slice()).is_some() {
                return Err(SimError::DuplicateMessage(m.id()));
            }
        }
        Ok(MessageTable { bits })
    }

    fn get(&self, b: &BitRef) -> Result<bool, SimError> {
        let bits = self
            .bits
            .get(&b.message)
            .ok_or(SimError::UnknownMessage(b.message))?;
        bits.get(b.bit as usize)
            .copied()
            .ok_or(SimError::BitOutOfRange {
                message: b.message,
                bit: b.bit,
                len: bits.len(),
            })
    }
}

/// Repeatedly solves any equation with exactly one unknown until nothing
/// changes. Returns the newly solved bits.
///
/// Equations are `(xor-set, observed value)`; `known` holds side information.
pub fn peel(
    equations: &[(Vec<BitRef>, bool)],
    known: &BTreeMap<BitRef, bool>,
) -> BTreeMap<BitRef, bool> {
    let mut solved: BTreeMap<BitRef, bool> = BTreeMap::new();
    let mut pending: Vec<usize> = (0..equations.len()).collect();
    loop {
        let mut progressed = false;
        pending.retain(|&e| {
            let (set, value) = &equations[e];
            let mut acc = *value;
            let mut unknown = None;
            for b in set {
                match known.get(b).or_else(|| solved.get(b)) {
                    Some(v) => acc ^= v,
                    None if unknown.is_none() => unknown = Some(*b),
                    None => return true,
                }
            }
            if let Some(b) = unknown {
                solved.insert(b, acc);
                progressed = true;
            }
            false
        });
        if !progressed {
            return solved;
        }
    }
}

/// Runs one block: uplink superposition, relay forwarding and per-user peeling.
pub fn run_block(plan: &TransmissionPlan, messages: &[Message]) -> Result<BlockOutcome, SimError> {
    let table = MessageTable::new(messages)?;
    let mut relay = BTreeMap::new();
    for level in 1..=plan.channel.levels() {
        let level = LevelIndex(level);
        let mut bit = false;
        if let Some(up) = plan.uplink.get(&level) {
            for c in &up.contributors {
                bit ^= table.get(c)?;
            }
        }
        relay.insert(level, bit);
    }
    let mut downlink = BTreeMap::new();
    for (&level, down) in &plan.downlink {
        if level.0 == 0 || level.0 > plan.channel.levels() {
            return Err(SimError::InaccessibleLevel {
                user: User::ONE,
                level: level.0,
            });
        }
        let mut bit = false;
        for src in &down.sources {
            if !plan.uplink.contains_key(src) {
                return Err(SimError::MissingSource(level.0, src.0));
            }
            bit ^= relay[src];
        }
        for b in &down.payload {
            table.get(b)?;
        }
        downlink.insert(level, bit);
    }
    let mut decoded = BTreeMap::new();
    for user in User::ALL {
        let equations: Vec<(Vec<BitRef>, bool)> = plan
            .downlink
            .range(..=LevelIndex(plan.channel.gain(user)))
            .map(|(l, d)| (d.payload.clone(), downlink[l]))
            .collect();
        let mut known = BTreeMap::new();
        for m in messages.iter().filter(|m| m.origin == user) {
            for (k, &v) in m.bits.iter().enumerate() {
                known.insert(BitRef::new(m.id(), k as u32), v);
            }
        }
        decoded.insert(user, peel(&equations, &known));
    }
    Ok(BlockOutcome {
        relay: RelayObservation { levels: relay },
        downlink,
        decoded,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureDescriptor {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub user: Option<User>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message: Option<MessageId>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bit: Option<u32>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationVerdict {
    pub ok: bool,
    pub achieved: RateTuple,
    pub trials: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<FailureDescriptor>,
}

fn messages_for(rates: &RateTuple, mut fill: impl FnMut() -> bool) -> Vec<Message> {
    MessageId::ALL
        .into_iter()
        .map(|m| Message::from_id(m, (0..rates.get(m)).map(|_| fill()).collect()))
        .collect()
}

fn fail(achieved: RateTuple, trials: u32, f: FailureDescriptor) -> VerificationVerdict {
    VerificationVerdict {
        ok: false,
        achieved,
        trials,
        failure: Some(f),
    }
}

/// Symbolic peeling first (which bits each user can isolate at all), then
/// `trials` random message fills that must decode without a single bit error.
pub fn verify_plan(
    plan: &TransmissionPlan,
    rates: &RateTuple,
    trials: u32,
    seed: u64,
) -> VerificationVerdict {
    // symbolic pass: values are irrelevant to which bits peel
    let zeros = messages_for(rates, || false);
    let outcome = match run_block(plan, &zeros) {
        Ok(o) => o,
        Err(e) => {
            return fail(
                RateTuple::ZERO,
                0,
                FailureDescriptor {
                    user: None,
                    message: None,
                    bit: None,
                    reason: format!("malformed plan: {e}"),
                },
            )
        }
    };
    let solved: BTreeMap<User, BTreeSet<BitRef>> = outcome
        .decoded
        .iter()
        .map(|(u, bits)| (*u, bits.keys().copied().collect()))
        .collect();

    let mut achieved = RateTuple::ZERO;
    let mut first_missing = None;
    for m in MessageId::ALL {
        let mut delivered = 0;
        for bit in 0..rates.get(m) {
            let b = BitRef::new(m, bit);
            let missing = m.destinations().iter().find(|u| !solved[u].contains(&b));
            match missing {
                None => delivered += 1,
                Some(u) if first_missing.is_none() => first_missing = Some((u, b)),
                Some(_) => {}
            }
        }
        achieved.set(m, delivered);
    }
    if let Some((user, b)) = first_missing {
        return fail(
            achieved,
            0,
            FailureDescriptor {
                user: Some(user),
                message: Some(b.message),
                bit: Some(b.bit),
                reason: "bit is not recoverable by peeling".into(),
            },
        );
    }
    if plan.rates != *rates {
        return fail(
            achieved,
            0,
            FailureDescriptor {
                user: None,
                message: None,
                bit: None,
                reason: format!("plan was built for rates {}", plan.rates),
            },
        );
    }
    if let Err(v) = plan.check_invariants() {
        return fail(
            achieved,
            0,
            FailureDescriptor {
                user: None,
                message: None,
                bit: None,
                reason: format!("plan invariant violated: {v}"),
            },
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let messages = messages_for(rates, || rng.gen::<bool>());
        let outcome = run_block(plan, &messages).expect("structure already checked");
        for user in User::ALL {
            let got = &outcome.decoded[&user];
            let keys: BTreeSet<BitRef> = got.keys().copied().collect();
            if keys != solved[&user] {
                return fail(
                    achieved,
                    trial + 1,
                    FailureDescriptor {
                        user: Some(user),
                        message: None,
                        bit: None,
                        reason: format!("trial {trial}: solvable set depends on message values"),
                    },
                );
            }
            for (b, v) in got {
                let sent = messages[b.message.index()].bits[b.bit as usize];
                if *v != sent {
                    return fail(
                        achieved,
                        trial + 1,
                        FailureDescriptor {
                            user: Some(user),
                            message: Some(b.message),
                            bit: Some(b.bit),
                            reason: format!(
                                "trial {trial}: decoded {} but {} was sent",
                                *v as u8, sent as u8
                            ),
                        },
                    );
                }
            }
        }
    }
    VerificationVerdict {
        ok: true,
        achieved,
        trials,
        failure: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::MessageKind;
    use crate::plan::{DecodeStep, DownlinkLevel, StageId, UplinkLevel};

    fn bit(m: &str, k: u32) -> BitRef {
        BitRef::new(m.parse().unwrap(), k)
    }

    fn single_level_plan(cfg: &str, rates: &str, contributors: Vec<BitRef>) -> TransmissionPlan {
        let mut plan = TransmissionPlan::empty(cfg.parse().unwrap(), rates.parse().unwrap());
        plan.uplink.insert(
            LevelIndex(1),
            UplinkLevel {
                stage: StageId::MaxGain,
                contributors: contributors.clone(),
            },
        );
        plan.downlink.insert(
            LevelIndex(1),
            DownlinkLevel {
                stage: StageId::MaxGain,
                sources: vec![LevelIndex(1)],
                payload: contributors,
            },
        );
        plan
    }

    #[test]
    fn bidirectional_pair_block() {
        let plan = single_level_plan(
            "1,1,1",
            "1,0,0,1,0,0,0,0,0",
            vec![bit("p:1>2", 0), bit("p:2>1", 0)],
        );
        let msgs = vec![
            Message::new(User::ONE, MessageKind::Private(User::TWO), vec![true]).unwrap(),
            Message::new(User::TWO, MessageKind::Private(User::ONE), vec![false]).unwrap(),
        ];
        let out = run_block(&plan, &msgs).unwrap();
        assert!(out.relay.levels[&LevelIndex(1)]);
        assert_eq!(out.decoded[&User::ONE].get(&bit("p:2>1", 0)), Some(&false));
        assert_eq!(out.decoded[&User::TWO].get(&bit("p:1>2", 0)), Some(&true));
    }

    #[test]
    fn full_common_block() {
        // m1 = z1c ^ z2c, m2 = z2c ^ z3c with (z1c, z2c, z3c) = (1, 0, 1)
        let cfg = "2,2,2";
        let mut plan =
            TransmissionPlan::empty(cfg.parse().unwrap(), "0,0,1,0,0,1,0,0,1".parse().unwrap());
        let (c1, c2, c3) = (bit("c:1", 0), bit("c:2", 0), bit("c:3", 0));
        for (l, set) in [(2, vec![c2, c1]), (1, vec![c2, c3])] {
            plan.uplink.insert(
                LevelIndex(l),
                UplinkLevel {
                    stage: StageId::FullCommon,
                    contributors: set.clone(),
                },
            );
            plan.downlink.insert(
                LevelIndex(l),
                DownlinkLevel {
                    stage: StageId::FullCommon,
                    sources: vec![LevelIndex(l)],
                    payload: set,
                },
            );
        }
        let msgs = vec![
            Message::from_id(c1.message, vec![true]),
            Message::from_id(c2.message, vec![false]),
            Message::from_id(c3.message, vec![true]),
        ];
        let out = run_block(&plan, &msgs).unwrap();
        assert!(out.downlink[&LevelIndex(2)]);
        assert!(out.downlink[&LevelIndex(1)]);
        assert_eq!(
            out.decoded[&User::ONE],
            BTreeMap::from([(c2, false), (c3, true)])
        );
        assert_eq!(
            out.decoded[&User::TWO],
            BTreeMap::from([(c1, true), (c3, true)])
        );
        assert_eq!(
            out.decoded[&User::THREE],
            BTreeMap::from([(c1, true), (c2, false)])
        );
    }

    #[test]
    fn all_zero_messages() {
        let plan = single_level_plan(
            "1,1,1",
            "1,0,0,1,0,0,0,0,0",
            vec![bit("p:1>2", 0), bit("p:2>1", 0)],
        );
        let msgs = messages_for(&plan.rates, || false);
        let out = run_block(&plan, &msgs).unwrap();
        assert!(out.relay.levels.values().all(|b| !b));
        assert!(out.decoded.values().flat_map(|d| d.values()).all(|b| !b));
    }

    #[test]
    fn unknown_message_is_malformed() {
        let plan = single_level_plan("1,1,1", "0,0,1,0,0,0,0,0,0", vec![bit("c:1", 0)]);
        assert_eq!(
            run_block(&plan, &[]),
            Err(SimError::UnknownMessage(bit("c:1", 0).message))
        );
    }

    #[test]
    fn empty_plan_zero_tuple_passes() {
        let plan = TransmissionPlan::empty("2,1,1".parse().unwrap(), RateTuple::ZERO);
        let v = verify_plan(&plan, &RateTuple::ZERO, 10, 7);
        assert!(v.ok);
        assert_eq!(v.achieved, RateTuple::ZERO);
    }

    #[test]
    fn weak_user_does_not_hear_high_levels() {
        // z1c forwarded on level 2 only: user 3 (gain 1) misses it
        let mut plan = TransmissionPlan::empty(
            "2,2,1".parse().unwrap(),
            "0,0,1,0,0,0,0,0,0".parse().unwrap(),
        );
        let c1 = bit("c:1", 0);
        plan.uplink.insert(
            LevelIndex(2),
            UplinkLevel {
                stage: StageId::MinGain,
                contributors: vec![c1],
            },
        );
        plan.downlink.insert(
            LevelIndex(2),
            DownlinkLevel {
                stage: StageId::MinGain,
                sources: vec![LevelIndex(2)],
                payload: vec![c1],
            },
        );
        plan.decode.insert(
            User::TWO,
            vec![DecodeStep {
                level: LevelIndex(2),
                solves: c1,
            }],
        );
        let v = verify_plan(&plan, &plan.rates.clone(), 5, 0);
        assert!(!v.ok);
        let f = v.failure.unwrap();
        assert_eq!(
            (f.user, f.message, f.bit),
            (Some(User::THREE), Some(c1.message), Some(0))
        );
        assert_eq!(v.achieved, RateTuple::ZERO);
    }

    #[test]
    fn peel_needs_single_unknown() {
        let eqs = vec![(vec![bit("c:1", 0), bit("c:2", 0)], true)];
        assert!(peel(&eqs, &BTreeMap::new()).is_empty());
        let known = BTreeMap::from([(bit("c:1", 0), true)]);
        assert_eq!(peel(&eqs, &known), BTreeMap::from([(bit("c:2", 0), false)]));
    }
}
