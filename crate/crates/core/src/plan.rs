//! Transmission plans: which bits go on which uplink level, what the relay
//! broadcasts on each downlink level, and how each user peels its bits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::channel::{ChannelConfig, LevelIndex, MessageId, RateTuple, User};
use crate::error::ModelError;

/// Scheduler stage that produced a plan entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageId {
    MaxGain,
    FullCommon,
    TwoCommonOnePrivate,
    OneCommonTwoPrivate,
    Cyclic,
    MinGain,
    Repair,
}

impl StageId {
    pub const ALL: [StageId; 7] = [
        StageId::MaxGain,
        StageId::FullCommon,
        StageId::TwoCommonOnePrivate,
        StageId::OneCommonTwoPrivate,
        StageId::Cyclic,
        StageId::MinGain,
        StageId::Repair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StageId::MaxGain => "max-gain",
            StageId::FullCommon => "full-common",
            StageId::TwoCommonOnePrivate => "two-common-one-private",
            StageId::OneCommonTwoPrivate => "one-common-two-private",
            StageId::Cyclic => "cyclic",
            StageId::MinGain => "min-gain",
            StageId::Repair => "repair",
        }
    }

    /// Delivered bits per consumed level that the stage is designed to reach,
    /// on both the uplink and the downlink. `None` for the repair pass.
    pub fn nominal_gain(self) -> Option<Ratio<u32>> {
        match self {
            StageId::MaxGain => Some(Ratio::from_integer(2)),
            StageId::FullCommon
            | StageId::TwoCommonOnePrivate
            | StageId::OneCommonTwoPrivate
            | StageId::Cyclic => Some(Ratio::new(3, 2)),
            StageId::MinGain => Some(Ratio::from_integer(1)),
            StageId::Repair => None,
        }
    }
}

impl fmt::Display for StageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One bit of one message, written `p:1>2#0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitRef {
    pub message: MessageId,
    pub bit: u32,
}

impl BitRef {
    pub fn new(message: MessageId, bit: u32) -> Self {
        BitRef { message, bit }
    }
}

impl fmt::Display for BitRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.message, self.bit)
    }
}

impl FromStr for BitRef {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (m, b) = s
            .split_once('#')
            .ok_or_else(|| ModelError::BadMessageId(s.to_string()))?;
        let bit = b
            .parse()
            .map_err(|_| ModelError::BadNumber(b.to_string()))?;
        Ok(BitRef {
            message: m.parse()?,
            bit,
        })
    }
}

impl Serialize for BitRef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UplinkLevel {
    pub stage: StageId,
    pub contributors: Vec<BitRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DownlinkLevel {
    pub stage: StageId,
    /// Uplink levels whose received sums the relay XORs onto this level.
    pub sources: Vec<LevelIndex>,
    /// The resulting XOR-set of message bits.
    pub payload: Vec<BitRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeStep {
    pub level: LevelIndex,
    pub solves: BitRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransmissionPlan {
    pub channel: ChannelConfig,
    pub rates: RateTuple,
    pub uplink: BTreeMap<LevelIndex, UplinkLevel>,
    pub downlink: BTreeMap<LevelIndex, DownlinkLevel>,
    pub decode: BTreeMap<User, Vec<DecodeStep>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanViolation {
    #[error("level {0} is outside the relay's levels")]
    LevelOutOfRange(LevelIndex),
    #[error("uplink level {0} has {1} contributors (allowed 1 or 2)")]
    ContributorCount(LevelIndex, usize),
    #[error("user {user} cannot transmit on uplink level {level}")]
    UplinkInaccessible { user: User, level: LevelIndex },
    #[error("user {0} transmits twice on uplink level {1}")]
    DoubleTransmit(User, LevelIndex),
    #[error("{0} is outside the requested rate for its message")]
    BitOutOfRange(BitRef),
    #[error("downlink level {0} uses uplink level {1}, which carries nothing")]
    MissingSource(LevelIndex, LevelIndex),
    #[error("downlink level {0} payload is not the XOR of its source levels")]
    PayloadMismatch(LevelIndex),
    #[error("user {user} decodes from level {level}, which it cannot hear")]
    DecodeInaccessible { user: User, level: LevelIndex },
    #[error("user {user} decodes from level {level}, which carries nothing")]
    DecodeIdleLevel { user: User, level: LevelIndex },
    #[error("user {user}: step on level {level} does not isolate {bit}")]
    InvalidPeel {
        user: User,
        level: LevelIndex,
        bit: BitRef,
    },
    #[error("user {user} never recovers {bit}")]
    Undelivered { user: User, bit: BitRef },
}

/// Delivered bits and consumed levels for one stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageGain {
    pub stage: StageId,
    pub bits: u32,
    pub uplink_levels: u32,
    pub downlink_levels: u32,
}

impl StageGain {
    pub fn uplink_ratio(&self) -> Option<Ratio<u32>> {
        (self.uplink_levels > 0).then(|| Ratio::new(self.bits, self.uplink_levels))
    }

    pub fn downlink_ratio(&self) -> Option<Ratio<u32>> {
        (self.downlink_levels > 0).then(|| Ratio::new(self.bits, self.downlink_levels))
    }
}

/// Symmetric difference of bit sets, i.e. XOR over GF(2).
pub fn xor_sets<'a>(sets: impl IntoIterator<Item = &'a [BitRef]>) -> BTreeSet<BitRef> {
    let mut acc = BTreeSet::new();
    for set in sets {
        for b in set {
            if !acc.remove(b) {
                acc.insert(*b);
            }
        }
    }
    acc
}

impl TransmissionPlan {
    pub fn empty(channel: ChannelConfig, rates: RateTuple) -> Self {
        TransmissionPlan {
            channel,
            rates,
            uplink: BTreeMap::new(),
            downlink: BTreeMap::new(),
            decode: User::ALL.into_iter().map(|u| (u, Vec::new())).collect(),
        }
    }

    /// Every bit the plan is required to deliver, with the users that must recover it.
    pub fn required_bits(&self) -> Vec<(BitRef, User)> {
        let mut out = Vec::new();
        for (m, r) in self.rates.nonzero() {
            for bit in 0..r {
                for u in m.destinations().iter() {
                    out.push((BitRef::new(m, bit), u));
                }
            }
        }
        out
    }

    /// Bits known to `user` before the block: all bits of its own messages.
    pub fn side_information(&self, user: User) -> BTreeSet<BitRef> {
        self.rates
            .nonzero()
            .filter(|(m, _)| m.origin() == user)
            .flat_map(|(m, r)| (0..r).map(move |b| BitRef::new(m, b)))
            .collect()
    }

    fn check_bit(&self, b: &BitRef) -> Result<(), PlanViolation> {
        if b.bit >= self.rates.get(b.message) {
            return Err(PlanViolation::BitOutOfRange(*b));
        }
        Ok(())
    }

    fn check_level(&self, level: LevelIndex) -> Result<(), PlanViolation> {
        if level.0 == 0 || level.0 > self.channel.levels() {
            return Err(PlanViolation::LevelOutOfRange(level));
        }
        Ok(())
    }

    /// Checks every structural invariant: uplink accessibility, relay payloads
    /// computable from received sums, and that each user's decode schedule is
    /// a valid peeling order covering everything it must recover.
    pub fn check_invariants(&self) -> Result<(), PlanViolation> {
        for (&level, up) in &self.uplink {
            self.check_level(level)?;
            let n = up.contributors.len();
            if n == 0 || n > 2 {
                return Err(PlanViolation::ContributorCount(level, n));
            }
            let mut senders = BTreeSet::new();
            for b in &up.contributors {
                self.check_bit(b)?;
                let user = b.message.origin();
                if !self.channel.can_access(user, level) {
                    return Err(PlanViolation::UplinkInaccessible { user, level });
                }
                if !senders.insert(user) {
                    return Err(PlanViolation::DoubleTransmit(user, level));
                }
            }
        }
        for (&level, down) in &self.downlink {
            self.check_level(level)?;
            let mut sums = Vec::new();
            for src in &down.sources {
                let up = self
                    .uplink
                    .get(src)
                    .ok_or(PlanViolation::MissingSource(level, *src))?;
                sums.push(up.contributors.as_slice());
            }
            let expect = xor_sets(sums);
            let got: BTreeSet<BitRef> = down.payload.iter().copied().collect();
            if expect != got || got.len() != down.payload.len() {
                return Err(PlanViolation::PayloadMismatch(level));
            }
        }
        for user in User::ALL {
            let mut known = self.side_information(user);
            for step in self.decode.get(&user).map(Vec::as_slice).unwrap_or(&[]) {
                if !self.channel.can_access(user, step.level) {
                    return Err(PlanViolation::DecodeInaccessible {
                        user,
                        level: step.level,
                    });
                }
                let down =
                    self.downlink
                        .get(&step.level)
                        .ok_or(PlanViolation::DecodeIdleLevel {
                            user,
                            level: step.level,
                        })?;
                let mut unknown = down.payload.iter().filter(|b| !known.contains(b));
                let isolated = matches!(
                    (unknown.next(), unknown.next()),
                    (Some(b), None) if *b == step.solves
                );
                if !isolated {
                    return Err(PlanViolation::InvalidPeel {
                        user,
                        level: step.level,
                        bit: step.solves,
                    });
                }
                known.insert(step.solves);
            }
            for (bit, dest) in self.required_bits() {
                if dest == user && !known.contains(&bit) {
                    return Err(PlanViolation::Undelivered { user, bit });
                }
            }
        }
        Ok(())
    }

    /// Per-stage delivered bits (each message bit counted once) and level usage.
    pub fn stage_gains(&self) -> Vec<StageGain> {
        let mut bits: BTreeMap<StageId, BTreeSet<BitRef>> = BTreeMap::new();
        let mut up: BTreeMap<StageId, u32> = BTreeMap::new();
        let mut down: BTreeMap<StageId, u32> = BTreeMap::new();
        for lvl in self.uplink.values() {
            bits.entry(lvl.stage)
                .or_default()
                .extend(lvl.contributors.iter().copied());
            *up.entry(lvl.stage).or_default() += 1;
        }
        for lvl in self.downlink.values() {
            *down.entry(lvl.stage).or_default() += 1;
        }
        StageId::ALL
            .into_iter()
            .filter(|s| up.contains_key(s) || down.contains_key(s))
            .map(|stage| StageGain {
                stage,
                bits: bits.get(&stage).map_or(0, |b| b.len() as u32),
                uplink_levels: up.get(&stage).copied().unwrap_or(0),
                downlink_levels: down.get(&stage).copied().unwrap_or(0),
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}
