//! Channel model shared by every other module.
//!
//! The relay has `n1` levels numbered `1..=n1`. User `j` transmits into and
//! hears exactly the levels `1..=n_j`, so the level sets of the three users
//! are nested. Rates are integral bits per channel use and a schedule covers
//! a single block.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ModelError;

/// One of the three users. Stored as its 1-based number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct User(u8);

impl User {
    pub const ONE: User = User(1);
    pub const TWO: User = User(2);
    pub const THREE: User = User(3);
    pub const ALL: [User; 3] = [User::ONE, User::TWO, User::THREE];

    pub fn new(number: u8) -> Result<Self, ModelError> {
        match number {
            1..=3 => Ok(User(number)),
            _ => Err(ModelError::InvalidUser(number as u32)),
        }
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub(crate) fn idx(self) -> usize {
        (self.0 - 1) as usize
    }

    /// The two other users, in ascending order.
    pub fn others(self) -> [User; 2] {
        match self.0 {
            1 => [User::TWO, User::THREE],
            2 => [User::ONE, User::THREE],
            _ => [User::ONE, User::TWO],
        }
    }

    /// The user that is neither `self` nor `other`.
    pub fn third(self, other: User) -> User {
        debug_assert_ne!(self, other);
        User(6 - self.0 - other.0)
    }
}

impl fmt::Display for User {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for User {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.0)
    }
}

impl<'de> Deserialize<'de> for User {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let n = u8::deserialize(d)?;
        User::new(n).map_err(serde::de::Error::custom)
    }
}

/// A small set of users, used for uplink contributors and downlink audiences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct UserSet(u8);

impl UserSet {
    pub const EMPTY: UserSet = UserSet(0);

    pub fn of(users: &[User]) -> Self {
        users.iter().fold(UserSet::EMPTY, |s, &u| s.with(u))
    }

    pub fn with(self, user: User) -> Self {
        UserSet(self.0 | (1 << user.idx()))
    }

    pub fn union(self, other: UserSet) -> Self {
        UserSet(self.0 | other.0)
    }

    pub fn contains(self, user: User) -> bool {
        self.0 & (1 << user.idx()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = User> {
        User::ALL.into_iter().filter(move |&u| self.contains(u))
    }

    /// The weakest member: the user with the largest number, whose level range
    /// is the tightest. `None` for the empty set.
    pub fn weakest(self) -> Option<User> {
        User::ALL.into_iter().rev().find(|&u| self.contains(u))
    }
}

/// The three reciprocal channel gains, `n1 >= n2 >= n3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChannelConfig {
    gains: [u32; 3],
}

impl ChannelConfig {
    pub fn new(n1: u32, n2: u32, n3: u32) -> Result<Self, ModelError> {
        if n1 < n2 || n2 < n3 {
            return Err(ModelError::NotDescending([n1, n2, n3]));
        }
        Ok(ChannelConfig {
            gains: [n1, n2, n3],
        })
    }

    pub fn n1(&self) -> u32 {
        self.gains[0]
    }

    pub fn n2(&self) -> u32 {
        self.gains[1]
    }

    pub fn n3(&self) -> u32 {
        self.gains[2]
    }

    pub fn gain(&self, user: User) -> u32 {
        self.gains[user.idx()]
    }

    pub fn gains(&self) -> [u32; 3] {
        self.gains
    }

    /// Number of relay levels.
    pub fn levels(&self) -> u32 {
        self.gains[0]
    }

    /// Highest level every member of `audience` can access.
    pub fn reach(&self, audience: UserSet) -> u32 {
        audience
            .iter()
            .map(|u| self.gain(u))
            .min()
            .unwrap_or(self.n1())
    }

    pub fn can_access(&self, user: User, level: LevelIndex) -> bool {
        level.0 >= 1 && level.0 <= self.gain(user)
    }

    /// Multiply every gain by `factor`.
    pub fn scaled(&self, factor: u32) -> Self {
        ChannelConfig {
            gains: self.gains.map(|g| g * factor),
        }
    }
}

impl fmt::Display for ChannelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.gains[0], self.gains[1], self.gains[2])
    }
}

impl FromStr for ChannelConfig {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts = parse_list(s, 3)?;
        ChannelConfig::new(parts[0], parts[1], parts[2])
    }
}

impl Serialize for ChannelConfig {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ChannelConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn parse_list(s: &str, expected: usize) -> Result<Vec<u32>, ModelError> {
    let parts = s
        .split(',')
        .map(|p| {
            let p = p.trim();
            p.parse::<u32>()
                .map_err(|_| ModelError::BadNumber(p.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if parts.len() != expected {
        return Err(ModelError::WrongArity {
            expected,
            found: parts.len(),
        });
    }
    Ok(parts)
}

/// Channel gains derived from SNRs, sorted descending.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SnrChannel {
    pub config: ChannelConfig,
    /// `permutation[k]` is the original (input-position) user now labelled `k + 1`.
    pub permutation: [User; 3],
}

/// `n_j = ceil(0.5 * log2(rho_j))` for each user, relabelled so that gains descend.
pub fn config_from_snr(rho1: f64, rho2: f64, rho3: f64) -> Result<SnrChannel, ModelError> {
    let rhos = [rho1, rho2, rho3];
    let mut gains = [0u32; 3];
    for (g, &rho) in gains.iter_mut().zip(&rhos) {
        if !rho.is_finite() || rho < 1.0 {
            return Err(ModelError::InvalidSnr(rho));
        }
        *g = (0.5 * rho.log2()).ceil() as u32;
    }
    let mut order = User::ALL;
    // stable: ties keep the input order
    order.sort_by(|a, b| gains[b.idx()].cmp(&gains[a.idx()]));
    let config = ChannelConfig::new(
        gains[order[0].idx()],
        gains[order[1].idx()],
        gains[order[2].idx()],
    )?;
    Ok(SnrChannel {
        config,
        permutation: order,
    })
}

/// 1-based relay level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelIndex(pub u32);

impl fmt::Display for LevelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Levels `{1, ..., n_user}`.
pub fn accessible_levels(config: &ChannelConfig, user: User) -> BTreeSet<LevelIndex> {
    (1..=config.gain(user)).map(LevelIndex).collect()
}

/// Identifies one of the nine messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageId {
    Private { from: User, to: User },
    Common { from: User },
}

impl MessageId {
    /// All nine messages in canonical order: 12, 13, 1c, 21, 23, 2c, 31, 32, 3c.
    pub const ALL: [MessageId; 9] = [
        MessageId::Private {
            from: User::ONE,
            to: User::TWO,
        },
        MessageId::Private {
            from: User::ONE,
            to: User::THREE,
        },
        MessageId::Common { from: User::ONE },
        MessageId::Private {
            from: User::TWO,
            to: User::ONE,
        },
        MessageId::Private {
            from: User::TWO,
            to: User::THREE,
        },
        MessageId::Common { from: User::TWO },
        MessageId::Private {
            from: User::THREE,
            to: User::ONE,
        },
        MessageId::Private {
            from: User::THREE,
            to: User::TWO,
        },
        MessageId::Common { from: User::THREE },
    ];

    pub fn private(from: User, to: User) -> Self {
        debug_assert_ne!(from, to);
        MessageId::Private { from, to }
    }

    pub fn common(from: User) -> Self {
        MessageId::Common { from }
    }

    pub fn origin(self) -> User {
        match self {
            MessageId::Private { from, .. } | MessageId::Common { from } => from,
        }
    }

    pub fn is_common(self) -> bool {
        matches!(self, MessageId::Common { .. })
    }

    pub fn destinations(self) -> UserSet {
        match self {
            MessageId::Private { to, .. } => UserSet::of(&[to]),
            MessageId::Common { from } => UserSet::of(&from.others()),
        }
    }

    /// Position in the canonical nine-component order.
    pub fn index(self) -> usize {
        let base = self.origin().idx() * 3;
        match self {
            MessageId::Common { .. } => base + 2,
            MessageId::Private { from, to } => {
                if to == from.others()[0] {
                    base
                } else {
                    base + 1
                }
            }
        }
    }

    /// The same-pair message in the opposite direction, for private messages.
    pub fn reverse(self) -> Option<MessageId> {
        match self {
            MessageId::Private { from, to } => Some(MessageId::Private { from: to, to: from }),
            MessageId::Common { .. } => None,
        }
    }
}

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MessageId::Private { from, to } => write!(f, "p:{from}>{to}"),
            MessageId::Common { from } => write!(f, "c:{from}"),
        }
    }
}

impl FromStr for MessageId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::BadMessageId(s.to_string());
        let user = |t: &str| -> Result<User, ModelError> {
            let n: u8 = t.parse().map_err(|_| bad())?;
            User::new(n).map_err(|_| bad())
        };
        if let Some(rest) = s.strip_prefix("c:") {
            return Ok(MessageId::Common { from: user(rest)? });
        }
        if let Some(rest) = s.strip_prefix("p:") {
            let (a, b) = rest.split_once('>').ok_or_else(bad)?;
            let (from, to) = (user(a)?, user(b)?);
            if from == to {
                return Err(bad());
            }
            return Ok(MessageId::Private { from, to });
        }
        Err(bad())
    }
}

impl Serialize for MessageId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MessageId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The nine rates `(R12, R13, R1c, R21, R23, R2c, R31, R32, R3c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct RateTuple(pub [u32; 9]);

impl RateTuple {
    pub const ZERO: RateTuple = RateTuple([0; 9]);

    pub fn new(rates: [u32; 9]) -> Self {
        RateTuple(rates)
    }

    pub fn get(&self, msg: MessageId) -> u32 {
        self.0[msg.index()]
    }

    pub fn set(&mut self, msg: MessageId, value: u32) {
        self.0[msg.index()] = value;
    }

    pub fn components(&self) -> [u32; 9] {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&r| r == 0)
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Messages with a nonzero rate, in canonical order.
    pub fn nonzero(&self) -> impl Iterator<Item = (MessageId, u32)> + '_ {
        MessageId::ALL
            .into_iter()
            .map(|m| (m, self.get(m)))
            .filter(|&(_, r)| r > 0)
    }

    pub fn scaled(&self, factor: u32) -> Self {
        RateTuple(self.0.map(|r| r * factor))
    }

    /// Component-wise `self <= other`.
    pub fn le(&self, other: &RateTuple) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn r12(&self) -> u32 {
        self.0[0]
    }
    pub fn r13(&self) -> u32 {
        self.0[1]
    }
    pub fn r1c(&self) -> u32 {
        self.0[2]
    }
    pub fn r21(&self) -> u32 {
        self.0[3]
    }
    pub fn r23(&self) -> u32 {
        self.0[4]
    }
    pub fn r2c(&self) -> u32 {
        self.0[5]
    }
    pub fn r31(&self) -> u32 {
        self.0[6]
    }
    pub fn r32(&self) -> u32 {
        self.0[7]
    }
    pub fn r3c(&self) -> u32 {
        self.0[8]
    }
}

impl fmt::Display for RateTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, r) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl FromStr for RateTuple {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts = parse_list(s, 9)?;
        let mut rates = [0u32; 9];
        rates.copy_from_slice(&parts);
        Ok(RateTuple(rates))
    }
}

impl Serialize for RateTuple {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RateTuple {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Kind of a concrete message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Private(User),
    Common,
}

/// A message realised as a bit vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub origin: User,
    pub kind: MessageKind,
    pub bits: Vec<bool>,
}

impl Message {
    pub fn new(origin: User, kind: MessageKind, bits: Vec<bool>) -> Result<Self, ModelError> {
        if let MessageKind::Private(dest) = kind {
            if dest == origin {
                return Err(ModelError::SelfAddressed(origin));
            }
        }
        Ok(Message { origin, kind, bits })
    }

    pub fn id(&self) -> MessageId {
        match self.kind {
            MessageKind::Private(to) => MessageId::Private {
                from: self.origin,
                to,
            },
            MessageKind::Common => MessageId::Common { from: self.origin },
        }
    }

    pub fn from_id(id: MessageId, bits: Vec<bool>) -> Self {
        let kind = match id {
            MessageId::Private { to, .. } => MessageKind::Private(to),
            MessageId::Common { .. } => MessageKind::Common,
        };
        Message {
            origin: id.origin(),
            kind,
            bits,
        }
    }
}
