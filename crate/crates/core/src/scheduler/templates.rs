//! Intermediate-gain (1.5 bits/level) templates.
//!
//! Every intermediate scheme has the same hub shape. One message from each
//! user takes part: the hub user `H` sends `h`, and the other two users `P`
//! and `Q` send `m_P` and `m_Q`. The relay receives
//!
//! ```text
//! A = h ^ m_P   (uplink from H and P)
//! B = h ^ m_Q   (uplink from H and Q)
//! ```
//!
//! and forwards both sums. `H` strips `h` from either level; `P` recovers `h`
//! from `A` and then `m_Q` from `B`; `Q` does the mirror image. Three message
//! bits cross two levels in each direction. The full-common, two-common,
//! one-common and cyclic scenarios are the templates with three, two, one and
//! zero common messages.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::channel::{MessageId, User, UserSet};
use crate::error::ModelError;
use crate::plan::StageId;

/// Which of the two levels of a hub template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Which of the three messages of a hub template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Hub,
    P,
    Q,
}

/// One-common-two-private shapes around a common hub. With hub `H` and
/// partners `P < Q`:
/// `D1` pairs `z_QH` with `z_PQ`, `D2` pairs `z_PH` with `z_QP`, and `D3`
/// sends both privates to the hub (`z_PH` and `z_QH`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DType {
    D1,
    D2,
    D3,
}

impl DType {
    pub fn label(self) -> &'static str {
        match self {
            DType::D1 => "d1",
            DType::D2 => "d2",
            DType::D3 => "d3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HubTemplate {
    pub hub: MessageId,
    pub p_msg: MessageId,
    pub q_msg: MessageId,
}

impl HubTemplate {
    pub fn new(hub: MessageId, p_msg: MessageId, q_msg: MessageId) -> Option<Self> {
        let h = hub.origin();
        let [p, q] = h.others();
        (p_msg.origin() == p && q_msg.origin() == q).then_some(HubTemplate { hub, p_msg, q_msg })
    }

    /// The scheme the full-common scenario uses: user 2's common message as hub.
    pub fn full_common() -> Self {
        HubTemplate {
            hub: MessageId::common(User::TWO),
            p_msg: MessageId::common(User::ONE),
            q_msg: MessageId::common(User::THREE),
        }
    }

    pub fn hub_user(&self) -> User {
        self.hub.origin()
    }

    pub fn p_user(&self) -> User {
        self.p_msg.origin()
    }

    pub fn q_user(&self) -> User {
        self.q_msg.origin()
    }

    pub fn messages(&self) -> [MessageId; 3] {
        [self.hub, self.p_msg, self.q_msg]
    }

    pub fn message(&self, role: Role) -> MessageId {
        match role {
            Role::Hub => self.hub,
            Role::P => self.p_msg,
            Role::Q => self.q_msg,
        }
    }

    pub fn common_count(&self) -> usize {
        self.messages().iter().filter(|m| m.is_common()).count()
    }

    pub fn stage(&self) -> StageId {
        match self.common_count() {
            3 => StageId::FullCommon,
            2 => StageId::TwoCommonOnePrivate,
            1 => StageId::OneCommonTwoPrivate,
            _ => StageId::Cyclic,
        }
    }

    /// Senders on levels A and B.
    pub fn uplink_audiences(&self) -> [UserSet; 2] {
        let h = self.hub_user();
        [
            UserSet::of(&[h, self.p_user()]),
            UserSet::of(&[h, self.q_user()]),
        ]
    }

    /// Ordered decode steps per user: `(user, level side, recovered message)`.
    pub fn decode_steps(&self) -> Vec<(User, Side, Role)> {
        let (h, p, q) = (self.hub_user(), self.p_user(), self.q_user());
        let (dh, dp, dq) = (
            self.hub.destinations(),
            self.p_msg.destinations(),
            self.q_msg.destinations(),
        );
        let mut steps = Vec::new();
        if dp.contains(h) {
            steps.push((h, Side::A, Role::P));
        }
        if dq.contains(h) {
            steps.push((h, Side::B, Role::Q));
        }
        if dh.contains(p) || dq.contains(p) {
            steps.push((p, Side::A, Role::Hub));
        }
        if dq.contains(p) {
            steps.push((p, Side::B, Role::Q));
        }
        if dh.contains(q) || dp.contains(q) {
            steps.push((q, Side::B, Role::Hub));
        }
        if dp.contains(q) {
            steps.push((q, Side::A, Role::P));
        }
        steps
    }

    /// Users that must hear levels A and B on the downlink.
    pub fn downlink_audiences(&self) -> [UserSet; 2] {
        let mut a = UserSet::EMPTY;
        let mut b = UserSet::EMPTY;
        for (user, side, _) in self.decode_steps() {
            match side {
                Side::A => a = a.with(user),
                Side::B => b = b.with(user),
            }
        }
        [a, b]
    }

    /// Classification around a common hub with two private partners.
    pub fn d_type(&self) -> Option<DType> {
        if !self.hub.is_common() || self.p_msg.is_common() || self.q_msg.is_common() {
            return None;
        }
        let (h, p, q) = (self.hub_user(), self.p_user(), self.q_user());
        let to = |m: MessageId| match m {
            MessageId::Private { to, .. } => to,
            MessageId::Common { .. } => unreachable!(),
        };
        match (to(self.p_msg), to(self.q_msg)) {
            (a, b) if a == h && b == h => Some(DType::D3),
            (a, b) if a == h && b == p => Some(DType::D2),
            (a, b) if a == q && b == h => Some(DType::D1),
            // z_PQ with z_QP: an opposed pair that the max-gain stage exhausts
            _ => None,
        }
    }

    /// Level savings against routing the three messages one by one, per
    /// prefix (`<= n3`, `<= n2`, `<= n1`), summed over both directions.
    pub fn savings(&self) -> [i32; 3] {
        let mut single_up = Vec::new();
        let mut single_down = Vec::new();
        for m in self.messages() {
            single_up.push(UserSet::of(&[m.origin()]));
            single_down.push(m.destinations());
        }
        let singles = add(prefix_load(&single_up), prefix_load(&single_down));
        let own = add(
            prefix_load(&self.uplink_audiences()),
            prefix_load(&self.downlink_audiences()),
        );
        [
            singles[0] - own[0],
            singles[1] - own[1],
            singles[2] - own[2],
        ]
    }

    fn order_key(&self) -> (u8, usize, usize, usize) {
        (
            self.hub_user().number(),
            self.hub.index(),
            self.p_msg.index(),
            self.q_msg.index(),
        )
    }

    /// Scheduling priority: larger savings on the tightest prefix first, then a
    /// common hub, then lexicographic on (hub user, hub, P message, Q message).
    pub fn priority_cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.savings(), other.savings());
        sb.cmp(&sa)
            .then_with(|| (!self.hub.is_common()).cmp(&!other.hub.is_common()))
            .then_with(|| self.order_key().cmp(&other.order_key()))
    }
}

fn add(a: [i32; 3], b: [i32; 3]) -> [i32; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// How many items land in each nested prefix (`<= n3`, `<= n2`, `<= n1`).
fn prefix_load(audiences: &[UserSet]) -> [i32; 3] {
    let mut load = [0; 3];
    for a in audiences {
        match a.weakest() {
            Some(User::THREE) => {
                load[0] += 1;
                load[1] += 1;
                load[2] += 1;
            }
            Some(User::TWO) => {
                load[1] += 1;
                load[2] += 1;
            }
            Some(_) => load[2] += 1,
            None => {}
        }
    }
    load
}

impl fmt::Display for HubTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}|{}", self.hub, self.p_msg, self.q_msg)
    }
}

impl FromStr for HubTemplate {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('|').collect();
        let bad = || ModelError::BadMessageId(s.to_string());
        if parts.len() != 3 {
            return Err(bad());
        }
        HubTemplate::new(parts[0].parse()?, parts[1].parse()?, parts[2].parse()?).ok_or_else(bad)
    }
}

fn messages_from(user: User) -> impl Iterator<Item = MessageId> {
    MessageId::ALL
        .into_iter()
        .filter(move |m| m.origin() == user)
}

/// All 81 hub templates (three hubs, three message choices per user).
pub fn catalog() -> Vec<HubTemplate> {
    let mut out = Vec::with_capacity(81);
    for h in User::ALL {
        let [p, q] = h.others();
        for hub in messages_from(h) {
            for pm in messages_from(p) {
                for qm in messages_from(q) {
                    out.push(HubTemplate {
                        hub,
                        p_msg: pm,
                        q_msg: qm,
                    });
                }
            }
        }
    }
    out
}

/// Templates of one stage, in scheduling priority order.
pub fn ranked_for(stage: StageId) -> Vec<HubTemplate> {
    let mut ts: Vec<HubTemplate> = catalog()
        .into_iter()
        .filter(|t| t.stage() == stage)
        .collect();
    ts.sort_by(|a, b| a.priority_cmp(b));
    ts
}
