//! Outer-bound inequalities, the extra achievability condition and the
//! single-sided genie diagnostic. Everything here is exact integer arithmetic.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, MessageId, RateTuple, User};
use crate::error::ModelError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub label: String,
    pub lhs: u32,
    pub rhs: u32,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma1 {
    pub value: u32,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub in_outer_region: bool,
    pub in_claimed_achievable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bounds: Vec<BoundEntry>,
    pub lemma1: Lemma1,
    pub verdicts: Verdicts,
}

impl BoundReport {
    pub fn lhs_vector(&self) -> Vec<u32> {
        self.bounds.iter().map(|e| e.lhs).collect()
    }
}

#[derive(Clone, Copy)]
enum Rhs {
    N1,
    N2,
    N3,
}

// Terms are canonical component indices:
// 0=R12 1=R13 2=R1c 3=R21 4=R23 5=R2c 6=R31 7=R32 8=R3c
const OUTER_BOUNDS: [(&str, &[usize], Rhs); 8] = [
    ("UB_1", &[2, 5, 1, 4], Rhs::N3),
    ("UB_2", &[2, 0, 1, 7, 8], Rhs::N2),
    ("UB_3", &[2, 0, 1, 4, 5], Rhs::N2),
    ("UB_4", &[8, 6, 7], Rhs::N3),
    ("UB_5", &[5, 3, 8, 6, 7], Rhs::N2),
    ("UB_6", &[5, 3, 8, 6, 4], Rhs::N2),
    ("UB_7", &[5, 3, 4, 1, 2], Rhs::N1),
    ("UB_8", &[8, 6, 7, 0, 2], Rhs::N1),
];

fn sum_terms(rates: &RateTuple, terms: &[usize]) -> u32 {
    terms.iter().map(|&k| rates.0[k]).sum()
}

/// Whether `rates` satisfies all eight outer-bound inequalities.
pub fn in_outer_region(rates: &RateTuple, config: &ChannelConfig) -> bool {
    OUTER_BOUNDS.iter().all(|(_, terms, rhs)| {
        let rhs = match rhs {
            Rhs::N1 => config.n1(),
            Rhs::N2 => config.n2(),
            Rhs::N3 => config.n3(),
        };
        sum_terms(rates, terms) <= rhs
    })
}

pub fn evaluate_bounds(rates: &RateTuple, config: &ChannelConfig) -> BoundReport {
    let bounds: Vec<BoundEntry> = OUTER_BOUNDS
        .iter()
        .map(|(label, terms, rhs)| {
            let rhs = match rhs {
                Rhs::N1 => config.n1(),
                Rhs::N2 => config.n2(),
                Rhs::N3 => config.n3(),
            };
            let lhs = sum_terms(rates, terms);
            BoundEntry {
                label: (*label).to_string(),
                lhs,
                rhs,
                ok: lhs <= rhs,
            }
        })
        .collect();
    let (value, ok) = lemma1_condition(rates, config);
    let in_outer = bounds.iter().all(|e| e.ok);
    BoundReport {
        bounds,
        lemma1: Lemma1 { value, ok },
        verdicts: Verdicts {
            in_outer_region: in_outer,
            in_claimed_achievable: in_outer && ok,
        },
    }
}

/// `min{R3c+R31+R32+R12+R1c, R2c+R21+R23+R13+R1c}` and whether it is `<= n2`.
pub fn lemma1_condition(rates: &RateTuple, config: &ChannelConfig) -> (u32, bool) {
    let via_user3 = rates.r3c() + rates.r31() + rates.r32() + rates.r12() + rates.r1c();
    let via_user2 = rates.r2c() + rates.r21() + rates.r23() + rates.r13() + rates.r1c();
    let value = via_user3.min(via_user2);
    (value, value <= config.n2())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenieDiagnostic {
    pub roles: [User; 3],
    pub lhs: u32,
    pub rhs: u32,
    pub ok: bool,
}

/// Single-sided genie inequality for roles `(i, j, k)`:
/// `R_kj + R_ki + R_kc + R_ji + R_jc <= max(n_i, n_j, n_k)`.
///
/// Diagnostic only: with common messages this inequality is loose.
pub fn genie_diagnostic(
    rates: &RateTuple,
    config: &ChannelConfig,
    roles: [User; 3],
) -> Result<GenieDiagnostic, ModelError> {
    let [i, j, k] = roles;
    if i == j || j == k || i == k {
        return Err(ModelError::InvalidRoles);
    }
    let lhs = rates.get(MessageId::private(k, j))
        + rates.get(MessageId::private(k, i))
        + rates.get(MessageId::common(k))
        + rates.get(MessageId::private(j, i))
        + rates.get(MessageId::common(j));
    let rhs = config.gain(i).max(config.gain(j)).max(config.gain(k));
    Ok(GenieDiagnostic {
        roles,
        lhs,
        rhs,
        ok: lhs <= rhs,
    })
}

/// All six role orderings, lexicographic.
pub fn all_roles() -> [[User; 3]; 6] {
    let [a, b, c] = User::ALL;
    [
        [a, b, c],
        [a, c, b],
        [b, a, c],
        [b, c, a],
        [c, a, b],
        [c, b, a],
    ]
}
