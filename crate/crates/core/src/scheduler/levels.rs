//! Free-level bookkeeping for one link direction, plus the closed-form
//! recurrence that predicts the per-user free counts from stage amounts.

use std::collections::BTreeSet;

use crate::channel::{ChannelConfig, LevelIndex, User, UserSet};

/// Free relay levels in one direction (uplink or downlink).
///
/// An item that involves user 3 takes the lowest free level (every user
/// hears those). Any other item takes the highest free level its audience
/// can reach, which keeps the low levels open for user 3.
#[derive(Debug, Clone)]
pub struct LevelPool {
    config: ChannelConfig,
    free: BTreeSet<u32>,
}

impl LevelPool {
    pub fn new(config: ChannelConfig) -> Self {
        LevelPool {
            config,
            free: (1..=config.levels()).collect(),
        }
    }

    /// Free levels inside `{1, ..., n_j}` for each user `j`.
    pub fn free_per_user(&self) -> [u32; 3] {
        User::ALL.map(|u| self.free.range(..=self.config.gain(u)).count() as u32)
    }

    pub fn is_free(&self, level: LevelIndex) -> bool {
        self.free.contains(&level.0)
    }

    fn pick(&self, audience: UserSet) -> Option<u32> {
        let reach = self.config.reach(audience);
        if reach == 0 {
            return None;
        }
        let mut fitting = self.free.range(1..=reach);
        if audience.contains(User::THREE) {
            fitting.next().copied()
        } else {
            fitting.next_back().copied()
        }
    }

    pub fn take(&mut self, audience: UserSet) -> Option<LevelIndex> {
        let level = self.pick(audience)?;
        self.free.remove(&level);
        Some(LevelIndex(level))
    }

    /// Takes one level per audience, or nothing at all. Results are in the
    /// order of `audiences`; placement handles the tightest audiences first.
    pub fn take_all(&mut self, audiences: &[UserSet]) -> Option<Vec<LevelIndex>> {
        let mut order: Vec<usize> = (0..audiences.len()).collect();
        order.sort_by_key(|&k| std::cmp::Reverse(audiences[k].weakest()));
        let mut taken = vec![LevelIndex(0); audiences.len()];
        for (done, &k) in order.iter().enumerate() {
            match self.take(audiences[k]) {
                Some(l) => taken[k] = l,
                None => {
                    for &k in &order[..done] {
                        self.free.insert(taken[k].0);
                    }
                    return None;
                }
            }
        }
        Some(taken)
    }

    pub fn release(&mut self, levels: &[LevelIndex]) {
        for l in levels {
            self.free.insert(l.0);
        }
    }
}

/// Items consumed by a stage in one direction, bucketed by the weakest user
/// among their audience (`by_weakest[j-1]` for user `j`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassTally {
    pub by_weakest: [u32; 3],
}

impl ClassTally {
    pub fn add(&mut self, audience: UserSet, count: u32) {
        if let Some(w) = audience.weakest() {
            self.by_weakest[w.idx()] += count;
        }
    }

    pub fn total(&self) -> u32 {
        self.by_weakest.iter().sum()
    }
}

/// One step of the closed-form recurrence, per direction:
///
/// ```text
/// f1' = f1 - (t1 + t2 + t3)
/// f2' = min(f2 - (t2 + t3), f1')
/// f3' = min(f3 - t3, f2')
/// ```
///
/// where `t_j` counts items whose weakest audience member is user `j`. Values
/// may go negative for over-committed inputs; callers treat that as a mismatch.
pub fn closed_form_step(free: [i64; 3], tally: &ClassTally) -> [i64; 3] {
    let [t1, t2, t3] = tally.by_weakest.map(i64::from);
    let f1 = free[0] - (t1 + t2 + t3);
    let f2 = (free[1] - (t2 + t3)).min(f1);
    let f3 = (free[2] - t3).min(f2);
    [f1, f2, f3]
}
