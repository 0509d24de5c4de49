//! Rate-balance segment trackers over integer-state trajectories.
//!
//! A trajectory over the nonnegative integers is partitioned into three
//! sets D, M, U (D and U nonempty). An up segment starts in D, ends in U,
//! and visits only M in between; a down segment is the mirror image. The
//! tracker counts segment end points: an entry into U closes an up segment
//! when the most recent D/U entry before it was into D, and symmetrically.
//! Because the two kinds of end points alternate, the counts can never
//! drift more than one apart — the pathwise rate-balance invariant. The
//! tracker asserts this after every update and records any violation.
//!
//! Two canonical partitions: [`Partition::level`] (D = {n <= l},
//! U = {n > l}) reproduces classical level crossing, and
//! [`Partition::two_step`] (D = {n < k}, M = {k}, U = {n > k}) counts
//! two-step up/down transitions through state k.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Membership of a state in the tracked partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Down,
    Mid,
    Up,
}

/// A partition of the nonnegative integers into D / M / U, stored as an
/// explicit table for small states plus a region for everything beyond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Partition {
    table: Vec<Region>,
    tail: Region,
}

impl Partition {
    /// Builds a partition, requiring D and U to be nonempty.
    pub fn new(table: Vec<Region>, tail: Region) -> Result<Self> {
        let has = |r: Region| tail == r || table.contains(&r);
        if !has(Region::Down) || !has(Region::Up) {
            return Err(Error::Partition(
                "both the down set and the up set must be nonempty".into(),
            ));
        }
        Ok(Partition { table, tail })
    }

    /// Level crossing at `l`: D = {n <= l}, U = {n > l}, M empty.
    pub fn level(l: u32) -> Partition {
        Partition {
            table: vec![Region::Down; l as usize + 1],
            tail: Region::Up,
        }
    }

    /// Two-step transitions through `k >= 1`: D = {n < k}, M = {k},
    /// U = {n > k}.
    pub fn two_step(k: u32) -> Result<Partition> {
        if k == 0 {
            return Err(Error::Partition(
                "two-step state must be >= 1 so the down set is nonempty".into(),
            ));
        }
        let mut table = vec![Region::Down; k as usize];
        table.push(Region::Mid);
        Partition::new(table, Region::Up)
    }

    /// Partition from explicit D and U state lists; unlisted states below
    /// the largest listed one are M, everything above takes `tail`.
    /// Overlapping lists are rejected.
    pub fn from_sets(down: &[u32], up: &[u32], tail: Region) -> Result<Partition> {
        if down.iter().any(|d| up.contains(d)) {
            return Err(Error::Partition(
                "down and up sets must be disjoint".into(),
            ));
        }
        let max = down.iter().chain(up).copied().max().unwrap_or(0);
        let mut table = vec![Region::Mid; max as usize + 1];
        for &d in down {
            table[d as usize] = Region::Down;
        }
        for &u in up {
            table[u as usize] = Region::Up;
        }
        Partition::new(table, tail)
    }

    pub fn region(&self, state: u32) -> Region {
        self.table
            .get(state as usize)
            .copied()
            .unwrap_or(self.tail)
    }
}

/// Which of D / U was entered most recently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Side {
    Down,
    Up,
}

/// Counts up/down segment end points along a trajectory and checks the
/// pathwise invariant `|N_U - N_D| <= 1` at every update.
///
/// Entry times (the raw point processes) and segment end times are kept up
/// to a fixed capacity; the counts are always exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentTracker {
    partition: Partition,
    current: Region,
    last_entered: Option<Side>,
    count_up: u64,
    count_down: u64,
    entries_up: Vec<f64>,
    entries_down: Vec<f64>,
    segments_up: Vec<f64>,
    segments_down: Vec<f64>,
    time_capacity: usize,
    max_imbalance: u64,
    violations: u64,
}

/// Default cap on recorded event times per list.
const DEFAULT_TIME_CAPACITY: usize = 65_536;

impl SegmentTracker {
    /// Starts tracking from `initial_state` at time zero. Being in a set at
    /// the start is not an entry: no segment can end before both sets have
    /// been entered.
    pub fn new(partition: Partition, initial_state: u32) -> SegmentTracker {
        let current = partition.region(initial_state);
        SegmentTracker {
            partition,
            current,
            last_entered: None,
            count_up: 0,
            count_down: 0,
            entries_up: Vec::new(),
            entries_down: Vec::new(),
            segments_up: Vec::new(),
            segments_down: Vec::new(),
            time_capacity: DEFAULT_TIME_CAPACITY,
            max_imbalance: 0,
            violations: 0,
        }
    }

    /// Observes a transition to `state` at time `t`.
    pub fn observe(&mut self, t: f64, state: u32) {
        let region = self.partition.region(state);
        if region == self.current {
            return;
        }
        match region {
            Region::Up => {
                push_capped(&mut self.entries_up, t, self.time_capacity);
                if self.last_entered == Some(Side::Down) {
                    self.count_up += 1;
                    push_capped(&mut self.segments_up, t, self.time_capacity);
                }
                self.last_entered = Some(Side::Up);
            }
            Region::Down => {
                push_capped(&mut self.entries_down, t, self.time_capacity);
                if self.last_entered == Some(Side::Up) {
                    self.count_down += 1;
                    push_capped(&mut self.segments_down, t, self.time_capacity);
                }
                self.last_entered = Some(Side::Down);
            }
            Region::Mid => {}
        }
        self.current = region;
        let imbalance = self.count_up.abs_diff(self.count_down);
        self.max_imbalance = self.max_imbalance.max(imbalance);
        debug_assert!(imbalance <= 1, "segment counts drifted apart");
        if imbalance > 1 {
            self.violations += 1;
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Number of completed up segments (`N^U`).
    pub fn count_up(&self) -> u64 {
        self.count_up
    }

    /// Number of completed down segments (`N^D`).
    pub fn count_down(&self) -> u64 {
        self.count_down
    }

    /// Entry times into U (capped recording).
    pub fn entries_up(&self) -> &[f64] {
        &self.entries_up
    }

    pub fn entries_down(&self) -> &[f64] {
        &self.entries_down
    }

    /// Up-segment end times (capped recording).
    pub fn segments_up(&self) -> &[f64] {
        &self.segments_up
    }

    pub fn segments_down(&self) -> &[f64] {
        &self.segments_down
    }

    /// Largest `|N_U - N_D|` seen after any update.
    pub fn max_imbalance(&self) -> u64 {
        self.max_imbalance
    }

    /// Updates at which the imbalance exceeded one (always zero unless the
    /// tracker itself is broken).
    pub fn violations(&self) -> u64 {
        self.violations
    }

    /// Clone carrying only the counts, with the per-run time lists dropped.
    pub(crate) fn summary_clone(&self) -> SegmentTracker {
        let mut c = self.clone();
        c.entries_up.clear();
        c.entries_down.clear();
        c.segments_up.clear();
        c.segments_down.clear();
        c
    }

    /// Folds counts of another run of the same partition into this one;
    /// the imbalance fields keep their per-run meaning via max.
    pub(crate) fn absorb(&mut self, other: &SegmentTracker) {
        debug_assert_eq!(self.partition, other.partition);
        self.count_up += other.count_up;
        self.count_down += other.count_down;
        self.max_imbalance = self.max_imbalance.max(other.max_imbalance);
        self.violations += other.violations;
        self.entries_up.clear();
        self.entries_down.clear();
        self.segments_up.clear();
        self.segments_down.clear();
    }
}

fn push_capped(v: &mut Vec<f64>, t: f64, cap: usize) {
    if v.len() < cap {
        v.push(t);
    }
}
