//! Replay storage, goal relabeling and back-stepping transitions.
//!
//! Every finished episode is expanded at store time into one transition per
//! step for each active [`Category`]: the unmodified transition, four
//! relabeled variants (future, past desired, past achieved, behavioral goal)
//! and a back-stepping transition that walks the step in reverse with the
//! negated action and a goal drawn from the achieved goals up to and
//! including the step's own start state. Minibatches mix the category buffers
//! by a deterministic largest-remainder apportionment of the batch size.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;
use crate::maze::sparse_reward;

pub const NUM_CATEGORIES: usize = 6;
pub const DEFAULT_CAPACITY: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplayError {
    #[error("invalid ratio string `{0}`: expected 5 or 6 underscore-separated non-negative integers")]
    BadRatioString(String),
    #[error("strategy ratios must not all be zero")]
    AllZero,
    #[error("batch size must be at least 1")]
    EmptyBatch,
    #[error("no buffer with a nonzero ratio holds any transition")]
    NothingToSample,
    #[error("malformed episode: {0}")]
    BadEpisode(String),
}

/// Relabeling categories, in buffer order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Real = 0,
    Future = 1,
    Actual = 2,
    Achieved = 3,
    Behavioral = 4,
    Backstep = 5,
}

impl Category {
    pub const ALL: [Category; NUM_CATEGORIES] = [
        Category::Real,
        Category::Future,
        Category::Actual,
        Category::Achieved,
        Category::Behavioral,
        Category::Backstep,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Real => "real",
            Category::Future => "future",
            Category::Actual => "actual",
            Category::Achieved => "achieved",
            Category::Behavioral => "behavioral",
            Category::Backstep => "backstep",
        }
    }
}

/// Integer sampling proportions over the six categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StrategyRatios([u32; NUM_CATEGORIES]);

impl StrategyRatios {
    pub fn new(ratios: [u32; NUM_CATEGORIES]) -> Result<Self, ReplayError> {
        if ratios.iter().all(|&r| r == 0) {
            return Err(ReplayError::AllZero);
        }
        Ok(StrategyRatios(ratios))
    }

    pub fn as_array(&self) -> [u32; NUM_CATEGORIES] {
        self.0
    }

    pub fn get(&self, category: Category) -> u32 {
        self.0[category.index()]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&r| r as u64).sum()
    }

    pub fn is_active(&self, category: Category) -> bool {
        self.get(category) > 0
    }

    /// Share of each minibatch made of back-stepping transitions.
    pub fn backstep_fraction(&self) -> f64 {
        self.get(Category::Backstep) as f64 / self.total() as f64
    }
}

impl FromStr for StrategyRatios {
    type Err = ReplayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ReplayError::BadRatioString(s.to_string());
        let parts: Vec<&str> = s.trim().split('_').collect();
        if parts.len() != 5 && parts.len() != 6 {
            return Err(bad());
        }
        let mut ratios = [0u32; NUM_CATEGORIES];
        for (slot, part) in ratios.iter_mut().zip(&parts) {
            if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            *slot = part.parse().map_err(|_| bad())?;
        }
        StrategyRatios::new(ratios)
    }
}

impl fmt::Display for StrategyRatios {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.0;
        write!(f, "{}_{}_{}_{}_{}_{}", r[0], r[1], r[2], r[3], r[4], r[5])
    }
}

impl Serialize for StrategyRatios {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StrategyRatios {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Largest-remainder apportionment of `batch_size` over `ratios`.
///
/// Each category first gets `floor(batch * r_i / sum)`; the leftover slots go
/// to the largest fractional remainders, ties to the lowest index.
pub fn apportion(ratios: &[u32; NUM_CATEGORIES], batch_size: usize) -> [usize; NUM_CATEGORIES] {
    let total: u64 = ratios.iter().map(|&r| r as u64).sum();
    let mut counts = [0usize; NUM_CATEGORIES];
    if total == 0 {
        return counts;
    }
    let batch = batch_size as u64;
    let mut remainders = [(0u64, 0usize); NUM_CATEGORIES];
    let mut assigned = 0u64;
    for (i, &r) in ratios.iter().enumerate() {
        let scaled = batch * r as u64;
        counts[i] = (scaled / total) as usize;
        assigned += scaled / total;
        remainders[i] = (scaled % total, i);
    }
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take((batch - assigned) as usize) {
        counts[i] += 1;
    }
    counts
}

/// Fixed-capacity FIFO that overwrites its oldest element when full.
#[derive(Debug, Clone)]
pub struct RingBuffer<T> {
    items: Vec<T>,
    capacity: usize,
    head: usize,
}

impl<T> RingBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "ring buffer capacity must be positive");
        RingBuffer { items: Vec::new(), capacity, head: 0 }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.head] = item;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Element `i` counted from the oldest retained one.
    pub fn get(&self, i: usize) -> Option<&T> {
        if i >= self.items.len() {
            return None;
        }
        Some(&self.items[(self.head + i) % self.items.len()])
    }

    /// Oldest-first iteration.
    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        let (newer, older) = self.items.split_at(self.head);
        older.iter().chain(newer.iter())
    }

    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&T> {
        self.items.choose(rng)
    }

    pub fn as_unordered_slice(&self) -> &[T] {
        &self.items
    }
}

/// One stored experience tuple; the goal is shared by `state` and `next_state`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: Vec2,
    pub goal: Vec2,
    pub action: Vec2,
    pub reward: f64,
    pub next_state: Vec2,
    pub done: bool,
    pub collided: bool,
}

/// A finished trajectory `s_0 .. s_T` with its goals.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    /// Positions `s_0 .. s_T`.
    pub states: Vec<Vec2>,
    pub actions: Vec<Vec2>,
    pub collided_flags: Vec<bool>,
    pub desired_goal: Vec2,
    pub behavioral_goal: Vec2,
    /// `achieved_goal(s_i)` for every state.
    pub achieved_goals: Vec<Vec2>,
    /// The episode ended early by reaching the behavioral goal.
    pub terminated: bool,
}

impl EpisodeRecord {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn validate(&self) -> Result<(), ReplayError> {
        let t = self.actions.len();
        if t == 0 {
            return Err(ReplayError::BadEpisode("episode has no steps".into()));
        }
        if self.states.len() != t + 1 || self.achieved_goals.len() != t + 1 || self.collided_flags.len() != t {
            return Err(ReplayError::BadEpisode(format!(
                "{} states, {} achieved goals, {} collided flags for {} actions",
                self.states.len(),
                self.achieved_goals.len(),
                self.collided_flags.len(),
                t
            )));
        }
        Ok(())
    }
}

/// Archives of goals from earlier episodes, sampled by the actual and
/// achieved categories.
#[derive(Debug, Clone)]
pub struct GoalArchives {
    pub desired: RingBuffer<Vec2>,
    pub achieved: RingBuffer<Vec2>,
}

impl GoalArchives {
    pub fn new(capacity: usize) -> Self {
        GoalArchives { desired: RingBuffer::new(capacity), achieved: RingBuffer::new(capacity) }
    }
}

/// The negated action undoes a step exactly in an inertia-free point mass
/// world; the surrounding states are not needed.
#[inline]
pub fn backstep_action(_state: Vec2, action: Vec2, _next_state: Vec2) -> Vec2 {
    -action
}

/// Index of the reversed-future goal for step `t`: uniform over `0..=t`.
pub fn backstep_goal_index<R: Rng + ?Sized>(t: usize, rng: &mut R) -> usize {
    rng.gen_range(0..=t)
}

/// Index of the future goal for step `t` of an episode of length `len`:
/// uniform over `t + 1 ..= len`.
pub fn future_goal_index<R: Rng + ?Sized>(t: usize, len: usize, rng: &mut R) -> usize {
    rng.gen_range(t + 1..=len)
}

/// Reversed transition `s_{t+1} -> s_t` for step `t`.
pub fn make_backstep_transition<R: Rng + ?Sized>(
    t: usize,
    episode: &EpisodeRecord,
    success_radius: f64,
    rng: &mut R,
) -> Transition {
    let goal = episode.achieved_goals[backstep_goal_index(t, rng)];
    let state = episode.states[t + 1];
    let next_state = episode.states[t];
    Transition {
        state,
        goal,
        action: backstep_action(episode.states[t], episode.actions[t], state),
        reward: sparse_reward(episode.achieved_goals[t], goal, success_radius),
        next_state,
        done: false,
        collided: episode.collided_flags[t],
    }
}

pub fn relabel_real(_t: usize, episode: &EpisodeRecord) -> Vec2 {
    episode.desired_goal
}

pub fn relabel_future<R: Rng + ?Sized>(t: usize, episode: &EpisodeRecord, rng: &mut R) -> Vec2 {
    episode.achieved_goals[future_goal_index(t, episode.len(), rng)]
}

/// A past desired goal, or the episode's own desired goal while the archive
/// is still empty.
pub fn relabel_actual<R: Rng + ?Sized>(episode: &EpisodeRecord, archives: &GoalArchives, rng: &mut R) -> Vec2 {
    archives.desired.choose(rng).copied().unwrap_or(episode.desired_goal)
}

pub fn relabel_achieved<R: Rng + ?Sized>(episode: &EpisodeRecord, archives: &GoalArchives, rng: &mut R) -> Vec2 {
    archives.achieved.choose(rng).copied().unwrap_or(episode.desired_goal)
}

pub fn relabel_behavioral(_t: usize, episode: &EpisodeRecord) -> Vec2 {
    episode.behavioral_goal
}

/// One ring buffer per category plus the goal archives.
#[derive(Debug, Clone)]
pub struct BufferSet {
    buffers: Vec<RingBuffer<Transition>>,
    pub archives: GoalArchives,
    success_radius: f64,
}

impl BufferSet {
    pub fn new(capacity: usize, success_radius: f64) -> Self {
        BufferSet {
            buffers: (0..NUM_CATEGORIES).map(|_| RingBuffer::new(capacity)).collect(),
            archives: GoalArchives::new(capacity),
            success_radius,
        }
    }

    pub fn buffer(&self, category: Category) -> &RingBuffer<Transition> {
        &self.buffers[category.index()]
    }

    pub fn lens(&self) -> [usize; NUM_CATEGORIES] {
        let mut out = [0; NUM_CATEGORIES];
        for (o, b) in out.iter_mut().zip(&self.buffers) {
            *o = b.len();
        }
        out
    }

    pub fn success_radius(&self) -> f64 {
        self.success_radius
    }

    pub fn push(&mut self, category: Category, transition: Transition) {
        self.buffers[category.index()].push(transition);
    }

    /// Expands `episode` into one transition per step for every category with
    /// a nonzero ratio, then folds its goals into the archives.
    pub fn store_episode<R: Rng + ?Sized>(
        &mut self,
        episode: &EpisodeRecord,
        ratios: &StrategyRatios,
        rng: &mut R,
    ) -> Result<(), ReplayError> {
        episode.validate()?;
        let eps = self.success_radius;
        let len = episode.len();
        for t in 0..len {
            let s = episode.states[t];
            let a = episode.actions[t];
            let s_next = episode.states[t + 1];
            let reached = episode.achieved_goals[t + 1];
            let collided = episode.collided_flags[t];
            let forward = |goal: Vec2, done: bool| {
                let reward = sparse_reward(reached, goal, eps);
                Transition { state: s, goal, action: a, reward, next_state: s_next, done: done && reward == 0.0, collided }
            };
            for category in Category::ALL {
                if !ratios.is_active(category) {
                    continue;
                }
                let transition = match category {
                    Category::Real => {
                        let last = t + 1 == len && episode.terminated;
                        forward(relabel_real(t, episode), last)
                    }
                    Category::Future => forward(relabel_future(t, episode, rng), false),
                    Category::Actual => forward(relabel_actual(episode, &self.archives, rng), false),
                    Category::Achieved => forward(relabel_achieved(episode, &self.archives, rng), false),
                    Category::Behavioral => forward(relabel_behavioral(t, episode), false),
                    Category::Backstep => make_backstep_transition(t, episode, eps, rng),
                };
                self.buffers[category.index()].push(transition);
            }
        }
        self.archives.desired.push(episode.desired_goal);
        for &g in &episode.achieved_goals {
            self.archives.achieved.push(g);
        }
        Ok(())
    }

    /// Per-category sample counts for a batch, after dropping categories
    /// whose buffer is still empty.
    pub fn batch_counts(&self, ratios: &StrategyRatios, batch_size: usize) -> Result<[usize; NUM_CATEGORIES], ReplayError> {
        if batch_size == 0 {
            return Err(ReplayError::EmptyBatch);
        }
        let mut effective = ratios.as_array();
        for category in Category::ALL {
            let i = category.index();
            if effective[i] > 0 && self.buffers[i].is_empty() {
                log::warn!("{} buffer is empty; redistributing its share of the batch", category.name());
                effective[i] = 0;
            }
        }
        if effective.iter().all(|&r| r == 0) {
            return Err(ReplayError::NothingToSample);
        }
        Ok(apportion(&effective, batch_size))
    }

    /// Draws an apportioned, shuffled minibatch (uniform with replacement
    /// within each category).
    pub fn sample_minibatch<R: Rng + ?Sized>(
        &self,
        ratios: &StrategyRatios,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<Vec<Transition>, ReplayError> {
        let counts = self.batch_counts(ratios, batch_size)?;
        let mut batch = Vec::with_capacity(batch_size);
        for (buffer, &count) in self.buffers.iter().zip(&counts) {
            let items = buffer.as_unordered_slice();
            for _ in 0..count {
                batch.push(items[rng.gen_range(0..items.len())]);
            }
        }
        batch.shuffle(rng);
        Ok(batch)
    }
}
