//! Continuous 2D point mazes with sparse goal-conditioned reward.
//!
//! The world is a grid of unit cells, each either free or blocked. The agent
//! is a massless point: an action is a displacement added directly to the
//! position. Any movement segment that would cross a wall edge (a boundary
//! between a free and a blocked cell, or the outer boundary) is truncated at
//! the first crossing and pulled back by [`COLLISION_MARGIN`] along the
//! segment. There is no sliding, which keeps collision-free steps exactly
//! invertible by the negated action.
//!
//! Maze layouts come from the ASCII `.maze` format or from the parametric
//! family names accepted by [`load_maze`]:
//!
//! * `experiment_X_Y_Z` is an `X`-wide, `2Y`-long room split by a one-cell
//!   wall row at `y = Z` with a one-cell gap at the right edge.
//! * `square_d` / `square_d_L` is a three-branch maze: a horizontal corridor
//!   with a goal at each end, spawn in the middle, and a dead-end branch
//!   going up from the spawn cell. `L` is the branch length (default 6).
//! * `square_large` is a fixed 10x10 serpentine layout.

use std::collections::VecDeque;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;

/// Largest absolute action component.
pub const A_MAX: f64 = 1.0;
/// Distance a colliding move is pulled back from the wall it hit.
pub const COLLISION_MARGIN: f64 = 1e-4;
/// Half-width of the uniform spawn jitter around the spawn cell center.
pub const SPAWN_NOISE: f64 = 0.25;
pub const DEFAULT_SUCCESS_RADIUS: f64 = 0.5;
pub const DEFAULT_SQUARE_D_BRANCH: usize = 6;

const SQUARE_LARGE: &str = "\
G.........
..........
...#######
..........
..........
#######...
..........
..........
..........
S.........";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MazeError {
    #[error("maze is empty")]
    Empty,
    #[error("row {row} has length {found}, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("unknown glyph {glyph:?} at line {line}, column {column}")]
    UnknownGlyph { glyph: char, line: usize, column: usize },
    #[error("maze has no spawn cell `S`")]
    MissingSpawn,
    #[error("maze has more than one spawn cell `S`")]
    MultipleSpawns,
    #[error("maze has no goal")]
    NoGoal,
    #[error("spawn cell ({0}, {1}) is blocked or outside the grid")]
    BlockedSpawn(i64, i64),
    #[error("goal ({x}, {y}) is not strictly inside a free cell")]
    GoalNotFree { x: f64, y: f64 },
    #[error("goal ({x}, {y}) is unreachable from the spawn cell")]
    UnreachableGoal { x: f64, y: f64 },
    #[error("success radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("invalid maze parameters for {name}: {reason}")]
    BadParameters { name: String, reason: String },
}

/// Static description of one maze instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MazeSpec {
    pub name: String,
    pub width: usize,
    pub height: usize,
    /// Row-major occupancy, `free[row * width + col]`, row 0 at the bottom.
    free: Vec<bool>,
    pub spawn_cell: (usize, usize),
    pub goal_points: Vec<Vec2>,
    pub success_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub position: Vec2,
}

impl EnvState {
    pub fn new(x: f64, y: f64) -> Self {
        EnvState { position: Vec2::new(x, y) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: EnvState,
    pub reward: f64,
    pub achieved_goal: Vec2,
    pub collided: bool,
    pub success: bool,
}

/// `0` when `achieved` lies within `radius` of `goal` (inclusive), `-1` otherwise.
#[inline]
pub fn sparse_reward(achieved: Vec2, goal: Vec2, radius: f64) -> f64 {
    if achieved.distance(goal) <= radius {
        0.0
    } else {
        -1.0
    }
}

/// Goal space equals state space: the achieved goal is the position itself.
#[inline]
pub fn achieved_goal(state: EnvState) -> Vec2 {
    // Adding +0.0 maps -0.0 to +0.0 and leaves every other value unchanged.
    Vec2::new(state.position.x + 0.0, state.position.y + 0.0)
}

/// Parses either a parametric maze name or an ASCII grid.
pub fn load_maze(text: &str) -> Result<MazeSpec, MazeError> {
    load_maze_with_radius(text, DEFAULT_SUCCESS_RADIUS)
}

pub fn load_maze_with_radius(text: &str, success_radius: f64) -> Result<MazeSpec, MazeError> {
    let trimmed = text.trim();
    let is_name = !trimmed.is_empty()
        && trimmed
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
    if is_name {
        MazeSpec::from_name(trimmed, success_radius)
    } else {
        MazeSpec::parse_ascii("custom", text, success_radius)
    }
}

fn parse_params(name: &str, rest: &str, count: usize) -> Result<Vec<usize>, MazeError> {
    let bad = |reason: String| MazeError::BadParameters { name: name.to_string(), reason };
    let parts: Vec<&str> = rest.split('_').collect();
    if parts.len() != count {
        return Err(bad(format!("expected {count} numeric parameters")));
    }
    parts
        .iter()
        .map(|p| p.parse::<usize>().map_err(|_| bad(format!("`{p}` is not a non-negative integer"))))
        .collect()
}

impl MazeSpec {
    /// Validating constructor from an explicit occupancy grid.
    pub fn new(
        name: impl Into<String>,
        width: usize,
        height: usize,
        free: Vec<bool>,
        spawn_cell: (usize, usize),
        goal_points: Vec<Vec2>,
        success_radius: f64,
    ) -> Result<Self, MazeError> {
        if width == 0 || height == 0 || free.len() != width * height {
            return Err(MazeError::Empty);
        }
        let maze = MazeSpec {
            name: name.into(),
            width,
            height,
            free,
            spawn_cell,
            goal_points,
            success_radius,
        };
        maze.validate()?;
        Ok(maze)
    }

    /// Parses the ASCII format: one line per row, top line is the highest row.
    pub fn parse_ascii(name: &str, text: &str, success_radius: f64) -> Result<Self, MazeError> {
        let lines: Vec<&str> = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.trim().is_empty())
            .collect();
        if lines.is_empty() {
            return Err(MazeError::Empty);
        }
        let width = lines[0].chars().count();
        let height = lines.len();
        let mut free = vec![false; width * height];
        let mut spawn = None;
        let mut goals = Vec::new();
        for (line_idx, line) in lines.iter().enumerate() {
            let found = line.chars().count();
            if found != width {
                return Err(MazeError::RaggedRow { row: line_idx, expected: width, found });
            }
            let row = height - 1 - line_idx;
            for (col, glyph) in line.chars().enumerate() {
                let open = match glyph {
                    '#' => false,
                    '.' => true,
                    'S' => {
                        if spawn.replace((col, row)).is_some() {
                            return Err(MazeError::MultipleSpawns);
                        }
                        true
                    }
                    'G' => {
                        goals.push(Vec2::new(col as f64 + 0.5, row as f64 + 0.5));
                        true
                    }
                    other => {
                        return Err(MazeError::UnknownGlyph {
                            glyph: other,
                            line: line_idx + 1,
                            column: col + 1,
                        })
                    }
                };
                free[row * width + col] = open;
            }
        }
        let spawn = spawn.ok_or(MazeError::MissingSpawn)?;
        // Goals listed bottom row first, left to right.
        goals.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)));
        MazeSpec::new(name, width, height, free, spawn, goals, success_radius)
    }

    pub fn from_name(name: &str, success_radius: f64) -> Result<Self, MazeError> {
        if name == "square_large" {
            return MazeSpec::parse_ascii(name, SQUARE_LARGE, success_radius);
        }
        if name == "square_d" {
            return MazeSpec::square_d(DEFAULT_SQUARE_D_BRANCH, success_radius);
        }
        if let Some(rest) = name.strip_prefix("square_d_") {
            let p = parse_params(name, rest, 1)?;
            return MazeSpec::square_d(p[0], success_radius);
        }
        if let Some(rest) = name.strip_prefix("experiment_") {
            let p = parse_params(name, rest, 3)?;
            return MazeSpec::experiment(p[0], p[1], p[2], success_radius);
        }
        Err(MazeError::BadParameters {
            name: name.to_string(),
            reason: "unknown maze name".to_string(),
        })
    }

    /// `width`-wide, `2 * half_length`-long room with a wall row at `wall_row`
    /// leaving a one-cell gap at the right edge.
    pub fn experiment(width: usize, half_length: usize, wall_row: usize, success_radius: f64) -> Result<Self, MazeError> {
        let name = format!("experiment_{width}_{half_length}_{wall_row}");
        let height = 2 * half_length;
        if width < 2 || height < 3 || wall_row == 0 || wall_row + 1 >= height {
            return Err(MazeError::BadParameters {
                name,
                reason: "need X >= 2 and 1 <= Z <= 2Y - 2".to_string(),
            });
        }
        let mut free = vec![true; width * height];
        for col in 0..width - 1 {
            free[wall_row * width + col] = false;
        }
        let col = width / 2;
        let goal = Vec2::new(col as f64 + 0.5, (height - 1) as f64 + 0.5);
        MazeSpec::new(name, width, height, free, (col, 0), vec![goal], success_radius)
    }

    /// Three-branch maze: horizontal corridor of `2L + 1` cells with goals at
    /// both ends and spawn in the middle, plus a dead-end branch of `L` cells
    /// going up from the spawn cell.
    pub fn square_d(branch: usize, success_radius: f64) -> Result<Self, MazeError> {
        let name = if branch == DEFAULT_SQUARE_D_BRANCH {
            "square_d".to_string()
        } else {
            format!("square_d_{branch}")
        };
        if branch == 0 {
            return Err(MazeError::BadParameters { name, reason: "branch length must be >= 1".to_string() });
        }
        let width = 2 * branch + 1;
        let height = branch + 1;
        let mut free = vec![false; width * height];
        free[..width].fill(true);
        for row in 1..height {
            free[row * width + branch] = true;
        }
        let goals = vec![Vec2::new(0.5, 0.5), Vec2::new(width as f64 - 0.5, 0.5)];
        MazeSpec::new(name, width, height, free, (branch, 0), goals, success_radius)
    }

    pub fn with_success_radius(mut self, radius: f64) -> Result<Self, MazeError> {
        self.success_radius = radius;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), MazeError> {
        if !(self.success_radius > 0.0 && self.success_radius.is_finite()) {
            return Err(MazeError::BadRadius(self.success_radius));
        }
        let (sc, sr) = self.spawn_cell;
        if !self.is_free(sc as i64, sr as i64) {
            return Err(MazeError::BlockedSpawn(sc as i64, sr as i64));
        }
        if self.goal_points.is_empty() {
            return Err(MazeError::NoGoal);
        }
        let reachable = self.reachable_cells();
        for g in &self.goal_points {
            let inside = g.is_finite()
                && g.x.fract() != 0.0
                && g.y.fract() != 0.0
                && self.is_free_point(*g);
            if !inside {
                return Err(MazeError::GoalNotFree { x: g.x, y: g.y });
            }
            let (c, r) = (g.x.floor() as usize, g.y.floor() as usize);
            if !reachable[r * self.width + c] {
                return Err(MazeError::UnreachableGoal { x: g.x, y: g.y });
            }
        }
        Ok(())
    }

    /// 4-connected flood fill from the spawn cell.
    fn reachable_cells(&self) -> Vec<bool> {
        let mut seen = vec![false; self.width * self.height];
        let mut queue = VecDeque::new();
        let (sc, sr) = self.spawn_cell;
        seen[sr * self.width + sc] = true;
        queue.push_back((sc as i64, sr as i64));
        while let Some((c, r)) = queue.pop_front() {
            for (dc, dr) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (nc, nr) = (c + dc, r + dr);
                if self.is_free(nc, nr) {
                    let idx = nr as usize * self.width + nc as usize;
                    if !seen[idx] {
                        seen[idx] = true;
                        queue.push_back((nc, nr));
                    }
                }
            }
        }
        seen
    }

    /// Cells outside the grid count as blocked.
    #[inline]
    pub fn is_free(&self, col: i64, row: i64) -> bool {
        col >= 0
            && row >= 0
            && (col as usize) < self.width
            && (row as usize) < self.height
            && self.free[row as usize * self.width + col as usize]
    }

    #[inline]
    pub fn is_blocked(&self, col: i64, row: i64) -> bool {
        !self.is_free(col, row)
    }

    pub fn is_free_point(&self, p: Vec2) -> bool {
        p.is_finite() && self.is_free(p.x.floor() as i64, p.y.floor() as i64)
    }

    pub fn blocked_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.height)
            .flat_map(move |r| (0..self.width).map(move |c| (c, r)))
            .filter(move |&(c, r)| !self.free[r * self.width + c])
    }

    pub fn free_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.height)
            .flat_map(move |r| (0..self.width).map(move |c| (c, r)))
            .filter(move |&(c, r)| self.free[r * self.width + c])
    }

    pub fn spawn_center(&self) -> Vec2 {
        Vec2::new(self.spawn_cell.0 as f64 + 0.5, self.spawn_cell.1 as f64 + 0.5)
    }

    /// Parameter `t` in `[0, 1]` at which the segment `p -> p + d` first
    /// enters a blocked cell, walking the traversed cells in order.
    fn first_wall_hit(&self, p: Vec2, d: Vec2) -> Option<f64> {
        let mut col = p.x.floor() as i64;
        let mut row = p.y.floor() as i64;
        let axis = |origin: f64, cell: i64, delta: f64| -> (i64, f64, f64) {
            if delta > 0.0 {
                (1, ((cell + 1) as f64 - origin) / delta, 1.0 / delta)
            } else if delta < 0.0 {
                (-1, (cell as f64 - origin) / delta, -1.0 / delta)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (step_c, mut next_c, delta_c) = axis(p.x, col, d.x);
        let (step_r, mut next_r, delta_r) = axis(p.y, row, d.y);
        loop {
            let t = next_c.min(next_r);
            if t > 1.0 {
                return None;
            }
            if next_c < next_r {
                col += step_c;
                if self.is_blocked(col, row) {
                    return Some(t);
                }
                next_c += delta_c;
            } else if next_r < next_c {
                row += step_r;
                if self.is_blocked(col, row) {
                    return Some(t);
                }
                next_r += delta_r;
            } else {
                // Passing exactly through a grid vertex: both side cells and
                // the diagonal one must be free.
                if self.is_blocked(col + step_c, row)
                    || self.is_blocked(col, row + step_r)
                    || self.is_blocked(col + step_c, row + step_r)
                {
                    return Some(t);
                }
                col += step_c;
                row += step_r;
                next_c += delta_c;
                next_r += delta_r;
            }
        }
    }

    /// Spawn cell center plus uniform jitter, and a uniformly drawn goal.
    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> (EnvState, Vec2) {
        let center = self.spawn_center();
        let (sc, sr) = (self.spawn_cell.0 as i64, self.spawn_cell.1 as i64);
        let position = loop {
            let p = Vec2::new(
                center.x + rng.gen_range(-SPAWN_NOISE..SPAWN_NOISE),
                center.y + rng.gen_range(-SPAWN_NOISE..SPAWN_NOISE),
            );
            if p.x.floor() as i64 == sc && p.y.floor() as i64 == sr {
                break p;
            }
        };
        let goal = self.goal_points[rng.gen_range(0..self.goal_points.len())];
        (EnvState { position }, goal)
    }

    /// Applies a clipped displacement, resolving wall collisions.
    pub fn step(&self, state: EnvState, action: Vec2, goal: Vec2) -> StepOutcome {
        let a = action.clamp_components(A_MAX);
        let p = state.position;
        let (next, collided) = match self.first_wall_hit(p, a) {
            None => (p + a, false),
            Some(t) => {
                let len = a.norm();
                let back = (t - COLLISION_MARGIN / len).max(0.0);
                (p + a * back, true)
            }
        };
        let next_state = EnvState { position: next };
        let achieved = achieved_goal(next_state);
        let reward = sparse_reward(achieved, goal, self.success_radius);
        StepOutcome {
            next_state,
            reward,
            achieved_goal: achieved,
            collided,
            success: reward == 0.0,
        }
    }

    /// ASCII rendering in the `.maze` format.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in (0..self.height).rev() {
            for col in 0..self.width {
                let glyph = if (col, row) == self.spawn_cell {
                    'S'
                } else if self
                    .goal_points
                    .iter()
                    .any(|g| g.x.floor() as usize == col && g.y.floor() as usize == row)
                {
                    'G'
                } else if self.free[row * self.width + col] {
                    '.'
                } else {
                    '#'
                };
                out.push(glyph);
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for MazeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn open(w: usize, h: usize) -> MazeSpec {
        let mut text = String::new();
        for r in 0..h {
            for c in 0..w {
                text.push(match (c, r) {
                    (0, 0) => 'G',
                    (c, r) if c == w - 1 && r == h - 1 => 'S',
                    _ => '.',
                });
            }
            text.push('\n');
        }
        MazeSpec::parse_ascii("open", &text, 0.5).unwrap()
    }

    #[test]
    fn corridor_transcription() {
        let m = load_maze("S.G").unwrap();
        assert_eq!((m.width, m.height), (3, 1));
        assert_eq!(m.spawn_cell, (0, 0));
        assert_eq!(m.goal_points, vec![Vec2::new(2.5, 0.5)]);
        assert_eq!(m.blocked_cells().count(), 0);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            load_maze("S#G").unwrap_err(),
            MazeError::UnreachableGoal { x: 2.5, y: 0.5 }
        );
        assert!(matches!(load_maze("S.\n.").unwrap_err(), MazeError::RaggedRow { .. }));
        assert!(matches!(load_maze("S.x").unwrap_err(), MazeError::UnknownGlyph { glyph: 'x', .. }));
        assert_eq!(load_maze("..G").unwrap_err(), MazeError::MissingSpawn);
        assert_eq!(load_maze("S..").unwrap_err(), MazeError::NoGoal);
        assert_eq!(load_maze("").unwrap_err(), MazeError::Empty);
        assert!(matches!(load_maze("nope_1").unwrap_err(), MazeError::BadParameters { .. }));
        assert!(load_maze_with_radius("S.G", 0.0).is_err());
    }

    #[test]
    fn experiment_layout() {
        let m = load_maze("experiment_9_9_6").unwrap();
        assert_eq!((m.width, m.height), (9, 18));
        for col in 0..8 {
            assert!(m.is_blocked(col, 6));
        }
        assert!(m.is_free(8, 6));
        assert_eq!(m.spawn_cell, (4, 0));
        assert_eq!(m.goal_points, vec![Vec2::new(4.5, 17.5)]);
        assert!(load_maze("experiment_3_3_5").is_err());
        assert!(load_maze("experiment_3_3").is_err());
    }

    #[test]
    fn shipped_mazes_render_round_trip() {
        for name in ["square_large", "square_d", "square_d_4", "experiment_3_3_2"] {
            let m = load_maze(name).unwrap();
            let again = MazeSpec::parse_ascii(name, &m.render(), m.success_radius).unwrap();
            assert_eq!(again, m, "{name}");
        }
    }

    #[test]
    fn reset_contract() {
        let m = load_maze("square_d_4").unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(m.reset(&mut a), m.reset(&mut b));

        let single = load_maze("experiment_3_3_2").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let (s, g) = single.reset(&mut rng);
            assert_eq!(g, single.goal_points[0]);
            assert!((s.position.x - 1.5).abs() < SPAWN_NOISE && (s.position.y - 0.5).abs() < SPAWN_NOISE);
        }
    }

    #[test]
    fn square_d_goal_frequencies() {
        // Binomial(10_000, 0.5): sd = 0.005, the 0.02 band is four sd wide.
        let m = load_maze("square_d").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let left = (0..n).filter(|_| m.reset(&mut rng).1 == m.goal_points[0]).count();
        let freq = left as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.02, "{freq}");
    }

    #[test]
    fn step_open_space() {
        let m = open(3, 3);
        let out = m.step(EnvState::new(0.5, 0.5), Vec2::new(0.3, -0.2), Vec2::new(2.5, 2.5));
        assert!(!out.collided);
        assert!((out.next_state.position.x - 0.8).abs() < 1e-15);
        assert!((out.next_state.position.y - 0.3).abs() < 1e-15);
        assert_eq!(out.reward, -1.0);
    }

    #[test]
    fn step_hits_wall() {
        let m = MazeSpec::parse_ascii("t", "S#.\nG..", 0.5).unwrap();
        // Row 1 (top line) is "S#.", spawn at (0, 1).
        let out = m.step(EnvState::new(0.5, 1.5), Vec2::new(1.0, 0.0), Vec2::new(0.5, 0.5));
        assert!(out.collided);
        assert!((out.next_state.position.x - (1.0 - 1e-4)).abs() < 1e-12);
        assert_eq!(out.next_state.position.y, 1.5);
    }

    #[test]
    fn step_outer_boundary_and_clipping() {
        let m = load_maze("S.G").unwrap();
        let out = m.step(EnvState::new(0.5, 0.5), Vec2::new(0.0, 5.0), Vec2::new(2.5, 0.5));
        assert!(out.collided);
        assert!((out.next_state.position.y - (1.0 - 1e-4)).abs() < 1e-12);
        let out = m.step(EnvState::new(0.5, 0.5), Vec2::new(7.0, 0.0), Vec2::new(2.5, 0.5));
        assert!(!out.collided);
        assert_eq!(out.next_state.position, Vec2::new(1.5, 0.5));
    }

    #[test]
    fn step_success() {
        let m = load_maze("S.G").unwrap();
        let out = m.step(EnvState::new(1.5, 0.5), Vec2::new(0.8, 0.0), Vec2::new(2.5, 0.5));
        assert!(out.success);
        assert_eq!(out.reward, 0.0);
    }

    #[test]
    fn diagonal_corner_is_not_a_gap() {
        // Free cells touch only at a vertex; passing through it must collide.
        let m = MazeSpec::parse_ascii("t", "#G\nS#", 0.5);
        assert!(matches!(m, Err(MazeError::UnreachableGoal { .. })));
        let m = MazeSpec::parse_ascii("t", "#..\nS#G\n...", 0.5).unwrap();
        let out = m.step(EnvState::new(0.5, 1.5), Vec2::new(1.0, 1.0), Vec2::new(2.5, 1.5));
        assert!(out.collided);
        assert!(m.is_free_point(out.next_state.position));
    }

    #[test]
    fn sparse_reward_cases() {
        let g = Vec2::new(1.0, 2.0);
        assert_eq!(sparse_reward(g, g, 0.5), 0.0);
        assert_eq!(sparse_reward(Vec2::new(3.0, 4.0), Vec2::ZERO, 5.0), 0.0);
        assert_eq!(sparse_reward(Vec2::ZERO, Vec2::new(5.0, 5.0), 0.5), -1.0);
    }

    #[test]
    fn achieved_goal_is_identity() {
        let p = achieved_goal(EnvState::new(0.5, 0.5));
        assert_eq!(p, Vec2::new(0.5, 0.5));
        let z = achieved_goal(EnvState::new(-0.0, 3.0));
        assert!(z.x == 0.0 && z.x.is_sign_positive());
        assert_eq!(z.y, 3.0);
        assert_eq!(sparse_reward(z, z, 0.5), 0.0);
    }
}
