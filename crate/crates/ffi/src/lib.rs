//! C ABI over the maze environment, minibatch apportionment, checkpointed
//! agents and the training loop.
//!
//! Every fallible function returns a [`GberStatus`]. On failure a message is
//! stored per thread and can be read with [`gber_last_error_message`]. Panics
//! never cross the boundary; they surface as `GBER_STATUS_PANIC`.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free` function. Strings returned by the library are released
//! with [`gber_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gber::agent::Agent;
use gber::checkpoint::Checkpoint;
use gber::geom::Vec2;
use gber::maze::{self, EnvState, MazeSpec};
use gber::replay::{apportion, StrategyRatios, NUM_CATEGORIES};
use gber::trainer::{stream_rng, Stream};
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GberStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    Io = 4,
    Training = 5,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GberVec2 {
    pub x: f64,
    pub y: f64,
}

impl From<Vec2> for GberVec2 {
    fn from(v: Vec2) -> Self {
        GberVec2 { x: v.x, y: v.y }
    }
}

impl From<GberVec2> for Vec2 {
    fn from(v: GberVec2) -> Self {
        Vec2::new(v.x, v.y)
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GberStepOutcome {
    pub next_state: GberVec2,
    pub achieved_goal: GberVec2,
    pub reward: f64,
    pub collided: bool,
    pub success: bool,
}

/// A maze plus the random stream used by `gber_maze_reset`.
pub struct GberMaze {
    spec: MazeSpec,
    rng: ChaCha8Rng,
}

/// A trained agent restored from a checkpoint.
pub struct GberAgent {
    agent: Agent,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(GberStatus, String);

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> GberStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GberStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            GberStatus::Panic
        }
    }
}

fn invalid(msg: impl ToString) -> Failure {
    Failure(GberStatus::InvalidArgument, msg.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(GberStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(GberStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure(GberStatus::NullPointer, format!("{what} is null")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(GberStatus::NullPointer, format!("{what} is null")))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gber_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gber_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a maze by name (`square_d`, `experiment_3_3_2`, ...) or from ASCII
/// text. `seed` drives the spawn noise and goal choice of resets.
///
/// # Safety
/// `name_or_ascii` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gber_maze_load(
    name_or_ascii: *const c_char,
    success_radius: f64,
    seed: u64,
    out: *mut *mut GberMaze,
) -> GberStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(name_or_ascii, "name_or_ascii")?;
        let spec = maze::load_maze_with_radius(text, success_radius).map_err(invalid)?;
        *out = Box::into_raw(Box::new(GberMaze { spec, rng: stream_rng(seed, Stream::Env) }));
        Ok(())
    })
}

/// # Safety
/// `maze` must come from `gber_maze_load` and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gber_maze_free(maze: *mut GberMaze) {
    if !maze.is_null() {
        drop(Box::from_raw(maze));
    }
}

/// Samples a start position and a desired goal.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gber_maze_reset(maze: *mut GberMaze, start: *mut GberVec2, goal: *mut GberVec2) -> GberStatus {
    guard(|| {
        let m = out_arg(maze, "maze")?;
        let start = out_arg(start, "start")?;
        let goal = out_arg(goal, "goal")?;
        let (s, g) = m.spec.reset(&mut m.rng);
        *start = s.position.into();
        *goal = g.into();
        Ok(())
    })
}

/// One environment step. The action is clipped to the unit box.
///
/// # Safety
/// `maze` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gber_maze_step(
    maze: *const GberMaze,
    state: GberVec2,
    action: GberVec2,
    goal: GberVec2,
    out: *mut GberStepOutcome,
) -> GberStatus {
    guard(|| {
        let m = ref_arg(maze, "maze")?;
        let out = out_arg(out, "out")?;
        let r = m.spec.step(EnvState { position: state.into() }, action.into(), goal.into());
        *out = GberStepOutcome {
            next_state: r.next_state.position.into(),
            achieved_goal: r.achieved_goal.into(),
            reward: r.reward,
            collided: r.collided,
            success: r.success,
        };
        Ok(())
    })
}

/// ASCII rendering; free the result with `gber_string_free`.
///
/// # Safety
/// `maze` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gber_maze_render(maze: *const GberMaze, out: *mut *mut c_char) -> GberStatus {
    guard(|| {
        let m = ref_arg(maze, "maze")?;
        let out = out_arg(out, "out")?;
        *out = CString::new(m.spec.render()).map_err(invalid)?.into_raw();
        Ok(())
    })
}

/// 0 when `achieved` lies within `radius` of `goal`, -1 otherwise.
#[no_mangle]
pub extern "C" fn gber_sparse_reward(achieved: GberVec2, goal: GberVec2, radius: f64) -> f64 {
    maze::sparse_reward(achieved.into(), goal.into(), radius)
}

/// Per-category minibatch counts for a ratio string such as `1_4_3_1_1_5`.
/// `out_counts` must hold six entries.
///
/// # Safety
/// `ratios` must be a valid C string and `out_counts` point to six `size_t`.
#[no_mangle]
pub unsafe extern "C" fn gber_apportion(ratios: *const c_char, batch_size: usize, out_counts: *mut usize) -> GberStatus {
    guard(|| {
        let text = str_arg(ratios, "ratios")?;
        if out_counts.is_null() {
            return Err(Failure(GberStatus::NullPointer, "out_counts is null".into()));
        }
        let r: StrategyRatios = text.parse().map_err(invalid)?;
        let counts = apportion(&r.as_array(), batch_size);
        std::slice::from_raw_parts_mut(out_counts, NUM_CATEGORIES).copy_from_slice(&counts);
        Ok(())
    })
}

/// Restores the agent stored in a checkpoint file.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gber_agent_load(path: *const c_char, out: *mut *mut GberAgent) -> GberStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let ck = Checkpoint::load(path).map_err(|e| Failure(GberStatus::Io, e.to_string()))?;
        let agent = ck.to_agent().map_err(invalid)?;
        *out = Box::into_raw(Box::new(GberAgent { agent }));
        Ok(())
    })
}

/// # Safety
/// `agent` must come from `gber_agent_load` and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gber_agent_free(agent: *mut GberAgent) {
    if !agent.is_null() {
        drop(Box::from_raw(agent));
    }
}

/// Greedy action of the agent.
///
/// # Safety
/// `agent` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gber_agent_act(
    agent: *const GberAgent,
    state: GberVec2,
    goal: GberVec2,
    out: *mut GberVec2,
) -> GberStatus {
    guard(|| {
        let a = ref_arg(agent, "agent")?;
        let out = out_arg(out, "out")?;
        *out = a.agent.act(state.into(), goal.into()).into();
        Ok(())
    })
}

/// Runs a full training run from a TOML config, writing `progress.csv` and
/// `checkpoint.json` into `out_dir`.
///
/// # Safety
/// Both arguments must be valid C strings.
#[no_mangle]
pub unsafe extern "C" fn gber_train(config_path: *const c_char, out_dir: *const c_char) -> GberStatus {
    guard(|| {
        let config_path = str_arg(config_path, "config_path")?;
        let out_dir = str_arg(out_dir, "out_dir")?;
        let config = gber::config::parse_config(config_path).map_err(|e| match e {
            gber::config::ConfigError::Io { .. } => Failure(GberStatus::Io, e.to_string()),
            other => invalid(other),
        })?;
        gber::trainer::train(&config, Path::new(out_dir)).map_err(|e| Failure(GberStatus::Training, e.to_string()))?;
        Ok(())
    })
}
