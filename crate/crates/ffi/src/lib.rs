//! C interface to the simulator, the reward terms, the greedy baseline and
//! trained actors.
//!
//! Every function returns a [`SocnavStatus`]. On failure the message is kept
//! per thread and can be read with [`socnav_last_error`]. Handles are opaque
//! and must be released with their `_free` function. Panics never cross the
//! boundary; they surface as [`SocnavStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use socnav::baselines::{greedy_plan, GreedyParams};
use socnav::config::FileConfig;
use socnav::lidar::{GoalVector, LidarConfig, MotionFeature};
use socnav::policy::{ActorPolicy, Checkpoint, Policy, PolicyError};
use socnav::rewards::{ego_reward_from_distance, goal_reward, social_reward, RewardParams, SocialAgent};
use socnav::world::{Action, Command, Done, Env, StepOutcome, Twist, WorldError};
use socnav::Vec2;

/// Result code of every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SocnavStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    /// The episode already ended; call `socnav_env_reset`.
    EpisodeFinished = 4,
    World = 5,
    Policy = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

/// Episode status after a step.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SocnavDone {
    Running = 0,
    Reached = 1,
    Collided = 2,
    Timeout = 3,
}

impl From<Done> for SocnavDone {
    fn from(d: Done) -> Self {
        match d {
            Done::Running => SocnavDone::Running,
            Done::Reached => SocnavDone::Reached,
            Done::Collided => SocnavDone::Collided,
            Done::Timeout => SocnavDone::Timeout,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SocnavPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SocnavStep {
    pub reward: f64,
    pub reward_ego: f64,
    pub reward_social: f64,
    pub reward_goal: f64,
    pub done: SocnavDone,
    pub step: u64,
    pub time: f64,
    pub pose: SocnavPose,
    pub ego_violation: bool,
    pub social_violations: u32,
}

/// Motion state of one agent for the social term.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SocnavAgent {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub radius: f64,
    pub speed: f64,
}

/// Opaque environment handle.
pub struct SocnavEnv {
    env: Env,
}

/// Opaque trained-actor handle.
pub struct SocnavPolicy {
    policy: ActorPolicy,
    rows: usize,
    beams: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(SocnavStatus, String);

impl From<WorldError> for Failure {
    fn from(e: WorldError) -> Self {
        let code = match e {
            WorldError::EpisodeFinished(_) => SocnavStatus::EpisodeFinished,
            WorldError::Config(_) => SocnavStatus::Config,
            _ => SocnavStatus::World,
        };
        Failure(code, e.to_string())
    }
}

impl From<PolicyError> for Failure {
    fn from(e: PolicyError) -> Self {
        let code = match e {
            PolicyError::Io(_) => SocnavStatus::Io,
            _ => SocnavStatus::Policy,
        };
        Failure(code, e.to_string())
    }
}

fn fail(code: SocnavStatus, msg: impl Into<String>) -> Failure {
    Failure(code, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SocnavStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SocnavStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SocnavStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(SocnavStatus::NullPointer, format!("{what} is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(SocnavStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(SocnavStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    let s = deref(p, what)?;
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(SocnavStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn step_record(o: &StepOutcome) -> SocnavStep {
    let pose = o.info.robot.pose;
    SocnavStep {
        reward: o.reward,
        reward_ego: o.reward_parts.ego,
        reward_social: o.reward_parts.social,
        reward_goal: o.reward_parts.goal,
        done: o.done.into(),
        step: o.info.step as u64,
        time: o.info.time,
        pose: SocnavPose {
            x: pose.position.x,
            y: pose.position.y,
            heading: pose.heading,
        },
        ego_violation: o.info.assessment.ego_violation,
        social_violations: o.info.assessment.violations as u32,
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn socnav_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Creates an environment for episode `episode` of root seed `root_seed`.
/// `config_toml` may be null for the defaults; otherwise it is a TOML
/// document whose `[env]` table is used.
///
/// # Safety
/// `config_toml` must be null or a NUL-terminated string; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn socnav_env_new(
    config_toml: *const c_char,
    root_seed: u64,
    episode: u64,
    out: *mut *mut SocnavEnv,
) -> SocnavStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let cfg = if config_toml.is_null() {
            FileConfig::default()
        } else {
            FileConfig::from_toml_str(c_str(config_toml, "config_toml")?, "config_toml")
                .map_err(|e| fail(SocnavStatus::Config, e.to_string()))?
        };
        let env = Env::new(cfg.env.for_episode(root_seed, episode))?;
        *out = Box::into_raw(Box::new(SocnavEnv { env }));
        Ok(())
    })
}

/// # Safety
/// `env` must be null or a handle from `socnav_env_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn socnav_env_free(env: *mut SocnavEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Restores the episode's initial state.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn socnav_env_reset(env: *mut SocnavEnv) -> SocnavStatus {
    guard(|| {
        deref_mut(env, "env")?.env.reset()?;
        Ok(())
    })
}

/// Advances one policy period under the action `(a_x, a_y)`.
///
/// # Safety
/// `env` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn socnav_env_step(env: *mut SocnavEnv, a_x: f64, a_y: f64, out: *mut SocnavStep) -> SocnavStatus {
    guard(|| {
        let env = deref_mut(env, "env")?;
        let out = deref_mut(out, "out")?;
        if !(a_x.is_finite() && a_y.is_finite()) {
            return Err(fail(SocnavStatus::InvalidArgument, "action is not finite"));
        }
        *out = step_record(&env.env.step(Action::new(a_x, a_y))?);
        Ok(())
    })
}

/// Advances one policy period holding the twist `(linear, angular)`.
///
/// # Safety
/// `env` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn socnav_env_step_twist(
    env: *mut SocnavEnv,
    linear: f64,
    angular: f64,
    out: *mut SocnavStep,
) -> SocnavStatus {
    guard(|| {
        let env = deref_mut(env, "env")?;
        let out = deref_mut(out, "out")?;
        if !(linear.is_finite() && angular.is_finite()) {
            return Err(fail(SocnavStatus::InvalidArgument, "twist is not finite"));
        }
        *out = step_record(&env.env.step_command(Command::Twist(Twist { linear, angular }))?);
        Ok(())
    })
}

/// # Safety
/// `env` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn socnav_env_pose(env: *const SocnavEnv, out: *mut SocnavPose) -> SocnavStatus {
    guard(|| {
        let pose = deref(env, "env")?.env.robot().pose;
        *deref_mut(out, "out")? = SocnavPose {
            x: pose.position.x,
            y: pose.position.y,
            heading: pose.heading,
        };
        Ok(())
    })
}

/// Rows (stacked scans) and beams of the motion feature.
///
/// # Safety
/// `env` must be a live handle; `rows` and `beams` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn socnav_env_observation_shape(
    env: *const SocnavEnv,
    rows: *mut usize,
    beams: *mut usize,
) -> SocnavStatus {
    guard(|| {
        let lidar = &deref(env, "env")?.env.config().lidar;
        *deref_mut(rows, "rows")? = lidar.history;
        *deref_mut(beams, "beams")? = lidar.beams;
        Ok(())
    })
}

/// Copies the motion feature (row-major, oldest row first, metres) into
/// `ranges` and the goal as `[distance, bearing, initial_distance]` into
/// `goal`.
///
/// # Safety
/// `env` must be a live handle; `ranges` must hold `len` doubles and `goal`
/// three.
#[no_mangle]
pub unsafe extern "C" fn socnav_env_observation(
    env: *const SocnavEnv,
    ranges: *mut f64,
    len: usize,
    goal: *mut f64,
) -> SocnavStatus {
    guard(|| {
        let f = deref(env, "env")?.env.feature();
        if len < f.data.len() {
            return Err(fail(
                SocnavStatus::BufferTooSmall,
                format!("observation needs {} values, buffer holds {len}", f.data.len()),
            ));
        }
        deref_mut(ranges, "ranges")?;
        deref_mut(goal, "goal")?;
        std::slice::from_raw_parts_mut(ranges, f.data.len()).copy_from_slice(&f.data);
        std::slice::from_raw_parts_mut(goal, 3).copy_from_slice(&[f.goal.distance, f.goal.bearing, f.goal.initial_distance]);
        Ok(())
    })
}

/// Ego term for a surface clearance `clearance` under default reward
/// parameters.
///
/// # Safety
/// `reward` and `inside_zone` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn socnav_ego_reward(
    clearance: f64,
    robot_radius: f64,
    reward: *mut f64,
    inside_zone: *mut bool,
) -> SocnavStatus {
    guard(|| {
        if !(clearance.is_finite() && robot_radius >= 0.0) {
            return Err(fail(SocnavStatus::InvalidArgument, "clearance or radius out of range"));
        }
        let (r, inside) = ego_reward_from_distance(clearance, robot_radius, &RewardParams::default());
        *deref_mut(reward, "reward")? = r;
        *deref_mut(inside_zone, "inside_zone")? = inside;
        Ok(())
    })
}

fn agent(a: &SocnavAgent) -> Result<SocialAgent, Failure> {
    if !(a.radius >= 0.0 && a.speed >= 0.0) {
        return Err(fail(SocnavStatus::InvalidArgument, "agent radius and speed must be non-negative"));
    }
    Ok(SocialAgent {
        position: Vec2::new(a.x, a.y),
        heading: a.heading,
        radius: a.radius,
        speed: a.speed,
    })
}

/// Social term of `robot` against `count` pedestrians under default reward
/// parameters.
///
/// # Safety
/// `robot` must point to one agent, `pedestrians` to `count` agents;
/// `reward` and `violations` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn socnav_social_reward(
    robot: *const SocnavAgent,
    pedestrians: *const SocnavAgent,
    count: usize,
    reward: *mut f64,
    violations: *mut u32,
) -> SocnavStatus {
    guard(|| {
        let robot = agent(deref(robot, "robot")?)?;
        let peds = slice(pedestrians, count, "pedestrians")?
            .iter()
            .map(agent)
            .collect::<Result<Vec<_>, _>>()?;
        let o = social_reward(&robot, &peds, &RewardParams::default());
        *deref_mut(reward, "reward")? = o.reward;
        *deref_mut(violations, "violations")? = o.violations as u32;
        Ok(())
    })
}

/// Goal term under default reward parameters.
///
/// # Safety
/// `reward` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn socnav_goal_reward(
    x: f64,
    y: f64,
    goal_x: f64,
    goal_y: f64,
    start_x: f64,
    start_y: f64,
    reached: bool,
    reward: *mut f64,
) -> SocnavStatus {
    guard(|| {
        let (goal, start) = (Vec2::new(goal_x, goal_y), Vec2::new(start_x, start_y));
        if start.distance(goal) <= 0.0 {
            return Err(fail(SocnavStatus::InvalidArgument, "start coincides with goal"));
        }
        *deref_mut(reward, "reward")? = goal_reward(Vec2::new(x, y), goal, start, reached, &RewardParams::default());
        Ok(())
    })
}

/// Greedy baseline on one scan of `beams` ranges spread evenly over
/// `fov_deg`. Writes the chosen beam and the commanded twist.
///
/// # Safety
/// `ranges` must hold `beams` doubles; the outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn socnav_greedy_plan(
    ranges: *const f64,
    beams: usize,
    fov_deg: f64,
    max_range: f64,
    goal_bearing: f64,
    goal_distance: f64,
    index: *mut usize,
    linear: *mut f64,
    angular: *mut f64,
) -> SocnavStatus {
    guard(|| {
        if beams < 2 || !(fov_deg > 0.0 && max_range > 0.0) {
            return Err(fail(SocnavStatus::InvalidArgument, "need at least two beams and a positive fov and range"));
        }
        let ranges = slice(ranges, beams, "ranges")?;
        let lidar = LidarConfig {
            beams,
            fov_deg,
            max_range,
            ..LidarConfig::default()
        };
        let d = greedy_plan(ranges, &lidar, goal_bearing, goal_distance, &GreedyParams::default());
        *deref_mut(index, "index")? = d.index;
        *deref_mut(linear, "linear")? = d.twist.linear;
        *deref_mut(angular, "angular")? = d.twist.angular;
        Ok(())
    })
}

/// Loads the actor of a checkpoint file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn socnav_policy_load(path: *const c_char, out: *mut *mut SocnavPolicy) -> SocnavStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let path = Path::new(c_str(path, "path")?);
        let ckpt = Checkpoint::load(path)?;
        let [rows, beams] = ckpt.meta.input;
        let policy = ActorPolicy::from_checkpoint(path.display().to_string(), &ckpt)?;
        *out = Box::into_raw(Box::new(SocnavPolicy { policy, rows, beams }));
        Ok(())
    })
}

/// # Safety
/// `policy` must be null or a handle from `socnav_policy_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn socnav_policy_free(policy: *mut SocnavPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Input shape the actor was trained on.
///
/// # Safety
/// `policy` must be a live handle; `rows` and `beams` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn socnav_policy_input_shape(
    policy: *const SocnavPolicy,
    rows: *mut usize,
    beams: *mut usize,
) -> SocnavStatus {
    guard(|| {
        let p = deref(policy, "policy")?;
        *deref_mut(rows, "rows")? = p.rows;
        *deref_mut(beams, "beams")? = p.beams;
        Ok(())
    })
}

/// Actor output for the environment's current observation.
///
/// # Safety
/// Both handles must be live; `a_x` and `a_y` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn socnav_policy_act(
    policy: *const SocnavPolicy,
    env: *const SocnavEnv,
    a_x: *mut f64,
    a_y: *mut f64,
) -> SocnavStatus {
    guard(|| {
        let p = deref(policy, "policy")?;
        let obs = deref(env, "env")?.env.observation();
        let action = match p.policy.act(&obs)? {
            Command::Action(a) => a,
            Command::Twist(_) => return Err(fail(SocnavStatus::Policy, "actor returned a twist")),
        };
        *deref_mut(a_x, "a_x")? = action.a_x;
        *deref_mut(a_y, "a_y")? = action.a_y;
        Ok(())
    })
}

/// Actor output for a caller-supplied motion feature: `rows × beams` ranges
/// in metres (row-major, oldest first), the goal distance and bearing, and
/// the start-to-goal distance the distance is normalised by.
///
/// # Safety
/// `policy` must be live; `ranges` must hold `rows * beams` doubles; `a_x`
/// and `a_y` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn socnav_policy_act_feature(
    policy: *const SocnavPolicy,
    ranges: *const f64,
    rows: usize,
    beams: usize,
    goal_distance: f64,
    goal_bearing: f64,
    initial_distance: f64,
    a_x: *mut f64,
    a_y: *mut f64,
) -> SocnavStatus {
    guard(|| {
        let p = deref(policy, "policy")?;
        if (rows, beams) != (p.rows, p.beams) {
            return Err(fail(
                SocnavStatus::InvalidArgument,
                format!("actor expects {}x{} features, got {rows}x{beams}", p.rows, p.beams),
            ));
        }
        let feature = MotionFeature {
            rows,
            beams,
            data: slice(ranges, rows * beams, "ranges")?.to_vec(),
            goal: GoalVector::new(goal_distance, goal_bearing, initial_distance),
        };
        let action = p.policy.actor.act(&feature)?;
        *deref_mut(a_x, "a_x")? = action.a_x;
        *deref_mut(a_y, "a_y")? = action.a_y;
        Ok(())
    })
}
