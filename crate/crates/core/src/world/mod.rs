//! Simulated tabletop environment: object states, parameterized primitive
//! skills as kinematic transitions, trajectory interpolation, and
//! first-order-logic goal checking for the benchmark tasks.

mod goal;
mod skills;
mod taskfile;
mod trajectory;

pub use goal::{check_goal, Atom, GoalCondition, Predicate};
pub use skills::{execute_skill, SkillOutcome};
pub use taskfile::{builtin_task_ids, load_builtin_task, parse_task, TaskDef};
pub use trajectory::reaching_trajectory;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("unknown object {0:?}")]
    UnknownObject(String),
    #[error("unknown skill {0:?}")]
    UnknownSkill(String),
    #[error("undeclared object {0:?} in goal")]
    UndeclaredObject(String),
    #[error("pose out of workspace bounds: {0:?}")]
    OutOfBounds([f64; 3]),
    #[error("skill call incomplete: {0}")]
    IncompleteCall(String),
    #[error("trajectory needs at least 2 waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("task file: {0}")]
    TaskFormat(String),
}

/// Pose (x, y, z, yaw) plus named status flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectState {
    pub pose: [f64; 4],
    pub flags: BTreeSet<String>,
}

impl ObjectState {
    pub fn new(pose: [f64; 4], flags: &[&str]) -> ObjectState {
        ObjectState {
            pose,
            flags: flags.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.contains(flag)
    }

    pub fn xyz(&self) -> [f64; 3] {
        [self.pose[0], self.pose[1], self.pose[2]]
    }
}

/// 6D gripper pose (x, y, z, roll, pitch, yaw) and the held object, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct GripperState {
    pub pose: [f64; 6],
    pub held: Option<String>,
}

pub const GRIPPER_HOME: [f64; 6] = [0.5, 0.2, 0.3, 0.0, 0.0, 0.0];

impl Default for GripperState {
    fn default() -> Self {
        GripperState {
            pose: GRIPPER_HOME,
            held: None,
        }
    }
}

impl GripperState {
    pub fn xyz(&self) -> [f64; 3] {
        [self.pose[0], self.pose[1], self.pose[2]]
    }
}

/// The complete simulated tabletop. A value type: skills return new states
/// and never mutate their input.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub objects: BTreeMap<String, ObjectState>,
    pub gripper: GripperState,
    pub clock: f64,
}

impl WorldState {
    pub fn object(&self, id: &str) -> Result<&ObjectState, WorldError> {
        self.objects
            .get(id)
            .ok_or_else(|| WorldError::UnknownObject(id.to_string()))
    }

    /// At most one object is held and, while held, its position tracks the
    /// gripper grasp frame.
    pub fn holding_is_consistent(&self) -> bool {
        match &self.gripper.held {
            None => true,
            Some(id) => self.objects.get(id).is_some_and(|o| {
                let g = self.gripper.xyz();
                let p = o.xyz();
                (0..3).all(|i| (g[i] - p[i]).abs() < 1e-9)
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Skill {
    MoveTo,
    Pick,
    Place,
    Push,
    Wipe,
    Pour,
    PullOpen,
}

pub const ALL_SKILLS: [Skill; 7] = [
    Skill::MoveTo,
    Skill::Pick,
    Skill::Place,
    Skill::Push,
    Skill::Wipe,
    Skill::Pour,
    Skill::PullOpen,
];

impl Skill {
    pub fn as_str(&self) -> &'static str {
        match self {
            Skill::MoveTo => "MoveTo",
            Skill::Pick => "Pick",
            Skill::Place => "Place",
            Skill::Push => "Push",
            Skill::Wipe => "Wipe",
            Skill::Pour => "Pour",
            Skill::PullOpen => "PullOpen",
        }
    }

    pub fn parse(s: &str) -> Result<Skill, WorldError> {
        ALL_SKILLS
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| WorldError::UnknownSkill(s.to_string()))
    }

    /// Whether the skill consumes a 3D point parameter (and therefore needs a
    /// cursor-selection stage).
    pub fn takes_point(&self) -> bool {
        !matches!(self, Skill::Pour | Skill::PullOpen)
    }
}

/// A parameterized skill invocation. `object` is the operand the user
/// selected; `point` the decoded 3D parameter for skills that take one
/// (for `Wipe` it is the stroke center).
#[derive(Debug, Clone, PartialEq)]
pub struct SkillCall {
    pub skill: Skill,
    pub object: Option<String>,
    pub point: Option<[f64; 3]>,
}

impl SkillCall {
    pub fn validate(&self) -> Result<(), WorldError> {
        let need_obj = matches!(
            self.skill,
            Skill::Pick | Skill::Push | Skill::Pour | Skill::PullOpen
        );
        if need_obj && self.object.is_none() {
            return Err(WorldError::IncompleteCall(format!(
                "{} needs an object operand",
                self.skill.as_str()
            )));
        }
        if self.skill.takes_point() && self.point.is_none() {
            return Err(WorldError::IncompleteCall(format!(
                "{} needs a point parameter",
                self.skill.as_str()
            )));
        }
        Ok(())
    }
}

/// Geometry constants and per-skill durations for the kinematic simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldCfg {
    pub grasp_radius: f64,
    pub wipe_half_width: f64,
    pub stroke_half_len: f64,
    pub aperture_radius: f64,
    pub support_radius: f64,
    pub inside_radius: f64,
    pub durations: SkillDurations,
}

impl Default for WorldCfg {
    fn default() -> Self {
        WorldCfg {
            grasp_radius: 0.05,
            wipe_half_width: 0.04,
            stroke_half_len: 0.06,
            aperture_radius: 0.05,
            support_radius: 0.08,
            inside_radius: 0.06,
            durations: SkillDurations::default(),
        }
    }
}

/// Simulated seconds each primitive takes to execute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkillDurations {
    pub move_to: f64,
    pub pick: f64,
    pub place: f64,
    pub push: f64,
    pub wipe: f64,
    pub pour: f64,
    pub pull_open: f64,
}

impl Default for SkillDurations {
    fn default() -> Self {
        SkillDurations {
            move_to: 5.0,
            pick: 8.0,
            place: 8.0,
            push: 8.0,
            wipe: 12.0,
            pour: 10.0,
            pull_open: 10.0,
        }
    }
}

impl SkillDurations {
    pub fn of(&self, skill: Skill) -> f64 {
        match skill {
            Skill::MoveTo => self.move_to,
            Skill::Pick => self.pick,
            Skill::Place => self.place,
            Skill::Push => self.push,
            Skill::Wipe => self.wipe,
            Skill::Pour => self.pour,
            Skill::PullOpen => self.pull_open,
        }
    }
}

pub(crate) fn in_bounds(p: [f64; 3]) -> bool {
    p.iter().all(|v| (0.0..=1.0).contains(v))
}

pub(crate) fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3)
        .map(|i| (a[i] - b[i]) * (a[i] - b[i]))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn dist_xy(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
