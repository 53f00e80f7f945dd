//! The "noir-task v1" file format: sectioned text listing the objects with
//! initial poses and flags, the skill menu, the scripted optimal plan, and
//! the goal atoms. The three benchmark tasks ship embedded.

use std::collections::BTreeMap;

use super::goal::{Atom, GoalCondition};
use super::{GripperState, ObjectState, Skill, SkillCall, WorldError, WorldState};

const TASK_MAGIC: &str = "noir-task v1";

/// Parsed task definition.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDef {
    pub id: String,
    /// Declaration order matters: it fixes rendering order and is the basis
    /// for flicker-frequency assignment of selectable objects.
    pub objects: Vec<(String, ObjectState)>,
    /// Skills offered for selection (at most 4: the k-way decode limit).
    pub skills_menu: Vec<Skill>,
    pub plan: Vec<SkillCall>,
    pub goal: GoalCondition,
}

impl TaskDef {
    pub fn initial_world(&self) -> WorldState {
        WorldState {
            objects: self
                .objects
                .iter()
                .map(|(id, o)| (id.clone(), o.clone()))
                .collect(),
            gripper: GripperState::default(),
            clock: 0.0,
        }
    }

    /// Objects the user can select, in first-appearance order over the plan;
    /// index in this list is the object's flicker-frequency slot.
    pub fn selectable_objects(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for call in &self.plan {
            if let Some(obj) = &call.object {
                if !out.contains(obj) {
                    out.push(obj.clone());
                }
            }
        }
        out
    }
}

const WIPE_SPILL: &str = include_str!("../../tasks/wipe_spill.task");
const OPEN_BASKET: &str = include_str!("../../tasks/open_basket.task");
const POUR_TEA: &str = include_str!("../../tasks/pour_tea.task");

pub fn builtin_task_ids() -> Vec<&'static str> {
    vec!["WipeSpill", "OpenBasket", "PourTea"]
}

pub fn load_builtin_task(id: &str) -> Result<TaskDef, WorldError> {
    let text = match id {
        "WipeSpill" => WIPE_SPILL,
        "OpenBasket" => OPEN_BASKET,
        "PourTea" => POUR_TEA,
        _ => {
            return Err(WorldError::TaskFormat(format!(
                "no built-in task {id:?} (have WipeSpill, OpenBasket, PourTea)"
            )))
        }
    };
    parse_task(text)
}

pub fn parse_task(text: &str) -> Result<TaskDef, WorldError> {
    let mut saw_magic = false;
    let mut section = String::new();
    let mut id = None;
    let mut objects: Vec<(String, ObjectState)> = Vec::new();
    let mut skills_menu: Vec<Skill> = Vec::new();
    let mut plan: Vec<SkillCall> = Vec::new();
    let mut atoms: Vec<Atom> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if rest.trim() == TASK_MAGIC {
                saw_magic = true;
            }
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].to_string();
            continue;
        }
        let err = |msg: String| WorldError::TaskFormat(format!("line {}: {msg}", lineno + 1));
        match section.as_str() {
            "task" => {
                if let Some(v) = line.strip_prefix("id ") {
                    id = Some(v.trim().to_string());
                } else {
                    return Err(err(format!("unknown task field {line:?}")));
                }
            }
            "objects" => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() < 5 {
                    return Err(err(format!("object line needs id + pose: {line:?}")));
                }
                let mut pose = [0.0f64; 4];
                for (i, t) in toks[1..5].iter().enumerate() {
                    pose[i] = t
                        .parse()
                        .map_err(|_| err(format!("bad pose value {t:?}")))?;
                }
                let flags: Vec<&str> = toks[5..].to_vec();
                objects.push((toks[0].to_string(), ObjectState::new(pose, &flags)));
            }
            "skills" => {
                for tok in line.split_whitespace() {
                    skills_menu.push(Skill::parse(tok)?);
                }
            }
            "plan" => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                let skill = Skill::parse(toks[0])?;
                let object = toks.get(1).map(|s| s.to_string());
                let point = if toks.len() >= 5 {
                    let mut p = [0.0f64; 3];
                    for (i, t) in toks[2..5].iter().enumerate() {
                        p[i] = t
                            .parse()
                            .map_err(|_| err(format!("bad plan coordinate {t:?}")))?;
                    }
                    Some(p)
                } else {
                    None
                };
                plan.push(SkillCall {
                    skill,
                    object,
                    point,
                });
            }
            "goal" => atoms.push(Atom::parse(line)?),
            _ => return Err(err(format!("content outside a known section: {line:?}"))),
        }
    }

    if !saw_magic {
        return Err(WorldError::TaskFormat(format!(
            "missing '{TASK_MAGIC}' header"
        )));
    }
    let id = id.ok_or_else(|| WorldError::TaskFormat("missing task id".into()))?;
    if objects.is_empty() {
        return Err(WorldError::TaskFormat("no objects declared".into()));
    }
    if skills_menu.is_empty() || skills_menu.len() > 4 {
        return Err(WorldError::TaskFormat(format!(
            "skill menu must have 1-4 entries, found {}",
            skills_menu.len()
        )));
    }

    let declared: BTreeMap<&str, ()> = objects.iter().map(|(id, _)| (id.as_str(), ())).collect();
    for (i, call) in plan.iter().enumerate() {
        call.validate()?;
        if let Some(obj) = &call.object {
            if !declared.contains_key(obj.as_str()) {
                return Err(WorldError::UnknownObject(format!(
                    "plan step {}: {obj}",
                    i + 1
                )));
            }
        }
        if !skills_menu.contains(&call.skill) {
            return Err(WorldError::TaskFormat(format!(
                "plan step {} uses {} which is not on the skill menu",
                i + 1,
                call.skill.as_str()
            )));
        }
    }
    for atom in &atoms {
        let ids = match &atom.pred {
            super::goal::Predicate::Flag { object, .. } => vec![object],
            super::goal::Predicate::On { above, below } => vec![above, below],
            super::goal::Predicate::Inside { inner, outer } => vec![inner, outer],
        };
        for oid in ids {
            if !declared.contains_key(oid.as_str()) {
                return Err(WorldError::UndeclaredObject(oid.clone()));
            }
        }
    }

    Ok(TaskDef {
        id,
        objects,
        skills_menu,
        plan,
        goal: GoalCondition { atoms },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{check_goal, execute_skill, WorldCfg};

    #[test]
    fn all_builtin_tasks_parse() {
        for id in builtin_task_ids() {
            let task = load_builtin_task(id).unwrap();
            assert_eq!(task.id, id);
            assert!(task.plan.len() >= 4 && task.plan.len() <= 6, "{id} horizon");
            assert!(task.skills_menu.len() <= 4);
            assert!(task.selectable_objects().len() <= 4, "{id} selectables");
        }
        assert!(load_builtin_task("Nope").is_err());
    }

    #[test]
    fn scripted_plans_reach_their_goals() {
        let cfg = WorldCfg::default();
        for id in builtin_task_ids() {
            let task = load_builtin_task(id).unwrap();
            let mut world = task.initial_world();
            assert!(
                !check_goal(&world, &task.goal, &cfg).unwrap(),
                "{id} goal already satisfied at the initial state"
            );
            for (i, call) in task.plan.iter().enumerate() {
                let (next, outcome) = execute_skill(&world, call, &cfg).unwrap();
                assert!(
                    outcome.is_success(),
                    "{id} plan step {} {}: {}",
                    i + 1,
                    call.skill.as_str(),
                    outcome.describe()
                );
                assert!(next.holding_is_consistent());
                world = next;
            }
            assert!(
                check_goal(&world, &task.goal, &cfg).unwrap(),
                "{id} goal not reached after the scripted plan"
            );
        }
    }

    #[test]
    fn malformed_tasks_are_rejected() {
        assert!(parse_task("nonsense").is_err());
        let missing_obj = "# noir-task v1\n[task]\nid T\n[objects]\na 0 0 0 0\n[skills]\nPick\n[plan]\nPick ghost 0 0 0\n[goal]\n";
        assert!(matches!(
            parse_task(missing_obj),
            Err(WorldError::UnknownObject(_))
        ));
        let bad_goal =
            "# noir-task v1\n[task]\nid T\n[objects]\na 0 0 0 0\n[skills]\nMoveTo\n[plan]\nMoveTo a 0 0 0\n[goal]\nflag ghost wet\n";
        assert!(matches!(
            parse_task(bad_goal),
            Err(WorldError::UndeclaredObject(_))
        ));
    }
}
