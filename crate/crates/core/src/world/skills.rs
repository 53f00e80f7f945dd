//! Deterministic skill transition rules. A failed skill leaves everything but
//! the clock untouched.

use super::{
    dist3, dist_xy, in_bounds, Skill, SkillCall, WorldCfg, WorldError, WorldState,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkillOutcome {
    Success,
    Failure(String),
}

impl SkillOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, SkillOutcome::Success)
    }

    pub fn describe(&self) -> String {
        match self {
            SkillOutcome::Success => "success".to_string(),
            SkillOutcome::Failure(r) => format!("failure: {r}"),
        }
    }
}

fn fail(world: &WorldState, duration: f64, reason: &str) -> (WorldState, SkillOutcome) {
    let mut w = world.clone();
    w.clock += duration;
    (w, SkillOutcome::Failure(reason.to_string()))
}

fn move_gripper(world: &mut WorldState, target: [f64; 3]) {
    world.gripper.pose[0] = target[0];
    world.gripper.pose[1] = target[1];
    world.gripper.pose[2] = target[2];
    if let Some(id) = world.gripper.held.clone() {
        if let Some(obj) = world.objects.get_mut(&id) {
            obj.pose[0] = target[0];
            obj.pose[1] = target[1];
            obj.pose[2] = target[2];
        }
    }
}

/// Distance from point `p` to the segment `a..b` in the table plane.
fn point_segment_dist_xy(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let (px, py) = (p[0], p[1]);
    let (ax, ay) = (a[0], a[1]);
    let (bx, by) = (b[0], b[1]);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (ax + t * dx, ay + t * dy);
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

/// Apply one skill call to a world snapshot.
///
/// Referencing an undeclared object or skillless call shapes are hard errors;
/// unsatisfied preconditions are `Failure` outcomes that advance only the
/// clock.
pub fn execute_skill(
    world: &WorldState,
    call: &SkillCall,
    cfg: &WorldCfg,
) -> Result<(WorldState, SkillOutcome), WorldError> {
    call.validate()?;
    if let Some(id) = &call.object {
        world.object(id)?;
    }
    let duration = cfg.durations.of(call.skill);

    match call.skill {
        Skill::MoveTo => {
            let target = call.point.unwrap();
            if !in_bounds(target) {
                return Ok(fail(world, duration, "target out of bounds"));
            }
            let mut w = world.clone();
            move_gripper(&mut w, target);
            w.clock += duration;
            Ok((w, SkillOutcome::Success))
        }
        Skill::Pick => {
            let id = call.object.clone().unwrap();
            let point = call.point.unwrap();
            if world.gripper.held.is_some() {
                return Ok(fail(world, duration, "gripper occupied"));
            }
            let obj = world.object(&id)?;
            if dist3(obj.xyz(), point) > cfg.grasp_radius {
                return Ok(fail(world, duration, "object out of grasp radius"));
            }
            let mut w = world.clone();
            move_gripper(&mut w, point);
            w.gripper.held = Some(id.clone());
            let obj = w.objects.get_mut(&id).unwrap();
            obj.pose[0] = point[0];
            obj.pose[1] = point[1];
            obj.pose[2] = point[2];
            obj.flags.insert("grasped".to_string());
            w.clock += duration;
            Ok((w, SkillOutcome::Success))
        }
        Skill::Place => {
            let target = call.point.unwrap();
            let Some(id) = world.gripper.held.clone() else {
                return Ok(fail(world, duration, "nothing held"));
            };
            if !in_bounds(target) {
                return Ok(fail(world, duration, "target out of bounds"));
            }
            let mut w = world.clone();
            move_gripper(&mut w, target);
            w.gripper.held = None;
            w.objects.get_mut(&id).unwrap().flags.remove("grasped");
            w.clock += duration;
            Ok((w, SkillOutcome::Success))
        }
        Skill::Push => {
            let id = call.object.clone().unwrap();
            let target = call.point.unwrap();
            if world.gripper.held.is_some() {
                return Ok(fail(world, duration, "gripper occupied"));
            }
            if !in_bounds(target) {
                return Ok(fail(world, duration, "target out of bounds"));
            }
            let mut w = world.clone();
            let z = w.object(&id)?.pose[2];
            let obj = w.objects.get_mut(&id).unwrap();
            obj.pose[0] = target[0];
            obj.pose[1] = target[1];
            move_gripper(&mut w, [target[0], target[1], z]);
            w.clock += duration;
            Ok((w, SkillOutcome::Success))
        }
        Skill::Wipe => {
            let center = call.point.unwrap();
            let Some(held) = world.gripper.held.clone() else {
                return Ok(fail(world, duration, "no wiper held"));
            };
            if !world.object(&held)?.has_flag("absorbent") {
                return Ok(fail(world, duration, "held object is not absorbent"));
            }
            let a = [center[0] - cfg.stroke_half_len, center[1], center[2]];
            let b = [center[0] + cfg.stroke_half_len, center[1], center[2]];
            let mut w = world.clone();
            let wet_ids: Vec<String> = w
                .objects
                .iter()
                .filter(|(_, o)| o.has_flag("wet"))
                .filter(|(_, o)| point_segment_dist_xy(o.xyz(), a, b) <= cfg.wipe_half_width)
                .map(|(id, _)| id.clone())
                .collect();
            for id in wet_ids {
                w.objects.get_mut(&id).unwrap().flags.remove("wet");
            }
            move_gripper(&mut w, b);
            w.clock += duration;
            Ok((w, SkillOutcome::Success))
        }
        Skill::Pour => {
            let dest = call.object.clone().unwrap();
            let Some(src) = world.gripper.held.clone() else {
                return Ok(fail(world, duration, "source not held"));
            };
            if src == dest {
                return Ok(fail(world, duration, "cannot pour into the held object"));
            }
            if !world.object(&src)?.has_flag("filled") {
                return Ok(fail(world, duration, "source empty"));
            }
            let dest_obj = world.object(&dest)?;
            let above = dist_xy(world.gripper.xyz(), dest_obj.xyz()) <= cfg.aperture_radius
                && world.gripper.pose[2] > dest_obj.pose[2];
            if !above {
                return Ok(fail(world, duration, "destination aperture not under source"));
            }
            let mut w = world.clone();
            w.objects.get_mut(&src).unwrap().flags.remove("filled");
            w.objects
                .get_mut(&dest)
                .unwrap()
                .flags
                .insert("filled".to_string());
            w.clock += duration;
            Ok((w, SkillOutcome::Success))
        }
        Skill::PullOpen => {
            let id = call.object.clone().unwrap();
            if world.gripper.held.is_some() {
                return Ok(fail(world, duration, "gripper occupied"));
            }
            let obj = world.object(&id)?;
            if dist3(world.gripper.xyz(), obj.xyz()) > cfg.grasp_radius {
                return Ok(fail(world, duration, "handle out of reach"));
            }
            let mut w = world.clone();
            w.objects
                .get_mut(&id)
                .unwrap()
                .flags
                .insert("open".to_string());
            w.clock += duration;
            Ok((w, SkillOutcome::Success))
        }
    }
}
