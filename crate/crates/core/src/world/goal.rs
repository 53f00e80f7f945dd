//! Goal conditions as conjunctions of positive or negated atoms over object
//! status flags and spatial relations.

use super::{dist_xy, WorldCfg, WorldError, WorldState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    /// Object carries the named status flag.
    Flag { object: String, flag: String },
    /// `above` rests on `below`: horizontally within the support radius and
    /// not beneath it.
    On { above: String, below: String },
    /// `inner` sits within `outer`'s footprint and height band.
    Inside { inner: String, outer: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub negated: bool,
    pub pred: Predicate,
}

/// Conjunction of atoms; the empty conjunction is vacuously true.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GoalCondition {
    pub atoms: Vec<Atom>,
}

fn eval_pred(world: &WorldState, pred: &Predicate, cfg: &WorldCfg) -> Result<bool, WorldError> {
    let get = |id: &str| {
        world
            .objects
            .get(id)
            .ok_or_else(|| WorldError::UndeclaredObject(id.to_string()))
    };
    match pred {
        Predicate::Flag { object, flag } => Ok(get(object)?.has_flag(flag)),
        Predicate::On { above, below } => {
            let (a, b) = (get(above)?, get(below)?);
            Ok(dist_xy(a.xyz(), b.xyz()) <= cfg.support_radius && a.pose[2] >= b.pose[2] - 1e-9)
        }
        Predicate::Inside { inner, outer } => {
            let (a, b) = (get(inner)?, get(outer)?);
            Ok(dist_xy(a.xyz(), b.xyz()) <= cfg.inside_radius
                && (a.pose[2] - b.pose[2]).abs() <= 0.08)
        }
    }
}

/// True iff every atom of the conjunction holds in `world`.
pub fn check_goal(
    world: &WorldState,
    goal: &GoalCondition,
    cfg: &WorldCfg,
) -> Result<bool, WorldError> {
    for atom in &goal.atoms {
        let v = eval_pred(world, &atom.pred, cfg)?;
        if v == atom.negated {
            return Ok(false);
        }
    }
    Ok(true)
}

impl Atom {
    /// Parse one goal line: `[not] flag <obj> <flag>` | `[not] on <a> <b>` |
    /// `[not] inside <a> <b>`.
    pub fn parse(line: &str) -> Result<Atom, WorldError> {
        let mut toks: Vec<&str> = line.split_whitespace().collect();
        let negated = toks.first() == Some(&"not");
        if negated {
            toks.remove(0);
        }
        let bad = || WorldError::TaskFormat(format!("bad goal atom {line:?}"));
        if toks.len() != 3 {
            return Err(bad());
        }
        let pred = match toks[0] {
            "flag" => Predicate::Flag {
                object: toks[1].to_string(),
                flag: toks[2].to_string(),
            },
            "on" => Predicate::On {
                above: toks[1].to_string(),
                below: toks[2].to_string(),
            },
            "inside" => Predicate::Inside {
                inner: toks[1].to_string(),
                outer: toks[2].to_string(),
            },
            _ => return Err(bad()),
        };
        Ok(Atom { negated, pred })
    }

    pub fn render(&self) -> String {
        let body = match &self.pred {
            Predicate::Flag { object, flag } => format!("flag {object} {flag}"),
            Predicate::On { above, below } => format!("on {above} {below}"),
            Predicate::Inside { inner, outer } => format!("inside {inner} {outer}"),
        };
        if self.negated {
            format!("not {body}")
        } else {
            body
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::ObjectState;
    use std::collections::BTreeMap;

    fn world() -> WorldState {
        let mut objects = BTreeMap::new();
        objects.insert(
            "cup".to_string(),
            ObjectState::new([0.6, 0.6, 0.03, 0.0], &["filled"]),
        );
        objects.insert(
            "saucer".to_string(),
            ObjectState::new([0.6, 0.62, 0.01, 0.0], &[]),
        );
        WorldState {
            objects,
            gripper: Default::default(),
            clock: 0.0,
        }
    }

    #[test]
    fn empty_conjunction_is_vacuously_true() {
        assert!(check_goal(&world(), &GoalCondition::default(), &WorldCfg::default()).unwrap());
    }

    #[test]
    fn flag_and_spatial_atoms_evaluate() {
        let cfg = WorldCfg::default();
        let goal = GoalCondition {
            atoms: vec![
                Atom::parse("flag cup filled").unwrap(),
                Atom::parse("on cup saucer").unwrap(),
                Atom::parse("not flag saucer filled").unwrap(),
            ],
        };
        assert!(check_goal(&world(), &goal, &cfg).unwrap());

        let goal = GoalCondition {
            atoms: vec![Atom::parse("not flag cup filled").unwrap()],
        };
        assert!(!check_goal(&world(), &goal, &cfg).unwrap());
    }

    #[test]
    fn undeclared_objects_error() {
        let goal = GoalCondition {
            atoms: vec![Atom::parse("flag ghost wet").unwrap()],
        };
        assert!(matches!(
            check_goal(&world(), &goal, &WorldCfg::default()),
            Err(WorldError::UndeclaredObject(_))
        ));
    }

    #[test]
    fn atom_parse_render_round_trip() {
        for s in ["flag cup filled", "not on a b", "inside x y"] {
            assert_eq!(Atom::parse(s).unwrap().render(), s);
        }
        assert!(Atom::parse("nonsense line").is_err());
    }
}
