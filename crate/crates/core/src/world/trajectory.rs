//! Waypoint generation between 6D poses: linear position interpolation with
//! shortest-path angle wrapping.

use super::{in_bounds, WorldError};

fn wrap_pi(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut v = (a + std::f64::consts::PI) % two_pi;
    if v < 0.0 {
        v += two_pi;
    }
    v - std::f64::consts::PI
}

/// `n` waypoints from `current` to `target`: positions interpolate linearly,
/// angles along the shortest arc. First equals `current`, last `target`.
pub fn reaching_trajectory(
    current: [f64; 6],
    target: [f64; 6],
    n: usize,
) -> Result<Vec<[f64; 6]>, WorldError> {
    if n < 2 {
        return Err(WorldError::TooFewWaypoints(n));
    }
    for pose in [current, target] {
        let p = [pose[0], pose[1], pose[2]];
        if !in_bounds(p) {
            return Err(WorldError::OutOfBounds(p));
        }
    }
    let mut deltas = [0.0f64; 6];
    for i in 0..3 {
        deltas[i] = target[i] - current[i];
    }
    for i in 3..6 {
        deltas[i] = wrap_pi(target[i] - current[i]);
    }
    Ok((0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            let mut wp = [0.0f64; 6];
            for i in 0..3 {
                wp[i] = current[i] + t * deltas[i];
            }
            for i in 3..6 {
                wp[i] = wrap_pi(current[i] + t * deltas[i]);
            }
            wp
        })
        .collect())
}
