//! Per-agent behavioural rules: decaying-memory confidence, context-dependent
//! zone radii, zonal desired direction and rate-limited steering.

use std::f64::consts::PI;

use super::{Agent, SwarmConfig};
use crate::geometry::Vec2;

/// Directions whose magnitude falls below this are treated as no preference.
pub const DIRECTION_EPS: f64 = 1e-12;

/// Updates the running decayed maximum and the confidence ratio for a new
/// concentration sample `c_now`.
///
/// The current sample is part of the maximum, so the ratio never exceeds one.
pub fn update_confidence(agent: &mut Agent, c_now: f64, cfg: &SwarmConfig) {
    let fade = (-cfg.dt / cfg.memory_timescale).exp();
    agent.memory_max = c_now.max(agent.memory_max * fade);
    agent.confidence = if agent.memory_max > cfg.concentration_floor {
        (c_now / agent.memory_max).clamp(0.0, 1.0)
    } else {
        0.0
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneRadii {
    pub attract: f64,
    pub orient: f64,
}

/// `R_A = (1 - C)² R_A,max` and `R_O = sin²(πC) R_O,max`.
pub fn zone_radii(confidence: f64, cfg: &SwarmConfig) -> ZoneRadii {
    let c = confidence.clamp(0.0, 1.0);
    // reflect about one half so the zeros at C = 0 and C = 1 are exact
    let s = (PI * c.min(1.0 - c)).sin();
    ZoneRadii {
        attract: (1.0 - c) * (1.0 - c) * cfg.r_attract_max,
        orient: s * s * cfg.r_orient_max,
    }
}

/// A neighbour as seen from the focal agent.
#[derive(Debug, Clone, Copy)]
pub struct Neighbor {
    pub id: usize,
    /// Minimum-image offset from the focal agent to the neighbour.
    pub offset: Vec2,
    pub distance: f64,
    pub heading: Vec2,
}

/// Desired direction from repulsion, or from attraction plus alignment when
/// nobody is inside the repulsion zone. `None` means keep the current heading.
pub fn desired_direction(
    neighbors: &[Neighbor],
    radii: ZoneRadii,
    cfg: &SwarmConfig,
) -> Option<Vec2> {
    let mut repel = Vec2::ZERO;
    let mut repelled = false;
    for nb in neighbors {
        if nb.distance <= cfg.repulsion_radius {
            repelled = true;
            if nb.distance > 0.0 {
                repel += nb.offset * (-1.0 / nb.distance);
            }
        }
    }
    let d = if repelled {
        repel
    } else {
        let mut social = Vec2::ZERO;
        for nb in neighbors {
            if nb.distance <= radii.attract && nb.distance > 0.0 {
                social += nb.offset * (1.0 / nb.distance);
            }
            if nb.distance <= radii.orient {
                social += nb.heading;
            }
        }
        social
    };
    if d.norm() < DIRECTION_EPS {
        None
    } else {
        d.normalized()
    }
}

/// Signed angle from `from` to `to`, in `(-π, π]`.
pub fn signed_angle(from: Vec2, to: Vec2) -> f64 {
    let a = from.cross(to).atan2(from.dot(to));
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Turns `heading` toward `desired` by `clamp(gain·Δθ, ±γ)·dt`, never past it.
pub fn steer(heading: Vec2, desired: Vec2, cfg: &SwarmConfig) -> Vec2 {
    let delta = signed_angle(heading, desired);
    let rate = (cfg.turn_gain * delta).clamp(-cfg.turn_cap, cfg.turn_cap);
    let step = (rate * cfg.dt).clamp(-delta.abs(), delta.abs());
    if step == 0.0 {
        return heading;
    }
    let turned = heading.rotate(step);
    turned.normalized().unwrap_or(heading)
}
