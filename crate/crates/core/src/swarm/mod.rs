//! Self-propelled agents advected by the flow, steering by context-dependent
//! repulsion, orientation and attraction zones.

mod index;
mod rules;

pub use index::NeighborIndex;
pub use rules::{
    desired_direction, signed_angle, steer, update_confidence, zone_radii, Neighbor, ZoneRadii,
    DIRECTION_EPS,
};

use crate::error::{Result, SimError};
use crate::flow::FlowField;
use crate::geometry::Vec2;
use crate::parallel;
use crate::scalar::ScalarField;
use std::cell::RefCell;

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: usize,
    pub position: Vec2,
    /// Unit swimming direction.
    pub heading: Vec2,
    /// Running decayed maximum of sensed concentration.
    pub memory_max: f64,
    /// Current sample over `memory_max`, in `[0, 1]`.
    pub confidence: f64,
}

impl Agent {
    pub fn new(id: usize, position: Vec2, heading: Vec2) -> Self {
        Self {
            id,
            position: position.wrapped(),
            heading: heading.normalized().unwrap_or(Vec2::new(1.0, 0.0)),
            memory_max: 0.0,
            confidence: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmConfig {
    pub n_agents: usize,
    pub speed: f64,
    /// Maximum angular speed γ, radians per unit time.
    pub turn_cap: f64,
    /// Proportional turning gain, per unit time.
    pub turn_gain: f64,
    pub repulsion_radius: f64,
    pub r_orient_max: f64,
    pub r_attract_max: f64,
    /// Memory e-folding time α.
    pub memory_timescale: f64,
    pub dt: f64,
    /// Confidence is zero while the memory is below this fraction of the
    /// source's steady peak.
    pub concentration_floor: f64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            n_agents: 60,
            speed: 1.6,
            turn_cap: 140.0,
            turn_gain: 140.0,
            repulsion_radius: 2e-3,
            r_orient_max: 0.075,
            r_attract_max: 0.125,
            memory_timescale: 12.5e-3,
            dt: 2.5e-4,
            concentration_floor: 1e-6,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.speed) {
            return bad("speed must be > 0");
        }
        if !positive(self.dt) {
            return bad("dt must be > 0");
        }
        if !positive(self.turn_cap) || !positive(self.turn_gain) {
            return bad("turn_cap and turn_gain must be > 0");
        }
        if !positive(self.memory_timescale) {
            return bad("alpha must be > 0");
        }
        if !(self.concentration_floor >= 0.0) {
            return bad("concentration_floor must be >= 0");
        }
        if !(self.repulsion_radius > 0.0
            && self.repulsion_radius < self.r_orient_max
            && self.r_orient_max < self.r_attract_max)
        {
            return bad(
                "zone radii must satisfy 0 < repulsion_radius < r_orient_max < r_attract_max",
            );
        }
        if self.r_attract_max > 0.5 {
            return bad("r_attract_max must be <= half the domain");
        }
        if self.dt * self.turn_cap >= std::f64::consts::PI {
            return bad("dt * turn_cap must be < pi");
        }
        Ok(())
    }

    /// Largest radius any zone can take.
    pub fn max_radius(&self) -> f64 {
        self.r_attract_max
            .max(self.r_orient_max)
            .max(self.repulsion_radius)
    }
}

/// What the agents can sense and are carried by.
pub trait Environment: Sync {
    fn velocity(&self, p: Vec2) -> Vec2;
    /// Concentration in units of a fixed reference; only ratios matter.
    fn signal(&self, p: Vec2) -> f64;
}

/// Flow plus plume, read-only view.
#[derive(Clone, Copy)]
pub struct PlumeEnvironment<'a> {
    pub flow: &'a FlowField,
    pub scalar: &'a ScalarField,
}

impl Environment for PlumeEnvironment<'_> {
    #[inline]
    fn velocity(&self, p: Vec2) -> Vec2 {
        self.flow.velocity(p)
    }

    #[inline]
    fn signal(&self, p: Vec2) -> f64 {
        self.scalar.sample_relative(p)
    }
}

/// Advances every agent by one synchronous step.
///
/// Confidence, zone radii and desired directions are all computed from the
/// beginning-of-step snapshot; then each heading is steered and the position
/// advanced with a midpoint rule in the frozen velocity field.
pub fn step_swarm<E: Environment>(agents: &mut Vec<Agent>, env: &E, cfg: &SwarmConfig) {
    let positions: Vec<Vec2> = agents.iter().map(|a| a.position).collect();
    let index = NeighborIndex::build(&positions, cfg.max_radius());
    let snapshot: &[Agent] = agents;
    let next = parallel::map_indices(snapshot.len(), |i| {
        advance_agent(i, snapshot, &index, env, cfg)
    });
    *agents = next;
}

thread_local! {
    static NEIGHBORS: RefCell<Vec<Neighbor>> = const { RefCell::new(Vec::new()) };
}

fn advance_agent<E: Environment>(
    i: usize,
    snapshot: &[Agent],
    index: &NeighborIndex,
    env: &E,
    cfg: &SwarmConfig,
) -> Agent {
    let mut me = snapshot[i].clone();
    let sensed = env.signal(me.position);
    update_confidence(&mut me, sensed, cfg);
    let radii = zone_radii(me.confidence, cfg);
    let reach = radii.attract.max(radii.orient).max(cfg.repulsion_radius);
    let direction = NEIGHBORS.with(|buf| {
        let mut neighbors = buf.borrow_mut();
        neighbors.clear();
        index
            .visit_within(me.position, reach, Some(i), |id, offset, distance| {
                neighbors.push(Neighbor {
                    id,
                    offset,
                    distance,
                    heading: snapshot[id].heading,
                })
            })
            .expect("zone radii never exceed the index cell");
        // canonical order keeps sums independent of the cell layout
        neighbors.sort_unstable_by_key(|nb| nb.id);
        desired_direction(&neighbors, radii, cfg)
    });
    if let Some(d) = direction {
        me.heading = steer(me.heading, d, cfg);
    }
    let swim = me.heading * cfg.speed;
    let r0 = me.position;
    let mid = r0 + (env.velocity(r0) + swim) * (0.5 * cfg.dt);
    me.position = (r0 + (env.velocity(mid) + swim) * cfg.dt).wrapped();
    me
}
