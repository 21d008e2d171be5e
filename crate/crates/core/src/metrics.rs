//! Group-level observables: polarity and mean nearest-neighbour distance.

use crate::error::{Result, SimError};
use crate::geometry::periodic_distance;
use crate::swarm::Agent;

/// Magnitude of the mean heading, in `[0, 1]`.
pub fn polarity(agents: &[Agent]) -> Result<f64> {
    if agents.is_empty() {
        return Err(SimError::EmptyGroup(0));
    }
    let (sx, sy) = agents
        .iter()
        .fold((0.0, 0.0), |(x, y), a| (x + a.heading.x, y + a.heading.y));
    Ok((sx.hypot(sy) / agents.len() as f64).min(1.0))
}

/// Average over agents of the wrapped distance to the closest other agent.
pub fn mean_nnd(agents: &[Agent]) -> Result<f64> {
    if agents.len() < 2 {
        return Err(SimError::EmptyGroup(agents.len()));
    }
    let total: f64 = agents
        .iter()
        .enumerate()
        .map(|(i, a)| {
            agents
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| periodic_distance(a.position, b.position))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / agents.len() as f64)
}
