//! Collective odor-plume tracking.
//!
//! A stochastic divergence-free flow ([`flow`]) stirs a decaying scalar
//! released from a point source ([`scalar`]). Self-propelled agents
//! ([`swarm`]) sense only the local concentration and compare it with a
//! fading memory of what they sensed recently; that confidence sets how
//! strongly each agent aligns with and is drawn to its neighbours. The
//! [`experiment`] module runs seeded trial ensembles and parameter sweeps,
//! and [`config`], [`output`] and [`cli`] make up the command-line tool.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod flow;
pub mod geometry;
pub mod metrics;
pub mod output;
pub mod parallel;
pub mod scalar;
pub mod swarm;

pub use error::{Result, SimError};
pub use experiment::{
    init_batch, init_trial, run_ensemble, run_trial, sweep, EnsembleStats, Habitat, SweepPlan,
    TrialConfig, TrialResult,
};
pub use flow::{FlowField, SpectrumConfig};
pub use geometry::Vec2;
pub use scalar::{ScalarConfig, ScalarField};
pub use swarm::{step_swarm, Agent, SwarmConfig};
