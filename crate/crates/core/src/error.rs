use thiserror::Error;

/// Errors raised while building or stepping a simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("time step {dt} exceeds correlation_time/10 = {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("query radius {radius} exceeds index cell size {cell}")]
    QueryRadius { radius: f64, cell: f64 },
    #[error("start position off the filament: concentration {found} below floor {floor}")]
    StartOffFilament { found: f64, floor: f64 },
    #[error("no filament found on any transect")]
    NoFilament,
    #[error("metric undefined for {0} agents")]
    EmptyGroup(usize),
}

pub type Result<T> = std::result::Result<T, SimError>;
