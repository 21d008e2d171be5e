//! Seeded trials, ensembles and parameter sweeps.
//!
//! The flow and plume never feel the agents, so every swarm configuration
//! run with the same trial seed sees the same environment. Ensembles exploit
//! this: one environment per trial index drives any number of swarm groups,
//! each of which evolves exactly as it would alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SimError};
use crate::flow::{FlowField, SpectrumConfig};
use crate::geometry::{periodic_offset, Vec2};
use crate::metrics::{mean_nnd, polarity};
use crate::parallel;
use crate::scalar::{ScalarConfig, ScalarField};
use crate::swarm::{step_swarm, Agent, PlumeEnvironment, SwarmConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub swarm: SwarmConfig,
    pub flow: SpectrumConfig,
    pub scalar: ScalarConfig,
    /// Plume development time before agents are released.
    pub spin_up_time: f64,
    pub spin_up_dt: f64,
    /// Agent steps per flow/plume step once agents are released.
    pub field_substeps: usize,
    pub max_time: f64,
    pub success_radius: f64,
    pub start_distance: f64,
    pub n_trials: usize,
    pub base_seed: u64,
    /// Spacing of metric samples and agent snapshots.
    pub snapshot_interval: f64,
    /// Transects used by the filament-width estimator.
    pub n_transects: usize,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            swarm: SwarmConfig::default(),
            flow: SpectrumConfig::default(),
            scalar: ScalarConfig::default(),
            spin_up_time: 2.0,
            spin_up_dt: 4e-3,
            field_substeps: 16,
            max_time: 3.0,
            success_radius: 0.025,
            start_distance: 0.8,
            n_trials: 1000,
            base_seed: 0,
            snapshot_interval: 0.375,
            n_transects: 16,
        }
    }
}

impl TrialConfig {
    /// Same configuration on an `n x n` plume grid, source width kept at two cells.
    pub fn with_grid(mut self, n: usize) -> Self {
        self.scalar.grid_size = n;
        self.scalar.source_width = 2.0 / n as f64;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.swarm.validate()?;
        self.flow.validate()?;
        self.scalar.validate()?;
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        let drift = self.flow.mean_flow.norm();
        if self.swarm.speed <= drift {
            return bad("speed must exceed the mean flow speed");
        }
        if !(self.success_radius > 0.0) {
            return bad("success_radius must be > 0");
        }
        if !(self.start_distance > 0.0 && self.start_distance < 1.0) {
            return bad("start_distance must lie in (0, domain size)");
        }
        if !(self.max_time >= self.start_distance / (self.swarm.speed - drift)) {
            return bad("max_time must be >= start_distance / (speed - mean flow speed)");
        }
        if !(self.spin_up_time >= 0.0) {
            return bad("spin_up_time must be >= 0");
        }
        let limit = self.flow.correlation_time / 10.0;
        if !(self.spin_up_dt > 0.0 && self.spin_up_dt <= limit) {
            return bad("spin_up_dt must lie in (0, correlation_time/10]");
        }
        if self.field_substeps == 0 || self.swarm.dt * self.field_substeps as f64 > limit {
            return bad("field_substeps * dt must lie in (0, correlation_time/10]");
        }
        if !(self.snapshot_interval >= self.swarm.dt) {
            return bad("snapshot_interval must be >= dt");
        }
        if self.n_trials == 0 {
            return bad("n_trials must be >= 1");
        }
        if self.n_transects == 0 {
            return bad("n_transects must be >= 1");
        }
        Ok(())
    }

    /// Unit vector along the mean flow (+y when there is none).
    pub fn downstream(&self) -> Vec2 {
        self.flow
            .mean_flow
            .normalized()
            .unwrap_or(Vec2::new(0.0, 1.0))
    }

    pub fn trial_seed(&self, trial_index: usize) -> u64 {
        self.base_seed.wrapping_add(trial_index as u64)
    }
}

/// Flow and plume for one trial.
#[derive(Debug, Clone)]
pub struct Habitat {
    pub flow: FlowField,
    pub scalar: ScalarField,
}

impl Habitat {
    pub fn new(cfg: &TrialConfig, seed: u64) -> Result<Self> {
        Ok(Self {
            flow: FlowField::new(cfg.flow.clone(), seed)?,
            scalar: ScalarField::new(cfg.scalar.clone())?,
        })
    }

    /// Transports the plume through the current flow, then evolves the flow.
    pub fn advance(&mut self, dt: f64) -> Result<()> {
        self.scalar.step(&self.flow, dt);
        self.flow.step(dt)
    }

    /// Advances by `duration` in steps no longer than `dt`.
    pub fn spin_up(&mut self, duration: f64, dt: f64) -> Result<()> {
        if duration <= 0.0 {
            return Ok(());
        }
        let steps = (duration / dt).ceil() as usize;
        let h = duration / steps as f64;
        for _ in 0..steps {
            self.advance(h)?;
        }
        Ok(())
    }

    pub fn view(&self) -> PlumeEnvironment<'_> {
        PlumeEnvironment {
            flow: &self.flow,
            scalar: &self.scalar,
        }
    }
}

/// Habitat after spin-up for `trial_index`.
pub fn developed_habitat(cfg: &TrialConfig, trial_index: usize) -> Result<Habitat> {
    let mut habitat = Habitat::new(cfg, cfg.trial_seed(trial_index))?;
    habitat.spin_up(cfg.spin_up_time, cfg.spin_up_dt)?;
    Ok(habitat)
}

/// One row of an agent snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecord {
    pub t: f64,
    pub id: usize,
    pub position: Vec2,
    pub heading: Vec2,
    pub confidence: f64,
}

#[derive(Debug, Clone)]
struct Group {
    cfg: SwarmConfig,
    agents: Vec<Agent>,
    /// Unwrapped position per agent id, following the true displacement
    /// from the release point.
    track: Vec<Vec2>,
    arrivals: Vec<Option<f64>>,
    polarity: Vec<(f64, f64)>,
    nnd: Vec<(f64, f64)>,
    records: Option<Vec<AgentRecord>>,
}

impl Group {
    fn observe(&mut self, t: f64) {
        if let Ok(p) = polarity(&self.agents) {
            self.polarity.push((t, p));
        }
        if let Ok(d) = mean_nnd(&self.agents) {
            self.nnd.push((t, d));
        }
        if let Some(records) = &mut self.records {
            records.extend(self.agents.iter().map(|a| AgentRecord {
                t,
                id: a.id,
                position: a.position,
                heading: a.heading,
                confidence: a.confidence,
            }));
        }
    }

    fn follow(&mut self) {
        for a in &self.agents {
            let p = &mut self.track[a.id];
            *p += periodic_offset(*p, a.position);
        }
    }

    /// Removes agents that reached the source they were released downstream
    /// of. Other periodic images of the source do not count.
    fn collect_arrivals(&mut self, source: Vec2, radius: f64, t: f64) {
        let arrivals = &mut self.arrivals;
        let track = &self.track;
        self.agents.retain(|a| {
            if (track[a.id] - source).norm() <= radius {
                arrivals[a.id] = Some(t);
                false
            } else {
                true
            }
        });
    }
}

/// Everything needed to run one trial for one or more swarm groups.
#[derive(Debug, Clone)]
pub struct TrialState {
    pub trial_index: usize,
    pub habitat: Habitat,
    /// Centre of the release disc, wrapped into the domain.
    pub start_centre: Vec2,
    cfg: TrialConfig,
    groups: Vec<Group>,
}

impl TrialState {
    /// Initial agents of group `g`.
    pub fn agents(&self, g: usize) -> &[Agent] {
        &self.groups[g].agents
    }
}

/// Spins up the plume for `trial_index` and releases one swarm.
pub fn init_trial(cfg: &TrialConfig, trial_index: usize) -> Result<TrialState> {
    init_batch(cfg, std::slice::from_ref(&cfg.swarm), trial_index, false)
}

/// Spins up the plume for `trial_index` and releases one group per swarm
/// configuration into it. All groups must share the time step.
pub fn init_batch(
    cfg: &TrialConfig,
    swarms: &[SwarmConfig],
    trial_index: usize,
    record_agents: bool,
) -> Result<TrialState> {
    cfg.validate()?;
    for s in swarms {
        s.validate()?;
        if s.dt != cfg.swarm.dt {
            return Err(SimError::InvalidConfig(
                "all swarm groups in a trial must share dt".into(),
            ));
        }
    }
    let seed = cfg.trial_seed(trial_index);
    let habitat = developed_habitat(cfg, trial_index)?;
    let start_centre = filament_start(cfg, &habitat.scalar)?;
    let downstream = cfg.downstream();
    let groups = swarms
        .iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            let (agents, track) = place_agents(&mut rng, s, start_centre, downstream);
            Group {
                cfg: s.clone(),
                track,
                arrivals: vec![None; agents.len()],
                agents,
                polarity: Vec::new(),
                nnd: Vec::new(),
                records: record_agents.then(Vec::new),
            }
        })
        .collect();
    Ok(TrialState {
        trial_index,
        habitat,
        start_centre: start_centre.wrapped(),
        cfg: cfg.clone(),
        groups,
    })
}

/// Point on the filament `start_distance` downstream of the source: the
/// concentration maximum along the transverse line at that distance. With the
/// source switched off there is no filament and the nominal point is used.
/// Returned unwrapped, so it lies exactly `start_distance` from the source
/// along the flow.
fn filament_start(cfg: &TrialConfig, scalar: &ScalarField) -> Result<Vec2> {
    let dir = cfg.downstream();
    let perp = Vec2::new(-dir.y, dir.x);
    let line_centre = cfg.scalar.source + dir * cfg.start_distance;
    if cfg.scalar.amplitude == 0.0 {
        return Ok(line_centre);
    }
    let mut best = (0.0, scalar.sample_relative(line_centre));
    for (s, c) in scalar.relative_transect(line_centre, perp) {
        if c > best.1 {
            best = (s, c);
        }
    }
    let centre = line_centre + perp * best.0;
    let found = scalar.sample_relative(centre);
    let floor = cfg.swarm.concentration_floor;
    if found < floor {
        return Err(SimError::StartOffFilament { found, floor });
    }
    Ok(centre)
}

/// Agents in the release disc, with their unwrapped starting positions.
fn place_agents(
    rng: &mut ChaCha8Rng,
    cfg: &SwarmConfig,
    centre: Vec2,
    downstream: Vec2,
) -> (Vec<Agent>, Vec<Vec2>) {
    let upstream = (-downstream).angle();
    (0..cfg.n_agents)
        .map(|id| {
            let r = cfg.r_attract_max * rng.random::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            let heading = upstream + (rng.random::<f64>() - 0.5) * std::f64::consts::PI;
            let start = centre + Vec2::from_angle(theta) * r;
            (
                Agent::new(id, start.wrapped(), Vec2::from_angle(heading)),
                start,
            )
        })
        .unzip()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial_index: usize,
    pub n_agents: usize,
    pub n_success: usize,
    /// Arrival time per agent id.
    pub arrival_times: Vec<Option<f64>>,
    /// `(t, ⟨p⟩)` over agents still searching.
    pub polarity_series: Vec<(f64, f64)>,
    /// `(t, ⟨Δr⟩)` over agents still searching.
    pub nnd_series: Vec<(f64, f64)>,
    pub agent_records: Vec<AgentRecord>,
}

impl TrialResult {
    /// Fraction of the group that arrived, if any did.
    pub fn fraction_arrived_given_success(&self) -> Option<f64> {
        (self.n_success > 0).then(|| self.n_success as f64 / self.n_agents as f64)
    }

    pub fn mean_polarity(&self) -> Option<f64> {
        time_average(&self.polarity_series)
    }

    pub fn mean_nnd(&self) -> Option<f64> {
        time_average(&self.nnd_series)
    }
}

fn time_average(series: &[(f64, f64)]) -> Option<f64> {
    (!series.is_empty()).then(|| series.iter().map(|s| s.1).sum::<f64>() / series.len() as f64)
}

/// Steps flow, plume and every group until `max_time` or until no agent is
/// left searching. Agents reaching the success radius are removed.
pub fn run_trial(state: TrialState) -> Result<Vec<TrialResult>> {
    run_trial_with(state, |_, _| Ok(()))
}

/// As [`run_trial`], calling `on_snapshot(t, habitat)` at release and at
/// every snapshot interval.
pub fn run_trial_with<F>(mut state: TrialState, mut on_snapshot: F) -> Result<Vec<TrialResult>>
where
    F: FnMut(f64, &Habitat) -> Result<()>,
{
    let cfg = state.cfg.clone();
    let dt = cfg.swarm.dt;
    let source = cfg.scalar.source;
    let substeps = cfg.field_substeps;
    let total_steps = (cfg.max_time / dt).round() as usize;
    let snap_every = ((cfg.snapshot_interval / dt).round() as usize).max(1);

    for g in &mut state.groups {
        g.collect_arrivals(source, cfg.success_radius, 0.0);
        g.observe(0.0);
    }
    on_snapshot(0.0, &state.habitat)?;
    for s in 1..=total_steps {
        {
            let env = state.habitat.view();
            for g in state.groups.iter_mut().filter(|g| !g.agents.is_empty()) {
                step_swarm(&mut g.agents, &env, &g.cfg);
                g.follow();
            }
        }
        let t = s as f64 * dt;
        for g in &mut state.groups {
            g.collect_arrivals(source, cfg.success_radius, t);
        }
        if state.groups.iter().all(|g| g.agents.is_empty()) {
            break;
        }
        if s % substeps == 0 {
            state.habitat.advance(dt * substeps as f64)?;
        }
        if s % snap_every == 0 {
            for g in &mut state.groups {
                g.observe(t);
            }
            on_snapshot(t, &state.habitat)?;
        }
    }
    Ok(state
        .groups
        .into_iter()
        .map(|g| TrialResult {
            trial_index: state.trial_index,
            n_agents: g.cfg.n_agents,
            n_success: g.arrivals.iter().filter(|a| a.is_some()).count(),
            arrival_times: g.arrivals,
            polarity_series: g.polarity,
            nnd_series: g.nnd,
            agent_records: g.records.unwrap_or_default(),
        })
        .collect())
}

/// Aggregate statistics of one swarm configuration over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n_agents: usize,
    pub completed_trials: usize,
    pub failed_trials: usize,
    pub successes: usize,
    /// Per-agent success probability.
    pub p_success: f64,
    pub se_p: f64,
    /// Fraction of trials in which at least one agent arrived.
    pub p_trial_success: f64,
    pub frac_arrived_given_success: Option<f64>,
    pub mean_polarity: Option<f64>,
    pub mean_nnd: Option<f64>,
}

impl EnsembleStats {
    pub fn from_results(n_agents: usize, results: &[TrialResult], failed_trials: usize) -> Self {
        let completed = results.len();
        let successes: usize = results.iter().map(|r| r.n_success).sum();
        let draws = (n_agents * completed) as f64;
        let p = if draws > 0.0 {
            successes as f64 / draws
        } else {
            f64::NAN
        };
        let se = if draws > 0.0 {
            (p * (1.0 - p) / draws).sqrt()
        } else {
            f64::NAN
        };
        let mean_of = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        let hits = results.iter().filter(|r| r.n_success > 0).count();
        Self {
            n_agents,
            completed_trials: completed,
            failed_trials,
            successes,
            p_success: p,
            se_p: se,
            p_trial_success: if completed > 0 {
                hits as f64 / completed as f64
            } else {
                f64::NAN
            },
            frac_arrived_given_success: mean_of(
                results
                    .iter()
                    .filter_map(|r| r.fraction_arrived_given_success())
                    .collect(),
            ),
            mean_polarity: mean_of(results.iter().filter_map(|r| r.mean_polarity()).collect()),
            mean_nnd: mean_of(results.iter().filter_map(|r| r.mean_nnd()).collect()),
        }
    }

    /// Wilson score interval for the per-agent success probability.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.successes, self.n_agents * self.completed_trials, z)
    }
}

pub fn wilson_interval(successes: usize, draws: usize, z: f64) -> (f64, f64) {
    if draws == 0 {
        return (0.0, 1.0);
    }
    let n = draws as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // the bounds at 0 and n successes are exactly 0 and 1; avoid rounding residue
    let lo = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if successes == draws {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// Raw per-trial output of an ensemble: `results[g][k]` is group `g` in the
/// `k`-th completed trial.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub results: Vec<Vec<TrialResult>>,
    pub failures: Vec<(usize, SimError)>,
}

impl Ensemble {
    pub fn stats(&self, group: usize, n_agents: usize) -> EnsembleStats {
        EnsembleStats::from_results(n_agents, &self.results[group], self.failures.len())
    }
}

/// Runs `cfg.n_trials` seeded trials, each carrying every swarm in `swarms`.
/// Trials run in parallel; output order depends only on the trial index.
pub fn run_ensemble(cfg: &TrialConfig, swarms: &[SwarmConfig]) -> Result<Ensemble> {
    cfg.validate()?;
    let outcomes = parallel::map_indices(cfg.n_trials, |k| {
        init_batch(cfg, swarms, k, false).and_then(run_trial)
    });
    let mut results = vec![Vec::new(); swarms.len()];
    let mut failures = Vec::new();
    for (k, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(groups) => {
                for (g, r) in groups.into_iter().enumerate() {
                    results[g].push(r);
                }
            }
            Err(e) => failures.push((k, e)),
        }
    }
    Ok(Ensemble { results, failures })
}

/// Parameter grid over group size, repulsion radius and memory timescale.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepPlan {
    pub n_agents: Vec<usize>,
    pub repulsion_radius: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl SweepPlan {
    /// Cells in row order: group size outermost, memory timescale innermost.
    pub fn cells(&self) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        for &n in &self.n_agents {
            for &r in &self.repulsion_radius {
                for &a in &self.alpha {
                    out.push((n, r, a));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n_agents: usize,
    pub repulsion_radius: f64,
    pub alpha: f64,
    /// `n_agents · π · repulsion_radius²`.
    pub effective_area: f64,
    pub stats: Option<EnsembleStats>,
    pub n_trials: usize,
    pub base_seed: u64,
    /// `ok`, or why the cell is incomplete.
    pub status: String,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Per-cell trial results, parallel to `rows` (empty for invalid cells).
    pub trials: Vec<Vec<TrialResult>>,
}

/// Runs every cell of `plan` over the same seeded trials.
pub fn sweep(plan: &SweepPlan, cfg: &TrialConfig) -> Result<SweepOutcome> {
    let cells = plan.cells();
    if cells.is_empty() {
        return Err(SimError::InvalidConfig("sweep grid is empty".into()));
    }
    let mut swarms = Vec::new();
    let mut slot = Vec::new();
    let mut invalid = Vec::new();
    for &(n, r, a) in &cells {
        let s = SwarmConfig {
            n_agents: n,
            repulsion_radius: r,
            memory_timescale: a,
            ..cfg.swarm.clone()
        };
        match s.validate() {
            Ok(()) => {
                slot.push(Some(swarms.len()));
                swarms.push(s);
                invalid.push(None);
            }
            Err(e) => {
                slot.push(None);
                invalid.push(Some(e.to_string()));
            }
        }
    }
    let ensemble = if swarms.is_empty() {
        Ensemble {
            results: Vec::new(),
            failures: Vec::new(),
        }
    } else {
        run_ensemble(cfg, &swarms)?
    };
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    for (c, &(n, r, a)) in cells.iter().enumerate() {
        let (stats, status, tr) = match slot[c] {
            Some(g) => {
                let st = ensemble.stats(g, n);
                let status = if ensemble.failures.is_empty() {
                    "ok".to_string()
                } else {
                    format!("failed_trials={}", ensemble.failures.len())
                };
                (Some(st), status, ensemble.results[g].clone())
            }
            None => (
                None,
                format!("invalid: {}", invalid[c].as_deref().unwrap_or("")),
                Vec::new(),
            ),
        };
        rows.push(SweepRow {
            n_agents: n,
            repulsion_radius: r,
            alpha: a,
            effective_area: n as f64 * std::f64::consts::PI * r * r,
            stats,
            n_trials: cfg.n_trials,
            base_seed: cfg.base_seed,
            status,
        });
        trials.push(tr);
    }
    Ok(SweepOutcome { rows, trials })
}
