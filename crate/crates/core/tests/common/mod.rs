//! Oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::process::Command;

use plume_swarm::geometry::{min_image, periodic_offset, wrap_unit};
use plume_swarm::swarm::{Environment, NeighborIndex};
use plume_swarm::{
    step_swarm, Agent, FlowField, ScalarConfig, ScalarField, SpectrumConfig, SwarmConfig, Vec2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest centred-difference divergence on the grid relative to the rms
/// centred-difference velocity gradient.
pub fn divergence_ratio(flow: &FlowField) -> f64 {
    let n = flow.grid_size();
    let (u, v) = (flow.u_grid(), flow.v_grid());
    let inv = n as f64 / 2.0;
    let at = |g: &[f64], i: usize, j: usize| g[(j % n) * n + (i % n)];
    let mut max_div = 0.0f64;
    let mut grad_sq = 0.0;
    for j in 0..n {
        for i in 0..n {
            let ux = (at(u, i + 1, j) - at(u, i + n - 1, j)) * inv;
            let uy = (at(u, i, j + 1) - at(u, i, j + n - 1)) * inv;
            let vx = (at(v, i + 1, j) - at(v, i + n - 1, j)) * inv;
            let vy = (at(v, i, j + 1) - at(v, i, j + n - 1)) * inv;
            max_div = max_div.max((ux + vy).abs());
            grad_sq += ux * ux + uy * uy + vx * vx + vy * vy;
        }
    }
    max_div / (grad_sq / (n * n) as f64).sqrt()
}

/// Square root of the time average of the domain mean square fluctuation.
pub fn time_averaged_rms(cfg: &SpectrumConfig, seed: u64, dt: f64, steps: usize) -> f64 {
    let mut flow = FlowField::new(cfg.clone(), seed).unwrap();
    let mut acc = 0.0;
    for _ in 0..steps {
        flow.step(dt).unwrap();
        acc += flow.mean_square_fluctuation();
    }
    (acc / steps as f64).sqrt()
}

/// Bin with the largest time-averaged radial energy, and the bin holding the
/// configured peak wavenumber.
pub fn spectrum_peak(
    cfg: &SpectrumConfig,
    seed: u64,
    dt: f64,
    samples: usize,
    every: usize,
) -> (usize, usize) {
    let mut flow = FlowField::new(cfg.clone(), seed).unwrap();
    let mut acc = vec![0.0; flow.grid_size()];
    for _ in 0..samples {
        for _ in 0..every {
            flow.step(dt).unwrap();
        }
        for (a, e) in acc.iter_mut().zip(flow.radial_spectrum()) {
            *a += e;
        }
    }
    let peak = (1..acc.len())
        .max_by(|&a, &b| acc[a].total_cmp(&acc[b]))
        .unwrap();
    let expected = (cfg.peak_wavenumber() / TAU + 0.5).floor() as usize;
    (peak, expected)
}

pub fn still_flow() -> FlowField {
    uniform_flow(Vec2::ZERO)
}

pub fn uniform_flow(mean: Vec2) -> FlowField {
    let cfg = SpectrumConfig {
        rms_velocity: 0.0,
        mean_flow: mean,
        modes: 32,
        ..SpectrumConfig::default()
    };
    FlowField::new(cfg, 0).unwrap()
}

/// Passive scalar with no source, initialised from `grid`.
pub fn sourceless(n: usize, decay_rate: f64, grid: Vec<f64>) -> ScalarField {
    let cfg = ScalarConfig {
        decay_rate,
        ..ScalarConfig::with_grid(n)
    };
    let mut f = ScalarField::from_unit_grid(cfg, grid).unwrap();
    f.disable_source();
    f
}

pub fn gaussian_blob(n: usize, centre: Vec2, width: f64) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let mut g = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let d = periodic_offset(centre, Vec2::new(i as f64 * h, j as f64 * h));
            g[j * n + i] = (-d.norm_sq() / (2.0 * width * width)).exp();
        }
    }
    g
}

/// Largest relative deviation from `C₀ e^{-bt}` with no flow and no source.
pub fn pure_decay_error(n: usize, b: f64, dt: f64, t: f64) -> f64 {
    let init = gaussian_blob(n, Vec2::new(0.3, 0.6), 0.05);
    let mut f = sourceless(n, b, init.clone());
    let flow = still_flow();
    let steps = (t / dt).round() as usize;
    for _ in 0..steps {
        f.step(&flow, dt);
    }
    let expect = (-b * steps as f64 * dt).exp();
    init.iter()
        .zip(f.unit_grid())
        .filter(|(c0, _)| **c0 > 1e-200)
        .map(|(c0, c)| (c / (c0 * expect) - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Periodic centre of mass via the circular mean along each axis.
pub fn centre_of_mass(grid: &[f64], n: usize) -> Vec2 {
    let mut sx = (0.0, 0.0);
    let mut sy = (0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let c = grid[j * n + i];
            let (ax, ay) = (TAU * i as f64 / n as f64, TAU * j as f64 / n as f64);
            sx.0 += c * ax.cos();
            sx.1 += c * ax.sin();
            sy.0 += c * ay.cos();
            sy.1 += c * ay.sin();
        }
    }
    Vec2::new(
        wrap_unit(sx.1.atan2(sx.0) / TAU),
        wrap_unit(sy.1.atan2(sy.0) / TAU),
    )
}

/// Centre-of-mass error, in grid cells, after advecting a blob in the
/// uniform flow `(0, speed)` for time `t`.
pub fn blob_translation_error(n: usize, speed: f64, dt: f64, t: f64) -> f64 {
    let start = Vec2::new(0.5, 0.2);
    let mut f = sourceless(n, 0.0, gaussian_blob(n, start, 0.03));
    let flow = uniform_flow(Vec2::new(0.0, speed));
    let steps = (t / dt).round() as usize;
    for _ in 0..steps {
        f.step(&flow, dt);
    }
    let moved = centre_of_mass(f.unit_grid(), n);
    let expect = (start + Vec2::new(0.0, speed * steps as f64 * dt)).wrapped();
    periodic_offset(expect, moved).norm() * n as f64
}

/// Stochastic flow on a grid of `modes` per axis, default spectrum otherwise.
pub fn stirring_flow(modes: usize, seed: u64) -> FlowField {
    let cfg = SpectrumConfig {
        modes,
        ..SpectrumConfig::default()
    };
    FlowField::new(cfg, seed).unwrap()
}

/// Advects a random field without decay or source and reports how far the
/// running maximum rose and the running minimum fell (both should be zero).
pub fn extrema_growth(n: usize, steps: usize, dt: f64, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
    let hi0 = init.iter().copied().fold(f64::MIN, f64::max);
    let lo0 = init.iter().copied().fold(f64::MAX, f64::min);
    let mut f = sourceless(n, 0.0, init);
    let mut flow = stirring_flow(64, seed);
    let (mut rise, mut fall) = (0.0f64, 0.0f64);
    for _ in 0..steps {
        f.step(&flow, dt);
        flow.step(dt).unwrap();
        let hi = f.unit_grid().iter().copied().fold(f64::MIN, f64::max);
        let lo = f.unit_grid().iter().copied().fold(f64::MAX, f64::min);
        rise = rise.max(hi - hi0);
        fall = fall.max(lo0 - lo);
    }
    (rise, fall)
}

/// Relative change of total mass after `steps` transport steps in the
/// stochastic flow, no decay, no source.
pub fn mass_drift(n: usize, steps: usize, dt: f64, seed: u64) -> f64 {
    let mut f = sourceless(n, 0.0, gaussian_blob(n, Vec2::new(0.5, 0.5), 0.08));
    let m0 = f.total_mass();
    let mut flow = stirring_flow(128, seed);
    for _ in 0..steps {
        f.step(&flow, dt);
        flow.step(dt).unwrap();
    }
    (f.total_mass() / m0 - 1.0).abs()
}

/// Smooth periodic test environment with a spatially varying flow and a
/// signal that flickers in time through `phase`.
pub struct Wavy {
    pub mean: Vec2,
    pub amp: f64,
    pub phase: f64,
}

impl Environment for Wavy {
    fn velocity(&self, p: Vec2) -> Vec2 {
        let (x, y) = (TAU * p.x, TAU * p.y);
        self.mean + Vec2::new(y.sin() * 2.0 * x.cos(), -(x.sin() * 3.0 * y.cos())) * self.amp
    }

    fn signal(&self, p: Vec2) -> f64 {
        let s = (TAU * 3.0 * p.x + self.phase).sin() * (TAU * 2.0 * p.y - self.phase).cos();
        (s * s * s).max(0.0)
    }
}

#[derive(Debug, Default)]
pub struct InvariantReport {
    pub agent_steps: usize,
    pub max_speed_error: f64,
    pub max_turn_excess: f64,
    pub confidence_violations: usize,
}

pub fn random_swarm_config(rng: &mut ChaCha8Rng) -> SwarmConfig {
    SwarmConfig {
        n_agents: rng.random_range(1..=80),
        repulsion_radius: rng.random_range(0.5e-3..6e-3),
        memory_timescale: rng.random_range(0.2e-3..30e-3),
        turn_gain: rng.random_range(10.0..400.0),
        turn_cap: rng.random_range(10.0..300.0),
        ..SwarmConfig::default()
    }
}

pub fn random_agents(rng: &mut ChaCha8Rng, n: usize, centre: Vec2, spread: f64) -> Vec<Agent> {
    (0..n)
        .map(|id| {
            let p = centre
                + Vec2::new(
                    rng.random_range(-spread..spread),
                    rng.random_range(-spread..spread),
                );
            Agent::new(id, p.wrapped(), Vec2::from_angle(rng.random_range(-PI..PI)))
        })
        .collect()
}

/// Runs randomized swarms for `total_steps` swarm steps in total and checks
/// self-propulsion speed, the turn-rate bound and the confidence range on
/// every agent update.
pub fn agent_invariants(seed: u64, configs: usize, steps_per_config: usize) -> InvariantReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = InvariantReport::default();
    for _ in 0..configs {
        let cfg = random_swarm_config(&mut rng);
        let centre = Vec2::new(rng.random(), rng.random());
        let spread = rng.random_range(0.005..0.2);
        let mut agents = random_agents(&mut rng, cfg.n_agents, centre, spread);
        let mut env = Wavy {
            mean: Vec2::from_angle(rng.random_range(-PI..PI)) * rng.random_range(0.0..0.8),
            amp: rng.random_range(0.0..0.3),
            phase: 0.0,
        };
        let omega = rng.random_range(0.0..2000.0);
        for _ in 0..steps_per_config {
            let before = agents.clone();
            step_swarm(&mut agents, &env, &cfg);
            for (a, b) in before.iter().zip(&agents) {
                // undo the flow part of the midpoint move to isolate swimming
                let swim = b.heading * cfg.speed;
                let mid = a.position + (env.velocity(a.position) + swim) * (0.5 * cfg.dt);
                let moved = periodic_offset(a.position, b.position);
                let swim_speed = (moved * (1.0 / cfg.dt) - env.velocity(mid)).norm();
                report.max_speed_error = report.max_speed_error.max((swim_speed - cfg.speed).abs());
                let turn = a
                    .heading
                    .cross(b.heading)
                    .atan2(a.heading.dot(b.heading))
                    .abs();
                report.max_turn_excess = report.max_turn_excess.max(turn - cfg.turn_cap * cfg.dt);
                if !(0.0..=1.0).contains(&b.confidence) {
                    report.confidence_violations += 1;
                }
                report.agent_steps += 1;
            }
            env.phase += omega * cfg.dt;
        }
    }
    report
}

/// Number of queries where the grid index disagrees with an O(N²) scan.
pub fn index_mismatches(seed: u64, configurations: usize, agents: usize, queries: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..configurations {
        let cell = rng.random_range(0.02..0.3);
        let pts: Vec<Vec2> = (0..agents)
            .map(|_| Vec2::new(rng.random(), rng.random()))
            .collect();
        let index = NeighborIndex::build(&pts, cell);
        for _ in 0..queries {
            let q = rng.random_range(0..agents);
            let r = rng.random_range(0.0..index.cell_size());
            let fast = index.query(pts[q], r, Some(q)).unwrap();
            let slow: Vec<usize> = (0..agents)
                .filter(|&j| j != q && periodic_offset(pts[q], pts[j]).norm() <= r)
                .collect();
            if fast != slow {
                bad += 1;
            }
        }
    }
    bad
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_plume-swarm")
}

/// Runs the command-line tool, panicking with its stderr on failure.
pub fn run_tool(args: &[&str]) -> String {
    let out = Command::new(bin())
        .args(args)
        .env("SIM_THREADS", "0")
        .output()
        .expect("launch tool");
    assert!(
        out.status.success(),
        "{:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Names of the CSV files in `dir`, sorted.
pub fn csv_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names
}

/// Whether every CSV in `a` exists in `b` with identical bytes.
pub fn same_csvs(a: &Path, b: &Path) -> bool {
    let names = csv_files(a);
    !names.is_empty()
        && names == csv_files(b)
        && names
            .iter()
            .all(|n| std::fs::read(a.join(n)).unwrap() == std::fs::read(b.join(n)).unwrap())
}

pub fn min_image_dist(a: f64, b: f64) -> f64 {
    min_image(a - b).abs()
}
