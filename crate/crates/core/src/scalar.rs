//! Semi-Lagrangian transport of a decaying scalar released from a point source.
//!
//! The field is linear in the source amplitude, so it is stored per unit
//! amplitude and scaled on read. This makes anything that only looks at
//! concentration ratios exactly independent of the amplitude.

use crate::error::{Result, SimError};
use crate::flow::FlowField;
use crate::geometry::{bilinear_monotone, bilinear_periodic, min_image, periodic_offset, Vec2};
use crate::parallel;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarConfig {
    pub grid_size: usize,
    pub source: Vec2,
    /// Injection rate; mass per unit time.
    pub amplitude: f64,
    /// Linear decay rate `b`.
    pub decay_rate: f64,
    /// Standard deviation of the Gaussian source kernel, in domain units.
    pub source_width: f64,
}

impl Default for ScalarConfig {
    fn default() -> Self {
        Self::with_grid(512)
    }
}

impl ScalarConfig {
    /// Defaults with a source two cells wide on an `n x n` grid.
    pub fn with_grid(n: usize) -> Self {
        Self {
            grid_size: n,
            source: Vec2::new(0.5, 0.1),
            amplitude: 1.0,
            decay_rate: 4.0,
            source_width: 2.0 / n as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.grid_size < 64 {
            return bad("grid_size must be >= 64");
        }
        if !(self.decay_rate >= 0.0 && self.decay_rate.is_finite()) {
            return bad("decay_rate must be >= 0");
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return bad("source_amplitude must be >= 0");
        }
        if !(self.source_width * self.grid_size as f64 >= 1.0 - 1e-12) {
            return bad("source_width must be at least one grid cell");
        }
        if !(0.0..1.0).contains(&self.source.x) || !(0.0..1.0).contains(&self.source.y) {
            return bad("source position must lie inside the unit domain");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ScalarField {
    cfg: ScalarConfig,
    n: usize,
    unit: Vec<f64>,
    scratch: Vec<f64>,
    kernel: Vec<(usize, f64)>,
    kernel_peak: f64,
    time: f64,
}

impl ScalarField {
    /// Empty field with the configured source.
    pub fn new(cfg: ScalarConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.grid_size;
        let kernel = source_kernel(&cfg);
        let mut dense = vec![0.0; n * n];
        for &(idx, k) in &kernel {
            dense[idx] = k;
        }
        let kernel_peak = bilinear_periodic(&dense, n, cfg.source);
        Ok(Self {
            n,
            unit: vec![0.0; n * n],
            scratch: vec![0.0; n * n],
            kernel,
            kernel_peak,
            time: 0.0,
            cfg,
        })
    }

    /// Field initialised from a per-unit-amplitude grid (row-major, rows along y).
    pub fn from_unit_grid(cfg: ScalarConfig, grid: Vec<f64>) -> Result<Self> {
        let mut f = Self::new(cfg)?;
        if grid.len() != f.n * f.n {
            return Err(SimError::InvalidConfig(format!(
                "grid has {} values, expected {}",
                grid.len(),
                f.n * f.n
            )));
        }
        if grid.iter().any(|v| !(*v >= 0.0)) {
            return Err(SimError::InvalidConfig(
                "concentrations must be >= 0".into(),
            ));
        }
        f.unit = grid;
        Ok(f)
    }

    /// One semi-Lagrangian step: midpoint back-trace, bilinear pickup, exact
    /// exponential decay, then `dt` times the source kernel.
    pub fn step(&mut self, flow: &FlowField, dt: f64) {
        self.time += dt;
        if self.cfg.amplitude == 0.0 {
            // the physical field stays identically zero
            return;
        }
        let n = self.n;
        let h = 1.0 / n as f64;
        let decay = (-self.cfg.decay_rate * dt).exp();
        let old = &self.unit;
        parallel::for_each_row(&mut self.scratch, n, |j, row| {
            let y = j as f64 * h;
            for (i, out) in row.iter_mut().enumerate() {
                let x = Vec2::new(i as f64 * h, y);
                let v1 = flow.velocity(x);
                let mid = x - v1 * (0.5 * dt);
                let v2 = flow.velocity(mid);
                let dep = x - v2 * dt;
                *out = bilinear_monotone(old, n, dep) * decay;
            }
        });
        for &(idx, k) in &self.kernel {
            self.scratch[idx] += dt * k;
        }
        std::mem::swap(&mut self.unit, &mut self.scratch);
    }

    /// Physical concentration at `p` (wrapped periodically).
    #[inline]
    pub fn sample(&self, p: Vec2) -> f64 {
        self.cfg.amplitude * bilinear_periodic(&self.unit, self.n, p)
    }

    /// Concentration in units of the source's steady peak, zero when the
    /// source is switched off. Independent of the amplitude otherwise.
    #[inline]
    pub fn sample_relative(&self, p: Vec2) -> f64 {
        if self.cfg.amplitude == 0.0 {
            0.0
        } else {
            bilinear_periodic(&self.unit, self.n, p) / self.unit_reference()
        }
    }

    /// Steady concentration at the source centre with no flow, per unit amplitude.
    /// Without decay it is the peak injected per unit time.
    pub fn unit_reference(&self) -> f64 {
        if self.cfg.decay_rate > 0.0 {
            self.kernel_peak / self.cfg.decay_rate
        } else {
            self.kernel_peak
        }
    }

    /// Physical steady peak, `amplitude · kernel_peak / b`.
    pub fn steady_peak(&self) -> f64 {
        self.cfg.amplitude * self.unit_reference()
    }

    /// Source kernel interpolated at the source position.
    pub fn kernel_peak(&self) -> f64 {
        self.kernel_peak
    }

    pub fn config(&self) -> &ScalarConfig {
        &self.cfg
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Physical concentration grid.
    pub fn concentration_grid(&self) -> Vec<f64> {
        self.unit.iter().map(|v| v * self.cfg.amplitude).collect()
    }

    pub fn unit_grid(&self) -> &[f64] {
        &self.unit
    }

    /// Total mass, `Σ C h²`.
    pub fn total_mass(&self) -> f64 {
        let h2 = 1.0 / (self.n * self.n) as f64;
        self.cfg.amplitude * self.unit.iter().sum::<f64>() * h2
    }

    /// Samples the line through `centre` along `direction` at grid spacing,
    /// returning `(s, C)` pairs with `s ∈ [-0.5, 0.5)` the signed offset.
    pub fn transect(&self, centre: Vec2, direction: Vec2) -> Vec<(f64, f64)> {
        self.line(centre, direction, |p| self.sample(p))
    }

    /// As [`transect`](Self::transect) but in units of the steady peak, so
    /// the values do not depend on the source amplitude.
    pub fn relative_transect(&self, centre: Vec2, direction: Vec2) -> Vec<(f64, f64)> {
        self.line(centre, direction, |p| self.sample_relative(p))
    }

    fn line(&self, centre: Vec2, direction: Vec2, f: impl Fn(Vec2) -> f64) -> Vec<(f64, f64)> {
        let n = self.n;
        let h = 1.0 / n as f64;
        (0..n)
            .map(|m| {
                let s = (m as f64 - (n / 2) as f64) * h;
                (s, f(centre + direction * s))
            })
            .collect()
    }

    /// Removes the source, leaving pure transport and decay.
    pub fn disable_source(&mut self) {
        self.kernel.clear();
    }

    /// Average transverse standard deviation of the plume, from `n_transects`
    /// lines perpendicular to `downstream` spaced between the source and the
    /// domain edge.
    pub fn measure_filament_width(
        &self,
        downstream: Vec2,
        n_transects: usize,
    ) -> Result<FilamentWidth> {
        let dir = downstream
            .normalized()
            .ok_or_else(|| SimError::InvalidConfig("mean flow direction is undefined".into()))?;
        if n_transects == 0 {
            return Err(SimError::InvalidConfig("n_transects must be >= 1".into()));
        }
        let perp = Vec2::new(-dir.y, dir.x);
        let reach = distance_to_edge(self.cfg.source, dir);
        let floor = 1e-6 * self.steady_peak();
        let transects: Vec<Transect> = (0..n_transects)
            .map(|t| {
                let distance = reach * (t + 1) as f64 / (n_transects + 1) as f64;
                let centre = self.cfg.source + dir * distance;
                let profile = self.transect(centre, perp);
                let sigma = profile_width(&profile, floor);
                Transect {
                    id: t,
                    distance,
                    profile,
                    sigma,
                }
            })
            .collect();
        let widths: Vec<f64> = transects.iter().filter_map(|t| t.sigma).collect();
        if widths.is_empty() {
            return Err(SimError::NoFilament);
        }
        let sigma = widths.iter().sum::<f64>() / widths.len() as f64;
        Ok(FilamentWidth { sigma, transects })
    }
}

#[derive(Debug, Clone)]
pub struct Transect {
    pub id: usize,
    /// Distance downstream of the source.
    pub distance: f64,
    pub profile: Vec<(f64, f64)>,
    /// `None` when the transect peak is below the detection floor.
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FilamentWidth {
    pub sigma: f64,
    pub transects: Vec<Transect>,
}

impl FilamentWidth {
    /// Time to cross one standard deviation moving at `speed` at 45° to the
    /// filament axis.
    pub fn crossing_time(&self, speed: f64) -> f64 {
        self.sigma / (speed * std::f64::consts::FRAC_1_SQRT_2)
    }
}

/// Concentration-weighted standard deviation of the transverse coordinate,
/// measured about the weighted mean with offsets taken relative to the peak.
fn profile_width(profile: &[(f64, f64)], floor: f64) -> Option<f64> {
    let (peak_s, peak_c) =
        profile.iter().copied().fold(
            (0.0, f64::NEG_INFINITY),
            |a, b| if b.1 > a.1 { b } else { a },
        );
    if !(peak_c > floor) || peak_c <= 0.0 {
        return None;
    }
    let mut w = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for &(s, c) in profile {
        let d = min_image(s - peak_s);
        w += c;
        m1 += c * d;
        m2 += c * d * d;
    }
    let mean = m1 / w;
    Some((m2 / w - mean * mean).max(0.0).sqrt())
}

fn distance_to_edge(from: Vec2, dir: Vec2) -> f64 {
    let axis = |p: f64, d: f64| {
        if d > 0.0 {
            (1.0 - p) / d
        } else if d < 0.0 {
            p / -d
        } else {
            f64::INFINITY
        }
    };
    axis(from.x, dir.x).min(axis(from.y, dir.y))
}

fn source_kernel(cfg: &ScalarConfig) -> Vec<(usize, f64)> {
    let n = cfg.grid_size;
    let h = 1.0 / n as f64;
    let w = cfg.source_width;
    let reach = ((6.0 * w / h).ceil() as i64).min(n as i64 / 2);
    let ci = (cfg.source.x * n as f64).round() as i64;
    let cj = (cfg.source.y * n as f64).round() as i64;
    let mut cells = Vec::new();
    for dj in -reach..=reach {
        for di in -reach..=reach {
            let i = (ci + di).rem_euclid(n as i64) as usize;
            let j = (cj + dj).rem_euclid(n as i64) as usize;
            let node = Vec2::new(i as f64 * h, j as f64 * h);
            let d2 = periodic_offset(cfg.source, node).norm_sq();
            cells.push((j * n + i, (-d2 / (2.0 * w * w)).exp()));
        }
    }
    cells.sort_by_key(|c| c.0);
    cells.dedup_by_key(|c| c.0);
    let total: f64 = cells.iter().map(|c| c.1).sum::<f64>() * h * h;
    cells.iter().map(|&(idx, g)| (idx, g / total)).collect()
}
