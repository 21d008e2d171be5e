//! Stochastic, divergence-free 2D velocity field on the periodic unit square.
//!
//! The fluctuating part is carried by the Fourier modes of a stream function.
//! Each independent mode follows an Ornstein-Uhlenbeck process whose
//! stationary variance is set by an energy spectrum `E(k) ∝ k exp(-k/k_p)`,
//! normalised so the domain-averaged rms fluctuation speed equals the
//! configured value. Velocities are synthesised on a physical grid once per
//! step and bilinearly interpolated everywhere else.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, SimError};
use crate::geometry::{bilinear_periodic_pair, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumConfig {
    /// Wavelength of the most energetic modes, in domain units.
    pub peak_lengthscale: f64,
    /// Domain-averaged rms of the fluctuating speed.
    pub rms_velocity: f64,
    pub mean_flow: Vec2,
    /// e-folding time of every mode's autocorrelation.
    pub correlation_time: f64,
    /// Spectral grid resolution per axis.
    pub modes: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            peak_lengthscale: 0.31,
            rms_velocity: 0.25,
            mean_flow: Vec2::new(0.0, 0.6),
            correlation_time: 0.2,
            modes: 128,
        }
    }
}

impl SpectrumConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if !self.modes.is_power_of_two() || self.modes < 4 {
            return bad("flow_modes must be a power of two >= 4");
        }
        if !(self.peak_lengthscale > 0.0 && self.peak_lengthscale < 1.0) {
            return bad("peak_lengthscale must lie in (0, domain_length)");
        }
        if self.peak_lengthscale <= 2.0 / self.modes as f64 {
            return bad("peak_lengthscale must exceed two flow grid spacings");
        }
        if !(self.rms_velocity >= 0.0 && self.rms_velocity.is_finite()) {
            return bad("rms_velocity must be >= 0");
        }
        if !(self.correlation_time > 0.0 && self.correlation_time.is_finite()) {
            return bad("correlation_time must be > 0");
        }
        if !(self.mean_flow.x.is_finite() && self.mean_flow.y.is_finite()) {
            return bad("mean_flow must be finite");
        }
        Ok(())
    }

    /// Wavenumber of the spectral peak, `2π / peak_lengthscale`.
    pub fn peak_wavenumber(&self) -> f64 {
        2.0 * PI / self.peak_lengthscale
    }
}

/// Signed integer wavenumber of FFT index `i` on an `n`-point axis.
#[inline]
pub fn signed_wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Centered-difference ("modified") wavenumber `sin(k h) / h` for an integer
/// wavenumber on an `n`-point unit axis.
#[inline]
fn modified_wavenumber(k: i64, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    (2.0 * PI * k as f64 * h).sin() / h
}

#[derive(Clone)]
pub struct FlowField {
    cfg: SpectrumConfig,
    n: usize,
    modes: Vec<Complex64>,
    variance: Vec<f64>,
    /// Independent modes paired with their Hermitian partner.
    pairs: Vec<(usize, usize)>,
    u: Vec<f64>,
    v: Vec<f64>,
    /// `(u, v)` interleaved for sampling.
    uv: Vec<[f64; 2]>,
    rng: ChaCha8Rng,
    fft: Arc<dyn Fft<f64>>,
    time: f64,
}

impl std::fmt::Debug for FlowField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowField")
            .field("cfg", &self.cfg)
            .field("time", &self.time)
            .finish_non_exhaustive()
    }
}

impl FlowField {
    /// Builds a field whose modes are drawn from their stationary distribution.
    pub fn new(cfg: SpectrumConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.modes;
        let variance = mode_variance_table(&cfg);
        let mut pairs = Vec::new();
        for iy in 0..n {
            for ix in 0..n {
                if !is_resolved(ix, iy, n) {
                    continue;
                }
                let ky = signed_wavenumber(iy, n);
                let kx = signed_wavenumber(ix, n);
                if ky > 0 || (ky == 0 && kx > 0) {
                    let cx = ((n as i64 - kx) as usize) % n;
                    let cy = ((n as i64 - ky) as usize) % n;
                    pairs.push((iy * n + ix, cy * n + cx));
                }
            }
        }
        let fft = FftPlanner::new().plan_fft_inverse(n);
        let mut field = Self {
            cfg,
            n,
            modes: vec![Complex64::new(0.0, 0.0); n * n],
            variance,
            pairs,
            u: vec![0.0; n * n],
            v: vec![0.0; n * n],
            uv: vec![[0.0; 2]; n * n],
            rng: ChaCha8Rng::seed_from_u64(seed),
            fft,
            time: 0.0,
        };
        for p in 0..field.pairs.len() {
            let (k, c) = field.pairs[p];
            let xi = complex_normal(&mut field.rng);
            let psi = xi * field.variance[k].sqrt();
            field.modes[k] = psi;
            field.modes[c] = psi.conj();
        }
        field.synthesize();
        Ok(field)
    }

    /// Advances every mode by one exact Ornstein-Uhlenbeck transition of
    /// length `dt` and refreshes the velocity grid.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let limit = self.cfg.correlation_time / 10.0;
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(SimError::StepTooLarge { dt, limit });
        }
        let a = dt / self.cfg.correlation_time;
        let keep = (-a).exp();
        let kick = (-(-2.0 * a).exp_m1()).sqrt();
        for p in 0..self.pairs.len() {
            let (k, c) = self.pairs[p];
            let xi = complex_normal(&mut self.rng);
            let psi = self.modes[k] * keep + xi * (self.variance[k].sqrt() * kick);
            self.modes[k] = psi;
            self.modes[c] = psi.conj();
        }
        self.time += dt;
        self.synthesize();
        Ok(())
    }

    /// Total velocity (mean plus interpolated fluctuation) at `p`.
    #[inline]
    pub fn velocity(&self, p: Vec2) -> Vec2 {
        self.cfg.mean_flow + self.fluctuation(p)
    }

    #[inline]
    pub fn fluctuation(&self, p: Vec2) -> Vec2 {
        let [u, v] = bilinear_periodic_pair(&self.uv, self.n, p);
        Vec2::new(u, v)
    }

    pub fn config(&self) -> &SpectrumConfig {
        &self.cfg
    }

    pub fn mean_flow(&self) -> Vec2 {
        self.cfg.mean_flow
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Fluctuating x-velocity on the grid, row-major with rows along y.
    pub fn u_grid(&self) -> &[f64] {
        &self.u
    }

    pub fn v_grid(&self) -> &[f64] {
        &self.v
    }

    /// Stream-function Fourier coefficients in FFT index order.
    pub fn modes(&self) -> &[Complex64] {
        &self.modes
    }

    /// Stationary variance `E|ψ_k|²` of each mode.
    pub fn mode_variance(&self) -> &[f64] {
        &self.variance
    }

    /// Domain-averaged squared fluctuation speed of the current realisation.
    pub fn mean_square_fluctuation(&self) -> f64 {
        let s: f64 = self.u.iter().zip(&self.v).map(|(u, v)| u * u + v * v).sum();
        s / (self.n * self.n) as f64
    }

    /// Radial energy spectrum of the current realisation, one bin per rounded
    /// integer wavenumber magnitude. Each bin is the mean per-mode energy
    /// `½|û|²` in that shell times the continuum shell size `2πk`, which
    /// removes the lattice-count noise of the discrete shells.
    pub fn radial_spectrum(&self) -> Vec<f64> {
        let n = self.n;
        let mut energy = vec![0.0; n];
        let mut count = vec![0usize; n];
        for iy in 0..n {
            let ky = signed_wavenumber(iy, n);
            let my = modified_wavenumber(ky, n);
            for ix in 0..n {
                if !is_resolved(ix, iy, n) {
                    continue;
                }
                let kx = signed_wavenumber(ix, n);
                let mx = modified_wavenumber(kx, n);
                let bin = ((kx * kx + ky * ky) as f64).sqrt().round() as usize;
                if bin < n {
                    energy[bin] += 0.5 * (mx * mx + my * my) * self.modes[iy * n + ix].norm_sqr();
                    count[bin] += 1;
                }
            }
        }
        energy
            .iter()
            .zip(&count)
            .enumerate()
            .map(|(b, (e, &c))| {
                if c == 0 {
                    0.0
                } else {
                    e / c as f64 * 2.0 * PI * b as f64
                }
            })
            .collect()
    }

    /// Rotates the realisation (modes, velocity grid and mean flow) by a
    /// quarter turn counter-clockwise about the origin.
    pub fn rotate_quarter_turn(&mut self) {
        let n = self.n;
        let mut modes = vec![Complex64::new(0.0, 0.0); n * n];
        let mut variance = vec![0.0; n * n];
        let mut u = vec![0.0; n * n];
        let mut v = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                // (i, j) -> (-j, i), valid for both grid nodes and wavenumbers
                let ri = (n - j) % n;
                let dst = i * n + ri;
                let src = j * n + i;
                modes[dst] = self.modes[src];
                variance[dst] = self.variance[src];
                u[dst] = -self.v[src];
                v[dst] = self.u[src];
            }
        }
        self.modes = modes;
        self.variance = variance;
        self.u = u;
        self.v = v;
        self.interleave();
        let m = self.cfg.mean_flow;
        self.cfg.mean_flow = Vec2::new(-m.y, m.x);
        let remap = |k: usize| {
            let (j, i) = (k / n, k % n);
            i * n + (n - j) % n
        };
        for pair in &mut self.pairs {
            *pair = (remap(pair.0), remap(pair.1));
        }
    }

    fn synthesize(&mut self) {
        let n = self.n;
        let mut buf: Vec<Complex64> = Vec::with_capacity(n * n);
        for iy in 0..n {
            let my = modified_wavenumber(signed_wavenumber(iy, n), n);
            for ix in 0..n {
                let mx = modified_wavenumber(signed_wavenumber(ix, n), n);
                // û + i v̂ with û = i κy ψ and v̂ = -i κx ψ
                buf.push(Complex64::new(mx, my) * self.modes[iy * n + ix]);
            }
        }
        self.fft.process(&mut buf);
        transpose(&mut buf, n);
        self.fft.process(&mut buf);
        transpose(&mut buf, n);
        for (k, z) in buf.iter().enumerate() {
            self.u[k] = z.re;
            self.v[k] = z.im;
        }
        self.interleave();
    }

    fn interleave(&mut self) {
        for (k, uv) in self.uv.iter_mut().enumerate() {
            *uv = [self.u[k], self.v[k]];
        }
    }
}

/// Excludes the mean and Nyquist rows/columns, which have no Hermitian partner.
fn is_resolved(ix: usize, iy: usize, n: usize) -> bool {
    ix != n / 2 && iy != n / 2 && (ix, iy) != (0, 0)
}

fn mode_variance_table(cfg: &SpectrumConfig) -> Vec<f64> {
    let n = cfg.modes;
    let kp = cfg.peak_wavenumber();
    let mut shape = vec![0.0; n * n];
    let mut speed_sq = 0.0;
    for iy in 0..n {
        let ky = signed_wavenumber(iy, n);
        let my = modified_wavenumber(ky, n);
        for ix in 0..n {
            if !is_resolved(ix, iy, n) {
                continue;
            }
            let kx = signed_wavenumber(ix, n);
            let mx = modified_wavenumber(kx, n);
            let k = 2.0 * PI * ((kx * kx + ky * ky) as f64).sqrt();
            // shell energy k·exp(-k/kp) spread over ~k modes, divided by |k|²
            let s = (-k / kp).exp() / (k * k);
            shape[iy * n + ix] = s;
            speed_sq += (mx * mx + my * my) * s;
        }
    }
    let amp = if speed_sq > 0.0 {
        cfg.rms_velocity * cfg.rms_velocity / speed_sq
    } else {
        0.0
    };
    shape.iter().map(|s| s * amp).collect()
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for j in 0..n {
        for i in (j + 1)..n {
            buf.swap(j * n + i, i * n + j);
        }
    }
}
