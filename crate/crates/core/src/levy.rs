//! Compound-Poisson Lévy subordinators on a discrete time grid.
//!
//! A subordinator with intensity `ν` and jump-size rate `a` has Lévy density
//! `ν·a·e^{-a x}` on `x > 0`: jumps arrive as a Poisson process with rate `ν`
//! and have Exponential(`a`) sizes. Running it on the clock `λt` multiplies
//! the arrival rate by `λ`.
//!
//! Paths are sampled exactly. The number of events on the horizon is drawn
//! first, then the event times as uniform order statistics, then the sizes,
//! so the law does not depend on the grid resolution.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Parameters of one compound-Poisson subordinator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubordinatorSpec {
    /// Expected number of jumps per unit of (time-changed) time. Zero gives `Z ≡ 0`.
    pub intensity: f64,
    /// Rate of the Exponential jump sizes; the mean jump is `1 / jump_rate`.
    pub jump_rate: f64,
}

/// Per-unit-time mean and variance of a subordinator, `E[Z_1]` and `Var[Z_1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

impl SubordinatorSpec {
    pub fn new(intensity: f64, jump_rate: f64) -> Result<Self> {
        let spec = Self {
            intensity,
            jump_rate,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The degenerate subordinator `Z ≡ 0`.
    pub fn zero() -> Self {
        Self {
            intensity: 0.0,
            jump_rate: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity >= 0.0 && self.intensity.is_finite()) {
            return Err(invalid(format!(
                "intensity must be >= 0, got {}",
                self.intensity
            )));
        }
        if !(self.jump_rate > 0.0 && self.jump_rate.is_finite()) {
            return Err(invalid(format!(
                "jump_rate must be > 0, got {}",
                self.jump_rate
            )));
        }
        Ok(())
    }

    /// `E[Z_1] = ν/a` and `Var[Z_1] = ν·E[Y²] = 2ν/a²`.
    pub fn moments(&self) -> Moments {
        let a = self.jump_rate;
        Moments {
            mean: self.intensity / a,
            variance: 2.0 * self.intensity / (a * a),
        }
    }
}

/// Closed-form `(E[Z_1], Var[Z_1])`.
pub fn subordinator_moments(spec: &SubordinatorSpec) -> Moments {
    spec.moments()
}

/// Uniform grid `t_k = t0 + k·dt` for `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !t0.is_finite() {
            return Err(invalid("grid origin must be finite"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt must be > 0, got {dt}")));
        }
        if n_steps == 0 {
            return Err(invalid("grid needs at least one step"));
        }
        Ok(Self { t0, dt, n_steps })
    }

    /// Grid on `[0, horizon]` with `n_steps` equal steps.
    pub fn over(horizon: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(invalid("grid needs at least one step"));
        }
        Self::new(0.0, horizon / n_steps as f64, n_steps)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid points, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `T = n_steps·dt`.
    pub fn horizon(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.n_steps)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.time(k))
    }

    /// Same horizon and origin with `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.t0, self.dt / factor as f64, self.n_steps * factor)
    }
}

/// One jump of a subordinator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub size: f64,
}

/// A sampled subordinator path: its jump events plus the running sum of
/// jump sizes evaluated at every grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpPath {
    grid: TimeGrid,
    events: Vec<JumpEvent>,
    cumulative: Vec<f64>,
}

impl JumpPath {
    /// Builds a path from explicit events. Events are sorted by time; every
    /// size must be strictly positive and every time inside the grid span.
    pub fn from_events(grid: TimeGrid, mut events: Vec<JumpEvent>) -> Result<Self> {
        for e in &events {
            if !(e.size > 0.0 && e.size.is_finite()) {
                return Err(invalid(format!("jump size must be > 0, got {}", e.size)));
            }
            if !(e.time >= grid.t0() && e.time <= grid.end()) {
                return Err(invalid(format!("jump time {} outside grid", e.time)));
            }
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        let cumulative = running_sum(&grid, &events);
        Ok(Self {
            grid,
            events,
            cumulative,
        })
    }

    /// A path with no jumps.
    pub fn empty(grid: TimeGrid) -> Self {
        Self {
            grid,
            events: Vec::new(),
            cumulative: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn events(&self) -> &[JumpEvent] {
        &self.events
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Path value at the final grid point.
    pub fn terminal(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    /// `Z(t_{k+1}) − Z(t_k)`.
    pub fn increment(&self, k: usize) -> f64 {
        self.cumulative[k + 1] - self.cumulative[k]
    }

    /// Number of jumps with `τ ≤ s`.
    pub fn count_upto(&self, s: f64) -> usize {
        self.events.partition_point(|e| e.time <= s)
    }

    /// Realized jump quadratic variation `Σ_{τ ≤ s} y²`.
    pub fn squared_sum_upto(&self, s: f64) -> f64 {
        self.events
            .iter()
            .take_while(|e| e.time <= s)
            .map(|e| e.size * e.size)
            .sum()
    }

    /// Same events laid over another grid covering the same span.
    pub fn regrid(&self, grid: TimeGrid) -> Result<Self> {
        Self::from_events(grid, self.events.clone())
    }
}

fn running_sum(grid: &TimeGrid, events: &[JumpEvent]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut next = 0;
    for t in grid.times() {
        while next < events.len() && events[next].time <= t {
            acc += events[next].size;
            next += 1;
        }
        out.push(acc);
    }
    out
}

/// Samples `Z_{λt}` on `grid`. The event count over the horizon is
/// Poisson(`λ·ν·T`) and sizes are i.i.d. Exponential(`a`).
pub fn sample_subordinator_path(
    spec: &SubordinatorSpec,
    rate_scale: f64,
    grid: &TimeGrid,
    seed: u64,
) -> Result<JumpPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(spec, rate_scale, grid, &mut rng)
}

pub(crate) fn sample_with<R: Rng + ?Sized>(
    spec: &SubordinatorSpec,
    rate_scale: f64,
    grid: &TimeGrid,
    rng: &mut R,
) -> Result<JumpPath> {
    spec.validate()?;
    if !(rate_scale > 0.0 && rate_scale.is_finite()) {
        return Err(invalid(format!("rate scale must be > 0, got {rate_scale}")));
    }
    let horizon = grid.horizon();
    let mean_count = rate_scale * spec.intensity * horizon;
    if mean_count == 0.0 {
        return Ok(JumpPath::empty(*grid));
    }
    let poisson = Poisson::new(mean_count).map_err(|e| invalid(e.to_string()))?;
    let count = poisson.sample(rng) as usize;

    let mut times: Vec<f64> = (0..count)
        .map(|_| grid.t0() + horizon * rng.random::<f64>())
        .collect();
    times.sort_by(f64::total_cmp);

    let size_law = Exp::new(spec.jump_rate).map_err(|e| invalid(e.to_string()))?;
    let events: Vec<JumpEvent> = times
        .into_iter()
        .map(|time| {
            // Exp draws can be exactly 0 with negligible probability.
            let size = loop {
                let y: f64 = size_law.sample(rng);
                if y > 0.0 {
                    break y;
                }
            };
            JumpEvent { time, size }
        })
        .collect();

    let cumulative = running_sum(grid, &events);
    Ok(JumpPath {
        grid: *grid,
        events,
        cumulative,
    })
}

/// Samples `n` independent paths; path `i` uses the seed derived from
/// `(master_seed, i)`, so the result does not depend on the thread count.
pub fn sample_ensemble(
    spec: &SubordinatorSpec,
    rate_scale: f64,
    grid: &TimeGrid,
    master_seed: u64,
    n: usize,
) -> Result<Vec<JumpPath>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let seed = rng::derive_seed(master_seed, rng::stream::PATH, i as u64);
            sample_subordinator_path(spec, rate_scale, grid, seed)
        })
        .collect()
}

/// Weighted superposition `w1·Z¹ + w2·Z²` of two paths on one grid.
///
/// Event sizes are scaled by their weight; events carrying a zero weight are
/// dropped. The cumulative is `w1·c¹ + w2·c²` pointwise.
pub fn combine_paths(p1: &JumpPath, p2: &JumpPath, w1: f64, w2: f64) -> Result<JumpPath> {
    if p1.grid != p2.grid {
        return Err(Error::IncompatibleGrid);
    }
    for w in [w1, w2] {
        if !(0.0..=1.0).contains(&w) {
            return Err(invalid(format!("weights must lie in [0, 1], got {w}")));
        }
    }
    let scaled = |p: &JumpPath, w: f64| -> Vec<JumpEvent> {
        if w == 0.0 {
            return Vec::new();
        }
        p.events
            .iter()
            .map(|e| JumpEvent {
                time: e.time,
                size: w * e.size,
            })
            .filter(|e| e.size > 0.0)
            .collect()
    };
    let mut events = scaled(p1, w1);
    events.extend(scaled(p2, w2));
    // Stable: ties keep p1's events first.
    events.sort_by(|a, b| a.time.total_cmp(&b.time));

    let cumulative = p1
        .cumulative
        .iter()
        .zip(&p2.cumulative)
        .map(|(a, b)| match (w1 == 0.0, w2 == 0.0) {
            (false, true) => w1 * a,
            (true, false) => w2 * b,
            (true, true) => 0.0,
            (false, false) => w1 * a + w2 * b,
        })
        .collect();
    Ok(JumpPath {
        grid: p1.grid,
        events,
        cumulative,
    })
}
