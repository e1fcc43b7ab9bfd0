//! Gaussian kernel density estimation of communication intensity.
//!
//! Each event is replaced by a Gaussian kernel and the kernels are summed and
//! normalised by `n·h`, so a non-empty density integrates to one. Densities are
//! sampled on a uniform [`Grid`]; all downstream quantities (episodes,
//! features) work on those samples.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};
use crate::ingest::{Direction, Pair, PairSequence};

/// Kernels are treated as zero beyond this many standard deviations.
pub const TRUNCATION_SIGMAS: f64 = 8.0;

/// Samples per viewed range unless the caller asks otherwise.
pub const DEFAULT_GRID_SAMPLES: usize = 2048;

/// Kernel shape and bandwidth.
///
/// `mu` and `sigma` act on the bandwidth-scaled offset `(t - x_i) / h`, so in
/// seconds a kernel is centred at `x_i + mu·h` with spread `sigma·h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KdeParams {
    pub mu: f64,
    pub sigma: f64,
    pub h: f64,
}

impl Default for KdeParams {
    fn default() -> Self {
        KdeParams {
            mu: 0.0,
            sigma: 1.0,
            h: 1.0,
        }
    }
}

impl KdeParams {
    pub fn new(mu: f64, sigma: f64, h: f64) -> Result<Self> {
        let p = KdeParams { mu, sigma, h };
        p.validate()?;
        Ok(p)
    }

    pub fn with_bandwidth(h: f64) -> Result<Self> {
        KdeParams::new(0.0, 1.0, h)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(EngineError::InvalidParameter(format!(
                "mu must be finite, got {}",
                self.mu
            )));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(EngineError::InvalidParameter(format!(
                "sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(EngineError::InvalidParameter(format!(
                "bandwidth h must be positive and finite, got {}",
                self.h
            )));
        }
        Ok(())
    }

    /// Half-width in seconds of the region a single kernel contributes to.
    pub fn support_radius(&self) -> f64 {
        TRUNCATION_SIGMAS * self.sigma * self.h
    }
}

/// Gaussian kernel `G(x)` with centre `mu` and standard deviation `sigma`.
pub fn kernel(x: f64, params: &KdeParams) -> f64 {
    let z = (x - params.mu) / params.sigma;
    (-0.5 * z * z).exp() / (params.sigma * (2.0 * PI).sqrt())
}

/// Uniform sampling grid `start + i·step` for `i` in `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub step: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(start: f64, step: f64, n: usize) -> Result<Self> {
        if !start.is_finite() || !(step.is_finite() && step > 0.0) || n < 2 {
            return Err(EngineError::InvalidParameter(format!(
                "grid needs finite start, positive step and n >= 2 (start {start}, step {step}, n {n})"
            )));
        }
        Ok(Grid { start, step, n })
    }

    /// `n` points from `start` to `end` inclusive.
    pub fn spanning(start: f64, end: f64, n: usize) -> Result<Self> {
        if !(end > start) || n < 2 {
            return Err(EngineError::InvalidParameter(format!(
                "grid range [{start}, {end}] with {n} samples is empty"
            )));
        }
        Grid::new(start, (end - start) / (n - 1) as f64, n)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.point(self.n - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.point(i))
    }

    /// Indices of grid points inside the closed interval `[t0, t1]`.
    pub fn indices_within(&self, t0: f64, t1: f64) -> std::ops::Range<usize> {
        let first = (0..self.n).find(|&i| self.point(i) >= t0).unwrap_or(self.n);
        let last = (first..self.n)
            .rev()
            .find(|&i| self.point(i) <= t1)
            .map_or(first, |i| i + 1);
        first..last.max(first)
    }

    /// Linearly interpolated value of `samples` at time `t`, clamped to the grid.
    pub fn interpolate(&self, samples: &[f64], t: f64) -> f64 {
        let pos = ((t - self.start) / self.step).clamp(0.0, (self.n - 1) as f64);
        let i = (pos.floor() as usize).min(self.n - 2);
        let frac = pos - i as f64;
        samples[i] + frac * (samples[i + 1] - samples[i])
    }
}

/// Kernel density of `timestamps` at every grid point.
///
/// Kernels are truncated at [`TRUNCATION_SIGMAS`] standard deviations; only
/// events inside that window are visited for each sample. Empty input gives
/// all-zero samples.
pub fn estimate_density(timestamps: &[f64], params: &KdeParams, grid: &Grid) -> Vec<f64> {
    let mut out = vec![0.0; grid.n];
    if timestamps.is_empty() {
        return out;
    }
    let mut sorted = timestamps.to_vec();
    sorted.sort_by(f64::total_cmp);

    let norm = 1.0 / (sorted.len() as f64 * params.h);
    let radius = TRUNCATION_SIGMAS * params.sigma;
    let mut lo = 0;
    let mut hi = 0;
    for (j, slot) in out.iter_mut().enumerate() {
        let t = grid.point(j);
        // contributing events satisfy |(t - x)/h - mu| <= radius
        let from = t - params.h * (params.mu + radius);
        let to = t - params.h * (params.mu - radius);
        while lo < sorted.len() && sorted[lo] < from {
            lo += 1;
        }
        hi = hi.max(lo);
        while hi < sorted.len() && sorted[hi] <= to {
            hi += 1;
        }
        let sum: f64 = sorted[lo..hi]
            .iter()
            .map(|&x| {
                let u = (t - x) / params.h;
                if ((u - params.mu) / params.sigma).abs() <= radius / params.sigma {
                    kernel(u, params)
                } else {
                    0.0
                }
            })
            // not `sum()`: an empty f64 sum is -0.0
            .fold(0.0, |acc, v| acc + v);
        *slot = sum * norm;
    }
    out
}

/// Sampled incoming and outgoing densities of one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pair: Option<Pair>,
    pub grid: Grid,
    /// Density of messages b → a, per second.
    pub f_in: Vec<f64>,
    /// Density of messages a → b, per second.
    pub f_out: Vec<f64>,
    pub params: KdeParams,
    pub n_in: usize,
    pub n_out: usize,
}

impl DensityProfile {
    /// `f_in + f_out` at each grid point.
    pub fn total(&self) -> Vec<f64> {
        self.f_in
            .iter()
            .zip(&self.f_out)
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn peak_total(&self) -> f64 {
        self.f_in
            .iter()
            .zip(&self.f_out)
            .map(|(a, b)| a + b)
            .fold(0.0, f64::max)
    }

    /// Incoming density scaled by the incoming message count.
    pub fn weighted_in(&self) -> Vec<f64> {
        let n = self.n_in as f64;
        self.f_in.iter().map(|v| v * n).collect()
    }

    /// Outgoing density scaled by the outgoing message count.
    pub fn weighted_out(&self) -> Vec<f64> {
        let n = self.n_out as f64;
        self.f_out.iter().map(|v| v * n).collect()
    }

    /// Plot-ready `t,f_in,f_out,weighted_in,weighted_out` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "f_in", "f_out", "weighted_in", "weighted_out"])?;
        let (win, wout) = (self.weighted_in(), self.weighted_out());
        for (i, t) in self.grid.points().enumerate() {
            w.write_record([
                t.to_string(),
                self.f_in[i].to_string(),
                self.f_out[i].to_string(),
                win[i].to_string(),
                wout[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Densities of both directions of `seq` on `grid`.
pub fn profile_pair(seq: &PairSequence, params: &KdeParams, grid: &Grid) -> DensityProfile {
    let incoming = seq.timestamps(Direction::Incoming);
    let outgoing = seq.timestamps(Direction::Outgoing);
    DensityProfile {
        pair: Some(seq.pair.clone()),
        grid: *grid,
        f_in: estimate_density(&incoming, params, grid),
        f_out: estimate_density(&outgoing, params, grid),
        params: *params,
        n_in: incoming.len(),
        n_out: outgoing.len(),
    }
}

/// Grid covering every kernel of `seq` with `target_samples` points. Empty
/// sequences get the unit grid `[0, 1]`.
pub fn default_grid(seq: &PairSequence, params: &KdeParams, target_samples: usize) -> Result<Grid> {
    if target_samples < 2 {
        return Err(EngineError::InvalidParameter(format!(
            "grid needs at least 2 samples, got {target_samples}"
        )));
    }
    let Some((first, last)) = seq.span() else {
        return Grid::new(0.0, 1.0, 2);
    };
    let centre_shift = params.mu * params.h;
    let radius = params.support_radius();
    Grid::spanning(
        first + centre_shift - radius,
        last + centre_shift + radius,
        target_samples,
    )
}

/// Composite trapezoid integral of `samples` over `[t0, t1]`.
///
/// The interval is clipped to the grid; partial end cells use the linearly
/// interpolated sample value.
pub fn integrate(samples: &[f64], grid: &Grid, t0: f64, t1: f64) -> Result<f64> {
    if !(t0 <= t1) {
        return Err(EngineError::InvalidInterval { start: t0, end: t1 });
    }
    debug_assert_eq!(samples.len(), grid.n);
    let last = (grid.n - 1) as f64;
    let pa = ((t0 - grid.start) / grid.step).clamp(0.0, last);
    let pb = ((t1 - grid.start) / grid.step).clamp(0.0, last);
    if pb <= pa {
        return Ok(0.0);
    }
    let value_at = |p: f64| {
        let i = (p.floor() as usize).min(grid.n - 2);
        samples[i] + (p - i as f64) * (samples[i + 1] - samples[i])
    };
    let first_full = pa.ceil() as usize;
    let last_full = pb.floor() as usize;
    if first_full > last_full {
        // both ends inside one cell
        return Ok(0.5 * (pb - pa) * (value_at(pa) + value_at(pb)) * grid.step);
    }
    let mut area = 0.5 * (first_full as f64 - pa) * (value_at(pa) + samples[first_full]);
    for i in first_full..last_full {
        area += 0.5 * (samples[i] + samples[i + 1]);
    }
    area += 0.5 * (pb - last_full as f64) * (samples[last_full] + value_at(pb));
    Ok(area * grid.step)
}
