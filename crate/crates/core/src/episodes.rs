//! Threshold segmentation of a pair's total density into communication episodes.
//!
//! An episode is a maximal interval where `f_in + f_out > ε`. Boundaries are
//! placed at the linearly interpolated ε-crossing between grid samples, so
//! episode lengths do not quantise to the grid step.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::density::{DensityProfile, Grid, KdeParams};
use crate::error::{EngineError, Result};
use crate::features::FeatureVector;
use crate::ingest::{Direction, Pair, PairSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonMode {
    Absolute,
    /// Fraction of the profile's peak total density.
    #[default]
    Relative,
}

impl FromStr for EpsilonMode {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "absolute" | "abs" => Ok(EpsilonMode::Absolute),
            "relative" | "rel" | "relative-to-peak" => Ok(EpsilonMode::Relative),
            other => Err(EngineError::InvalidParameter(format!(
                "epsilon mode must be `absolute` or `relative`, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for EpsilonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EpsilonMode::Absolute => "absolute",
            EpsilonMode::Relative => "relative",
        })
    }
}

/// Detection threshold, either in density units or relative to the peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub mode: EpsilonMode,
    pub value: f64,
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold {
            mode: EpsilonMode::Relative,
            value: 0.05,
        }
    }
}

impl Threshold {
    pub fn absolute(value: f64) -> Self {
        Threshold {
            mode: EpsilonMode::Absolute,
            value,
        }
    }

    pub fn relative(value: f64) -> Self {
        Threshold {
            mode: EpsilonMode::Relative,
            value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.mode {
            EpsilonMode::Absolute => self.value.is_finite() && self.value > 0.0,
            EpsilonMode::Relative => self.value > 0.0 && self.value < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(EngineError::InvalidParameter(format!(
                "epsilon {} is out of range for {} mode",
                self.value, self.mode
            )))
        }
    }

    /// Absolute ε for `profile`.
    pub fn resolve(&self, profile: &DensityProfile) -> f64 {
        match self.mode {
            EpsilonMode::Absolute => self.value,
            EpsilonMode::Relative => self.value * profile.peak_total(),
        }
    }
}

/// Everything besides the profile that determines a segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionParams {
    pub epsilon: Threshold,
    /// Episodes shorter than this (seconds) are dropped.
    pub min_duration: f64,
    /// Episodes separated by less than this (seconds) are merged.
    pub merge_gap: f64,
}

/// One communication episode of a pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    /// Content hash of pair, bounds and detection parameters.
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pair: Option<Pair>,
    pub start: f64,
    pub end: f64,
    /// Indices into the pair sequence of events with `start <= t <= end`.
    #[serde(default)]
    pub event_indices: Vec<usize>,
    #[serde(default)]
    pub n_in: usize,
    #[serde(default)]
    pub n_out: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub features: Option<FeatureVector>,
}

impl Episode {
    /// Bare interval; mostly useful for tests and manual analysis.
    pub fn new(pair: Option<Pair>, start: f64, end: f64) -> Self {
        Episode {
            id: String::new(),
            pair,
            start,
            end,
            event_indices: Vec::new(),
            n_in: 0,
            n_out: 0,
            features: None,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }
}

/// Stable reference for an episode detected with the given parameters.
#[allow(clippy::too_many_arguments)]
pub fn episode_ref(
    pair: Option<&Pair>,
    start: f64,
    end: f64,
    kde: &KdeParams,
    grid: &Grid,
    epsilon: f64,
    min_duration: f64,
    merge_gap: f64,
) -> String {
    let mut hasher = Sha256::new();
    if let Some(p) = pair {
        hasher.update(p.a.as_str().as_bytes());
        hasher.update([0]);
        hasher.update(p.b.as_str().as_bytes());
    }
    hasher.update([0]);
    for v in [
        start,
        end,
        kde.mu,
        kde.sigma,
        kde.h,
        grid.start,
        grid.step,
        grid.n as f64,
        epsilon,
        min_duration,
        merge_gap,
    ] {
        hasher.update(v.to_bits().to_le_bytes());
    }
    hex::encode(&hasher.finalize()[..16])
}

/// Maximal runs of `f_in + f_out > epsilon`, merged across gaps shorter than
/// `merge_gap` and filtered to at least `min_duration` seconds.
pub fn segment(
    profile: &DensityProfile,
    epsilon: f64,
    min_duration: f64,
    merge_gap: f64,
) -> Result<Vec<Episode>> {
    if !(min_duration >= 0.0) || !(merge_gap >= 0.0) {
        return Err(EngineError::InvalidParameter(format!(
            "min_duration ({min_duration}) and merge_gap ({merge_gap}) must be non-negative"
        )));
    }
    let total = profile.total();
    if total.iter().all(|&v| v <= 0.0) {
        return Ok(Vec::new());
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(EngineError::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let grid = &profile.grid;
    let n = grid.n;

    let mut runs: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < n {
        if total[i] <= epsilon {
            i += 1;
            continue;
        }
        let first = i;
        while i + 1 < n && total[i + 1] > epsilon {
            i += 1;
        }
        let last = i;
        let start = if first == 0 {
            grid.start
        } else {
            let (lo, hi) = (total[first - 1], total[first]);
            grid.point(first - 1) + grid.step * (epsilon - lo) / (hi - lo)
        };
        let end = if last == n - 1 {
            grid.end()
        } else {
            let (hi, lo) = (total[last], total[last + 1]);
            grid.point(last) + grid.step * (hi - epsilon) / (hi - lo)
        };
        runs.push((start, end));
        i += 1;
    }

    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(runs.len());
    for run in runs {
        match merged.last_mut() {
            Some(prev) if run.0 - prev.1 < merge_gap => prev.1 = run.1,
            _ => merged.push(run),
        }
    }

    Ok(merged
        .into_iter()
        .filter(|(s, e)| e - s >= min_duration && e > s)
        .map(|(start, end)| {
            let mut ep = Episode::new(profile.pair.clone(), start, end);
            ep.id = episode_ref(
                profile.pair.as_ref(),
                start,
                end,
                &profile.params,
                grid,
                epsilon,
                min_duration,
                merge_gap,
            );
            ep
        })
        .collect())
}

/// [`segment`] with the threshold resolved against `profile`.
pub fn detect(profile: &DensityProfile, params: &DetectionParams) -> Result<Vec<Episode>> {
    params.epsilon.validate()?;
    segment(
        profile,
        params.epsilon.resolve(profile),
        params.min_duration,
        params.merge_gap,
    )
}

/// Fills `event_indices`, `n_in` and `n_out` of each episode (closed
/// intervals) and returns the indices of events outside every episode.
pub fn assign_events(seq: &PairSequence, episodes: &mut [Episode]) -> Vec<usize> {
    let mut residual = Vec::new();
    for ep in episodes.iter_mut() {
        ep.event_indices.clear();
        ep.n_in = 0;
        ep.n_out = 0;
    }
    let mut k = 0;
    for (i, &(t, dir)) in seq.events.iter().enumerate() {
        while k < episodes.len() && episodes[k].end < t {
            k += 1;
        }
        match episodes.get_mut(k) {
            Some(ep) if ep.contains(t) => {
                ep.event_indices.push(i);
                match dir {
                    Direction::Incoming => ep.n_in += 1,
                    Direction::Outgoing => ep.n_out += 1,
                }
            }
            _ => residual.push(i),
        }
    }
    residual
}

/// Named semantic-zoom level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoomLevel {
    pub name: String,
    /// Bandwidth as a fraction of the viewed range.
    pub range_fraction_h: f64,
    pub sigma: f64,
    pub epsilon: Threshold,
}

impl ZoomLevel {
    pub fn new(name: &str, range_fraction_h: f64, sigma: f64, epsilon: Threshold) -> Result<Self> {
        if !(range_fraction_h.is_finite() && range_fraction_h > 0.0) {
            return Err(EngineError::InvalidParameter(format!(
                "range fraction must be positive, got {range_fraction_h}"
            )));
        }
        epsilon.validate()?;
        Ok(ZoomLevel {
            name: name.to_string(),
            range_fraction_h,
            sigma,
            epsilon,
        })
    }

    pub fn coarse() -> Self {
        ZoomLevel::builtin("coarse", 1.0 / 50.0)
    }

    pub fn medium() -> Self {
        ZoomLevel::builtin("medium", 1.0 / 200.0)
    }

    pub fn fine() -> Self {
        ZoomLevel::builtin("fine", 1.0 / 1000.0)
    }

    fn builtin(name: &str, fraction: f64) -> Self {
        ZoomLevel {
            name: name.to_string(),
            range_fraction_h: fraction,
            sigma: 1.0,
            epsilon: Threshold::default(),
        }
    }

    pub fn builtins() -> [ZoomLevel; 3] {
        [ZoomLevel::coarse(), ZoomLevel::medium(), ZoomLevel::fine()]
    }

    pub fn by_name(name: &str) -> Result<ZoomLevel> {
        ZoomLevel::builtins()
            .into_iter()
            .find(|z| z.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                EngineError::InvalidParameter(format!(
                    "unknown zoom level `{name}` (expected coarse, medium or fine)"
                ))
            })
    }
}

impl Default for ZoomLevel {
    fn default() -> Self {
        ZoomLevel::medium()
    }
}

/// Kernel parameters and threshold for viewing `view_range` seconds at `level`.
pub fn zoom_params(view_range: f64, level: &ZoomLevel) -> Result<(KdeParams, Threshold)> {
    if !(view_range.is_finite() && view_range > 0.0) {
        return Err(EngineError::InvalidParameter(format!(
            "view range must be positive, got {view_range}"
        )));
    }
    let params = KdeParams::new(0.0, level.sigma, level.range_fraction_h * view_range)?;
    Ok((params, level.epsilon))
}

/// JSON array of episodes.
pub fn write_episodes_json<W: Write>(episodes: &[Episode], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, episodes)?;
    Ok(())
}
