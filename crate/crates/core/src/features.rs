//! Per-episode descriptors of conversational dynamics.
//!
//! Only duration and synchronicity are fixed by the underlying model; the other
//! twelve columns are a documented stand-in set covering volume, one-sidedness,
//! initiative and challenge/response rhythm. Columns are registered by name in
//! a [`FeatureRegistry`], so alternative sets can be swapped in without
//! touching the classifier.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::density::{integrate, DensityProfile};
use crate::episodes::Episode;
use crate::error::{EngineError, Result};
use crate::ingest::{Direction, PairSequence};

pub const FEATURE_COUNT: usize = 14;

/// Column names in matrix order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "duration",
    "volume_total",
    "volume_in",
    "volume_out",
    "balance",
    "synchronicity",
    "count_in",
    "count_out",
    "peak_density",
    "initiator",
    "terminator",
    "mean_response_latency",
    "turn_count",
    "burstiness",
];

/// The fourteen standard episode features.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Seconds.
    pub duration: f64,
    pub volume_total: f64,
    /// Integral of the count-weighted incoming density.
    pub volume_in: f64,
    pub volume_out: f64,
    /// `(out − in) / total`, in `[-1, 1]`.
    pub balance: f64,
    /// 0 for mirrored participation, 1 for one-sided or disjoint.
    pub synchronicity: f64,
    pub count_in: f64,
    pub count_out: f64,
    /// Largest `f_in + f_out` inside the episode, per second.
    pub peak_density: f64,
    /// +1 when `a` sends first.
    pub initiator: f64,
    /// +1 when `a` sends last.
    pub terminator: f64,
    /// Seconds; −1 when no message is ever answered.
    pub mean_response_latency: f64,
    pub turn_count: f64,
    /// Goh–Barabási burstiness of inter-event gaps; 0 below three events.
    pub burstiness: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.duration,
            self.volume_total,
            self.volume_in,
            self.volume_out,
            self.balance,
            self.synchronicity,
            self.count_in,
            self.count_out,
            self.peak_density,
            self.initiator,
            self.terminator,
            self.mean_response_latency,
            self.turn_count,
            self.burstiness,
        ]
    }

    pub fn from_array(v: [f64; FEATURE_COUNT]) -> Self {
        FeatureVector {
            duration: v[0],
            volume_total: v[1],
            volume_in: v[2],
            volume_out: v[3],
            balance: v[4],
            synchronicity: v[5],
            count_in: v[6],
            count_out: v[7],
            peak_density: v[8],
            initiator: v[9],
            terminator: v[10],
            mean_response_latency: v[11],
            turn_count: v[12],
            burstiness: v[13],
        }
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let arr: [f64; FEATURE_COUNT] = v.try_into().map_err(|_| {
            EngineError::InvalidParameter(format!(
                "feature vector needs {FEATURE_COUNT} values, got {}",
                v.len()
            ))
        })?;
        Ok(FeatureVector::from_array(arr))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Everything a feature may look at.
pub struct EpisodeView<'a> {
    pub seq: &'a PairSequence,
    pub profile: &'a DensityProfile,
    pub episode: &'a Episode,
    /// The episode's events in sequence order.
    pub events: Vec<(f64, Direction)>,
}

impl<'a> EpisodeView<'a> {
    pub fn new(
        seq: &'a PairSequence,
        profile: &'a DensityProfile,
        episode: &'a Episode,
    ) -> Result<Self> {
        if episode.event_indices.is_empty() {
            return Err(EngineError::EmptyEpisode {
                start: episode.start,
                end: episode.end,
            });
        }
        let events = episode
            .event_indices
            .iter()
            .map(|&i| {
                seq.events.get(i).copied().ok_or_else(|| {
                    EngineError::InvalidParameter(format!(
                        "event index {i} out of range for a sequence of {}",
                        seq.len()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EpisodeView {
            seq,
            profile,
            episode,
            events,
        })
    }

    fn count(&self, dir: Direction) -> usize {
        self.events.iter().filter(|e| e.1 == dir).count()
    }

    fn integral(&self, samples: &[f64]) -> f64 {
        integrate(
            samples,
            &self.profile.grid,
            self.episode.start,
            self.episode.end,
        )
        .unwrap_or(0.0)
    }

    fn gaps(&self) -> Vec<f64> {
        self.events.windows(2).map(|w| w[1].0 - w[0].0).collect()
    }
}

pub type FeatureFn = fn(&EpisodeView<'_>) -> f64;

#[derive(Clone)]
pub struct FeatureDef {
    pub name: &'static str,
    pub description: &'static str,
    pub compute: FeatureFn,
}

/// Ordered set of named episode features.
#[derive(Clone, Default)]
pub struct FeatureRegistry {
    defs: Vec<FeatureDef>,
}

impl FeatureRegistry {
    pub fn empty() -> Self {
        FeatureRegistry::default()
    }

    /// The fourteen columns of [`FeatureVector`], in order.
    pub fn standard() -> Self {
        let mut r = FeatureRegistry::empty();
        r.register("duration", "episode length in seconds", duration);
        r.register("volume_total", "volume_in + volume_out", volume_total);
        r.register(
            "volume_in",
            "integral of count-weighted incoming density",
            volume_in,
        );
        r.register(
            "volume_out",
            "integral of count-weighted outgoing density",
            volume_out,
        );
        r.register(
            "balance",
            "(volume_out - volume_in) / volume_total",
            balance,
        );
        r.register(
            "synchronicity",
            "normalised integral of |g_in - g_out|",
            |v| synchronicity(v.profile, v.episode),
        );
        r.register("count_in", "incoming messages", |v| {
            v.count(Direction::Incoming) as f64
        });
        r.register("count_out", "outgoing messages", |v| {
            v.count(Direction::Outgoing) as f64
        });
        r.register(
            "peak_density",
            "max of f_in + f_out within the episode",
            peak_density,
        );
        r.register(
            "initiator",
            "+1 if the first message is outgoing, else -1",
            initiator,
        );
        r.register(
            "terminator",
            "+1 if the last message is outgoing, else -1",
            terminator,
        );
        r.register(
            "mean_response_latency",
            "mean gap to the next opposite-direction message, -1 if none",
            mean_response_latency,
        );
        r.register(
            "turn_count",
            "direction changes between adjacent messages",
            turn_count,
        );
        r.register(
            "burstiness",
            "(s - m) / (s + m) of inter-event gaps",
            burstiness,
        );
        r
    }

    /// Adds or replaces a feature.
    pub fn register(&mut self, name: &'static str, description: &'static str, compute: FeatureFn) {
        let def = FeatureDef {
            name,
            description,
            compute,
        };
        match self.defs.iter_mut().find(|d| d.name == name) {
            Some(slot) => *slot = def,
            None => self.defs.push(def),
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.defs.iter().map(|d| d.name).collect()
    }

    pub fn get(&self, name: &str) -> Option<&FeatureDef> {
        self.defs.iter().find(|d| d.name == name)
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn compute(&self, view: &EpisodeView<'_>) -> Vec<f64> {
        self.defs.iter().map(|d| (d.compute)(view)).collect()
    }
}

fn duration(v: &EpisodeView<'_>) -> f64 {
    v.episode.end - v.episode.start
}

fn volume_in(v: &EpisodeView<'_>) -> f64 {
    v.integral(&v.profile.weighted_in())
}

fn volume_out(v: &EpisodeView<'_>) -> f64 {
    v.integral(&v.profile.weighted_out())
}

fn volume_total(v: &EpisodeView<'_>) -> f64 {
    volume_in(v) + volume_out(v)
}

fn balance(v: &EpisodeView<'_>) -> f64 {
    let (vin, vout) = (volume_in(v), volume_out(v));
    let total = vin + vout;
    if total > 0.0 {
        ((vout - vin) / total).clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

fn peak_density(v: &EpisodeView<'_>) -> f64 {
    let total = v.profile.total();
    let grid = &v.profile.grid;
    let (s, e) = (v.episode.start, v.episode.end);
    grid.indices_within(s, e)
        .map(|i| total[i])
        .chain([grid.interpolate(&total, s), grid.interpolate(&total, e)])
        .fold(0.0, f64::max)
}

/// Sign of the first (`first = true`) or last message; timestamp ties go to
/// outgoing.
fn endpoint_direction(events: &[(f64, Direction)], first: bool) -> f64 {
    let t = if first {
        events[0].0
    } else {
        events[events.len() - 1].0
    };
    let any_out = events
        .iter()
        .any(|&(u, d)| u == t && d == Direction::Outgoing);
    if any_out {
        1.0
    } else {
        -1.0
    }
}

fn initiator(v: &EpisodeView<'_>) -> f64 {
    endpoint_direction(&v.events, true)
}

fn terminator(v: &EpisodeView<'_>) -> f64 {
    endpoint_direction(&v.events, false)
}

fn mean_response_latency(v: &EpisodeView<'_>) -> f64 {
    let mut next_in: Option<f64> = None;
    let mut next_out: Option<f64> = None;
    let mut sum = 0.0;
    let mut answered = 0usize;
    for &(t, d) in v.events.iter().rev() {
        let reply = match d {
            Direction::Outgoing => next_in,
            Direction::Incoming => next_out,
        };
        if let Some(r) = reply {
            sum += r - t;
            answered += 1;
        }
        match d {
            Direction::Outgoing => next_out = Some(t),
            Direction::Incoming => next_in = Some(t),
        }
    }
    if answered == 0 {
        -1.0
    } else {
        sum / answered as f64
    }
}

fn turn_count(v: &EpisodeView<'_>) -> f64 {
    v.events.windows(2).filter(|w| w[0].1 != w[1].1).count() as f64
}

fn burstiness(v: &EpisodeView<'_>) -> f64 {
    if v.events.len() < 3 {
        return 0.0;
    }
    let gaps = v.gaps();
    let n = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    let sd = (gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd + mean > 0.0 {
        ((sd - mean) / (sd + mean)).clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

/// `∫|n_in·f_in − n_out·f_out| / ∫(n_in·f_in + n_out·f_out)` over the episode;
/// 0 when there is no density at all.
pub fn synchronicity(profile: &DensityProfile, episode: &Episode) -> f64 {
    let g_in = profile.weighted_in();
    let g_out = profile.weighted_out();
    let diff: Vec<f64> = g_in
        .iter()
        .zip(&g_out)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let sum: Vec<f64> = g_in.iter().zip(&g_out).map(|(a, b)| a + b).collect();
    let grid = &profile.grid;
    let num = integrate(&diff, grid, episode.start, episode.end).unwrap_or(0.0);
    let den = integrate(&sum, grid, episode.start, episode.end).unwrap_or(0.0);
    if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Standard feature vector of one episode. `episode.event_indices` must be
/// filled (see [`crate::episodes::assign_events`]).
pub fn compute_features(
    seq: &PairSequence,
    profile: &DensityProfile,
    episode: &Episode,
) -> Result<FeatureVector> {
    let view = EpisodeView::new(seq, profile, episode)?;
    let values = FeatureRegistry::standard().compute(&view);
    FeatureVector::from_slice(&values)
}

/// Episodes × features, rows in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub ids: Vec<String>,
    pub rows: Vec<[f64; FEATURE_COUNT]>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// `episode_id` followed by one column per feature.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["episode_id".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.ids.iter().zip(&self.rows) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn feature_matrix(episodes: &[Episode]) -> Result<FeatureMatrix> {
    let rows = episodes
        .iter()
        .map(|e| {
            e.features.map(|f| f.to_array()).ok_or_else(|| {
                EngineError::InvalidParameter(format!("episode {} has no features", e.id))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureMatrix {
        names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        ids: episodes.iter().map(|e| e.id.clone()).collect(),
        rows,
    })
}

/// Column-wise min–max scaling to `[0, 1]`, for export and visual comparison.
/// Constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: [f64; FEATURE_COUNT],
    pub max: [f64; FEATURE_COUNT],
}

impl MinMaxScaler {
    pub fn fit(rows: &[[f64; FEATURE_COUNT]]) -> Self {
        let mut min = [f64::INFINITY; FEATURE_COUNT];
        let mut max = [f64::NEG_INFINITY; FEATURE_COUNT];
        for row in rows {
            for c in 0..FEATURE_COUNT {
                min[c] = min[c].min(row[c]);
                max[c] = max[c].max(row[c]);
            }
        }
        MinMaxScaler { min, max }
    }

    pub fn transform(&self, row: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        let mut out = [0.0; FEATURE_COUNT];
        for c in 0..FEATURE_COUNT {
            let range = self.max[c] - self.min[c];
            out[c] = if range > 0.0 {
                ((row[c] - self.min[c]) / range).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
        out
    }
}
