//! End-to-end analysis of one pair: sequence → profile → episodes → features.

use serde::{Deserialize, Serialize};

use crate::density::{
    default_grid, profile_pair, DensityProfile, Grid, KdeParams, DEFAULT_GRID_SAMPLES,
};
use crate::episodes::{assign_events, detect, zoom_params, DetectionParams, Episode, ZoomLevel};
use crate::error::{EngineError, Result};
use crate::features::compute_features;
use crate::ingest::{EventLog, Pair, PairSequence};

/// Kernel settings; unset fields fall back to the zoom level.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub h: Option<f64>,
    pub grid_n: Option<usize>,
    /// Restricts the grid to `[from, to]`.
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub zoom: ZoomLevel,
    pub detection: DetectionParams,
}

impl AnalysisParams {
    /// Kernel parameters for `seq`: explicit values win, otherwise the zoom
    /// level is applied to the viewed range (the requested window or the
    /// sequence span, at least one second).
    pub fn kde_for(&self, seq: &PairSequence) -> Result<KdeParams> {
        let view = match (self.from, self.to, seq.span()) {
            (Some(f), Some(t), _) => t - f,
            (_, _, Some((first, last))) => last - first,
            _ => 1.0,
        }
        .max(1.0);
        let (zoomed, _) = zoom_params(view, &self.zoom)?;
        KdeParams::new(
            self.mu.unwrap_or(zoomed.mu),
            self.sigma.unwrap_or(zoomed.sigma),
            self.h.unwrap_or(zoomed.h),
        )
    }

    pub fn grid_for(&self, seq: &PairSequence, kde: &KdeParams) -> Result<Grid> {
        let n = self.grid_n.unwrap_or(DEFAULT_GRID_SAMPLES);
        match (self.from, self.to) {
            (None, None) => default_grid(seq, kde, n),
            (from, to) => {
                let auto = default_grid(seq, kde, n)?;
                let from = from.unwrap_or(auto.start);
                let to = to.unwrap_or(auto.end());
                if from > to {
                    return Err(EngineError::InvalidInterval {
                        start: from,
                        end: to,
                    });
                }
                Grid::spanning(from, to, n)
            }
        }
    }
}

/// Everything derived for one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAnalysis {
    pub sequence: PairSequence,
    pub profile: DensityProfile,
    pub episodes: Vec<Episode>,
    /// Sequence indices of events outside every episode.
    pub residual: Vec<usize>,
}

/// Profile of `seq` under `params`.
pub fn profile_sequence(seq: &PairSequence, params: &AnalysisParams) -> Result<DensityProfile> {
    let kde = params.kde_for(seq)?;
    let grid = params.grid_for(seq, &kde)?;
    Ok(profile_pair(seq, &kde, &grid))
}

/// Segments, assigns events to and computes features for every episode of
/// `seq`. Episodes left without events (possible with shifted kernels or a
/// clipped window) keep `features = None`.
pub fn analyze_sequence(seq: PairSequence, params: &AnalysisParams) -> Result<PairAnalysis> {
    let profile = profile_sequence(&seq, params)?;
    let mut episodes = detect(&profile, &params.detection)?;
    let residual = assign_events(&seq, &mut episodes);
    for ep in episodes.iter_mut() {
        if !ep.event_indices.is_empty() {
            ep.features = Some(compute_features(&seq, &profile, ep)?);
        }
    }
    Ok(PairAnalysis {
        sequence: seq,
        profile,
        episodes,
        residual,
    })
}

pub fn analyze_pair(log: &EventLog, pair: &Pair, params: &AnalysisParams) -> Result<PairAnalysis> {
    analyze_sequence(log.pair_sequence(&pair.a, &pair.b)?, params)
}
