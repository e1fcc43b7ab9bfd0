//! Communication dynamics between entity pairs.
//!
//! Directed, timestamped messages ([`ingest`]) are turned into incoming and
//! outgoing Gaussian kernel densities ([`density`]), segmented into episodes
//! wherever the total density exceeds a threshold ([`episodes`]), described by
//! a fourteen-column feature vector ([`features`]) and classified with
//! user-trained random forests ([`classify`]). [`pipeline`] chains the steps
//! for a single pair.

// `!(a < b)` is used to reject NaN along with out-of-order values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod density;
pub mod episodes;
pub mod error;
pub mod features;
pub mod ingest;
pub mod pipeline;

pub use classify::{
    combine, combine_predictions, filter_confident, rank_by_uncertainty, rank_uncertain,
    score_episodes, train, CombineMode, CombinedModel, ForestConfig, ForestModel, Label,
    LabeledExample, Prediction, Predictor, ScoredEpisode,
};
pub use density::{
    default_grid, estimate_density, integrate, kernel, profile_pair, DensityProfile, Grid,
    KdeParams,
};
pub use episodes::{
    assign_events, detect, segment, zoom_params, DetectionParams, Episode, EpsilonMode, Threshold,
    ZoomLevel,
};
pub use error::{EngineError, Result};
pub use features::{
    compute_features, feature_matrix, synchronicity, FeatureMatrix, FeatureVector, FEATURE_NAMES,
};
pub use ingest::{
    parse_events, read_events, Direction, EntityId, EventLog, InputFormat, Pair, PairSequence,
    PairSummary, ParseOptions, ParseReport,
};
pub use pipeline::{analyze_pair, analyze_sequence, AnalysisParams, PairAnalysis};
