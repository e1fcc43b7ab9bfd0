//! User-steered binary episode classification.
//!
//! A [`ForestModel`] is a seeded random forest trained from a handful of
//! labelled episodes. Its confidence (the share of trees voting positive)
//! drives confidence filtering and the uncertainty ranking used to pick the
//! next episodes for relabelling. Several models can be combined with AND/OR.

mod tree;

pub use tree::Node;

use std::cmp::Ordering;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::episodes::Episode;
use crate::error::{EngineError, Result};
use crate::features::{FeatureVector, FEATURE_COUNT, FEATURE_NAMES};

/// Version written into model files.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Bootstrap draws containing a single class are redrawn this many times
/// before falling back to the full training set.
const BOOTSTRAP_REDRAWS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Negative,
    Positive,
}

impl FromStr for Label {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" | "1" | "true" | "relevant" => Ok(Label::Positive),
            "negative" | "neg" | "0" | "false" | "irrelevant" => Ok(Label::Negative),
            other => Err(EngineError::InvalidParameter(format!(
                "unknown label `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub episode_ref: String,
    pub features: FeatureVector,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub features_per_split: usize,
    pub bootstrap: bool,
    pub rng_seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 8,
            min_leaf: 1,
            // ⌈√14⌉
            features_per_split: 4,
            bootstrap: true,
            rng_seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn with_seed(seed: u64) -> Self {
        ForestConfig {
            rng_seed: seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 || self.min_leaf == 0 {
            return Err(EngineError::InvalidParameter(
                "n_trees, max_depth and min_leaf must all be at least 1".into(),
            ));
        }
        if !(1..=FEATURE_COUNT).contains(&self.features_per_split) {
            return Err(EngineError::InvalidParameter(format!(
                "features_per_split must be within 1..={FEATURE_COUNT}, got {}",
                self.features_per_split
            )));
        }
        Ok(())
    }
}

/// Ensemble output for one episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    /// Share of trees voting positive.
    pub confidence: f64,
}

impl Prediction {
    /// Positive only on a strict majority; exactly 0.5 is negative.
    pub fn from_confidence(confidence: f64) -> Self {
        Prediction {
            label: if confidence > 0.5 {
                Label::Positive
            } else {
                Label::Negative
            },
            confidence,
        }
    }
}

/// Anything that labels a feature vector.
pub trait Predictor {
    fn predict(&self, features: &FeatureVector) -> Prediction;
}

/// Trained random forest, serialisable as a self-contained model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub version: u32,
    pub class_name: String,
    pub config: ForestConfig,
    pub feature_names: Vec<String>,
    pub trees: Vec<Node>,
}

impl ForestModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: ForestModel = serde_json::from_str(s)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(EngineError::UnsupportedVersion(model.version));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        ForestModel::from_json(&fs::read_to_string(path)?)
    }
}

impl Predictor for ForestModel {
    fn predict(&self, features: &FeatureVector) -> Prediction {
        let x = features.to_array();
        let votes = self
            .trees
            .iter()
            .filter(|t| t.predict(&x) == Label::Positive)
            .count();
        Prediction::from_confidence(votes as f64 / self.trees.len() as f64)
    }
}

/// Trains a forest named `class_name`.
///
/// Examples are put in canonical order (by episode ref, then label, then
/// features) before resampling, so the input order does not matter.
pub fn train(
    class_name: &str,
    examples: &[LabeledExample],
    config: &ForestConfig,
) -> Result<ForestModel> {
    config.validate()?;
    if examples.is_empty() {
        return Err(EngineError::EmptyTraining);
    }
    let mut sorted: Vec<&LabeledExample> = examples.iter().collect();
    sorted.sort_by(|a, b| {
        a.episode_ref
            .cmp(&b.episode_ref)
            .then(a.label.cmp(&b.label))
            .then_with(|| {
                a.features
                    .to_array()
                    .iter()
                    .zip(b.features.to_array().iter())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
    });
    if let Some(bad) = sorted.iter().find(|e| !e.features.is_finite()) {
        return Err(EngineError::InvalidParameter(format!(
            "example {} has non-finite features",
            bad.episode_ref
        )));
    }
    let xs: Vec<[f64; FEATURE_COUNT]> = sorted.iter().map(|e| e.features.to_array()).collect();
    let ys: Vec<Label> = sorted.iter().map(|e| e.label).collect();
    let has_both = ys.contains(&Label::Positive) && ys.contains(&Label::Negative);
    if !has_both {
        return Err(EngineError::NeedsBothClasses);
    }

    let params = tree::TreeParams {
        max_depth: config.max_depth,
        min_leaf: config.min_leaf,
        features_per_split: config.features_per_split,
    };
    let n = xs.len();
    let trees = (0..config.n_trees)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
            rng.set_stream(t as u64);
            let mut samples = if config.bootstrap {
                bootstrap(&ys, &mut rng)
            } else {
                (0..n).collect()
            };
            tree::grow(&xs, &ys, &mut samples, &params, 0, &mut rng)
        })
        .collect();

    Ok(ForestModel {
        version: MODEL_FORMAT_VERSION,
        class_name: class_name.to_string(),
        config: *config,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        trees,
    })
}

fn bootstrap<R: Rng>(ys: &[Label], rng: &mut R) -> Vec<usize> {
    let n = ys.len();
    for _ in 0..BOOTSTRAP_REDRAWS {
        let draw: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let first = ys[draw[0]];
        if draw.iter().any(|&i| ys[i] != first) {
            return draw;
        }
    }
    (0..n).collect()
}

/// An episode reference with its prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEpisode {
    pub episode_ref: String,
    pub start: f64,
    pub label: Label,
    pub confidence: f64,
}

impl ScoredEpisode {
    pub fn new(episode_ref: impl Into<String>, start: f64, prediction: Prediction) -> Self {
        ScoredEpisode {
            episode_ref: episode_ref.into(),
            start,
            label: prediction.label,
            confidence: prediction.confidence,
        }
    }
}

/// Predictions for every episode, in input order.
pub fn score_episodes(model: &dyn Predictor, episodes: &[Episode]) -> Result<Vec<ScoredEpisode>> {
    episodes
        .iter()
        .map(|e| {
            let f = e.features.as_ref().ok_or_else(|| {
                EngineError::InvalidParameter(format!("episode {} has no features", e.id))
            })?;
            Ok(ScoredEpisode::new(e.id.clone(), e.start, model.predict(f)))
        })
        .collect()
}

/// Orders predictions by closeness of confidence to 0.5, ties by start time.
pub fn rank_by_uncertainty(mut scored: Vec<ScoredEpisode>) -> Vec<ScoredEpisode> {
    scored.sort_by(|a, b| {
        (a.confidence - 0.5)
            .abs()
            .total_cmp(&(b.confidence - 0.5).abs())
            .then(a.start.total_cmp(&b.start))
    });
    scored
}

/// Borderline episodes first.
pub fn rank_uncertain(model: &dyn Predictor, episodes: &[Episode]) -> Result<Vec<ScoredEpisode>> {
    Ok(rank_by_uncertainty(score_episodes(model, episodes)?))
}

/// Predictions of `polarity` the model is at least `min_confidence` sure of:
/// positives with `confidence >= min`, negatives with `confidence <= 1 - min`.
pub fn filter_confident(
    predictions: &[ScoredEpisode],
    min_confidence: f64,
    polarity: Label,
) -> Result<Vec<ScoredEpisode>> {
    if !(0.0..=1.0).contains(&min_confidence) {
        return Err(EngineError::InvalidParameter(format!(
            "min_confidence must be within [0, 1], got {min_confidence}"
        )));
    }
    Ok(predictions
        .iter()
        .filter(|p| {
            p.label == polarity
                && match polarity {
                    Label::Positive => p.confidence >= min_confidence,
                    Label::Negative => p.confidence <= 1.0 - min_confidence,
                }
        })
        .cloned()
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineMode {
    And,
    Or,
}

impl FromStr for CombineMode {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "and" => Ok(CombineMode::And),
            "or" => Ok(CombineMode::Or),
            other => Err(EngineError::InvalidParameter(format!(
                "combine mode must be `and` or `or`, got `{other}`"
            ))),
        }
    }
}

/// AND: positive iff every member is, confidence = min.
/// OR: positive iff any member is, confidence = max.
pub fn combine_predictions(members: &[Prediction], mode: CombineMode) -> Result<Prediction> {
    if members.is_empty() {
        return Err(EngineError::EmptyCombination);
    }
    let confs = members.iter().map(|p| p.confidence);
    Ok(match mode {
        CombineMode::And => Prediction {
            label: if members.iter().all(|p| p.label == Label::Positive) {
                Label::Positive
            } else {
                Label::Negative
            },
            confidence: confs.fold(f64::INFINITY, f64::min),
        },
        CombineMode::Or => Prediction {
            label: if members.iter().any(|p| p.label == Label::Positive) {
                Label::Positive
            } else {
                Label::Negative
            },
            confidence: confs.fold(f64::NEG_INFINITY, f64::max),
        },
    })
}

/// Several models evaluated together.
#[derive(Debug, Clone)]
pub struct CombinedModel {
    pub members: Vec<ForestModel>,
    pub mode: CombineMode,
}

pub fn combine(models: Vec<ForestModel>, mode: CombineMode) -> Result<CombinedModel> {
    if models.is_empty() {
        return Err(EngineError::EmptyCombination);
    }
    Ok(CombinedModel {
        members: models,
        mode,
    })
}

impl Predictor for CombinedModel {
    fn predict(&self, features: &FeatureVector) -> Prediction {
        let preds: Vec<Prediction> = self.members.iter().map(|m| m.predict(features)).collect();
        combine_predictions(&preds, self.mode).expect("combined model has members")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example(id: &str, volume: f64, label: Label) -> LabeledExample {
        LabeledExample {
            episode_ref: id.to_string(),
            features: FeatureVector {
                volume_total: volume,
                ..Default::default()
            },
            label,
        }
    }

    fn separable() -> Vec<LabeledExample> {
        let mut v = Vec::new();
        for (i, x) in [11.0, 12.5, 14.0, 15.0, 18.0].iter().enumerate() {
            v.push(example(&format!("p{i}"), *x, Label::Positive));
        }
        for (i, x) in [0.0, 0.2, 0.5, 0.7, 0.9].iter().enumerate() {
            v.push(example(&format!("n{i}"), *x, Label::Negative));
        }
        v
    }

    fn with_volume(v: f64) -> FeatureVector {
        FeatureVector {
            volume_total: v,
            ..Default::default()
        }
    }

    #[test]
    fn separable_set_is_learned_perfectly() {
        let data = separable();
        let model = train("busy", &data, &ForestConfig::with_seed(42)).unwrap();
        assert_eq!(model.trees.len(), 100);
        for e in &data {
            let p = model.predict(&e.features);
            assert_eq!(p.label, e.label);
            assert_eq!(
                p.confidence,
                if e.label == Label::Positive { 1.0 } else { 0.0 }
            );
        }
        assert_eq!(
            model.predict(&with_volume(20.0)),
            Prediction {
                label: Label::Positive,
                confidence: 1.0
            }
        );
        assert_eq!(
            model.predict(&with_volume(0.5)),
            Prediction {
                label: Label::Negative,
                confidence: 0.0
            }
        );
    }

    #[test]
    fn splits_lie_between_training_values() {
        let data = separable();
        let model = train("busy", &data, &ForestConfig::with_seed(3)).unwrap();
        for tree in &model.trees {
            for (f, thr) in tree.splits() {
                let vals: Vec<f64> = data.iter().map(|e| e.features.to_array()[f]).collect();
                assert!(vals.iter().any(|&v| v <= thr) && vals.iter().any(|&v| v > thr));
            }
        }
    }

    #[test]
    fn two_examples_suffice() {
        let data = vec![
            example("a", 10.0, Label::Positive),
            example("b", 1.0, Label::Negative),
        ];
        let model = train("x", &data, &ForestConfig::default()).unwrap();
        assert_eq!(model.predict(&with_volume(10.0)).label, Label::Positive);
    }

    #[test]
    fn training_errors() {
        let pos = vec![
            example("a", 1.0, Label::Positive),
            example("b", 2.0, Label::Positive),
        ];
        assert!(matches!(
            train("x", &pos, &ForestConfig::default()),
            Err(EngineError::NeedsBothClasses)
        ));
        assert!(matches!(
            train("x", &[], &ForestConfig::default()),
            Err(EngineError::EmptyTraining)
        ));
        let bad = ForestConfig {
            features_per_split: 15,
            ..Default::default()
        };
        assert!(train("x", &separable(), &bad).is_err());
    }

    #[test]
    fn tie_is_negative() {
        assert_eq!(Prediction::from_confidence(0.5).label, Label::Negative);
        let model = ForestModel {
            version: MODEL_FORMAT_VERSION,
            class_name: "tie".into(),
            config: ForestConfig {
                n_trees: 2,
                ..Default::default()
            },
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            trees: vec![
                Node::Leaf {
                    label: Label::Positive,
                },
                Node::Leaf {
                    label: Label::Negative,
                },
            ],
        };
        assert_eq!(
            model.predict(&FeatureVector::default()),
            Prediction {
                label: Label::Negative,
                confidence: 0.5
            }
        );
    }

    #[test]
    fn model_json_round_trip_and_version_check() {
        let model = train("busy", &separable(), &ForestConfig::with_seed(7)).unwrap();
        let json = model.to_json().unwrap();
        assert_eq!(ForestModel::from_json(&json).unwrap(), model);
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["version"] = 99.into();
        assert!(matches!(
            ForestModel::from_json(&v.to_string()),
            Err(EngineError::UnsupportedVersion(99))
        ));
    }

    fn scored(id: &str, start: f64, c: f64) -> ScoredEpisode {
        ScoredEpisode::new(id, start, Prediction::from_confidence(c))
    }

    #[test]
    fn uncertainty_ranking() {
        let ranked = rank_by_uncertainty(vec![
            scored("a", 3.0, 0.9),
            scored("b", 2.0, 0.5),
            scored("c", 1.0, 0.1),
        ]);
        let ids: Vec<&str> = ranked.iter().map(|s| s.episode_ref.as_str()).collect();
        assert_eq!(ids, vec!["b", "c", "a"]);
        assert!(rank_by_uncertainty(vec![]).is_empty());
        let ranked = rank_by_uncertainty(vec![scored("x", 9.0, 1.0), scored("y", 4.0, 1.0)]);
        assert_eq!(ranked[0].episode_ref, "y");
    }

    #[test]
    fn confident_filtering() {
        let preds = vec![
            scored("a", 0.0, 0.95),
            scored("b", 1.0, 0.7),
            scored("c", 2.0, 0.05),
            scored("d", 3.0, 1.0),
        ];
        let ids = |v: Vec<ScoredEpisode>| v.into_iter().map(|s| s.episode_ref).collect::<Vec<_>>();
        assert_eq!(
            ids(filter_confident(&preds, 0.9, Label::Positive).unwrap()),
            vec!["a", "d"]
        );
        assert_eq!(
            ids(filter_confident(&preds, 0.0, Label::Positive).unwrap()),
            vec!["a", "b", "d"]
        );
        assert_eq!(
            ids(filter_confident(&preds, 1.0, Label::Positive).unwrap()),
            vec!["d"]
        );
        assert_eq!(
            ids(filter_confident(&preds, 0.9, Label::Negative).unwrap()),
            vec!["c"]
        );
        assert!(filter_confident(&preds, 1.5, Label::Positive).is_err());
    }

    #[test]
    fn combination_rules() {
        let p = |l, c| Prediction {
            label: l,
            confidence: c,
        };
        use Label::*;
        assert_eq!(
            combine_predictions(&[p(Positive, 0.9), p(Positive, 0.7)], CombineMode::And).unwrap(),
            p(Positive, 0.7)
        );
        assert_eq!(
            combine_predictions(&[p(Positive, 0.9), p(Negative, 0.2)], CombineMode::And).unwrap(),
            p(Negative, 0.2)
        );
        assert_eq!(
            combine_predictions(&[p(Negative, 0.2), p(Positive, 0.8)], CombineMode::Or).unwrap(),
            p(Positive, 0.8)
        );
        assert!(matches!(
            combine(vec![], CombineMode::Or),
            Err(EngineError::EmptyCombination)
        ));
    }

    #[test]
    fn combined_model_predicts() {
        let a = train("a", &separable(), &ForestConfig::with_seed(1)).unwrap();
        let b = train("b", &separable(), &ForestConfig::with_seed(2)).unwrap();
        let and = combine(vec![a, b], CombineMode::And).unwrap();
        assert_eq!(and.predict(&with_volume(30.0)).label, Label::Positive);
        assert_eq!(and.predict(&with_volume(0.1)).label, Label::Negative);
    }

    fn arb_dataset() -> impl Strategy<Value = Vec<([f64; 3], bool)>> {
        prop::collection::vec(
            (
                [-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0],
                any::<bool>(),
            ),
            2..25,
        )
    }

    fn to_examples(data: &[([f64; 3], bool)]) -> Vec<LabeledExample> {
        data.iter()
            .enumerate()
            .map(|(i, (x, pos))| {
                let mut arr = [0.0; FEATURE_COUNT];
                arr[0] = x[0];
                arr[5] = x[1];
                arr[11] = x[2];
                LabeledExample {
                    episode_ref: format!("e{i:03}"),
                    features: FeatureVector::from_array(arr),
                    label: if *pos {
                        Label::Positive
                    } else {
                        Label::Negative
                    },
                }
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn order_independent(data in arb_dataset(), seed in any::<u64>()) {
            let ex = to_examples(&data);
            prop_assume!(ex.iter().any(|e| e.label == Label::Positive) && ex.iter().any(|e| e.label == Label::Negative));
            let cfg = ForestConfig { n_trees: 20, ..ForestConfig::with_seed(seed) };
            let a = train("m", &ex, &cfg).unwrap();
            let mut rev = ex.clone();
            rev.reverse();
            let b = train("m", &rev, &cfg).unwrap();
            prop_assert_eq!(a, b);
        }

        /// Without bootstrap every tree sees every training row, so a strictly
        /// increasing transform of one column leaves each row's path, and its
        /// vote, unchanged.
        #[test]
        fn monotone_rescaling_keeps_training_predictions(data in arb_dataset(), seed in any::<u64>(), col in 0usize..3) {
            let ex = to_examples(&data);
            prop_assume!(ex.iter().any(|e| e.label == Label::Positive) && ex.iter().any(|e| e.label == Label::Negative));
            let idx = [0, 5, 11][col];
            let rescaled: Vec<LabeledExample> = ex
                .iter()
                .map(|e| {
                    let mut x = e.features.to_array();
                    x[idx] = (x[idx] / 4.0).exp() + x[idx].powi(3);
                    LabeledExample { features: FeatureVector::from_array(x), ..e.clone() }
                })
                .collect();
            let cfg = ForestConfig { n_trees: 16, bootstrap: false, ..ForestConfig::with_seed(seed) };
            let a = train("m", &ex, &cfg).unwrap();
            let b = train("m", &rescaled, &cfg).unwrap();
            for (e, r) in ex.iter().zip(&rescaled) {
                prop_assert_eq!(a.predict(&e.features), b.predict(&r.features));
            }
        }

        #[test]
        fn confidences_are_vote_fractions(data in arb_dataset(), seed in any::<u64>()) {
            let ex = to_examples(&data);
            prop_assume!(ex.iter().any(|e| e.label == Label::Positive) && ex.iter().any(|e| e.label == Label::Negative));
            let cfg = ForestConfig { n_trees: 16, ..ForestConfig::with_seed(seed) };
            let m = train("m", &ex, &cfg).unwrap();
            for e in &ex {
                let p = m.predict(&e.features);
                let votes = p.confidence * 16.0;
                prop_assert!((votes - votes.round()).abs() < 1e-12);
                prop_assert_eq!(p.label == Label::Positive, p.confidence > 0.5);
            }
        }
    }
}
