//! Axis-aligned binary decision trees grown with Gini impurity.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Label;
use crate::features::FEATURE_COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    Leaf {
        label: Label,
    },
    Split {
        feature: usize,
        /// Samples with `x[feature] <= threshold` go left.
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn predict(&self, x: &[f64; FEATURE_COUNT]) -> Label {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { label } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// `(feature, threshold)` of every split, pre-order.
    pub fn splits(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            if let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = n
            {
                out.push((*feature, *threshold));
                stack.push(right);
                stack.push(left);
            }
        }
        out
    }
}

pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub features_per_split: usize,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

fn majority(pos: usize, neg: usize) -> Label {
    if pos > neg {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Grows a tree over `samples` (indices into `xs`/`ys`, repeats allowed).
pub(crate) fn grow<R: Rng>(
    xs: &[[f64; FEATURE_COUNT]],
    ys: &[Label],
    samples: &mut [usize],
    params: &TreeParams,
    depth: usize,
    rng: &mut R,
) -> Node {
    let pos = samples
        .iter()
        .filter(|&&i| ys[i] == Label::Positive)
        .count();
    let neg = samples.len() - pos;
    if pos == 0 || neg == 0 || depth >= params.max_depth || samples.len() < 2 * params.min_leaf {
        return Node::Leaf {
            label: majority(pos, neg),
        };
    }

    let mut order: Vec<usize> = (0..FEATURE_COUNT).collect();
    order.shuffle(rng);

    // Like CART implementations, keep looking past the sampled candidates when
    // none of them admits a valid split.
    let mut best: Option<Candidate> = None;
    for (k, &feature) in order.iter().enumerate() {
        if k >= params.features_per_split && best.is_some() {
            break;
        }
        if let Some(c) = best_split(xs, ys, samples, feature, pos, params.min_leaf) {
            if best.as_ref().is_none_or(|b| c.impurity < b.impurity) {
                best = Some(c);
            }
        }
    }
    let Some(best) = best else {
        return Node::Leaf {
            label: majority(pos, neg),
        };
    };

    let (mut left, mut right): (Vec<usize>, Vec<usize>) = samples
        .iter()
        .partition(|&&i| xs[i][best.feature] <= best.threshold);
    Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow(xs, ys, &mut left, params, depth + 1, rng)),
        right: Box::new(grow(xs, ys, &mut right, params, depth + 1, rng)),
    }
}

fn best_split(
    xs: &[[f64; FEATURE_COUNT]],
    ys: &[Label],
    samples: &mut [usize],
    feature: usize,
    total_pos: usize,
    min_leaf: usize,
) -> Option<Candidate> {
    samples.sort_by(|&a, &b| xs[a][feature].total_cmp(&xs[b][feature]));
    let n = samples.len();
    let mut best: Option<Candidate> = None;
    let mut left_pos = 0;
    for k in 1..n {
        if ys[samples[k - 1]] == Label::Positive {
            left_pos += 1;
        }
        let (lo, hi) = (xs[samples[k - 1]][feature], xs[samples[k]][feature]);
        if lo == hi || k < min_leaf || n - k < min_leaf {
            continue;
        }
        let impurity = (k as f64 * gini(left_pos, k)
            + (n - k) as f64 * gini(total_pos - left_pos, n - k))
            / n as f64;
        if best.as_ref().is_none_or(|b| impurity < b.impurity) {
            let mid = lo + (hi - lo) / 2.0;
            // adjacent floats: keep `hi` on the right
            let threshold = if mid < hi { mid } else { lo };
            best = Some(Candidate {
                feature,
                threshold,
                impurity,
            });
        }
    }
    best
}
