//! Deterministic inputs for the benchmarks.

use commdyn_core::{Direction, FeatureVector, Label, LabeledExample, Pair, PairSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` events in bursts of up to 20 messages a few minutes apart, with bursts
/// spread over `span` seconds.
pub fn bursty_sequence(seed: u64, n: usize, span: f64) -> PairSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::with_capacity(n);
    while events.len() < n {
        let start = rng.random_range(0.0..span);
        let size = rng.random_range(1..=20).min(n - events.len());
        let mut t = start;
        for _ in 0..size {
            let dir = if rng.random_bool(0.6) {
                Direction::Outgoing
            } else {
                Direction::Incoming
            };
            events.push((t, dir));
            t += rng.random_range(10.0..600.0);
        }
    }
    PairSequence::new(Pair::new("a", "b"), events)
}

/// Labelled rows with random features; the label follows the first two
/// columns, so both classes are present for any `n >= 2`.
pub fn examples(seed: u64, n: usize) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut x = [0.0; commdyn_core::features::FEATURE_COUNT];
            for v in x.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            let positive = if i < 2 { i == 0 } else { x[0] + x[1] > 0.0 };
            LabeledExample {
                episode_ref: format!("e{i:05}"),
                features: FeatureVector::from_array(x),
                label: if positive {
                    Label::Positive
                } else {
                    Label::Negative
                },
            }
        })
        .collect()
}
