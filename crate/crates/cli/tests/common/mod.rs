#![allow(dead_code)]

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Bursty email-like log: `n_events` whitespace triples with integer
/// timestamps in `[0, days * 86400]` (both ends present), among
/// `n_entities` ids with Zipf-like activity.
pub fn synthetic_corpus(seed: u64, n_events: usize, n_entities: usize, days: u64) -> String {
    assert!(n_events >= 2 && n_entities >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..n_entities)
        .map(|i| 1.0 / ((i + 1) as f64).powf(0.8))
        .collect();
    let pick = WeightedIndex::new(&weights).unwrap();
    let span = days * 86_400;
    let mut events: Vec<(u64, usize, usize)> = vec![(0, 0, 1), (span, 1, 0)];
    while events.len() < n_events {
        let a = pick.sample(&mut rng);
        let mut b = pick.sample(&mut rng);
        while b == a {
            b = rng.random_range(0..n_entities);
        }
        let center = rng.random_range(0..=span) as f64;
        let size = 1 + (rng.random::<f64>().ln() / 0.85f64.ln()) as usize;
        for _ in 0..size.min(n_events - events.len()) {
            let offset = -300.0 * rng.random::<f64>().ln();
            let t = (center + offset).round().clamp(0.0, span as f64) as u64;
            if rng.random_bool(0.6) {
                events.push((t, a, b));
            } else {
                events.push((t, b, a));
            }
        }
    }
    events.sort();
    let mut out = String::with_capacity(n_events * 16);
    for (t, s, r) in events {
        out.push_str(&format!("{s} {r} {t}\n"));
    }
    out
}
