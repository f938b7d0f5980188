//! Synthetic corpora with a known, lexically separable answer key.
//!
//! Grounded contexts literally contain every query token; ungrounded contexts
//! are drawn from a vocabulary disjoint from the query vocabulary.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Label, QueryContextPair, Source, Split};

const QUERY_WORDS: &[&str] = &[
    "glacier", "harbor", "violin", "copper", "orchard", "lantern", "meadow", "falcon", "saddle", "quarry",
    "beacon", "thistle", "canyon", "ember", "walnut", "pylon", "marsh", "tundra", "cobalt", "garnet",
    "sonnet", "pigment", "turbine", "fresco", "bison", "kelp", "monsoon", "spindle", "basalt", "amber",
];

const FILLER_WORDS: &[&str] = &[
    "report", "morning", "council", "market", "village", "engine", "letter", "season", "garden", "bridge",
    "window", "ticket", "station", "record", "festival", "courier", "shadow", "planet", "circuit", "ledger",
    "signal", "canvas", "mirror", "anchor", "pocket", "ribbon", "island", "tunnel", "thunder", "velvet",
];

/// Generates `n` pairs, alternating Grounded and Ungrounded.
pub fn separable_corpus(n: usize, seed: u64) -> Vec<QueryContextPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let query_len = rng.random_range(2..=5);
            let query: Vec<&str> = QUERY_WORDS.choose_multiple(&mut rng, query_len).copied().collect();
            let label = if i % 2 == 0 {
                Label::Grounded
            } else {
                Label::Ungrounded
            };
            let mut context: Vec<&str> = (0..rng.random_range(8..24))
                .map(|_| *FILLER_WORDS.choose(&mut rng).unwrap())
                .collect();
            if label == Label::Grounded {
                for word in &query {
                    let at = rng.random_range(0..=context.len());
                    context.insert(at, word);
                }
            }
            QueryContextPair::new(
                format!("synthetic:{i:06}"),
                &format!("what about the {}?", query.join(" ")),
                &format!("{}.", context.join(" ")),
                label,
                Source::Synthetic,
                Split::Test,
            )
            .expect("generated texts are non-empty")
        })
        .collect()
}
