use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counters {
    requests: u64,
    answered: u64,
    abstained: u64,
    cache_hits: u64,
    classifier_errors: u64,
    downstream_errors: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Answered { cache_hit: bool },
    Abstained { cache_hit: bool },
    ClassifierError,
    /// Grounded, but the answer endpoint failed.
    DownstreamError,
}

/// Point-in-time counter values. `answered + abstained + classifier_errors ==
/// requests`; `downstream_errors` is a subset of `answered`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    pub requests: u64,
    pub answered: u64,
    pub abstained: u64,
    pub cache_hits: u64,
    pub classifier_errors: u64,
    pub downstream_errors: u64,
    pub cumulative_flops_saved_estimate: f64,
}

pub struct Metrics {
    counters: Mutex<Counters>,
    flops_per_abstention: f64,
}

impl Metrics {
    pub fn new(flops_per_abstention: f64) -> Self {
        Metrics {
            counters: Mutex::new(Counters::default()),
            flops_per_abstention,
        }
    }

    pub fn record(&self, outcome: Outcome) {
        let mut c = self.counters.lock();
        c.requests += 1;
        match outcome {
            Outcome::Answered { cache_hit } => {
                c.answered += 1;
                c.cache_hits += u64::from(cache_hit);
            }
            Outcome::Abstained { cache_hit } => {
                c.abstained += 1;
                c.cache_hits += u64::from(cache_hit);
            }
            Outcome::ClassifierError => c.classifier_errors += 1,
            Outcome::DownstreamError => {
                c.answered += 1;
                c.downstream_errors += 1;
            }
        }
    }

    pub fn snapshot(&self) -> MetricsSnapshot {
        let c = *self.counters.lock();
        MetricsSnapshot {
            requests: c.requests,
            answered: c.answered,
            abstained: c.abstained,
            cache_hits: c.cache_hits,
            classifier_errors: c.classifier_errors,
            downstream_errors: c.downstream_errors,
            cumulative_flops_saved_estimate: c.abstained as f64 * self.flops_per_abstention,
        }
    }
}
