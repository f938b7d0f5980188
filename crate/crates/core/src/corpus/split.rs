use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, Label, QueryContextPair, Split};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, dev: f64, test: f64) -> Result<Self, CorpusError> {
        let ratios = SplitRatios { train, dev, test };
        ratios.validate()?;
        Ok(ratios)
    }

    fn as_array(&self) -> [f64; 3] {
        [self.train, self.dev, self.test]
    }

    fn validate(&self) -> Result<(), CorpusError> {
        let r = self.as_array();
        let ok = r.iter().all(|x| x.is_finite() && *x >= 0.0) && (r.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        if ok {
            Ok(())
        } else {
            Err(CorpusError::InvalidRatios(r))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitCorpus {
    pub train: Vec<QueryContextPair>,
    pub dev: Vec<QueryContextPair>,
    pub test: Vec<QueryContextPair>,
}

impl SplitCorpus {
    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Largest-remainder apportionment of `n` items over the ratios; ties go to
/// the earlier split.
fn apportion(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| r * n as f64);
    let mut counts = quotas.map(|q| q.floor() as usize);
    let mut left = n - counts.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if ratios[i] > 0.0 {
            counts[i] += 1;
            left -= 1;
        }
    }
    counts
}

/// Splits per label so each split keeps the global label proportion. Each
/// pair's `split` field is rewritten; every output list is sorted by id.
pub fn stratified_split(
    mut pairs: Vec<QueryContextPair>,
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitCorpus, CorpusError> {
    ratios.validate()?;
    if pairs.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    pairs.sort_by(|a, b| a.id.cmp(&b.id));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SplitCorpus::default();
    for label in [Label::Grounded, Label::Ungrounded] {
        let mut group: Vec<QueryContextPair> = pairs.iter().filter(|p| p.label == label).cloned().collect();
        group.shuffle(&mut rng);
        let [n_train, n_dev, _] = apportion(group.len(), ratios.as_array());
        for (i, mut pair) in group.into_iter().enumerate() {
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_dev {
                Split::Dev
            } else {
                Split::Test
            };
            pair.split = split;
            match split {
                Split::Train => out.train.push(pair),
                Split::Dev => out.dev.push(pair),
                Split::Test => out.test.push(pair),
            }
        }
    }
    for part in [&mut out.train, &mut out.dev, &mut out.test] {
        part.sort_by(|a, b| a.id.cmp(&b.id));
    }
    Ok(out)
}
