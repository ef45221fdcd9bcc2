use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{QueryPoint, UncertainDatabase, UncertainObject, UncertainQuery};
use crate::scalar::{count, Real};
use crate::worlds::{evaluate_choices, PossibleWorld, ResultSet, SpatialPredicate};

/// Independently sampled possible worlds.
///
/// World `i` is drawn from ChaCha8 seeded with `seed` on stream `i`, so every
/// world is reproducible on its own and sampling order does not matter.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet<F> {
    worlds: Vec<PossibleWorld<F>>,
    /// Sampled query alternative per world; empty for a certain query.
    query_choices: Vec<usize>,
    seed: u64,
}

impl<F: Real> SampleSet<F> {
    pub fn worlds(&self) -> &[PossibleWorld<F>] {
        &self.worlds
    }

    pub fn query_choices(&self) -> &[usize] {
        &self.query_choices
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }
}

pub(crate) fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Inverse-CDF draw over `probs`; `None` for the leftover mass.
pub(crate) fn draw_index<F: Real, R: Rng>(
    rng: &mut R,
    probs: impl Iterator<Item = F>,
    certain: bool,
) -> Option<usize> {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut last = None;
    for (i, p) in probs.enumerate() {
        cumulative += p.to_f64().unwrap();
        if u < cumulative {
            return Some(i);
        }
        last = Some(i);
    }
    // Round-off on a certain object must not make it vanish.
    if certain {
        last
    } else {
        None
    }
}

fn draw_object<F: Real, R: Rng>(rng: &mut R, o: &UncertainObject<F>) -> (Option<usize>, F) {
    let choice = draw_index(
        rng,
        o.instances().iter().map(|i| i.prob),
        !o.is_existentially_uncertain(),
    );
    let p = match choice {
        Some(i) => o.instances()[i].prob,
        None => o.absence_prob(),
    };
    (choice, p)
}

fn draw_world<F: Real, R: Rng>(rng: &mut R, db: &UncertainDatabase<F>) -> PossibleWorld<F> {
    let mut prob = F::one();
    let choices = db
        .objects()
        .iter()
        .map(|o| {
            let (c, p) = draw_object(rng, o);
            prob = prob * p;
            c
        })
        .collect();
    PossibleWorld::from_parts(choices, prob)
}

/// Draws `n` worlds by sampling every object independently.
pub fn sample_worlds<F: Real>(
    db: &UncertainDatabase<F>,
    n: usize,
    seed: u64,
) -> Result<SampleSet<F>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let worlds = (0..n as u64)
        .map(|i| draw_world(&mut substream(seed, i), db))
        .collect();
    Ok(SampleSet {
        worlds,
        query_choices: Vec::new(),
        seed,
    })
}

/// Draws `n` worlds together with a position of an uncertain query, which is
/// sampled first from each world's stream.
pub fn sample_worlds_with_query<F: Real>(
    db: &UncertainDatabase<F>,
    query: &UncertainQuery<F>,
    n: usize,
    seed: u64,
) -> Result<SampleSet<F>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let mut query_choices = Vec::with_capacity(n);
    let mut worlds = Vec::with_capacity(n);
    for i in 0..n as u64 {
        let mut rng = substream(seed, i);
        let q = draw_index(&mut rng, query.alternatives().iter().map(|(_, p)| *p), true)
            .expect("query has at least one position");
        query_choices.push(q);
        worlds.push(draw_world(&mut rng, db));
    }
    Ok(SampleSet {
        worlds,
        query_choices,
        seed,
    })
}

/// A distinct sampled query result and the number of worlds producing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PossibleResult {
    pub result: ResultSet,
    pub support: usize,
}

impl PossibleResult {
    /// Unbiased estimate `support / |X|` of the result's probability.
    pub fn estimate<F: Real>(&self, samples: usize) -> F {
        count::<F>(self.support) / count::<F>(samples)
    }
}

/// Runs the query on every sampled world and counts distinct results.
///
/// For a sample set drawn with [`sample_worlds_with_query`], `query` must be
/// the same uncertain query; for a plain sample set it must be certain.
/// Results are ordered by descending support, then by result.
pub fn estimate_result_probabilities<F: Real>(
    db: &UncertainDatabase<F>,
    samples: &SampleSet<F>,
    query: &UncertainQuery<F>,
    predicate: &SpatialPredicate<F>,
) -> Result<Vec<PossibleResult>> {
    let alternatives = query.alternatives();
    let fixed: Option<QueryPoint<F>> = if samples.query_choices.is_empty() {
        if alternatives.len() != 1 {
            return Err(Error::InvalidArgument(
                "uncertain query needs a sample set drawn with the query".into(),
            ));
        }
        Some(alternatives[0].0)
    } else {
        None
    };
    let mut supports: HashMap<ResultSet, usize> = HashMap::new();
    for (i, world) in samples.worlds.iter().enumerate() {
        let q = match fixed {
            Some(q) => q,
            None => {
                alternatives
                    .get(samples.query_choices[i])
                    .ok_or_else(|| {
                        Error::InvalidArgument("query does not match sample set".into())
                    })?
                    .0
            }
        };
        *supports
            .entry(evaluate_choices(db, world.choices(), &q, predicate))
            .or_insert(0) += 1;
    }
    let mut pr: Vec<PossibleResult> = supports
        .into_iter()
        .map(|(result, support)| PossibleResult { result, support })
        .collect();
    pr.sort_by(|a, b| {
        b.support
            .cmp(&a.support)
            .then_with(|| a.result.cmp(&b.result))
    });
    Ok(pr)
}
