//! Apriori-style PC_tau NN search over the lattice of timestamp subsets.
//!
//! The probability that an object is the nearest neighbour of the query at
//! every timestamp of a set can only shrink as the set grows, so a set can
//! only qualify if all its subsets do. Candidates of size `k` are built from
//! qualifying sets of size `k - 1` and validated against a probability
//! backend.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::Point;
use crate::representatives::sampling::{draw_index, substream};
use crate::scalar::{count, lit, round12, Real};
use crate::worlds::DEFAULT_WORLD_CAP;

use super::{Timestamp, TimestampSet, TrajectoryDatabase};

/// Default limit on validated lattice candidates plus emitted sets.
pub const DEFAULT_LATTICE_CAP: usize = 1_000_000;

/// How nearest-neighbour probabilities are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Enumerate every joint configuration per timestamp and multiply across
    /// timestamps.
    Exact,
    /// Estimate from one shared set of sampled trajectory worlds.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PcnnOptions {
    /// Factor timestamps with probability one out of the lattice search.
    pub factor_certain: bool,
    pub lattice_cap: usize,
}

impl Default for PcnnOptions {
    fn default() -> Self {
        PcnnOptions {
            factor_certain: true,
            lattice_cap: DEFAULT_LATTICE_CAP,
        }
    }
}

/// Nearest neighbour at one timestamp: smallest distance, ties by object id.
fn nearest_object<F: Real>(q: &Point<F>, positions: &[(usize, &str, Point<F>)]) -> usize {
    positions
        .iter()
        .min_by(|a, b| {
            a.2.distance_squared(q)
                .partial_cmp(&b.2.distance_squared(q))
                .unwrap()
                .then_with(|| a.1.cmp(b.1))
        })
        .map(|p| p.0)
        .expect("at least one object")
}

/// Per sampled world and object, the bitmask of timestamps at which that
/// object is the strict nearest neighbour of the query.
#[derive(Debug, Clone, PartialEq)]
pub struct NnBitmapSample {
    masks: Vec<Vec<u64>>,
}

impl NnBitmapSample {
    /// Samples `n` worlds; world `i` uses ChaCha8 stream `i` of `seed` and
    /// draws, timestamp by timestamp, the query position and then each
    /// object's position.
    pub fn draw<F: Real>(db: &TrajectoryDatabase<F>, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample count must be >= 1".into()));
        }
        let masks = (0..n as u64)
            .map(|w| {
                let mut rng = substream(seed, w);
                let mut mask = vec![0u64; db.objects().len()];
                for (ti, &t) in db.timestamps().iter().enumerate() {
                    let q = pick(&mut rng, db.query().at(t));
                    let positions: Vec<(usize, &str, Point<F>)> = db
                        .objects()
                        .iter()
                        .enumerate()
                        .map(|(i, o)| (i, o.id(), pick(&mut rng, o.at(t))))
                        .collect();
                    if !positions.is_empty() {
                        mask[nearest_object(&q, &positions)] |= 1u64 << ti;
                    }
                }
                mask
            })
            .collect();
        Ok(NnBitmapSample { masks })
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn world_mask(&self, world: usize, object: usize) -> u64 {
        self.masks[world][object]
    }

    /// Number of worlds where `object` is the NN at every timestamp of `mask`.
    pub fn support(&self, object: usize, mask: u64) -> usize {
        self.masks
            .iter()
            .filter(|m| m[object] & mask == mask)
            .count()
    }
}

fn pick<F: Real, R: Rng>(rng: &mut R, alternatives: &[(Point<F>, F)]) -> Point<F> {
    let i =
        draw_index(rng, alternatives.iter().map(|a| a.1), true).expect("non-empty alternatives");
    alternatives[i].0
}

/// Evaluates all-timestamps nearest-neighbour probabilities for one backend.
/// Built once and shared by every lattice validation.
#[derive(Debug, Clone)]
pub enum PfannEvaluator<F> {
    /// `nn_prob[object][timestamp index]`.
    Exact {
        nn_prob: Vec<Vec<F>>,
    },
    Sampled(NnBitmapSample),
}

impl<F: Real> PfannEvaluator<F> {
    pub fn new(db: &TrajectoryDatabase<F>, backend: Backend) -> Result<Self> {
        match backend {
            Backend::Exact => Ok(PfannEvaluator::Exact {
                nn_prob: exact_nn_probabilities(db, DEFAULT_WORLD_CAP)?,
            }),
            Backend::Sampled { samples, seed } => Ok(PfannEvaluator::Sampled(
                NnBitmapSample::draw(db, samples, seed)?,
            )),
        }
    }

    /// Probability that `object` is the NN at every timestamp in `mask`;
    /// the empty set has probability one.
    pub fn probability(&self, object: usize, mask: u64) -> F {
        match self {
            PfannEvaluator::Exact { nn_prob } => (0..64)
                .filter(|i| mask & (1u64 << i) != 0)
                .map(|i| nn_prob[object][i])
                .fold(F::one(), |acc, p| acc * p),
            PfannEvaluator::Sampled(sample) => {
                count::<F>(sample.support(object, mask)) / count::<F>(sample.len())
            }
        }
    }

    /// Whether the single timestamp has probability one for `object`.
    fn is_certain(&self, object: usize, timestamp_index: usize) -> bool {
        let mask = 1u64 << timestamp_index;
        match self {
            PfannEvaluator::Exact { nn_prob } => {
                nn_prob[object][timestamp_index] >= F::one() - lit(1e-12)
            }
            PfannEvaluator::Sampled(sample) => sample.support(object, mask) == sample.len(),
        }
    }
}

/// Per timestamp, enumerates the joint positions of query and objects.
fn exact_nn_probabilities<F: Real>(db: &TrajectoryDatabase<F>, cap: u128) -> Result<Vec<Vec<F>>> {
    let n = db.objects().len();
    let mut out = vec![vec![F::zero(); db.timestamps().len()]; n];
    for (ti, &t) in db.timestamps().iter().enumerate() {
        let columns: Vec<&[(Point<F>, F)]> = std::iter::once(db.query().at(t))
            .chain(db.objects().iter().map(|o| o.at(t)))
            .collect();
        let worlds = columns
            .iter()
            .fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128));
        if worlds > cap {
            return Err(Error::CapExceeded { worlds, cap });
        }
        if n == 0 {
            continue;
        }
        let mut digits = vec![0usize; columns.len()];
        loop {
            let mut prob = F::one();
            for (c, &d) in columns.iter().zip(&digits) {
                prob = prob * c[d].1;
            }
            let q = columns[0][digits[0]].0;
            let positions: Vec<(usize, &str, Point<F>)> = db
                .objects()
                .iter()
                .enumerate()
                .map(|(i, o)| (i, o.id(), columns[i + 1][digits[i + 1]].0))
                .collect();
            let nn = nearest_object(&q, &positions);
            out[nn][ti] = out[nn][ti] + prob;

            let mut pos = columns.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < columns[pos].len() {
                    break;
                }
                digits[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX {
                break;
            }
        }
    }
    Ok(out)
}

fn object_index<F: Real>(db: &TrajectoryDatabase<F>, id: &str) -> Result<usize> {
    db.index_of(id)
        .ok_or_else(|| Error::UnknownObject(id.to_string()))
}

/// Probability that object `o` is the nearest neighbour of the query at every
/// timestamp of `subset`. The sampled backend draws a fresh sample here; use
/// [`PfannEvaluator`] to share one across many evaluations.
pub fn pfann_probability<F: Real>(
    db: &TrajectoryDatabase<F>,
    o: &str,
    subset: &[Timestamp],
    backend: Backend,
) -> Result<F> {
    let object = object_index(db, o)?;
    let mask = db.mask_of(subset)?;
    Ok(PfannEvaluator::new(db, backend)?.probability(object, mask))
}

/// All subsets of `interval` on which `o` is the all-timestamps nearest
/// neighbour with probability at least `tau`, comparing probabilities
/// rounded to 12 decimals.
pub fn pc_tau_nn<F: Real>(
    db: &TrajectoryDatabase<F>,
    o: &str,
    interval: &[Timestamp],
    tau: F,
    backend: Backend,
) -> Result<Vec<TimestampSet<F>>> {
    let evaluator = PfannEvaluator::new(db, backend)?;
    pc_tau_nn_with(db, &evaluator, o, interval, tau, PcnnOptions::default())
}

fn bits(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| mask & (1u64 << i) != 0)
}

pub fn pc_tau_nn_with<F: Real>(
    db: &TrajectoryDatabase<F>,
    evaluator: &PfannEvaluator<F>,
    o: &str,
    interval: &[Timestamp],
    tau: F,
    options: PcnnOptions,
) -> Result<Vec<TimestampSet<F>>> {
    if !(tau > F::zero() && tau <= F::one()) {
        return Err(Error::InvalidArgument(format!("tau {tau} outside (0, 1]")));
    }
    if interval.is_empty() {
        return Err(Error::InvalidArgument("empty query interval".into()));
    }
    let object = object_index(db, o)?;
    let domain = db.mask_of(interval)?;
    let mut budget = options.lattice_cap;
    let mut spend = |n: usize| -> Result<()> {
        budget = budget.checked_sub(n).ok_or(Error::LatticeTooLarge {
            candidates: options.lattice_cap.saturating_add(1),
            cap: options.lattice_cap,
        })?;
        Ok(())
    };

    // Level 1.
    spend(domain.count_ones() as usize)?;
    let mut certain = 0u64;
    let mut level: Vec<(u64, F)> = Vec::new();
    for i in bits(domain) {
        let single = 1u64 << i;
        if options.factor_certain && evaluator.is_certain(object, i) {
            certain |= single;
            continue;
        }
        let p = evaluator.probability(object, single);
        if round12(p) >= tau {
            level.push((single, p));
        }
    }

    // Levels 2.. over the uncertain timestamps. Sets are kept sorted by mask
    // so the join only pairs sets sharing everything but their highest bit.
    let mut found: Vec<(u64, F)> = Vec::new();
    while !level.is_empty() {
        level.sort_by_key(|(m, _)| *m);
        let qualified: HashSet<u64> = level.iter().map(|(m, _)| *m).collect();
        let mut next = Vec::new();
        for (a, &(ma, _)) in level.iter().enumerate() {
            let high_a = 63 - ma.leading_zeros();
            let prefix = ma & !(1u64 << high_a);
            for &(mb, _) in &level[a + 1..] {
                let high_b = 63 - mb.leading_zeros();
                if mb & !(1u64 << high_b) != prefix {
                    continue;
                }
                let candidate = ma | mb;
                // Every (k-1)-subset must have qualified.
                if !bits(candidate).all(|i| qualified.contains(&(candidate & !(1u64 << i)))) {
                    continue;
                }
                spend(1)?;
                let p = evaluator.probability(object, candidate);
                if round12(p) >= tau {
                    next.push((candidate, p));
                }
            }
        }
        found.append(&mut level);
        level = next;
    }

    // Re-attach every subset of the certain timestamps.
    let certain_bits: Vec<usize> = bits(certain).collect();
    let combos = 1usize
        .checked_shl(certain_bits.len() as u32)
        .filter(|c| *c <= options.lattice_cap)
        .ok_or(Error::LatticeTooLarge {
            candidates: usize::MAX,
            cap: options.lattice_cap,
        })?;
    spend((found.len() + 1).saturating_mul(combos))?;
    let mut out = Vec::with_capacity((found.len() + 1) * combos);
    let mut bases = vec![(0u64, F::one())];
    bases.extend(found);
    for (base, p) in bases {
        for c in 0..combos {
            let extra = certain_bits
                .iter()
                .enumerate()
                .filter(|(j, _)| c & (1 << j) != 0)
                .fold(0u64, |m, (_, &i)| m | (1u64 << i));
            let mask = base | extra;
            if mask != 0 {
                out.push((mask, p));
            }
        }
    }
    out.sort_by(|a, b| {
        a.0.count_ones()
            .cmp(&b.0.count_ones())
            .then_with(|| db.timestamps_of(a.0).cmp(&db.timestamps_of(b.0)))
    });
    Ok(out
        .into_iter()
        .map(|(mask, probability)| TimestampSet {
            timestamps: db.timestamps_of(mask),
            probability,
        })
        .collect())
}

/// Runs [`pc_tau_nn`] for every object, sharing one evaluator. Objects
/// without any qualifying set are omitted.
pub fn pcnn_query<F: Real>(
    db: &TrajectoryDatabase<F>,
    interval: &[Timestamp],
    tau: F,
    backend: Backend,
) -> Result<BTreeMap<String, Vec<TimestampSet<F>>>> {
    let evaluator = PfannEvaluator::new(db, backend)?;
    pcnn_query_with(db, &evaluator, interval, tau, PcnnOptions::default())
}

pub fn pcnn_query_with<F: Real>(
    db: &TrajectoryDatabase<F>,
    evaluator: &PfannEvaluator<F>,
    interval: &[Timestamp],
    tau: F,
    options: PcnnOptions,
) -> Result<BTreeMap<String, Vec<TimestampSet<F>>>> {
    let mut out = BTreeMap::new();
    for o in db.objects() {
        let sets = pc_tau_nn_with(db, evaluator, o.id(), interval, tau, options)?;
        if !sets.is_empty() {
            out.insert(o.id().to_string(), sets);
        }
    }
    Ok(out)
}

/// Keeps only sets that are not strictly contained in another reported set.
pub fn maximal_sets<F: Real>(sets: &[TimestampSet<F>]) -> Vec<TimestampSet<F>> {
    let contains = |big: &[Timestamp], small: &[Timestamp]| small.iter().all(|t| big.contains(t));
    sets.iter()
        .filter(|s| {
            !sets.iter().any(|other| {
                other.timestamps.len() > s.timestamps.len()
                    && contains(&other.timestamps, &s.timestamps)
            })
        })
        .cloned()
        .collect()
}
