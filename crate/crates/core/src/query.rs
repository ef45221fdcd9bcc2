//! Production-path probabilistic spatial queries.
//!
//! Range and kNN probabilities are computed per object without enumerating
//! worlds. For kNN and ranking, an instance `u` of the target object is at
//! rank `j + 1` exactly when `j` of the other objects are closer to the query
//! than `u`. Those other objects are independent, so the count of closer
//! objects is Poisson-binomial and comes from the Bernoulli-sum kernel.

use crate::bernoulli::{BernoulliVector, CountDistribution, Kernel};
use crate::error::{Error, Result};
use crate::model::{QueryPoint, UncertainDatabase, UncertainObject};
use crate::scalar::{round12, Real};
use crate::worlds::{ObjectProbabilities, ResultSet, SpatialPredicate};

/// An epsilon-range around a query point, boundary inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeQuery<F> {
    pub center: QueryPoint<F>,
    pub epsilon: F,
}

impl<F: Real> RangeQuery<F> {
    pub fn new(center: QueryPoint<F>, epsilon: F) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= F::zero()) {
            return Err(Error::InvalidArgument(format!(
                "range epsilon must be finite and non-negative, got {epsilon}"
            )));
        }
        Ok(RangeQuery { center, epsilon })
    }
}

/// How object probabilities are turned into a result set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbabilisticPredicate<F> {
    /// Objects with probability at least `tau`.
    Threshold(F),
    /// The `k` most probable objects, plus anything tied with the k-th.
    TopK(usize),
    /// Every object with non-zero probability.
    Possibilistic,
}

impl<F: Real> ProbabilisticPredicate<F> {
    pub fn threshold(tau: F) -> Result<Self> {
        if !(tau >= F::zero() && tau <= F::one()) {
            return Err(Error::InvalidArgument(format!(
                "threshold must lie in [0, 1], got {tau}"
            )));
        }
        Ok(ProbabilisticPredicate::Threshold(tau))
    }

    pub fn top_k(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("top-k requires k >= 1".into()));
        }
        Ok(ProbabilisticPredicate::TopK(k))
    }
}

/// Probability mass of the instances within the range.
pub fn in_range_probability<F: Real>(o: &UncertainObject<F>, rq: &RangeQuery<F>) -> F {
    o.instances()
        .iter()
        .filter(|i| i.position.distance_squared(&rq.center) <= rq.epsilon * rq.epsilon)
        .map(|i| i.prob)
        .sum()
}

/// Distribution of the number of objects inside the range.
pub fn range_count_distribution<F: Real>(
    db: &UncertainDatabase<F>,
    rq: &RangeQuery<F>,
) -> CountDistribution<F> {
    range_count_distribution_with(db, rq, Kernel::default())
}

pub fn range_count_distribution_with<F: Real>(
    db: &UncertainDatabase<F>,
    rq: &RangeQuery<F>,
    kernel: Kernel,
) -> CountDistribution<F> {
    let p = db
        .objects()
        .iter()
        .map(|o| clamp_unit(in_range_probability(o, rq)))
        .collect();
    kernel.count_distribution(&BernoulliVector::new(p).expect("range probabilities lie in [0, 1]"))
}

fn clamp_unit<F: Real>(p: F) -> F {
    p.max(F::zero()).min(F::one())
}

/// Probability mass of `competitor` that lies strictly before an instance of
/// `target_id` at squared distance `d` in the global order (distance, object id).
fn closer_mass<F: Real>(
    competitor: &UncertainObject<F>,
    q: &QueryPoint<F>,
    d: F,
    target_id: &str,
) -> F {
    let id_first = competitor.id() < target_id;
    competitor
        .instances()
        .iter()
        .filter(|v| {
            let dv = v.position.distance_squared(q);
            dv < d || (dv == d && id_first)
        })
        .map(|v| v.prob)
        .sum()
}

/// For each instance of the target, its probability and the distribution of
/// the number of competitors ranked before it.
fn closer_count_distributions<'a, F: Real>(
    db: &'a UncertainDatabase<F>,
    q: &'a QueryPoint<F>,
    target: usize,
    kernel: Kernel,
) -> impl Iterator<Item = (F, CountDistribution<F>)> + 'a {
    let o = &db.objects()[target];
    o.instances().iter().map(move |u| {
        let d = u.position.distance_squared(q);
        let p = db
            .objects()
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != target)
            .map(|(_, c)| clamp_unit(closer_mass(c, q, d, o.id())))
            .collect();
        let dist =
            kernel.count_distribution(&BernoulliVector::new(p).expect("masses lie in [0, 1]"));
        (u.prob, dist)
    })
}

fn target_index<F: Real>(db: &UncertainDatabase<F>, id: &str) -> Result<usize> {
    db.index_of(id)
        .ok_or_else(|| Error::UnknownObject(id.to_string()))
}

/// Probability that object `id` is among the `k` nearest neighbours of `q`.
pub fn knn_object_probability<F: Real>(
    db: &UncertainDatabase<F>,
    q: &QueryPoint<F>,
    k: usize,
    id: &str,
) -> Result<F> {
    knn_object_probability_with(db, q, k, id, Kernel::default())
}

pub fn knn_object_probability_with<F: Real>(
    db: &UncertainDatabase<F>,
    q: &QueryPoint<F>,
    k: usize,
    id: &str,
    kernel: Kernel,
) -> Result<F> {
    if k == 0 {
        return Err(Error::InvalidArgument("kNN requires k >= 1".into()));
    }
    let target = target_index(db, id)?;
    Ok(closer_count_distributions(db, q, target, kernel)
        .map(|(pu, closer)| pu * closer.cdf(k - 1))
        .sum())
}

/// Rank probabilities of one object; `mass()[j]` is the probability of rank
/// `j + 1`. Absent worlds carry no rank, so the masses sum to the object's
/// existence probability.
#[derive(Debug, Clone, PartialEq)]
pub struct RankDistribution<F> {
    mass: Vec<F>,
}

impl<F: Real> RankDistribution<F> {
    pub fn mass(&self) -> &[F] {
        &self.mass
    }

    /// Probability of the 1-based `rank`.
    pub fn rank(&self, rank: usize) -> F {
        rank.checked_sub(1)
            .and_then(|i| self.mass.get(i).copied())
            .unwrap_or_else(F::zero)
    }

    pub fn total(&self) -> F {
        self.mass.iter().copied().sum()
    }
}

pub fn rank_distribution<F: Real>(
    db: &UncertainDatabase<F>,
    q: &QueryPoint<F>,
    id: &str,
) -> Result<RankDistribution<F>> {
    rank_distribution_with(db, q, id, Kernel::default())
}

pub fn rank_distribution_with<F: Real>(
    db: &UncertainDatabase<F>,
    q: &QueryPoint<F>,
    id: &str,
    kernel: Kernel,
) -> Result<RankDistribution<F>> {
    let target = target_index(db, id)?;
    let mut mass = vec![F::zero(); db.len()];
    for (pu, closer) in closer_count_distributions(db, q, target, kernel) {
        for (slot, m) in mass.iter_mut().zip(closer.mass()) {
            *slot = *slot + pu * *m;
        }
    }
    Ok(RankDistribution { mass })
}

/// Probability-weighted distance, not renormalised under existential
/// uncertainty.
pub fn expected_distance<F: Real>(o: &UncertainObject<F>, q: &QueryPoint<F>) -> F {
    o.instances()
        .iter()
        .map(|i| i.prob * i.position.distance(q))
        .sum()
}

/// Object-based probabilities for every object under a spatial predicate.
pub fn object_probabilities<F: Real>(
    db: &UncertainDatabase<F>,
    q: &QueryPoint<F>,
    predicate: &SpatialPredicate<F>,
    kernel: Kernel,
) -> Result<ObjectProbabilities<F>> {
    db.objects()
        .iter()
        .map(|o| {
            let p = match predicate {
                SpatialPredicate::Range { epsilon } => {
                    in_range_probability(o, &RangeQuery::new(*q, *epsilon)?)
                }
                SpatialPredicate::Knn { k } => {
                    knn_object_probability_with(db, q, *k, o.id(), kernel)?
                }
            };
            Ok((o.id().to_string(), p))
        })
        .collect()
}

/// Applies a probabilistic predicate to precomputed object probabilities.
pub fn select<F: Real>(
    probs: &ObjectProbabilities<F>,
    predicate: &ProbabilisticPredicate<F>,
) -> ResultSet {
    match *predicate {
        ProbabilisticPredicate::Possibilistic => ResultSet::new(
            probs
                .iter()
                .filter(|(_, p)| *p > F::zero())
                .map(|(id, _)| id),
        ),
        ProbabilisticPredicate::Threshold(tau) if tau == F::zero() => {
            select(probs, &ProbabilisticPredicate::Possibilistic)
        }
        ProbabilisticPredicate::Threshold(tau) => ResultSet::new(
            probs
                .iter()
                .filter(|(_, p)| round12(*p) >= tau)
                .map(|(id, _)| id),
        ),
        ProbabilisticPredicate::TopK(k) => {
            let mut ranked: Vec<F> = probs.iter().map(|(_, p)| round12(p)).collect();
            ranked.sort_by(|a, b| b.partial_cmp(a).unwrap());
            match ranked.get(k.saturating_sub(1)) {
                None => ResultSet::new(probs.iter().map(|(id, _)| id)),
                Some(&kth) => ResultSet::new(
                    probs
                        .iter()
                        .filter(|(_, p)| round12(*p) >= kth)
                        .map(|(id, _)| id),
                ),
            }
        }
    }
}

/// Objects whose probability to satisfy `predicate` is at least `tau`.
/// `tau = 0` returns every object with non-zero probability.
pub fn threshold_query<F: Real>(
    db: &UncertainDatabase<F>,
    q: &QueryPoint<F>,
    predicate: &SpatialPredicate<F>,
    tau: F,
) -> Result<ResultSet> {
    let pred = ProbabilisticPredicate::threshold(tau)?;
    Ok(select(
        &object_probabilities(db, q, predicate, Kernel::default())?,
        &pred,
    ))
}

/// The smallest set of at least `k` objects such that every member is at
/// least as probable as every non-member.
pub fn topk_predicate<F: Real>(
    db: &UncertainDatabase<F>,
    q: &QueryPoint<F>,
    predicate: &SpatialPredicate<F>,
    k: usize,
) -> Result<ResultSet> {
    if k > db.len() {
        return Err(Error::InvalidArgument(format!(
            "top-k requires k <= {} objects, got {k}",
            db.len()
        )));
    }
    let pred = ProbabilisticPredicate::top_k(k)?;
    Ok(select(
        &object_probabilities(db, q, predicate, Kernel::default())?,
        &pred,
    ))
}
