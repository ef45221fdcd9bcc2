//! Brute-force possible-worlds semantics.
//!
//! Every combination of one instance (or absence) per object is a possible
//! world with probability `prod_i P(u_i)`. Enumerating them is exponential in
//! the number of objects, so this module is only meant for small databases and
//! serves as the ground truth the polynomial algorithms are tested against.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{Point, QueryPoint, UncertainDatabase, UncertainQuery};
use crate::scalar::Real;

/// Default maximum number of worlds the oracle will enumerate.
pub const DEFAULT_WORLD_CAP: u128 = 1 << 22;

/// One instance choice per object, `None` meaning the object is absent.
#[derive(Debug, Clone, PartialEq)]
pub struct PossibleWorld<F> {
    choices: Vec<Option<usize>>,
    prob: F,
}

impl<F: Real> PossibleWorld<F> {
    /// Builds a world from choices aligned with the database's object order.
    pub fn new(db: &UncertainDatabase<F>, choices: Vec<Option<usize>>) -> Result<Self> {
        if choices.len() != db.len() {
            return Err(Error::InvalidArgument(format!(
                "world has {} choices for {} objects",
                choices.len(),
                db.len()
            )));
        }
        let mut prob = F::one();
        for (object, choice) in db.objects().iter().zip(&choices) {
            prob = prob
                * match choice {
                    Some(i) => {
                        object
                            .instances()
                            .get(*i)
                            .ok_or_else(|| {
                                Error::InvalidArgument(format!(
                                    "object `{}` has no instance {i}",
                                    object.id()
                                ))
                            })?
                            .prob
                    }
                    None => object.absence_prob(),
                };
        }
        Ok(PossibleWorld { choices, prob })
    }

    pub(crate) fn from_parts(choices: Vec<Option<usize>>, prob: F) -> Self {
        PossibleWorld { choices, prob }
    }

    /// Instance index chosen for each object, in database order.
    pub fn choices(&self) -> &[Option<usize>] {
        &self.choices
    }

    pub fn choice(&self, object_index: usize) -> Option<usize> {
        self.choices[object_index]
    }

    pub fn prob(&self) -> F {
        self.prob
    }

    /// `object_id -> chosen instance` mapping.
    pub fn choice_map<'a>(&self, db: &'a UncertainDatabase<F>) -> BTreeMap<&'a str, Option<usize>> {
        db.objects()
            .iter()
            .zip(&self.choices)
            .map(|(o, c)| (o.id(), *c))
            .collect()
    }

    /// Position of an object in this world, if it exists.
    pub fn position(&self, db: &UncertainDatabase<F>, object_index: usize) -> Option<Point<F>> {
        self.choices[object_index].map(|i| db.objects()[object_index].instances()[i].position)
    }
}

/// Canonical query result: object ids in ascending order, no duplicates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ResultSet(Vec<String>);

impl ResultSet {
    pub fn new<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut members: Vec<String> = ids.into_iter().map(Into::into).collect();
        members.sort();
        members.dedup();
        ResultSet(members)
    }

    pub fn empty() -> Self {
        ResultSet(Vec::new())
    }

    pub fn members(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.binary_search_by(|m| m.as_str().cmp(id)).is_ok()
    }

    pub fn is_subset(&self, other: &ResultSet) -> bool {
        self.0.iter().all(|m| other.contains(m))
    }

    /// Size of the intersection, by merging the two sorted member lists.
    pub fn intersection_len(&self, other: &ResultSet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    pub fn union_len(&self, other: &ResultSet) -> usize {
        self.len() + other.len() - self.intersection_len(other)
    }
}

impl fmt::Display for ResultSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.join(","))
    }
}

impl Serialize for ResultSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

/// Marginal probability of each object to belong to the query result.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObjectProbabilities<F>(BTreeMap<String, F>);

impl<F: Real> ObjectProbabilities<F> {
    pub fn new() -> Self {
        ObjectProbabilities(BTreeMap::new())
    }

    pub fn insert(&mut self, id: impl Into<String>, p: F) {
        self.0.insert(id.into(), p);
    }

    /// Probability of `id`; objects never seen have probability zero.
    pub fn prob(&self, id: &str) -> F {
        self.0.get(id).copied().unwrap_or_else(F::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, F)> + '_ {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_map(&self) -> &BTreeMap<String, F> {
        &self.0
    }
}

impl<F: Real> FromIterator<(String, F)> for ObjectProbabilities<F> {
    fn from_iter<I: IntoIterator<Item = (String, F)>>(iter: I) -> Self {
        ObjectProbabilities(iter.into_iter().collect())
    }
}

/// Probability of each distinct result set being the exact query outcome.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultDistribution<F>(BTreeMap<ResultSet, F>);

impl<F: Real> ResultDistribution<F> {
    pub fn new() -> Self {
        ResultDistribution(BTreeMap::new())
    }

    pub fn add(&mut self, result: ResultSet, p: F) {
        let slot = self.0.entry(result).or_insert_with(F::zero);
        *slot = *slot + p;
    }

    pub fn prob(&self, result: &ResultSet) -> F {
        self.0.get(result).copied().unwrap_or_else(F::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ResultSet, F)> + '_ {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> F {
        self.0.values().copied().sum()
    }
}

/// Deterministic spatial predicate evaluated on a single world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialPredicate<F> {
    /// Objects within distance `epsilon` of the query (boundary inclusive).
    Range { epsilon: F },
    /// The `k` existing objects closest to the query; distance ties break by
    /// object id. Fewer than `k` objects exist means all of them.
    Knn { k: usize },
}

impl<F: Real> SpatialPredicate<F> {
    pub fn range(epsilon: F) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= F::zero()) {
            return Err(Error::InvalidArgument(format!(
                "range epsilon must be finite and non-negative, got {epsilon}"
            )));
        }
        Ok(SpatialPredicate::Range { epsilon })
    }

    pub fn knn(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("kNN requires k >= 1".into()));
        }
        Ok(SpatialPredicate::Knn { k })
    }
}

/// Runs a deterministic spatial query on one world.
pub fn evaluate<F: Real>(
    db: &UncertainDatabase<F>,
    world: &PossibleWorld<F>,
    q: &QueryPoint<F>,
    predicate: &SpatialPredicate<F>,
) -> ResultSet {
    evaluate_choices(db, world.choices(), q, predicate)
}

pub(crate) fn evaluate_choices<F: Real>(
    db: &UncertainDatabase<F>,
    choices: &[Option<usize>],
    q: &QueryPoint<F>,
    predicate: &SpatialPredicate<F>,
) -> ResultSet {
    let present =
        db.objects().iter().zip(choices).filter_map(|(o, c)| {
            c.map(|i| (o.id(), o.instances()[i].position.distance_squared(q)))
        });
    match predicate {
        SpatialPredicate::Range { epsilon } => ResultSet::new(
            present
                .filter(|(_, d)| *d <= *epsilon * *epsilon)
                .map(|(id, _)| id),
        ),
        SpatialPredicate::Knn { k } => {
            let mut ranked: Vec<(&str, F)> = present.collect();
            ranked.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(b.0)));
            ResultSet::new(ranked.into_iter().take(*k).map(|(id, _)| id))
        }
    }
}

/// Branches of each object: its instances, then absence if the object is
/// existentially uncertain.
fn branches<F: Real>(db: &UncertainDatabase<F>) -> Vec<Vec<Option<usize>>> {
    db.objects()
        .iter()
        .map(|o| {
            let mut b: Vec<Option<usize>> = (0..o.instances().len()).map(Some).collect();
            if o.is_existentially_uncertain() {
                b.push(None);
            }
            b
        })
        .collect()
}

/// Number of possible worlds (saturating).
pub fn world_count<F: Real>(db: &UncertainDatabase<F>) -> u128 {
    branches(db)
        .iter()
        .fold(1u128, |acc, b| acc.saturating_mul(b.len() as u128))
}

/// Odometer over the branch lists; the last object varies fastest.
pub struct WorldIter<'a, F> {
    db: &'a UncertainDatabase<F>,
    branches: Vec<Vec<Option<usize>>>,
    digits: Vec<usize>,
    done: bool,
}

impl<F: Real> Iterator for WorldIter<'_, F> {
    type Item = PossibleWorld<F>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut prob = F::one();
        let mut choices = Vec::with_capacity(self.digits.len());
        for ((object, branch), &d) in self
            .db
            .objects()
            .iter()
            .zip(&self.branches)
            .zip(&self.digits)
        {
            let c = branch[d];
            prob = prob
                * match c {
                    Some(i) => object.instances()[i].prob,
                    None => object.absence_prob(),
                };
            choices.push(c);
        }
        // Advance.
        self.done = true;
        for pos in (0..self.digits.len()).rev() {
            self.digits[pos] += 1;
            if self.digits[pos] < self.branches[pos].len() {
                self.done = false;
                break;
            }
            self.digits[pos] = 0;
        }
        Some(PossibleWorld { choices, prob })
    }
}

/// Enumerates all worlds with the default cap.
pub fn enumerate_worlds<F: Real>(db: &UncertainDatabase<F>) -> Result<WorldIter<'_, F>> {
    enumerate_worlds_capped(db, DEFAULT_WORLD_CAP)
}

/// Enumerates all worlds, failing if there are more than `cap`.
pub fn enumerate_worlds_capped<F: Real>(
    db: &UncertainDatabase<F>,
    cap: u128,
) -> Result<WorldIter<'_, F>> {
    let worlds = world_count(db);
    if worlds > cap {
        return Err(Error::CapExceeded { worlds, cap });
    }
    let branches = branches(db);
    Ok(WorldIter {
        db,
        digits: vec![0; branches.len()],
        branches,
        done: false,
    })
}

/// Total probability of the worlds satisfying `predicate`.
pub fn query_probability<F, P>(db: &UncertainDatabase<F>, predicate: P) -> Result<F>
where
    F: Real,
    P: Fn(&PossibleWorld<F>) -> bool,
{
    Ok(enumerate_worlds(db)?
        .filter(|w| predicate(w))
        .map(|w| w.prob)
        .sum())
}

/// Result-based semantics for a certain query point.
pub fn result_based<F: Real>(
    db: &UncertainDatabase<F>,
    q: &QueryPoint<F>,
    predicate: &SpatialPredicate<F>,
) -> Result<ResultDistribution<F>> {
    result_based_uncertain(db, &UncertainQuery::certain(*q), predicate)
}

/// Result-based semantics where the query position is itself uncertain and
/// independent of the database.
pub fn result_based_uncertain<F: Real>(
    db: &UncertainDatabase<F>,
    query: &UncertainQuery<F>,
    predicate: &SpatialPredicate<F>,
) -> Result<ResultDistribution<F>> {
    let cap = DEFAULT_WORLD_CAP / query.alternatives().len() as u128;
    let mut out = ResultDistribution::new();
    for world in enumerate_worlds_capped(db, cap)? {
        for (q, qp) in query.alternatives() {
            out.add(evaluate(db, &world, q, predicate), world.prob * *qp);
        }
    }
    Ok(out)
}

/// Object-based semantics for a certain query point. Every object of the
/// database appears in the output, including those with probability zero.
pub fn object_based<F: Real>(
    db: &UncertainDatabase<F>,
    q: &QueryPoint<F>,
    predicate: &SpatialPredicate<F>,
) -> Result<ObjectProbabilities<F>> {
    object_based_uncertain(db, &UncertainQuery::certain(*q), predicate)
}

pub fn object_based_uncertain<F: Real>(
    db: &UncertainDatabase<F>,
    query: &UncertainQuery<F>,
    predicate: &SpatialPredicate<F>,
) -> Result<ObjectProbabilities<F>> {
    let cap = DEFAULT_WORLD_CAP / query.alternatives().len() as u128;
    let mut sums = vec![F::zero(); db.len()];
    for world in enumerate_worlds_capped(db, cap)? {
        for (q, qp) in query.alternatives() {
            let result = evaluate(db, &world, q, predicate);
            for (i, o) in db.objects().iter().enumerate() {
                if result.contains(o.id()) {
                    sums[i] = sums[i] + world.prob * *qp;
                }
            }
        }
    }
    Ok(db
        .objects()
        .iter()
        .zip(sums)
        .map(|(o, p)| (o.id().to_string(), p))
        .collect())
}

/// Derives object-based probabilities from a result distribution by summing,
/// for each object, the probabilities of the results containing it.
pub fn object_based_from_result_based<F: Real>(
    rd: &ResultDistribution<F>,
) -> ObjectProbabilities<F> {
    let mut out = ObjectProbabilities::new();
    for (result, p) in rd.iter() {
        for id in result.members() {
            let current = out.prob(id);
            out.insert(id.clone(), current + p);
        }
    }
    out
}
