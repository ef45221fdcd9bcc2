//! Discretely-uncertain spatial objects and databases.
//!
//! An object is a block of mutually exclusive instances (an x-tuple). If its
//! instance probabilities sum to less than one, the remainder is the
//! probability that the object does not exist. Distinct objects are
//! independent.

use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real, PROB_TOLERANCE};

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<F> {
    pub x: F,
    pub y: F,
}

impl<F: Real> Point<F> {
    pub fn new(x: F, y: F) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point<F>) -> F {
        euclidean_distance(self, other)
    }

    /// Squared distance; exact on integer coordinates, so used for ordering
    /// and range tests where ties matter.
    pub fn distance_squared(&self, other: &Point<F>) -> F {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// The query location of a spatial query.
pub type QueryPoint<F> = Point<F>;

/// Standard Euclidean distance in the plane.
pub fn euclidean_distance<F: Real>(a: &Point<F>, b: &Point<F>) -> F {
    (a.x - b.x).hypot(a.y - b.y)
}

/// A query location that may itself be uncertain: mutually exclusive
/// alternative positions whose probabilities sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainQuery<F> {
    alternatives: Vec<(Point<F>, F)>,
}

impl<F: Real> UncertainQuery<F> {
    pub fn new(alternatives: Vec<(Point<F>, F)>) -> Result<Self> {
        if alternatives.is_empty() {
            return Err(Error::validation("query", "query has no positions"));
        }
        let mut total = F::zero();
        for (position, prob) in &alternatives {
            if !position.is_finite() || !(prob.is_finite() && *prob > F::zero()) {
                return Err(Error::validation("query", "invalid query position"));
            }
            total = total + *prob;
        }
        if (total - F::one()).abs() > lit(PROB_TOLERANCE) {
            return Err(Error::validation(
                "query",
                format!("query probabilities sum to {total}, expected 1"),
            ));
        }
        Ok(UncertainQuery { alternatives })
    }

    pub fn certain(position: Point<F>) -> Self {
        UncertainQuery {
            alternatives: vec![(position, F::one())],
        }
    }

    /// Uses the instances of an uncertain object as query positions.
    pub fn from_object(object: &UncertainObject<F>) -> Result<Self> {
        Self::new(
            object
                .instances()
                .iter()
                .map(|i| (i.position, i.prob))
                .collect(),
        )
    }

    pub fn alternatives(&self) -> &[(Point<F>, F)] {
        &self.alternatives
    }
}

impl<F: Real> From<Point<F>> for UncertainQuery<F> {
    fn from(position: Point<F>) -> Self {
        UncertainQuery::certain(position)
    }
}

/// One alternative location of an uncertain object.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<F> {
    pub object_id: String,
    pub position: Point<F>,
    pub prob: F,
}

/// A block of mutually exclusive instances.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainObject<F> {
    id: String,
    instances: Vec<Instance<F>>,
    existence_prob: F,
}

impl<F: Real> UncertainObject<F> {
    /// Builds an object from `(position, probability)` pairs in file order.
    pub fn new(id: impl Into<String>, alternatives: Vec<(Point<F>, F)>) -> Result<Self> {
        let id = id.into();
        if alternatives.is_empty() {
            return Err(Error::validation(&id, "object has no instances"));
        }
        let mut instances = Vec::with_capacity(alternatives.len());
        for (index, (position, prob)) in alternatives.into_iter().enumerate() {
            if !position.is_finite() {
                return Err(Error::validation(
                    &id,
                    format!("instance {index} has a non-finite position"),
                ));
            }
            if !(prob.is_finite() && prob > F::zero() && prob <= F::one()) {
                return Err(Error::validation(
                    &id,
                    format!("instance {index} has probability {prob} outside (0, 1]"),
                ));
            }
            instances.push(Instance {
                object_id: id.clone(),
                position,
                prob,
            });
        }
        let existence_prob: F = instances.iter().map(|i| i.prob).sum();
        if existence_prob > F::one() + lit(PROB_TOLERANCE) {
            return Err(Error::validation(
                &id,
                format!("instance probabilities sum to {existence_prob} > 1"),
            ));
        }
        Ok(UncertainObject {
            id,
            instances,
            existence_prob,
        })
    }

    /// A certain object with a single instance.
    pub fn certain(id: impl Into<String>, position: Point<F>) -> Result<Self> {
        Self::new(id, vec![(position, F::one())])
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn instances(&self) -> &[Instance<F>] {
        &self.instances
    }

    /// Sum of instance probabilities.
    pub fn existence_prob(&self) -> F {
        self.existence_prob
    }

    /// Probability that the object does not exist, clamped at zero.
    pub fn absence_prob(&self) -> F {
        (F::one() - self.existence_prob).max(F::zero())
    }

    pub fn is_existentially_uncertain(&self) -> bool {
        self.existence_prob < F::one() - lit(PROB_TOLERANCE)
    }
}

/// An ordered collection of independent uncertain objects with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainDatabase<F> {
    objects: Vec<UncertainObject<F>>,
}

impl<F: Real> UncertainDatabase<F> {
    pub fn new(objects: Vec<UncertainObject<F>>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(objects.len());
        for o in &objects {
            if !seen.insert(o.id()) {
                return Err(Error::validation(o.id(), "duplicate object id"));
            }
        }
        Ok(UncertainDatabase { objects })
    }

    pub fn objects(&self) -> &[UncertainObject<F>] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Objects are always treated as mutually independent.
    pub fn assumes_independence(&self) -> bool {
        true
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.id() == id)
    }

    pub fn get(&self, id: &str) -> Option<&UncertainObject<F>> {
        self.objects.iter().find(|o| o.id() == id)
    }

    /// Removes an object and returns it together with the remaining database.
    pub fn split_off(&self, id: &str) -> Result<(UncertainObject<F>, UncertainDatabase<F>)> {
        let index = self
            .index_of(id)
            .ok_or_else(|| Error::UnknownObject(id.to_string()))?;
        let mut rest = self.objects.clone();
        let removed = rest.remove(index);
        Ok((removed, UncertainDatabase { objects: rest }))
    }
}

// Wire format.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    objects: Vec<ObjectRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectRecord {
    id: String,
    instances: Vec<InstanceRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct InstanceRecord {
    pub x: f64,
    pub y: f64,
    pub p: f64,
}

/// Reads and validates a dataset in the JSON dataset format.
pub fn load_database<R: Read>(source: R) -> Result<UncertainDatabase<f64>> {
    let file: DatasetFile =
        serde_json::from_reader(source).map_err(|e| Error::Parse(e.to_string()))?;
    database_from_records(file.objects)
}

/// Parses a dataset from a string.
pub fn parse_database(source: &str) -> Result<UncertainDatabase<f64>> {
    load_database(source.as_bytes())
}

fn database_from_records(records: Vec<ObjectRecord>) -> Result<UncertainDatabase<f64>> {
    let objects = records
        .into_iter()
        .map(|r| {
            let alternatives = r
                .instances
                .iter()
                .map(|i| (Point::new(i.x, i.y), i.p))
                .collect();
            UncertainObject::new(r.id, alternatives)
        })
        .collect::<Result<Vec<_>>>()?;
    UncertainDatabase::new(objects)
}

/// Canonical JSON serialization; [`load_database`] reads it back bit-identically.
pub fn database_to_json<F: Real>(db: &UncertainDatabase<F>) -> String {
    let file = DatasetFile {
        objects: db
            .objects()
            .iter()
            .map(|o| ObjectRecord {
                id: o.id().to_string(),
                instances: o
                    .instances()
                    .iter()
                    .map(|i| InstanceRecord {
                        x: i.position.x.to_f64().unwrap_or(f64::NAN),
                        y: i.position.y.to_f64().unwrap_or(f64::NAN),
                        p: i.prob.to_f64().unwrap_or(f64::NAN),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string(&file).expect("dataset serialization cannot fail")
}
