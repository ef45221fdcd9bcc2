//! Uncertain trajectories and probabilistic continuous nearest-neighbour
//! (PCNN) queries.
//!
//! A trajectory holds, for every timestamp, mutually exclusive alternative
//! positions. Positions at different timestamps and of different objects are
//! independent.

mod pcnn;

pub use pcnn::{
    maximal_sets, pc_tau_nn, pc_tau_nn_with, pcnn_query, pcnn_query_with, pfann_probability,
    Backend, NnBitmapSample, PcnnOptions, PfannEvaluator, DEFAULT_LATTICE_CAP,
};

use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{InstanceRecord, Point};
use crate::scalar::{lit, Real, PROB_TOLERANCE};

pub type Timestamp = i64;

/// Longest supported timestamp domain; subsets are stored as 64-bit masks.
pub const MAX_TIMESTAMPS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct UncertainTrajectory<F> {
    id: String,
    per_timestamp: BTreeMap<Timestamp, Vec<(Point<F>, F)>>,
}

impl<F: Real> UncertainTrajectory<F> {
    pub fn new(
        id: impl Into<String>,
        per_timestamp: BTreeMap<Timestamp, Vec<(Point<F>, F)>>,
    ) -> Result<Self> {
        let id = id.into();
        for (t, alternatives) in &per_timestamp {
            if alternatives.is_empty() {
                return Err(Error::validation(
                    &id,
                    format!("no positions at timestamp {t}"),
                ));
            }
            let mut total = F::zero();
            for (position, p) in alternatives {
                if !position.is_finite() || !(p.is_finite() && *p > F::zero() && *p <= F::one()) {
                    return Err(Error::validation(
                        &id,
                        format!("invalid alternative at timestamp {t}"),
                    ));
                }
                total = total + *p;
            }
            if (total - F::one()).abs() > lit(PROB_TOLERANCE) {
                return Err(Error::validation(
                    &id,
                    format!("probabilities at timestamp {t} sum to {total}, expected 1"),
                ));
            }
        }
        Ok(UncertainTrajectory { id, per_timestamp })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn at(&self, t: Timestamp) -> &[(Point<F>, F)] {
        self.per_timestamp.get(&t).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn timestamps(&self) -> impl Iterator<Item = Timestamp> + '_ {
        self.per_timestamp.keys().copied()
    }
}

/// Query trajectory, candidate trajectories and their shared timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDatabase<F> {
    timestamps: Vec<Timestamp>,
    query: UncertainTrajectory<F>,
    objects: Vec<UncertainTrajectory<F>>,
}

impl<F: Real> TrajectoryDatabase<F> {
    pub fn new(
        mut timestamps: Vec<Timestamp>,
        query: UncertainTrajectory<F>,
        objects: Vec<UncertainTrajectory<F>>,
    ) -> Result<Self> {
        timestamps.sort_unstable();
        timestamps.dedup();
        if timestamps.is_empty() {
            return Err(Error::InvalidArgument("empty timestamp domain".into()));
        }
        if timestamps.len() > MAX_TIMESTAMPS {
            return Err(Error::InvalidArgument(format!(
                "{} timestamps exceed the supported {MAX_TIMESTAMPS}",
                timestamps.len()
            )));
        }
        let mut ids = HashSet::new();
        for traj in std::iter::once(&query).chain(&objects) {
            if !traj.timestamps().eq(timestamps.iter().copied()) {
                return Err(Error::validation(
                    traj.id(),
                    "timestamps differ from the dataset domain",
                ));
            }
        }
        for o in &objects {
            if !ids.insert(o.id()) {
                return Err(Error::validation(o.id(), "duplicate trajectory id"));
            }
        }
        Ok(TrajectoryDatabase {
            timestamps,
            query,
            objects,
        })
    }

    pub fn timestamps(&self) -> &[Timestamp] {
        &self.timestamps
    }

    pub fn query(&self) -> &UncertainTrajectory<F> {
        &self.query
    }

    pub fn objects(&self) -> &[UncertainTrajectory<F>] {
        &self.objects
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.id() == id)
    }

    /// Bitmask of `subset` over the timestamp domain.
    pub fn mask_of(&self, subset: &[Timestamp]) -> Result<u64> {
        subset.iter().try_fold(0u64, |mask, t| {
            let i = self
                .timestamps
                .binary_search(t)
                .map_err(|_| Error::InvalidArgument(format!("timestamp {t} not in the domain")))?;
            Ok(mask | (1u64 << i))
        })
    }

    pub fn timestamps_of(&self, mask: u64) -> Vec<Timestamp> {
        self.timestamps
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1u64 << i) != 0)
            .map(|(_, t)| *t)
            .collect()
    }
}

/// A set of timestamps with the probability that the object is the nearest
/// neighbour of the query at all of them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimestampSet<F> {
    pub timestamps: Vec<Timestamp>,
    #[serde(rename = "p")]
    pub probability: F,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryFile {
    timestamps: Vec<Timestamp>,
    query: TrajectoryRecord,
    objects: Vec<TrajectoryRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryRecord {
    id: String,
    per_timestamp: BTreeMap<String, Vec<InstanceRecord>>,
}

impl TrajectoryRecord {
    fn into_trajectory(self) -> Result<UncertainTrajectory<f64>> {
        let mut per_timestamp = BTreeMap::new();
        for (key, alternatives) in self.per_timestamp {
            let t: Timestamp = key.parse().map_err(|_| {
                Error::Parse(format!(
                    "timestamp key `{key}` of `{}` is not an integer",
                    self.id
                ))
            })?;
            per_timestamp.insert(
                t,
                alternatives
                    .into_iter()
                    .map(|a| (Point::new(a.x, a.y), a.p))
                    .collect(),
            );
        }
        UncertainTrajectory::new(self.id, per_timestamp)
    }
}

/// Reads the trajectory dataset JSON format.
pub fn load_trajectories<R: Read>(source: R) -> Result<TrajectoryDatabase<f64>> {
    let file: TrajectoryFile =
        serde_json::from_reader(source).map_err(|e| Error::Parse(e.to_string()))?;
    let query = file.query.into_trajectory()?;
    let objects = file
        .objects
        .into_iter()
        .map(TrajectoryRecord::into_trajectory)
        .collect::<Result<Vec<_>>>()?;
    TrajectoryDatabase::new(file.timestamps, query, objects)
}
