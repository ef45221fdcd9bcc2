//! Probabilistic spatial queries over databases of discretely-uncertain
//! objects.
//!
//! Every object is a set of mutually exclusive alternative positions
//! (an x-tuple) whose probabilities may sum to less than one. Under
//! possible-worlds semantics the database stands for all its instantiations.
//! This crate answers range, kNN, top-k and rank queries exactly in
//! polynomial time, keeps a brute-force world enumerator as an oracle,
//! estimates result distributions by sampling, and runs probabilistic
//! continuous nearest-neighbour queries over uncertain trajectories.
//!
//! The algorithms are generic over the scalar type. The aliases below fix it
//! to `f64`.

pub mod bernoulli;
pub mod cli;
pub mod error;
pub mod model;
pub mod query;
pub mod representatives;
pub mod scalar;
pub mod trajectory;
pub mod worlds;

pub use bernoulli::{
    generating_function, poisson_binomial_recurrence, BernoulliVector, CountDistribution, Kernel,
};
pub use error::{Error, Result};
pub use model::{
    database_to_json, euclidean_distance, load_database, parse_database, Instance, Point,
    QueryPoint, UncertainDatabase, UncertainObject, UncertainQuery,
};
pub use query::{
    expected_distance, in_range_probability, knn_object_probability, object_probabilities,
    range_count_distribution, rank_distribution, select, threshold_query, topk_predicate,
    ProbabilisticPredicate, RangeQuery, RankDistribution,
};
pub use representatives::{
    alpha_confidence, cluster_representatives, estimate_result_probabilities, jaccard_distance,
    max_cover_representatives, sample_worlds, ClusterMode, PossibleResult, Representative,
    SampleSet,
};
pub use scalar::{Real, Scalar};
pub use trajectory::{
    load_trajectories, pc_tau_nn, pcnn_query, pfann_probability, Backend, TimestampSet,
    TrajectoryDatabase, UncertainTrajectory,
};
pub use worlds::{
    enumerate_worlds, object_based, object_based_from_result_based, result_based,
    ObjectProbabilities, PossibleWorld, ResultDistribution, ResultSet, SpatialPredicate,
};

pub type Database = UncertainDatabase<f64>;
pub type Object = UncertainObject<f64>;
pub type Position = Point<f64>;
pub type Query = UncertainQuery<f64>;
pub type World = PossibleWorld<f64>;
pub type Probabilities = ObjectProbabilities<f64>;
pub type Distribution = ResultDistribution<f64>;
pub type Counts = CountDistribution<f64>;
pub type Trajectories = TrajectoryDatabase<f64>;
pub type Trajectory = UncertainTrajectory<f64>;
