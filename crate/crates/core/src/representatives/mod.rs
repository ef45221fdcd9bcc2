//! Monte-Carlo query answering with representative results.
//!
//! Worlds are sampled independently from the database, a deterministic query
//! runs on each, and the distinct outcomes (possible results) are reduced to a
//! few representatives. A representative comes with a distance radius `tau`
//! under the Jaccard result distance and a lower confidence bound `phi` on the
//! probability that the true result lies within `tau` of it.

mod cluster;
mod confidence;
mod cover;
pub(crate) mod sampling;

pub use cluster::{cluster_representatives, pam, silhouette, ClusterMode, Clustering};
pub use confidence::{alpha_confidence, standard_normal_quantile, AlphaConfidence};
pub use cover::{covered_support, max_cover_representatives};
pub use sampling::{
    estimate_result_probabilities, sample_worlds, sample_worlds_with_query, PossibleResult,
    SampleSet,
};

use crate::scalar::{count, Scalar};
use crate::worlds::ResultSet;

/// A `tau`-`phi` representative result at significance `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct Representative<F> {
    pub result: ResultSet,
    pub tau: F,
    pub phi: F,
    pub alpha: F,
    /// Number of sampled results within `tau` of `result`.
    pub support: usize,
}

/// `1 - |a ∩ b| / |a ∪ b|`, zero when both sets are empty.
pub fn jaccard_distance<S: Scalar>(a: &ResultSet, b: &ResultSet) -> S {
    let union = a.union_len(b);
    if union == 0 {
        return S::zero();
    }
    S::one() - count::<S>(a.intersection_len(b)) / count::<S>(union)
}

/// Total number of sampled worlds behind a list of possible results.
pub(crate) fn total_support(pr: &[PossibleResult]) -> usize {
    pr.iter().map(|r| r.support).sum()
}
