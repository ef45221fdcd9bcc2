//! Possible-result clustering with support-weighted PAM (k-medoids).

use crate::error::{Error, Result};
use crate::scalar::{count, Real};

use super::{alpha_confidence, jaccard_distance, total_support, PossibleResult, Representative};

/// Largest number of distinct results the clustering accepts; the distance
/// matrix is quadratic in this.
pub const MAX_CLUSTER_RESULTS: usize = 4096;

/// How a representative is chosen inside each cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClusterMode<F> {
    /// Minimax member; `tau` is its largest distance to the cluster.
    Complete,
    /// Member covering the most cluster support within `tau_max`.
    TauMax(F),
}

/// Result of a k-medoids run.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering<F> {
    pub medoids: Vec<usize>,
    /// Cluster index (position in `medoids`) of each point.
    pub assignment: Vec<usize>,
    /// Support-weighted sum of distances to the nearest medoid.
    pub cost: F,
}

impl<F: Real> Clustering<F> {
    pub fn k(&self) -> usize {
        self.medoids.len()
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, c)| **c == cluster)
            .map(|(i, _)| i)
    }
}

struct Nearest<F> {
    slot: usize,
    d: F,
    second: F,
}

fn nearest<F: Real>(dist: &[Vec<F>], medoids: &[usize], j: usize) -> Nearest<F> {
    let mut best = Nearest {
        slot: 0,
        d: F::infinity(),
        second: F::infinity(),
    };
    for (slot, &m) in medoids.iter().enumerate() {
        let d = dist[j][m];
        if d < best.d {
            best.second = best.d;
            best.d = d;
            best.slot = slot;
        } else if d < best.second {
            best.second = d;
        }
    }
    best
}

fn weighted_cost<F: Real>(dist: &[Vec<F>], weights: &[F], medoids: &[usize]) -> F {
    (0..dist.len())
        .map(|j| weights[j] * nearest(dist, medoids, j).d)
        .sum()
}

/// PAM on a full distance matrix with per-point weights.
///
/// BUILD seeds medoids greedily (first the weighted 1-median, then whichever
/// point lowers the cost most), SWAP applies the best improving
/// medoid/non-medoid exchange until none is left. Ties keep the lower index.
pub fn pam<F: Real>(dist: &[Vec<F>], weights: &[F], k: usize) -> Result<Clustering<F>> {
    let n = dist.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cluster count {k} outside 1..={n}"
        )));
    }
    // BUILD
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let mut current: Vec<F> = vec![F::infinity(); n];
    for _ in 0..k {
        let mut best: Option<(usize, F)> = None;
        for i in (0..n).filter(|i| !medoids.contains(i)) {
            let cost: F = (0..n)
                .map(|j| weights[j] * current[j].min(dist[j][i]))
                .sum();
            if best.is_none_or(|(_, c)| cost < c) {
                best = Some((i, cost));
            }
        }
        let (pick, _) = best.expect("k <= n leaves a candidate");
        medoids.push(pick);
        for j in 0..n {
            current[j] = current[j].min(dist[j][pick]);
        }
    }

    // SWAP
    let mut cost = weighted_cost(dist, weights, &medoids);
    loop {
        let near: Vec<Nearest<F>> = (0..n).map(|j| nearest(dist, &medoids, j)).collect();
        let mut best: Option<(usize, usize, F)> = None;
        for slot in 0..k {
            for h in (0..n).filter(|h| !medoids.contains(h)) {
                let delta: F = (0..n)
                    .map(|j| {
                        let keep = if near[j].slot == slot {
                            near[j].second
                        } else {
                            near[j].d
                        };
                        weights[j] * (keep.min(dist[j][h]) - near[j].d)
                    })
                    .sum();
                if best.is_none_or(|(_, _, d)| delta < d) {
                    best = Some((slot, h, delta));
                }
            }
        }
        match best {
            Some((slot, h, delta)) if delta < -(F::epsilon() * (F::one() + cost.abs())) => {
                medoids[slot] = h;
                cost = weighted_cost(dist, weights, &medoids);
            }
            _ => break,
        }
    }
    let assignment = (0..n).map(|j| nearest(dist, &medoids, j).slot).collect();
    Ok(Clustering {
        medoids,
        assignment,
        cost,
    })
}

/// Support-weighted mean silhouette, treating each point as `weight`
/// identical copies. Points alone in their cluster score zero.
pub fn silhouette<F: Real>(dist: &[Vec<F>], weights: &[F], clustering: &Clustering<F>) -> F {
    let k = clustering.k();
    let n = dist.len();
    let mut cluster_weight = vec![F::zero(); k];
    for j in 0..n {
        cluster_weight[clustering.assignment[j]] =
            cluster_weight[clustering.assignment[j]] + weights[j];
    }
    let mut total = F::zero();
    let mut weight_sum = F::zero();
    for i in 0..n {
        let own = clustering.assignment[i];
        let mut to_cluster = vec![F::zero(); k];
        for j in 0..n {
            to_cluster[clustering.assignment[j]] =
                to_cluster[clustering.assignment[j]] + weights[j] * dist[i][j];
        }
        let others = cluster_weight[own] - F::one();
        let s = if others <= F::zero() || k < 2 {
            F::zero()
        } else {
            let a = to_cluster[own] / others;
            let b = (0..k)
                .filter(|&c| c != own && cluster_weight[c] > F::zero())
                .map(|c| to_cluster[c] / cluster_weight[c])
                .fold(F::infinity(), F::min);
            let m = a.max(b);
            if m > F::zero() && m.is_finite() {
                (b - a) / m
            } else {
                F::zero()
            }
        };
        total = total + weights[i] * s;
        weight_sum = weight_sum + weights[i];
    }
    total / weight_sum
}

fn distance_matrix<F: Real>(pr: &[PossibleResult]) -> Vec<Vec<F>> {
    pr.iter()
        .map(|a| {
            pr.iter()
                .map(|b| jaccard_distance::<F>(&a.result, &b.result))
                .collect()
        })
        .collect()
}

/// Clusters the possible results and returns one representative per cluster.
///
/// Without a fixed `k`, the cluster count maximising the weighted silhouette
/// over `2..=min(8, |PR| - 1)` is used (just `2` when `|PR| = 2`). `phi` is
/// the `alpha`-confidence bound of the fraction of all sampled results within
/// the reported `tau` of the representative. Fewer than two distinct results
/// yield a single representative with `tau = 0`.
pub fn cluster_representatives<F: Real>(
    pr: &[PossibleResult],
    alpha: F,
    mode: ClusterMode<F>,
    k: Option<usize>,
) -> Result<Vec<Representative<F>>> {
    if let ClusterMode::TauMax(t) = mode {
        if !(t >= F::zero() && t <= F::one()) {
            return Err(Error::InvalidArgument(format!(
                "tau_max {t} outside [0, 1]"
            )));
        }
    }
    if pr.len() > MAX_CLUSTER_RESULTS {
        return Err(Error::InvalidArgument(format!(
            "{} distinct results exceed the clustering limit {MAX_CLUSTER_RESULTS}",
            pr.len()
        )));
    }
    let samples = total_support(pr);
    if pr.len() < 2 {
        return pr
            .iter()
            .map(|r| {
                Ok(Representative {
                    result: r.result.clone(),
                    tau: F::zero(),
                    phi: alpha_confidence(F::one(), samples, alpha)?.value,
                    alpha,
                    support: r.support,
                })
            })
            .collect();
    }
    let dist = distance_matrix::<F>(pr);
    let weights: Vec<F> = pr.iter().map(|r| count(r.support)).collect();
    let clustering = match k {
        Some(k) => pam(&dist, &weights, k)?,
        None => {
            let upper = (pr.len() - 1).clamp(2, 8).min(pr.len());
            let mut best: Option<(Clustering<F>, F)> = None;
            for k in 2..=upper {
                let c = pam(&dist, &weights, k)?;
                let s = silhouette(&dist, &weights, &c);
                if best.as_ref().is_none_or(|(_, bs)| s > *bs) {
                    best = Some((c, s));
                }
            }
            best.expect("at least one candidate k").0
        }
    };

    let mut reps = Vec::with_capacity(clustering.k());
    for cluster in 0..clustering.k() {
        let members: Vec<usize> = clustering.members(cluster).collect();
        if members.is_empty() {
            continue;
        }
        let (pick, tau) = match mode {
            ClusterMode::Complete => {
                let radius = |r: usize| members.iter().map(|&m| dist[r][m]).fold(F::zero(), F::max);
                let pick = *members
                    .iter()
                    .min_by(|&&a, &&b| {
                        radius(a)
                            .partial_cmp(&radius(b))
                            .unwrap()
                            .then_with(|| pr[b].support.cmp(&pr[a].support))
                            .then_with(|| a.cmp(&b))
                    })
                    .unwrap();
                (pick, radius(pick))
            }
            ClusterMode::TauMax(t) => {
                let cover = |r: usize| -> usize {
                    members
                        .iter()
                        .filter(|&&m| dist[r][m] <= t)
                        .map(|&m| pr[m].support)
                        .sum()
                };
                let pick = *members
                    .iter()
                    .max_by(|&&a, &&b| cover(a).cmp(&cover(b)).then_with(|| b.cmp(&a)))
                    .unwrap();
                (pick, t)
            }
        };
        let support: usize = (0..pr.len())
            .filter(|&j| dist[pick][j] <= tau)
            .map(|j| pr[j].support)
            .sum();
        let phi =
            alpha_confidence(count::<F>(support) / count::<F>(samples), samples, alpha)?.value;
        reps.push(Representative {
            result: pr[pick].result.clone(),
            tau,
            phi,
            alpha,
            support,
        });
    }
    reps.sort_by(|a, b| {
        b.support
            .cmp(&a.support)
            .then_with(|| a.result.cmp(&b.result))
    });
    Ok(reps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worlds::ResultSet;

    fn pr(entries: &[(&[&str], usize)]) -> Vec<PossibleResult> {
        entries
            .iter()
            .map(|(ids, s)| PossibleResult {
                result: ResultSet::new(ids.iter().copied()),
                support: *s,
            })
            .collect()
    }

    #[test]
    fn two_separated_groups() {
        let p = pr(&[(&["A", "B"], 600), (&["C", "D"], 400)]);
        let reps = cluster_representatives(&p, 0.95, ClusterMode::Complete, None).unwrap();
        assert_eq!(reps.len(), 2);
        assert!(reps.iter().all(|r| r.tau == 0.0));
        assert_eq!(reps[0].result, ResultSet::new(["A", "B"]));
        assert_eq!(reps[0].support, 600);
        let expected = alpha_confidence(0.6f64, 1000, 0.95).unwrap().value;
        assert!((reps[0].phi - expected).abs() < 1e-15);
    }

    #[test]
    fn single_result() {
        let p = pr(&[(&["A"], 77)]);
        let reps = cluster_representatives(&p, 0.95, ClusterMode::Complete, None).unwrap();
        assert_eq!(reps.len(), 1);
        assert_eq!(reps[0].tau, 0.0);
        assert_eq!(reps[0].phi, alpha_confidence(1.0, 77, 0.95).unwrap().value);
    }

    #[test]
    fn pam_finds_obvious_groups() {
        // Points on a line: {0, 1, 2} and {10, 11}.
        let xs = [0.0f64, 1.0, 2.0, 10.0, 11.0];
        let dist: Vec<Vec<f64>> = xs
            .iter()
            .map(|a| xs.iter().map(|b| (a - b).abs()).collect())
            .collect();
        let w = vec![1.0; 5];
        let c = pam(&dist, &w, 2).unwrap();
        assert_eq!(c.assignment[0], c.assignment[2]);
        assert_ne!(c.assignment[0], c.assignment[3]);
        assert!((c.cost - 3.0).abs() < 1e-12);
        assert!(c.medoids.contains(&1));
        assert!(silhouette(&dist, &w, &c) > 0.7);
        assert!(pam(&dist, &w, 6).is_err());
    }

    #[test]
    fn weights_move_the_medoid() {
        let xs = [0.0f64, 1.0, 2.0];
        let dist: Vec<Vec<f64>> = xs
            .iter()
            .map(|a| xs.iter().map(|b| (a - b).abs()).collect())
            .collect();
        let c = pam(&dist, &[1.0, 1.0, 10.0], 1).unwrap();
        assert_eq!(c.medoids, vec![2]);
    }

    #[test]
    fn tau_max_mode_reports_tau_max() {
        let p = pr(&[
            (&["A", "B", "C"], 40),
            (&["A", "B", "D"], 30),
            (&["X", "Y"], 20),
            (&["X", "Z"], 10),
        ]);
        let reps = cluster_representatives(&p, 0.95, ClusterMode::TauMax(0.5), Some(2)).unwrap();
        assert_eq!(reps.len(), 2);
        assert!(reps.iter().all(|r| r.tau == 0.5));
        assert_eq!(reps[0].result, ResultSet::new(["A", "B", "C"]));
        assert_eq!(reps[0].support, 70);
        assert!(cluster_representatives(&p, 0.95, ClusterMode::TauMax(2.0), None).is_err());
    }
}
