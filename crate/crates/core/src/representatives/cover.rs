use crate::error::{Error, Result};
use crate::scalar::{count, Real};

use super::{alpha_confidence, jaccard_distance, total_support, PossibleResult, Representative};

/// Sampled support of every possible result within `tau` of at least one of
/// the `chosen` results.
pub fn covered_support<F: Real>(pr: &[PossibleResult], chosen: &[usize], tau: F) -> usize {
    pr.iter()
        .filter(|r| {
            chosen
                .iter()
                .any(|&c| jaccard_distance::<F>(&pr[c].result, &r.result) <= tau)
        })
        .map(|r| r.support)
        .sum()
}

/// Greedy maximum-cover selection of up to `n` representatives.
///
/// Each round picks the result covering the most not-yet-covered sampled
/// support within distance `tau` (first in `pr` order on ties), then marks
/// that support as covered. Selection stops early once everything is covered.
/// Each representative reports its full within-`tau` support and the
/// `alpha`-confidence bound of that fraction.
pub fn max_cover_representatives<F: Real>(
    pr: &[PossibleResult],
    tau: F,
    n: usize,
    alpha: F,
) -> Result<Vec<Representative<F>>> {
    if !(tau >= F::zero() && tau <= F::one()) {
        return Err(Error::InvalidArgument(format!("tau {tau} outside [0, 1]")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "need at least one representative".into(),
        ));
    }
    let samples = total_support(pr);
    let within: Vec<Vec<usize>> = pr
        .iter()
        .map(|r| {
            pr.iter()
                .enumerate()
                .filter(|(_, s)| jaccard_distance::<F>(&r.result, &s.result) <= tau)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();

    let mut covered = vec![false; pr.len()];
    let mut out = Vec::new();
    for _ in 0..n {
        let mut best: Option<(usize, usize)> = None;
        for (i, neighbours) in within.iter().enumerate() {
            let gain: usize = neighbours
                .iter()
                .filter(|&&j| !covered[j])
                .map(|&j| pr[j].support)
                .sum();
            if gain > best.map_or(0, |(_, g)| g) {
                best = Some((i, gain));
            }
        }
        let Some((pick, _)) = best else { break };
        for &j in &within[pick] {
            covered[j] = true;
        }
        let support: usize = within[pick].iter().map(|&j| pr[j].support).sum();
        let phi =
            alpha_confidence(count::<F>(support) / count::<F>(samples), samples, alpha)?.value;
        out.push(Representative {
            result: pr[pick].result.clone(),
            tau,
            phi,
            alpha,
            support,
        });
    }
    Ok(out)
}
