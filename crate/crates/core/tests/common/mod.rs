//! Brute-force oracles and random instance generators shared by the
//! integration tests. Nothing here calls the algorithms under test.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;
use uncertain_spatial::representatives::PossibleResult;
use uncertain_spatial::trajectory::{Timestamp, TrajectoryDatabase, UncertainTrajectory};
use uncertain_spatial::{Point, ResultSet, UncertainDatabase, UncertainObject};

/// Threshold comparisons use probabilities rounded to 12 decimals.
pub fn round12(p: f64) -> f64 {
    (p * 1e12).round() / 1e12
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

/// Count distribution by summing over all 2^N outcome vectors.
pub fn brute_poisson_binomial(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut out = vec![0.0; n + 1];
    for outcome in 0u64..(1u64 << n) {
        let mut prob = 1.0;
        for (i, pi) in p.iter().enumerate() {
            prob *= if outcome & (1 << i) != 0 {
                *pi
            } else {
                1.0 - pi
            };
        }
        out[outcome.count_ones() as usize] += prob;
    }
    out
}

pub fn random_bernoulli(rng: &mut impl Rng, max_len: usize) -> Vec<f64> {
    let n = rng.gen_range(1..=max_len);
    (0..n)
        .map(|_| match rng.gen_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen::<f64>(),
        })
        .collect()
}

/// Random database on a small integer grid so that distance ties occur.
/// Roughly a third of the objects are existentially uncertain.
pub fn random_database(
    rng: &mut impl Rng,
    max_objects: usize,
    max_instances: usize,
) -> UncertainDatabase<f64> {
    let n = rng.gen_range(1..=max_objects);
    let objects = (0..n)
        .map(|i| {
            let m = rng.gen_range(1..=max_instances);
            let weights: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = weights.iter().sum();
            let mass = if rng.gen_bool(0.35) {
                rng.gen_range(0.3..0.95)
            } else {
                1.0
            };
            let alternatives = weights
                .iter()
                .map(|w| {
                    let pos =
                        Point::new(rng.gen_range(-4..=4) as f64, rng.gen_range(-4..=4) as f64);
                    (pos, w / total * mass)
                })
                .collect();
            UncertainObject::new(format!("o{i}"), alternatives).unwrap()
        })
        .collect();
    UncertainDatabase::new(objects).unwrap()
}

fn squared(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

type Branch = (Option<(f64, f64)>, f64);

/// Visits every world of `db` as per-object positions (`None` = absent)
/// with its probability, using a plain mixed-radix counter.
pub fn for_each_world(
    db: &UncertainDatabase<f64>,
    mut visit: impl FnMut(&[Option<(f64, f64)>], f64),
) {
    let options: Vec<Vec<Branch>> = db
        .objects()
        .iter()
        .map(|o| {
            let mut v: Vec<_> = o
                .instances()
                .iter()
                .map(|i| (Some((i.position.x, i.position.y)), i.prob))
                .collect();
            let absent = 1.0 - o.instances().iter().map(|i| i.prob).sum::<f64>();
            if absent > 1e-12 {
                v.push((None, absent));
            }
            v
        })
        .collect();
    let total: usize = options.iter().map(Vec::len).product();
    let mut world = vec![None; options.len()];
    for mut code in 0..total {
        let mut prob = 1.0;
        for (slot, opts) in world.iter_mut().zip(&options) {
            let (pos, p) = opts[code % opts.len()];
            code /= opts.len();
            *slot = pos;
            prob *= p;
        }
        visit(&world, prob);
    }
}

/// kNN result of one world: the `k` present objects closest to `q`, ties
/// broken by id.
pub fn brute_knn(
    db: &UncertainDatabase<f64>,
    world: &[Option<(f64, f64)>],
    q: (f64, f64),
    k: usize,
) -> ResultSet {
    let mut present: Vec<(f64, &str)> = world
        .iter()
        .zip(db.objects())
        .filter_map(|(pos, o)| pos.map(|p| (squared(p, q), o.id())))
        .collect();
    present.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(b.1)));
    ResultSet::new(present.into_iter().take(k).map(|(_, id)| id))
}

pub fn brute_range(
    db: &UncertainDatabase<f64>,
    world: &[Option<(f64, f64)>],
    q: (f64, f64),
    eps: f64,
) -> ResultSet {
    ResultSet::new(
        world
            .iter()
            .zip(db.objects())
            .filter(|(pos, _)| pos.is_some_and(|p| squared(p, q).sqrt() <= eps))
            .map(|(_, o)| o.id()),
    )
}

/// Result distribution by full enumeration.
pub fn brute_result_distribution(
    db: &UncertainDatabase<f64>,
    eval: impl Fn(&[Option<(f64, f64)>]) -> ResultSet,
) -> BTreeMap<ResultSet, f64> {
    let mut out = BTreeMap::new();
    for_each_world(db, |w, p| *out.entry(eval(w)).or_insert(0.0) += p);
    out
}

/// Per-object membership probability by full enumeration.
pub fn brute_object_probabilities(
    db: &UncertainDatabase<f64>,
    eval: impl Fn(&[Option<(f64, f64)>]) -> ResultSet,
) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = db
        .objects()
        .iter()
        .map(|o| (o.id().to_string(), 0.0))
        .collect();
    for_each_world(db, |w, p| {
        for id in eval(w).members() {
            *out.get_mut(id).unwrap() += p;
        }
    });
    out
}

pub fn jaccard(a: &ResultSet, b: &ResultSet) -> f64 {
    let inter = a.members().iter().filter(|m| b.contains(m)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

/// Random possible-result list over ids A..E with distinct results.
pub fn random_pr(rng: &mut impl Rng, max_results: usize) -> Vec<PossibleResult> {
    let ids = ["A", "B", "C", "D", "E"];
    let target = rng.gen_range(1..=max_results);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for _ in 0..200 {
        if out.len() == target {
            break;
        }
        let mask: u32 = rng.gen_range(1..32);
        if seen.insert(mask) {
            let result = ResultSet::new(
                ids.iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, id)| *id),
            );
            out.push(PossibleResult {
                result,
                support: rng.gen_range(1..50),
            });
        }
    }
    out
}

/// Support covered by `chosen` within `tau`, counted directly.
pub fn coverage(pr: &[PossibleResult], chosen: &[&ResultSet], tau: f64) -> usize {
    pr.iter()
        .filter(|r| chosen.iter().any(|c| jaccard(c, &r.result) <= tau))
        .map(|r| r.support)
        .sum()
}

/// Random trajectory instance: certain or two-way uncertain query and
/// objects on a small grid.
pub fn random_trajectories(
    rng: &mut impl Rng,
    max_t: usize,
    max_objects: usize,
) -> TrajectoryDatabase<f64> {
    let nt = rng.gen_range(1..=max_t);
    let timestamps: Vec<Timestamp> = (0..nt as Timestamp).collect();
    let make = |id: String, rng: &mut dyn rand::RngCore| {
        let per_t: BTreeMap<Timestamp, Vec<(Point<f64>, f64)>> = timestamps
            .iter()
            .map(|&t| {
                let alts = if rng.gen_bool(0.5) {
                    let p = rng.gen_range(0.1..0.9);
                    vec![(grid(rng), p), (grid(rng), 1.0 - p)]
                } else {
                    vec![(grid(rng), 1.0)]
                };
                (t, alts)
            })
            .collect();
        UncertainTrajectory::new(id, per_t).unwrap()
    };
    let query = make("q".into(), rng);
    let n = rng.gen_range(1..=max_objects);
    let objects = (0..n).map(|i| make(format!("o{i}"), rng)).collect();
    TrajectoryDatabase::new(timestamps.clone(), query, objects).unwrap()
}

fn grid(rng: &mut dyn rand::RngCore) -> Point<f64> {
    Point::new(rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64)
}

/// For every object, the probability of being the nearest neighbour at all
/// timestamps of each subset (indexed by bitmask), from one enumeration of
/// every joint assignment over all timestamps and trajectories.
pub fn brute_pfann_all(db: &TrajectoryDatabase<f64>) -> Vec<Vec<f64>> {
    let ts = db.timestamps();
    let mut slots: Vec<&[(Point<f64>, f64)]> = Vec::new();
    for &t in ts {
        slots.push(db.query().at(t));
        for o in db.objects() {
            slots.push(o.at(t));
        }
    }
    let width = db.objects().len() + 1;
    let subsets = 1usize << ts.len();
    let mut out = vec![vec![0.0; subsets]; db.objects().len()];
    let total: usize = slots.iter().map(|s| s.len()).product();
    for mut code in 0..total {
        let mut prob = 1.0;
        let mut picked = Vec::with_capacity(slots.len());
        for s in &slots {
            let (pos, p) = s[code % s.len()];
            code /= s.len();
            picked.push((pos.x, pos.y));
            prob *= p;
        }
        let mut masks = vec![0usize; db.objects().len()];
        for ti in 0..ts.len() {
            let q = picked[ti * width];
            let winner = (0..db.objects().len())
                .min_by(|&a, &b| {
                    squared(picked[ti * width + 1 + a], q)
                        .partial_cmp(&squared(picked[ti * width + 1 + b], q))
                        .unwrap()
                        .then(db.objects()[a].id().cmp(db.objects()[b].id()))
                })
                .unwrap();
            masks[winner] |= 1 << ti;
        }
        for (row, m) in out.iter_mut().zip(&masks) {
            for (s, acc) in row.iter_mut().enumerate() {
                if m & s == s {
                    *acc += prob;
                }
            }
        }
    }
    out
}
