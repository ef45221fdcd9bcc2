mod common;

use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uncertain_spatial::query::{range_count_distribution, rank_distribution, select};
use uncertain_spatial::representatives::{cluster_representatives, pam, ClusterMode};
use uncertain_spatial::trajectory::{pc_tau_nn_with, PcnnOptions, PfannEvaluator};
use uncertain_spatial::{
    alpha_confidence, database_to_json, generating_function, jaccard_distance,
    knn_object_probability, max_cover_representatives, object_probabilities, parse_database,
    poisson_binomial_recurrence, Backend, BernoulliVector, Kernel, Point, ProbabilisticPredicate,
    RangeQuery, ResultSet, SpatialPredicate, UncertainDatabase, UncertainObject,
};

use common::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn grid_point(r: &mut ChaCha8Rng) -> (f64, f64) {
    (r.gen_range(-4..=4) as f64, r.gen_range(-4..=4) as f64)
}

fn result_set(mask: u8) -> ResultSet {
    ResultSet::new(
        ["A", "B", "C", "D"]
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, id)| *id),
    )
}

proptest! {
    #[test]
    fn distance_is_a_metric(
        a in (-1e3..1e3f64, -1e3..1e3f64),
        b in (-1e3..1e3f64, -1e3..1e3f64),
        c in (-1e3..1e3f64, -1e3..1e3f64),
    ) {
        let (a, b, c) = (Point::new(a.0, a.1), Point::new(b.0, b.1), Point::new(c.0, c.1));
        prop_assert_eq!(a.distance(&a), 0.0);
        prop_assert_eq!(a.distance(&b), b.distance(&a));
        prop_assert!(a.distance(&b) >= 0.0);
        prop_assert!(a.distance(&c) <= a.distance(&b) + b.distance(&c) + 1e-9);
    }

    #[test]
    fn kernels_are_permutation_invariant(p in prop::collection::vec(0.0..=1.0f64, 1..40), seed in any::<u64>()) {
        let mut shuffled = p.clone();
        let mut r = rng(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, r.gen_range(0..=i));
        }
        let a = poisson_binomial_recurrence(&BernoulliVector::new(p).unwrap());
        let b = generating_function(&BernoulliVector::new(shuffled).unwrap());
        prop_assert!((a.total() - 1.0).abs() < 1e-12);
        for (x, y) in a.mass().iter().zip(b.mass()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rational_kernels_match_exactly(nums in prop::collection::vec(0i64..=10, 1..8)) {
        let p: Vec<Ratio<i64>> = nums.iter().map(|&n| Ratio::new(n, 10)).collect();
        let v = BernoulliVector::new(p.clone()).unwrap();
        let rec = poisson_binomial_recurrence(&v);
        let gf = generating_function(&v);
        prop_assert_eq!(rec.mass(), gf.mass());
        let mut brute = vec![Ratio::from_integer(0); p.len() + 1];
        for outcome in 0u32..(1 << p.len()) {
            let mut prob = Ratio::from_integer(1);
            for (i, pi) in p.iter().enumerate() {
                prob *= if outcome & (1 << i) != 0 { *pi } else { Ratio::from_integer(1) - pi };
            }
            brute[outcome.count_ones() as usize] += prob;
        }
        prop_assert_eq!(rec.mass(), &brute[..]);
    }

    #[test]
    fn jaccard_is_a_metric_exactly(a in 0u8..16, b in 0u8..16, c in 0u8..16) {
        let (a, b, c) = (result_set(a), result_set(b), result_set(c));
        let d = |x: &ResultSet, y: &ResultSet| jaccard_distance::<Ratio<i64>>(x, y);
        let zero = Ratio::from_integer(0);
        let one = Ratio::from_integer(1);
        prop_assert_eq!(d(&a, &a), zero);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &b) >= zero && d(&a, &b) <= one);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        if a != b {
            prop_assert!(d(&a, &b) > zero);
        }
    }

    #[test]
    fn confidence_is_monotone_in_sample_size(p in 0.0..=1.0f64, alpha in 0.5..0.999f64, n in 1usize..5000) {
        let small = alpha_confidence(p, n, alpha).unwrap().value;
        let large = alpha_confidence(p, n + 1 + n / 3, alpha).unwrap().value;
        prop_assert!(small <= large + 1e-15);
        prop_assert!(large <= p);
    }

    #[test]
    fn database_json_round_trips(seed in any::<u64>()) {
        let db = random_database(&mut rng(seed), 6, 3);
        let json = database_to_json(&db);
        let back = parse_database(&json).unwrap();
        prop_assert_eq!(database_to_json(&back), json);
        prop_assert_eq!(back, db);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn range_count_matches_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let db = random_database(&mut r, 7, 3);
        let q = grid_point(&mut r);
        let eps = r.gen_range(0..=5) as f64;
        let mut oracle = vec![0.0; db.len() + 1];
        for_each_world(&db, |w, p| oracle[brute_range(&db, w, q, eps).len()] += p);
        let rq = RangeQuery::new(Point::new(q.0, q.1), eps).unwrap();
        let got = range_count_distribution(&db, &rq);
        for (a, b) in got.mass().iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-12, "{:?} vs {:?}", got.mass(), oracle);
        }
    }

    #[test]
    fn rank_distribution_matches_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let db = random_database(&mut r, 6, 3);
        let q = grid_point(&mut r);
        for o in db.objects() {
            let mut oracle = vec![0.0; db.len()];
            for_each_world(&db, |w, p| {
                let order = brute_knn(&db, w, q, db.len());
                // Rank of o = size of the smallest kNN result containing it.
                if order.contains(o.id()) {
                    let rank = (1..=db.len()).find(|&k| brute_knn(&db, w, q, k).contains(o.id())).unwrap();
                    oracle[rank - 1] += p;
                }
            });
            let got = rank_distribution(&db, &Point::new(q.0, q.1), o.id()).unwrap();
            for (a, b) in got.mass().iter().zip(&oracle) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            prop_assert!((got.total() - o.existence_prob()).abs() < 1e-9);
            let k = r.gen_range(1..=db.len());
            let knn = knn_object_probability(&db, &Point::new(q.0, q.1), k, o.id()).unwrap();
            let prefix: f64 = (1..=k).map(|i| got.rank(i)).sum();
            prop_assert!((knn - prefix).abs() < 1e-9);
        }
    }

    #[test]
    fn threshold_is_antitone_and_topk_is_consistent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let db = random_database(&mut r, 8, 3);
        let q = grid_point(&mut r);
        let pred = SpatialPredicate::knn(r.gen_range(1..=db.len())).unwrap();
        let probs = object_probabilities(&db, &Point::new(q.0, q.1), &pred, Kernel::GeneratingFunction).unwrap();
        let (t1, t2) = (r.gen_range(0.0..1.0), r.gen_range(0.0..1.0));
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let wide = select(&probs, &ProbabilisticPredicate::threshold(lo).unwrap());
        let narrow = select(&probs, &ProbabilisticPredicate::threshold(hi).unwrap());
        prop_assert!(narrow.is_subset(&wide));
        let k = r.gen_range(1..=db.len());
        let top = select(&probs, &ProbabilisticPredicate::top_k(k).unwrap());
        prop_assert!(top.len() >= k);
        for inside in top.members() {
            for o in db.objects().iter().filter(|o| !top.contains(o.id())) {
                prop_assert!(probs.prob(inside) >= probs.prob(o.id()));
            }
        }
    }

    #[test]
    fn representatives_cover_at_least_phi(seed in any::<u64>(), tau in 0.0..=1.0f64) {
        let mut r = rng(seed);
        let pr = random_pr(&mut r, 12);
        let samples: usize = pr.iter().map(|p| p.support).sum();
        let mut all = max_cover_representatives(&pr, tau, 3, 0.95).unwrap();
        if pr.len() >= 2 {
            all.extend(cluster_representatives(&pr, 0.95, ClusterMode::Complete, None).unwrap());
            all.extend(cluster_representatives(&pr, 0.95, ClusterMode::TauMax(tau), None).unwrap());
        }
        for rep in &all {
            let within = coverage(&pr, &[&rep.result], rep.tau);
            prop_assert_eq!(within, rep.support);
            prop_assert!(within as f64 / samples as f64 >= rep.phi);
        }
    }

    #[test]
    fn complete_clusters_report_minimax_radius(seed in any::<u64>()) {
        let mut r = rng(seed);
        let pr = random_pr(&mut r, 12);
        prop_assume!(pr.len() >= 3);
        let k = r.gen_range(2..pr.len());
        let dist: Vec<Vec<f64>> = pr.iter().map(|a| pr.iter().map(|b| jaccard(&a.result, &b.result)).collect()).collect();
        let weights: Vec<f64> = pr.iter().map(|p| p.support as f64).collect();
        let clustering = pam(&dist, &weights, k).unwrap();
        let mut expected: Vec<f64> = (0..k)
            .map(|c| {
                let members: Vec<usize> = (0..pr.len()).filter(|&i| clustering.assignment[i] == c).collect();
                members
                    .iter()
                    .map(|&a| members.iter().map(|&b| dist[a][b]).fold(0.0, f64::max))
                    .fold(f64::INFINITY, f64::min)
            })
            .filter(|t| t.is_finite())
            .collect();
        let mut got: Vec<f64> = cluster_representatives(&pr, 0.95, ClusterMode::Complete, Some(k))
            .unwrap()
            .iter()
            .map(|rep| rep.tau)
            .collect();
        expected.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn pcnn_sampled_lattice_matches_brute_force(seed in any::<u64>(), tau in 0.05..=1.0f64) {
        let mut r = rng(seed);
        let db = random_trajectories(&mut r, 5, 3);
        let ev = PfannEvaluator::new(&db, Backend::Sampled { samples: 300, seed }).unwrap();
        let full = (1u64 << db.timestamps().len()) - 1;
        for (oi, o) in db.objects().iter().enumerate() {
            let got = pc_tau_nn_with(&db, &ev, o.id(), db.timestamps(), tau, PcnnOptions::default()).unwrap();
            let expected: Vec<Vec<i64>> = (1..=full)
                .filter(|&m| round12(ev.probability(oi, m)) >= tau)
                .map(|m| db.timestamps_of(m))
                .collect();
            let mut got_sets: Vec<Vec<i64>> = got.iter().map(|s| s.timestamps.clone()).collect();
            let mut expected = expected;
            got_sets.sort();
            expected.sort();
            prop_assert_eq!(got_sets, expected);
        }
    }

    #[test]
    fn factoring_certain_timestamps_changes_nothing(seed in any::<u64>(), tau in 0.05..=1.0f64) {
        let mut r = rng(seed);
        let db = random_trajectories(&mut r, 5, 2);
        let ev = PfannEvaluator::new(&db, Backend::Exact).unwrap();
        let plain = PcnnOptions { factor_certain: false, ..PcnnOptions::default() };
        for o in db.objects() {
            let a = pc_tau_nn_with(&db, &ev, o.id(), db.timestamps(), tau, PcnnOptions::default()).unwrap();
            let b = pc_tau_nn_with(&db, &ev, o.id(), db.timestamps(), tau, plain).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(&x.timestamps, &y.timestamps);
                prop_assert!((x.probability - y.probability).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn sampled_pcnn_is_close_to_exact() {
    let mut r = rng(77);
    for i in 0..20 {
        let db = random_trajectories(&mut r, 3, 2);
        let exact = PfannEvaluator::new(&db, Backend::Exact).unwrap();
        let n = 20_000;
        let sampled = PfannEvaluator::new(
            &db,
            Backend::Sampled {
                samples: n,
                seed: i,
            },
        )
        .unwrap();
        let full = (1u64 << db.timestamps().len()) - 1;
        for oi in 0..db.objects().len() {
            for m in 1..=full {
                let p = exact.probability(oi, m);
                let sigma = (p * (1.0 - p) / n as f64).sqrt().max(1e-9);
                assert!(
                    (sampled.probability(oi, m) - p).abs() <= 5.0 * sigma,
                    "instance {i} object {oi} mask {m}"
                );
            }
        }
    }
}

#[test]
fn uncertain_query_matches_oracle() {
    // Toy 2NN scenario: the uncertain query object is split off the dataset.
    let db =
        uncertain_spatial::load_database(std::fs::File::open(fixture("toy_2nn.json")).unwrap())
            .unwrap();
    let (q, rest) = db.split_off("Q").unwrap();
    let query = uncertain_spatial::UncertainQuery::from_object(&q).unwrap();
    let rb = uncertain_spatial::worlds::result_based_uncertain(
        &rest,
        &query,
        &SpatialPredicate::knn(2).unwrap(),
    )
    .unwrap();
    for (ids, p) in [
        (vec!["A", "C"], 0.3),
        (vec!["B", "C"], 0.3),
        (vec!["D", "E"], 0.4),
    ] {
        assert!((rb.prob(&ResultSet::new(ids)) - p).abs() < 1e-12);
    }
    let x =
        uncertain_spatial::representatives::sample_worlds_with_query(&rest, &query, 100_000, 42)
            .unwrap();
    let pr = uncertain_spatial::estimate_result_probabilities(
        &rest,
        &x,
        &query,
        &SpatialPredicate::knn(2).unwrap(),
    )
    .unwrap();
    for r in &pr {
        let p = rb.prob(&r.result);
        let sigma = (p * (1.0 - p) / 100_000.0).sqrt();
        assert!((r.estimate::<f64>(100_000) - p).abs() <= 5.0 * sigma);
    }
}

#[test]
fn single_precision_agrees_with_double() {
    let mut r = rng(3);
    for _ in 0..50 {
        let db = random_database(&mut r, 6, 3);
        let single = UncertainDatabase::new(
            db.objects()
                .iter()
                .map(|o| {
                    UncertainObject::<f32>::new(
                        o.id(),
                        o.instances()
                            .iter()
                            .map(|i| {
                                (
                                    Point::new(i.position.x as f32, i.position.y as f32),
                                    i.prob as f32,
                                )
                            })
                            .collect(),
                    )
                    .unwrap()
                })
                .collect(),
        )
        .unwrap();
        let q = grid_point(&mut r);
        let k = r.gen_range(1..=db.len());
        for o in db.objects() {
            let a = knn_object_probability(&db, &Point::new(q.0, q.1), k, o.id()).unwrap();
            let b = knn_object_probability(&single, &Point::new(q.0 as f32, q.1 as f32), k, o.id())
                .unwrap();
            assert!((a - b as f64).abs() < 1e-5);
        }
    }
}
