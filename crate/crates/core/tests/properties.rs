mod common;

use common::*;
use concord::clustering::{distance, kmeans, DistanceMetric, Init, KMeansParams};
use concord::constraints::{transitive_closure, ConstraintSet};
use concord::evaluation::{coherence, informativeness, mutual_information, nmi, projected_overlap, ContingencyTable};
use concord::pckmeans::{pckmeans, PckConfig};
use concord::sparse::FeatureMatrix;
use proptest::prelude::*;

fn points(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), n)
}

fn metric() -> impl Strategy<Value = DistanceMetric> {
    prop_oneof![Just(DistanceMetric::SquaredEuclidean), Just(DistanceMetric::Cosine)]
}

fn table() -> impl Strategy<Value = Vec<Vec<usize>>> {
    (1usize..=6, 1usize..=6)
        .prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(0usize..8, c), r))
        .prop_filter("non-empty", |t| t.iter().flatten().sum::<usize>() > 0)
}

fn permute<T: Clone>(xs: &[T], perm: &[usize]) -> Vec<T> {
    perm.iter().map(|&i| xs[i].clone()).collect()
}

fn rotate(p: &[f64], theta: f64, shift: (f64, f64)) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    vec![c * p[0] - s * p[1] + shift.0, s * p[0] + c * p[1] + shift.1]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distances_are_symmetric_and_bounded(x in points(1, 4), y in points(1, 4), m in metric()) {
        let d = distance(&x[0], &y[0], m);
        let e = distance(&y[0], &x[0], m);
        match (d, e) {
            (Ok(d), Ok(e)) => {
                prop_assert!((d - e).abs() < 1e-12);
                prop_assert!(d >= -1e-12);
                if m == DistanceMetric::Cosine {
                    prop_assert!(d <= 2.0 + 1e-12);
                }
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "asymmetric error"),
        }
    }

    #[test]
    fn kmeans_is_permutation_equivariant(pts in points(12, 3), seed in 0u64..1000, perm_seed in 0u64..1000) {
        let m = FeatureMatrix::from_dense(&pts).unwrap();
        let init: Vec<Vec<f64>> = pts[..3].to_vec();
        let params = KMeansParams::new(3, DistanceMetric::SquaredEuclidean, seed);
        let base = kmeans(&m, &params, &Init::Centroids(init.clone())).unwrap();
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng(perm_seed));
        let pm = FeatureMatrix::from_dense(&permute(&pts, &perm)).unwrap();
        let moved = kmeans(&pm, &params, &Init::Centroids(init)).unwrap();
        // Centroid updates sum in a different order, so only compare when
        // no point sits near a decision boundary.
        let margin = (0..pts.len()).all(|i| {
            let mut d: Vec<f64> = base.centroids.iter().map(|c| distance(&pts[i], c, params.metric).unwrap()).collect();
            d.sort_by(f64::total_cmp);
            d[1] - d[0] > 1e-6
        });
        if margin && base.converged {
            prop_assert_eq!(permute(&base.assignment, &perm), moved.assignment);
        }
    }

    #[test]
    fn kmeans_output_is_a_fixed_point(pts in points(15, 3), seed in 0u64..1000, m in metric()) {
        let x = FeatureMatrix::from_dense(&pts).unwrap();
        let params = KMeansParams::new(4, m, seed);
        let Ok(c) = kmeans(&x, &params, &Init::Random) else { return Ok(()) };
        if c.converged {
            let again = kmeans(&x, &params, &Init::Centroids(c.centroids.clone())).unwrap();
            prop_assert_eq!(&again.assignment, &c.assignment);
            prop_assert!(again.iterations <= 2);
        }
    }

    #[test]
    fn potential_never_increases(pts in points(25, 4), seed in 0u64..1000) {
        let x = FeatureMatrix::from_dense(&pts).unwrap();
        let c = kmeans(&x, &KMeansParams::new(4, DistanceMetric::SquaredEuclidean, seed), &Init::Random).unwrap();
        for w in c.potential_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{:?}", c.potential_trace);
        }
    }

    #[test]
    fn pck_objective_never_increases(pts in points(25, 4), seed in 0u64..1000, w in 0.0f64..20.0) {
        let x = FeatureMatrix::from_dense(&pts).unwrap();
        let (_, set) = consistent_constraints(&mut rng(seed), 25, 30, 4);
        let r = pckmeans(&x, &set, &PckConfig::new(4, w, DistanceMetric::SquaredEuclidean, seed)).unwrap();
        for pair in r.objective_trace.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-9, "{:?}", r.objective_trace);
        }
    }

    #[test]
    fn mi_is_bounded_by_entropies(t in table()) {
        let m = mutual_information(&ContingencyTable::from_counts(t).unwrap()).unwrap();
        prop_assert!(m.mi >= 0.0);
        prop_assert!(m.mi <= m.h_c.min(m.h_k) + 1e-12);
    }

    #[test]
    fn nmi_ignores_relabeling(t in table(), s in 0u64..1000) {
        let mut r = rng(s);
        let mut rows: Vec<usize> = (0..t.len()).collect();
        let mut cols: Vec<usize> = (0..t[0].len()).collect();
        rand::seq::SliceRandom::shuffle(rows.as_mut_slice(), &mut r);
        rand::seq::SliceRandom::shuffle(cols.as_mut_slice(), &mut r);
        let moved: Vec<Vec<usize>> = rows.iter().map(|&i| permute(&t[i], &cols)).collect();
        let a = nmi(&ContingencyTable::from_counts(t).unwrap()).unwrap();
        let b = nmi(&ContingencyTable::from_counts(moved).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn overlap_ignores_endpoint_order(p in points(4, 3)) {
        let b_len = distance(&p[2], &p[3], DistanceMetric::SquaredEuclidean).unwrap().sqrt();
        prop_assume!(b_len > 1e-3);
        let base = projected_overlap((&p[0], &p[1]), (&p[2], &p[3])).unwrap();
        for (a, b) in [((&p[1], &p[0]), (&p[2], &p[3])), ((&p[0], &p[1]), (&p[3], &p[2])), ((&p[1], &p[0]), (&p[3], &p[2]))] {
            let o = projected_overlap((a.0, a.1), (b.0, b.1)).unwrap();
            prop_assert!((o - base).abs() < 1e-9);
        }
        prop_assert!(base >= 0.0 && base <= b_len + 1e-9);
    }

    #[test]
    fn coherence_is_rigid_motion_invariant(pts in points(8, 2), theta in 0.0f64..std::f64::consts::TAU, dx in -5.0f64..5.0, dy in -5.0f64..5.0, s in 0u64..1000) {
        let set = random_constraints(&mut rng(s), 8, 6);
        let moved: Vec<Vec<f64>> = pts.iter().map(|p| rotate(p, theta, (dx, dy))).collect();
        let a = coherence(&set, &FeatureMatrix::from_dense(&pts).unwrap());
        let b = coherence(&set, &FeatureMatrix::from_dense(&moved).unwrap());
        prop_assert_eq!(a.is_ok(), b.is_ok());
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn informativeness_is_count_weighted(s in 0u64..1000, n in 6usize..30) {
        let mut r = rng(s);
        let assignment: Vec<usize> = (0..n).map(|_| rand::Rng::random_range(&mut r, 0..3)).collect();
        let all = random_constraints(&mut r, n, n);
        let items: Vec<_> = all.iter().collect();
        let split = n / 2;
        let first = ConstraintSet::from_constraints(items[..split].iter().copied());
        let second = ConstraintSet::from_constraints(items[split..].iter().copied());
        let whole = informativeness(&all, &assignment).unwrap();
        let parts = informativeness(&first, &assignment).unwrap() * first.len() as f64
            + informativeness(&second, &assignment).unwrap() * second.len() as f64;
        prop_assert!((whole - parts / all.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn closure_is_idempotent(s in 0u64..1000, n in 3usize..40) {
        let set = random_constraints(&mut rng(s), n, n / 2 + 1);
        if let Ok(c) = transitive_closure(&set) {
            let again = transitive_closure(&c).unwrap();
            prop_assert_eq!(c.iter().collect::<Vec<_>>(), again.iter().collect::<Vec<_>>());
            for x in set.iter() {
                prop_assert!(c.contains(&x));
            }
        }
    }
}
