mod common;

use std::collections::BTreeSet;

use approx::assert_abs_diff_eq;
use common::*;
use concord::clustering::{distance, kmeans, potential, Clustering, DistanceMetric, Init, KMeansParams};
use concord::constraints::{build_neighborhoods, constraints_for_pairs, transitive_closure, violations, ConstraintKind};
use concord::corpus::{build_vocabulary, vectorize, SynthSpec};
use concord::evaluation::{contingency, informativeness, mutual_information, nmi, ContingencyTable};
use concord::pckmeans::{objective, pckmeans, PckConfig};
use concord::sparse::FeatureMatrix;

#[test]
fn fixture_vocabulary_matches_distinct_terms() {
    let (corpus, _) = fixture();
    let vocab = build_vocabulary(&corpus).unwrap();
    let distinct: BTreeSet<&String> = corpus.documents.iter().flat_map(|d| &d.tokens).collect();
    assert_eq!(vocab.len(), distinct.len());
    for t in distinct {
        let df = corpus.documents.iter().filter(|d| d.tokens.contains(t)).count();
        assert_eq!(vocab.document_frequency(vocab.index_of(t).unwrap()), df, "{t}");
    }
}

#[test]
fn fixture_matrix_matches_dense_tfidf() {
    let (corpus, _) = fixture();
    let vocab = build_vocabulary(&corpus).unwrap();
    let m = vectorize(&corpus, &vocab).unwrap();
    let n = corpus.len() as f64;
    let dense = m.to_dense();
    for (i, doc) in corpus.documents.iter().enumerate() {
        for (j, term) in vocab.terms().iter().enumerate() {
            let tf = doc.tokens.iter().filter(|t| *t == term).count() as f64;
            let df = corpus.documents.iter().filter(|d| d.tokens.contains(term)).count() as f64;
            assert_abs_diff_eq!(dense[i][j], tf * (n / df).ln(), epsilon = 1e-12);
        }
    }
    assert!(m.triplets().all(|(_, _, v)| v > 0.0));
}

#[test]
fn synthetic_matrices_match_dense_tfidf() {
    for seed in 0..5 {
        let s = synth(&SynthSpec::new(vec![4, 6, 3], 12, 0.3, seed));
        let vocab = build_vocabulary(&s.corpus).unwrap();
        let n = s.corpus.len() as f64;
        for (i, doc) in s.corpus.documents.iter().enumerate() {
            let counts = term_counts(&doc.tokens);
            for (j, term) in vocab.terms().iter().enumerate() {
                let df = s.corpus.documents.iter().filter(|d| d.tokens.contains(term)).count() as f64;
                let tf = counts.get(term.as_str()).copied().unwrap_or(0) as f64;
                assert_abs_diff_eq!(s.matrix.dense_row(i)[j], tf * (n / df).ln(), epsilon = 1e-12);
            }
        }
    }
}

fn dense_potential(points: &[Vec<f64>], c: &Clustering, metric: DistanceMetric) -> f64 {
    let mut total = 0.0;
    for x in points {
        let mut best = f64::INFINITY;
        for mu in &c.centroids {
            let mut d = 0.0;
            match metric {
                DistanceMetric::SquaredEuclidean => {
                    for (a, b) in x.iter().zip(mu) {
                        d += (a - b) * (a - b);
                    }
                }
                DistanceMetric::Cosine => {
                    let (mut dot, mut nx, mut nm) = (0.0, 0.0, 0.0);
                    for (a, b) in x.iter().zip(mu) {
                        dot += a * b;
                        nx += a * a;
                        nm += b * b;
                    }
                    d = 1.0 - dot / (nx.sqrt() * nm.sqrt());
                }
            }
            best = best.min(d);
        }
        total += best;
    }
    total
}

#[test]
fn potential_matches_double_loop() {
    let mut r = rng(11);
    for seed in 0..20 {
        let points = random_dense(&mut r, 20, 5);
        let m = FeatureMatrix::from_dense(&points).unwrap();
        for metric in [DistanceMetric::SquaredEuclidean, DistanceMetric::Cosine] {
            let c = kmeans(&m, &KMeansParams::new(3, metric, seed), &Init::Random).unwrap();
            let oracle = dense_potential(&points, &c, metric);
            assert_abs_diff_eq!(potential(&m, &c, metric).unwrap(), oracle, epsilon = 1e-9);
            assert_abs_diff_eq!(c.potential, oracle, epsilon = 1e-9);
        }
    }
}

#[test]
fn table_iii_full_set_neighborhoods_match_union_find() {
    let s = synth(&SynthSpec::table_iii(3));
    let n = s.corpus.len();
    let set = constraints_for_pairs(&s.labels, &all_pairs(n)).unwrap();
    assert_eq!(set.len(), 300);
    let must: Vec<(usize, usize)> = set.must().map(|c| (c.a, c.b)).collect();
    let roots = union_find(n, &must);
    let with_links: BTreeSet<usize> = must.iter().flat_map(|&(a, b)| [roots[a], roots[b]]).collect();
    let nb = build_neighborhoods(&set);
    assert_eq!(nb.lambda(), with_links.len());
    // 7, 3, 2 and 11 are the classes with at least two members.
    assert_eq!(nb.lambda(), 4);
    let sizes: Vec<usize> = nb.neighborhoods.iter().map(Vec::len).collect();
    assert_eq!(sizes, [11, 7, 3, 2]);
}

#[test]
fn closure_matches_union_find_components() {
    let mut r = rng(5);
    for n in [5, 20, 60, 200] {
        for _ in 0..5 {
            let set = random_constraints(&mut r, n, n);
            let must: Vec<(usize, usize)> = set.must().map(|c| (c.a, c.b)).collect();
            let roots = union_find(n, &must);
            let consistent = set.cannot().all(|c| roots[c.a] != roots[c.b]);
            match transitive_closure(&set) {
                Ok(closed) => {
                    assert!(consistent);
                    for a in 0..n {
                        for b in a + 1..n {
                            let same = roots[a] == roots[b];
                            assert_eq!(
                                closed.must().any(|c| c.pair() == (a, b)),
                                same && roots.iter().filter(|&&x| x == roots[a]).count() > 1
                            );
                            let cl = set.cannot().any(|c| {
                                (roots[c.a] == roots[a] && roots[c.b] == roots[b])
                                    || (roots[c.a] == roots[b] && roots[c.b] == roots[a])
                            });
                            assert_eq!(closed.cannot().any(|c| c.pair() == (a, b)), cl);
                        }
                    }
                }
                Err(_) => assert!(!consistent),
            }
        }
    }
}

#[test]
fn violations_match_direct_check() {
    let mut r = rng(21);
    for _ in 0..50 {
        let assignment: Vec<usize> = (0..20).map(|_| rand::Rng::random_range(&mut r, 0..4)).collect();
        let set = random_constraints(&mut r, 20, 50);
        let v = violations(&assignment, &set).unwrap();
        assert_eq!(v.len(), violated_oracle(&assignment, &set));
        for c in &v {
            let same = assignment[c.a] == assignment[c.b];
            assert_eq!(same, c.kind == ConstraintKind::CannotLink);
        }
    }
}

#[test]
fn informativeness_matches_violation_ratio() {
    let mut r = rng(31);
    for _ in 0..100 {
        let n = rand::Rng::random_range(&mut r, 5..40);
        let assignment: Vec<usize> = (0..n).map(|_| rand::Rng::random_range(&mut r, 0..5)).collect();
        let count = rand::Rng::random_range(&mut r, 1..=n);
        let set = random_constraints(&mut r, n, count);
        let expected = violated_oracle(&assignment, &set) as f64 / set.len() as f64;
        assert_eq!(informativeness(&set, &assignment).unwrap(), expected);
    }
}

#[test]
fn mutual_information_matches_summation() {
    let mut r = rng(41);
    for _ in 0..1000 {
        let t = random_table(&mut r);
        let table = ContingencyTable::from_counts(t.clone()).unwrap();
        let m = mutual_information(&table).unwrap();
        assert_abs_diff_eq!(m.mi, mi_oracle(&t), epsilon = 1e-12);
        assert_abs_diff_eq!(m.h_c, entropy(&table.row_marginals), epsilon = 1e-12);
        assert_abs_diff_eq!(m.h_k, entropy(&table.col_marginals), epsilon = 1e-12);
    }
}

#[test]
fn contingency_matches_recount() {
    let s = synth(&SynthSpec::new(vec![5, 4, 6], 10, 0.5, 2));
    let c = kmeans(&s.matrix, &KMeansParams::new(4, DistanceMetric::Cosine, 1), &Init::Random).unwrap();
    let table = contingency(&s.labels, &c.assignment, 4).unwrap();
    for class in 0..s.labels.k() {
        for h in 0..4 {
            let count = (0..s.corpus.len()).filter(|&i| s.labels.class_of(i) == Some(class) && c.assignment[i] == h).count();
            assert_eq!(table.counts[class][h], count);
        }
    }
}

#[test]
fn pck_objective_matches_direct_sum() {
    let mut r = rng(51);
    for seed in 0..10 {
        let points = random_dense(&mut r, 20, 4);
        let m = FeatureMatrix::from_dense(&points).unwrap();
        let set = random_constraints(&mut r, 20, 15);
        let Ok(closed) = transitive_closure(&set) else { continue };
        let cfg = PckConfig::new(3, 0.7, DistanceMetric::SquaredEuclidean, seed);
        let res = pckmeans(&m, &set, &cfg).unwrap();
        let c = &res.clustering;
        let mut expected = 0.0;
        for (i, x) in points.iter().enumerate() {
            expected += 0.5 * distance(x, &c.centroids[c.assignment[i]], cfg.metric).unwrap();
        }
        expected += cfg.w * violated_oracle(&c.assignment, &closed) as f64;
        assert_abs_diff_eq!(res.objective, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(objective(&m, c, &set, &cfg).unwrap(), expected, epsilon = 1e-9);
    }
}

#[test]
fn full_truth_constraints_recover_table_iii_partition() {
    for seed in 0..5 {
        let s = synth(&SynthSpec::table_iii(seed));
        let n = s.corpus.len();
        let set = constraints_for_pairs(&s.labels, &all_pairs(n)).unwrap();
        for metric in [DistanceMetric::Cosine, DistanceMetric::SquaredEuclidean] {
            let dense = s.matrix.to_dense();
            let max_d = all_pairs(n).iter().map(|&(a, b)| distance(&dense[a], &dense[b], metric).unwrap()).fold(0.0, f64::max);
            let res = pckmeans(&s.matrix, &set, &PckConfig::new(6, 10.0 * max_d, metric, seed)).unwrap();
            assert!(res.violated.is_empty());
            let t = contingency(&s.labels, &res.clustering.assignment, 6).unwrap();
            assert_eq!(nmi(&t).unwrap(), 1.0);
        }
    }
}

fn class_means(m: &FeatureMatrix, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|h| {
            let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == h).collect();
            let mut c = vec![0.0; m.cols()];
            for &i in &members {
                for (j, v) in m.dense_row(i).iter().enumerate() {
                    c[j] += v / members.len() as f64;
                }
            }
            c
        })
        .collect()
}

/// The class partition is a Lloyd fixed point whose potential no random
/// restart undercuts, so a restart reaching that potential recovers it.
#[test]
fn truth_partition_certifies_best_of_restarts() {
    for seed in 0..10 {
        let s = synth(&SynthSpec::new(vec![5, 4, 4, 4, 4, 4], 20, 0.0, seed));
        let truth: Vec<usize> = (0..s.corpus.len()).map(|i| s.labels.class_of(i).unwrap()).collect();
        for metric in [DistanceMetric::Cosine, DistanceMetric::SquaredEuclidean] {
            let fixed = kmeans(&s.matrix, &KMeansParams::new(6, metric, 0), &Init::Centroids(class_means(&s.matrix, &truth, 6))).unwrap();
            assert_eq!(fixed.assignment, truth);
            let restarts: Vec<Clustering> = (0..10)
                .map(|r| kmeans(&s.matrix, &KMeansParams::new(6, metric, concord::seed::derive(seed, &[r])), &Init::Random).unwrap())
                .collect();
            for r in &restarts {
                assert!(fixed.potential <= r.potential + 1e-12, "seed {seed} {metric}");
                if (r.potential - fixed.potential).abs() <= 1e-12 {
                    assert_eq!(nmi(&contingency(&s.labels, &r.assignment, 6).unwrap()).unwrap(), 1.0);
                }
            }
        }
    }
}
